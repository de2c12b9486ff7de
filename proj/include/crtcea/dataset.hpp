#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <optional>
#include <string>
#include <vector>

namespace crtcea {

enum class Arm : int { control = 0, intervention = 1 };

inline const char *arm_name(Arm a) { return a == Arm::control ? "control" : "intervention"; }

enum class CovariateKind { continuous, binary, ordinal };

struct CovariateSchema {
    std::vector<std::string> names;
    std::vector<CovariateKind> kinds;

    int index_of(const std::string &name) const; // -1 when absent
    std::size_t size() const { return names.size(); }
};

/// One randomized cluster: id, allocated arm, and the number of participants
/// randomized into it. The size is a design quantity fixed at load/generation
/// time; downstream filters never recompute it.
struct ClusterInfo {
    std::string id;
    Arm arm = Arm::control;
    int size = 0;
};

/// Row view over a dataset; missing outcomes are NaN with the matching mask
/// bit cleared.
struct Participant {
    const std::string &cluster_id;
    Arm arm;
    std::optional<double> cost;
    std::optional<double> qaly;
    Eigen::VectorXd covariates;
};

/// Immutable two-level trial dataset: participant rows plus cluster-level
/// design information. Safe to share across threads once constructed.
class TrialDataset {
  public:
    TrialDataset() = default;

    /// Builds a dataset from columnar data. Outcome NaNs mark missing values;
    /// masks are derived. Cluster sizes default to observed row counts unless
    /// `sizes` supplies the randomized counts.
    static TrialDataset from_columns(std::vector<std::string> cluster_ids, std::vector<Arm> arms,
                                     std::vector<double> cost, std::vector<double> qaly,
                                     Eigen::MatrixXd covariates, CovariateSchema schema,
                                     const std::vector<ClusterInfo> *clusters = nullptr);

    std::size_t n_rows() const { return cost_.size(); }
    std::size_t n_clusters() const { return clusters_.size(); }

    const std::vector<ClusterInfo> &clusters() const { return clusters_; }
    const CovariateSchema &schema() const { return schema_; }

    const std::string &cluster_id(std::size_t row) const { return cluster_ids_[row]; }
    int cluster_index(std::size_t row) const { return cluster_index_[row]; }
    Arm arm(std::size_t row) const { return arms_[row]; }

    /// NaN when missing.
    double cost(std::size_t row) const { return cost_[row]; }
    double qaly(std::size_t row) const { return qaly_[row]; }
    bool cost_observed(std::size_t row) const { return r_cost_[row] != 0; }
    bool qaly_observed(std::size_t row) const { return r_qaly_[row] != 0; }

    const std::vector<std::uint8_t> &cost_mask() const { return r_cost_; }
    const std::vector<std::uint8_t> &qaly_mask() const { return r_qaly_; }

    double covariate(std::size_t row, std::size_t k) const { return covariates_(row, k); }
    const Eigen::MatrixXd &covariates() const { return covariates_; }

    Participant row(std::size_t i) const;

    bool complete() const; // no missing outcome anywhere
    std::size_t n_missing_cost() const;
    std::size_t n_missing_qaly() const;

    bool has_arm(Arm a) const;

    /// Copy with outcome columns replaced (used by the imputation engine and
    /// the simulator's missingness step). Vectors are full-length; NaN means
    /// missing. Cluster info is carried over unchanged.
    TrialDataset with_outcomes(std::vector<double> cost, std::vector<double> qaly) const;

    /// Copy containing the given rows (cluster list rebuilt from the surviving
    /// rows but sizes preserved from this dataset).
    TrialDataset subset(const std::vector<std::size_t> &rows) const;

  private:
    std::vector<std::string> cluster_ids_;
    std::vector<int> cluster_index_;
    std::vector<Arm> arms_;
    std::vector<double> cost_;
    std::vector<double> qaly_;
    std::vector<std::uint8_t> r_cost_;
    std::vector<std::uint8_t> r_qaly_;
    Eigen::MatrixXd covariates_;
    CovariateSchema schema_;
    std::vector<ClusterInfo> clusters_;
};

/// Reads a trial CSV: mandatory columns cluster_id, arm (0/1), cost, qaly,
/// plus the schema's covariate columns. Empty outcome fields become missing
/// values; a missing covariate cell is an error (analysis assumes complete
/// covariates). Cluster sizes are the file's row counts per cluster.
TrialDataset load_csv(const std::string &path, const CovariateSchema &schema);

/// Loads with covariate schema inferred from the header: every non-mandatory
/// column becomes a continuous covariate.
TrialDataset load_csv(const std::string &path);

CovariateSchema infer_schema(const std::string &path);

/// Writes the standard trial CSV (same column conventions as load_csv).
void save_csv(const TrialDataset &d, const std::string &path);

struct FilterResult {
    TrialDataset dataset;
    std::size_t removed = 0;
};

/// Drops rows whose observed cost is <= 0; missing-cost rows stay. Cluster
/// sizes keep their pre-filter values.
FilterResult filter_positive_costs(const TrialDataset &d);

struct ArmSplit {
    TrialDataset control;
    TrialDataset intervention;
};

/// Partitions rows and clusters by arm; either arm empty is an error.
ArmSplit split_by_arm(const TrialDataset &d);

} // namespace crtcea
