#include "crtcea/dataset.hpp"
#include "crtcea/csv.hpp"
#include "crtcea/errors.hpp"

#include <cmath>
#include <map>
#include <set>

namespace crtcea {

int CovariateSchema::index_of(const std::string &name) const {
    for (std::size_t i = 0; i < names.size(); ++i)
        if (names[i] == name) return static_cast<int>(i);
    return -1;
}

TrialDataset TrialDataset::from_columns(std::vector<std::string> cluster_ids, std::vector<Arm> arms,
                                        std::vector<double> cost, std::vector<double> qaly,
                                        Eigen::MatrixXd covariates, CovariateSchema schema,
                                        const std::vector<ClusterInfo> *clusters) {
    const std::size_t n = cluster_ids.size();
    if (arms.size() != n || cost.size() != n || qaly.size() != n ||
        static_cast<std::size_t>(covariates.rows()) != n)
        throw InputError("from_columns: column lengths differ");
    if (static_cast<std::size_t>(covariates.cols()) != schema.size())
        throw InputError("from_columns: covariate matrix does not match schema");

    TrialDataset d;
    d.cluster_ids_ = std::move(cluster_ids);
    d.arms_ = std::move(arms);
    d.cost_ = std::move(cost);
    d.qaly_ = std::move(qaly);
    d.covariates_ = std::move(covariates);
    d.schema_ = std::move(schema);

    d.r_cost_.resize(n);
    d.r_qaly_.resize(n);
    for (std::size_t i = 0; i < n; ++i) {
        d.r_cost_[i] = std::isnan(d.cost_[i]) ? 0 : 1;
        d.r_qaly_[i] = std::isnan(d.qaly_[i]) ? 0 : 1;
    }

    // Build / validate the cluster table. Arm must be constant within cluster.
    std::map<std::string, int> index;
    std::vector<ClusterInfo> built;
    std::vector<int> counts;
    d.cluster_index_.resize(n);
    for (std::size_t i = 0; i < n; ++i) {
        auto [it, inserted] = index.try_emplace(d.cluster_ids_[i], static_cast<int>(built.size()));
        if (inserted) {
            built.push_back({d.cluster_ids_[i], d.arms_[i], 0});
            counts.push_back(0);
        } else if (built[it->second].arm != d.arms_[i]) {
            throw InputError("cluster '" + d.cluster_ids_[i] +
                             "' has rows in both arms (cluster randomization violated)");
        }
        d.cluster_index_[i] = it->second;
        counts[it->second] += 1;
    }
    for (std::size_t c = 0; c < built.size(); ++c) built[c].size = counts[c];

    if (clusters) {
        // Caller supplies randomized sizes (and possibly clusters without
        // surviving rows); remap row indices onto the supplied table.
        std::map<std::string, int> supplied;
        for (std::size_t c = 0; c < clusters->size(); ++c)
            supplied[(*clusters)[c].id] = static_cast<int>(c);
        for (const auto &b : built) {
            auto it = supplied.find(b.id);
            if (it == supplied.end())
                throw InputError("cluster '" + b.id + "' missing from supplied cluster table");
            if ((*clusters)[it->second].arm != b.arm)
                throw InputError("cluster '" + b.id + "' arm differs from supplied cluster table");
        }
        d.clusters_ = *clusters;
        for (std::size_t i = 0; i < n; ++i)
            d.cluster_index_[i] = supplied.at(d.cluster_ids_[i]);
    } else {
        d.clusters_ = std::move(built);
    }
    return d;
}

Participant TrialDataset::row(std::size_t i) const {
    return Participant{
        cluster_ids_[i],
        arms_[i],
        r_cost_[i] ? std::optional<double>(cost_[i]) : std::nullopt,
        r_qaly_[i] ? std::optional<double>(qaly_[i]) : std::nullopt,
        covariates_.row(static_cast<Eigen::Index>(i)),
    };
}

bool TrialDataset::complete() const {
    return n_missing_cost() == 0 && n_missing_qaly() == 0;
}

std::size_t TrialDataset::n_missing_cost() const {
    std::size_t n = 0;
    for (auto r : r_cost_) n += (r == 0);
    return n;
}

std::size_t TrialDataset::n_missing_qaly() const {
    std::size_t n = 0;
    for (auto r : r_qaly_) n += (r == 0);
    return n;
}

bool TrialDataset::has_arm(Arm a) const {
    for (const auto &c : clusters_)
        if (c.arm == a) return true;
    return false;
}

TrialDataset TrialDataset::with_outcomes(std::vector<double> cost, std::vector<double> qaly) const {
    if (cost.size() != n_rows() || qaly.size() != n_rows())
        throw InputError("with_outcomes: column lengths differ from dataset");
    return from_columns(cluster_ids_, arms_, std::move(cost), std::move(qaly), covariates_, schema_,
                        &clusters_);
}

TrialDataset TrialDataset::subset(const std::vector<std::size_t> &rows) const {
    std::vector<std::string> ids;
    std::vector<Arm> arms;
    std::vector<double> cost, qaly;
    Eigen::MatrixXd cov(rows.size(), covariates_.cols());
    std::set<int> seen;
    for (std::size_t k = 0; k < rows.size(); ++k) {
        std::size_t i = rows[k];
        ids.push_back(cluster_ids_[i]);
        arms.push_back(arms_[i]);
        cost.push_back(cost_[i]);
        qaly.push_back(qaly_[i]);
        cov.row(static_cast<Eigen::Index>(k)) = covariates_.row(static_cast<Eigen::Index>(i));
        seen.insert(cluster_index_[i]);
    }
    std::vector<ClusterInfo> kept;
    for (int c : seen) kept.push_back(clusters_[static_cast<std::size_t>(c)]);
    return from_columns(std::move(ids), std::move(arms), std::move(cost), std::move(qaly),
                        std::move(cov), schema_, &kept);
}

namespace {

const std::vector<std::string> kMandatory = {"cluster_id", "arm", "cost", "qaly"};

bool is_mandatory(const std::string &name) {
    for (const auto &m : kMandatory)
        if (m == name) return true;
    return false;
}

} // namespace

CovariateSchema infer_schema(const std::string &path) {
    auto table = csv::read_file(path);
    CovariateSchema schema;
    for (const auto &name : table.header) {
        if (!is_mandatory(name)) {
            schema.names.push_back(name);
            schema.kinds.push_back(CovariateKind::continuous);
        }
    }
    return schema;
}

TrialDataset load_csv(const std::string &path, const CovariateSchema &schema) {
    auto table = csv::read_file(path);

    const int col_cluster = table.column("cluster_id");
    const int col_arm = table.column("arm");
    const int col_cost = table.column("cost");
    const int col_qaly = table.column("qaly");
    if (col_cluster < 0 || col_arm < 0 || col_cost < 0 || col_qaly < 0)
        throw InputError(path + ": header must contain cluster_id, arm, cost, qaly");

    std::vector<int> cov_cols(schema.size());
    for (std::size_t k = 0; k < schema.size(); ++k) {
        int c = table.column(schema.names[k]);
        if (c < 0)
            throw InputError(path + ": missing covariate column '" + schema.names[k] + "'");
        cov_cols[k] = c;
    }

    const std::size_t n = table.rows.size();
    std::vector<std::string> ids(n);
    std::vector<Arm> arms(n);
    std::vector<double> cost(n), qaly(n);
    Eigen::MatrixXd cov(n, schema.size());

    for (std::size_t i = 0; i < n; ++i) {
        const auto &row = table.rows[i];
        const std::string where = "row " + std::to_string(i + 1);
        ids[i] = row[static_cast<std::size_t>(col_cluster)];
        if (ids[i].empty()) throw InputError(path + ": empty cluster_id at " + where);

        const std::string &armfield = row[static_cast<std::size_t>(col_arm)];
        if (armfield == "0")
            arms[i] = Arm::control;
        else if (armfield == "1")
            arms[i] = Arm::intervention;
        else
            throw InputError(path + ": unknown arm label '" + armfield + "' at " + where +
                             " (expected 0 or 1)");

        auto c = csv::parse_double(row[static_cast<std::size_t>(col_cost)], where + ", column cost");
        auto q = csv::parse_double(row[static_cast<std::size_t>(col_qaly)], where + ", column qaly");
        cost[i] = c ? *c : std::nan("");
        qaly[i] = q ? *q : std::nan("");

        for (std::size_t k = 0; k < schema.size(); ++k) {
            auto v = csv::parse_double(row[static_cast<std::size_t>(cov_cols[k])],
                                       where + ", column " + schema.names[k]);
            if (!v)
                throw InputError(path + ": missing covariate '" + schema.names[k] + "' at " + where +
                                 " (covariates must be complete)");
            cov(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(k)) = *v;
        }
    }

    try {
        return TrialDataset::from_columns(std::move(ids), std::move(arms), std::move(cost),
                                          std::move(qaly), std::move(cov), schema);
    } catch (const InputError &e) {
        throw InputError(path + ": " + e.what());
    }
}

TrialDataset load_csv(const std::string &path) { return load_csv(path, infer_schema(path)); }

void save_csv(const TrialDataset &d, const std::string &path) {
    std::vector<std::string> header = kMandatory;
    for (const auto &name : d.schema().names) header.push_back(name);

    std::vector<std::vector<std::string>> rows;
    rows.reserve(d.n_rows());
    for (std::size_t i = 0; i < d.n_rows(); ++i) {
        std::vector<std::string> row;
        row.reserve(header.size());
        row.push_back(d.cluster_id(i));
        row.push_back(d.arm(i) == Arm::control ? "0" : "1");
        row.push_back(d.cost_observed(i) ? csv::format_double(d.cost(i)) : "");
        row.push_back(d.qaly_observed(i) ? csv::format_double(d.qaly(i)) : "");
        for (std::size_t k = 0; k < d.schema().size(); ++k)
            row.push_back(csv::format_double(d.covariate(i, k)));
        rows.push_back(std::move(row));
    }
    csv::write_file(path, header, rows);
}

FilterResult filter_positive_costs(const TrialDataset &d) {
    std::vector<std::size_t> keep;
    keep.reserve(d.n_rows());
    std::size_t removed = 0;
    for (std::size_t i = 0; i < d.n_rows(); ++i) {
        if (d.cost_observed(i) && d.cost(i) <= 0.0)
            ++removed;
        else
            keep.push_back(i);
    }
    if (removed == 0) return {d, 0};
    return {d.subset(keep), removed};
}

ArmSplit split_by_arm(const TrialDataset &d) {
    if (!d.has_arm(Arm::control) || !d.has_arm(Arm::intervention))
        throw InputError("split_by_arm: both arms must be present");
    std::vector<std::size_t> ctl, trt;
    for (std::size_t i = 0; i < d.n_rows(); ++i)
        (d.arm(i) == Arm::control ? ctl : trt).push_back(i);
    return {d.subset(ctl), d.subset(trt)};
}

} // namespace crtcea
