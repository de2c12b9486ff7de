#pragma once

#include "crtcea/dataset.hpp"

#include <cmath>
#include <string>
#include <vector>

namespace crtcea::testing {

/// Row-wise dataset builder for tests. NaN marks a missing outcome.
struct DatasetBuilder {
    std::vector<std::string> ids;
    std::vector<Arm> arms;
    std::vector<double> cost;
    std::vector<double> qaly;
    std::vector<std::vector<double>> covariates;
    CovariateSchema schema;

    DatasetBuilder &with_covariates(std::vector<std::string> names) {
        schema.names = std::move(names);
        schema.kinds.assign(schema.names.size(), CovariateKind::continuous);
        return *this;
    }

    DatasetBuilder &row(std::string cluster, Arm arm, double c, double q,
                        std::vector<double> covs = {}) {
        ids.push_back(std::move(cluster));
        arms.push_back(arm);
        cost.push_back(c);
        qaly.push_back(q);
        covariates.push_back(std::move(covs));
        return *this;
    }

    TrialDataset build() const {
        Eigen::MatrixXd cov(ids.size(), schema.size());
        for (std::size_t i = 0; i < ids.size(); ++i)
            for (std::size_t k = 0; k < schema.size(); ++k)
                cov(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(k)) =
                    k < covariates[i].size() ? covariates[i][k] : 0.0;
        return TrialDataset::from_columns(ids, arms, cost, qaly, cov, schema);
    }
};

inline double missing() { return std::nan(""); }

} // namespace crtcea::testing
