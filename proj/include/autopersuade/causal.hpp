#pragma once

#include <map>
#include <string>
#include <vector>

#include "autopersuade/embedding.hpp"
#include "autopersuade/inference.hpp"

namespace autopersuade {

struct DesignMatrix {
    std::vector<std::string> terms;  // const, topic(1)..topic(J), covariates
    Matrix values;                   // n x k, first column all ones
};

/// Columns: intercept, one per topic loading, then covariates in the given
/// order. Rank-deficient designs are rejected naming the offending columns.
DesignMatrix build_design(const TopicLoadings& loadings,
                          const std::vector<std::pair<std::string, Vector>>& covariates);

struct TermStats {
    double coef = 0.0;
    double se = 0.0;
    double t = 0.0;
    double p = 0.0;
    double ci_low = 0.0;
    double ci_high = 0.0;
};

struct RegressionResult {
    std::vector<std::string> terms;
    std::map<std::string, TermStats> stats;
    double r_squared = 0.0;
    double adj_r_squared = 0.0;
    int n_obs = 0;
    double f_statistic = 0.0;
    std::string covariance_type = "nonrobust";

    const TermStats& at(const std::string& term) const;
};

/// OLS via singular value decomposition with homoskedastic standard errors;
/// p-values and 95% CIs from the t distribution with n-k degrees of freedom.
RegressionResult estimate_amce(const DesignMatrix& design, const Vector& y);

/// CSV `term,coef,se,t,p,ci_low,ci_high` in term order.
std::string effect_csv(const RegressionResult& result);

/// Plot-ready JSON: coefficient series with CI bars plus fit statistics.
std::string effect_json(const RegressionResult& result);

/// Parses effect_csv output back (round-trip support for downstream tools).
std::map<std::string, TermStats> parse_effect_csv(const std::string& text);

}  // namespace autopersuade
