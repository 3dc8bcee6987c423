#pragma once

#include <map>
#include <string>
#include <vector>

#include "autopersuade/comparisons.hpp"

namespace autopersuade {

enum class BtNormalization { mean_one };

/// Fitted Bradley-Terry strengths. P(i beats j) = pi_i / (pi_i + pi_j).
struct BTScores {
    std::map<std::string, double> scores;
    BtNormalization normalization = BtNormalization::mean_one;
    bool anchored = false;

    double at(const std::string& id) const;
};

struct BtOptions {
    int max_iters = 10000;
    double tol = 1e-8;  // on max relative score change per sweep
};

struct BtFitResult {
    BTScores scores;
    std::vector<double> ll_trace;  // objective after each sweep (includes regularization terms)
    int n_sweeps = 0;
    bool converged = false;
    std::vector<std::string> warnings;  // all-wins / all-losses regularization notices
};

/// Maximum-likelihood strengths over the ids appearing in `comparisons`,
/// rescaled to arithmetic mean 1.
BtFitResult fit_bt(const ComparisonSet& comparisons, const BtOptions& options = {});

/// Same, but requires every id in `expected_ids` to appear in at least one
/// comparison and every comparison to stay within that set.
BtFitResult fit_bt(const ComparisonSet& comparisons, const std::vector<std::string>& expected_ids,
                   const BtOptions& options = {});

/// Strengths for `new_ids` with every score in `fixed` held constant.
/// The anchors supply the scale, so no renormalization is applied.
BtFitResult fit_bt_fixed(const ComparisonSet& comparisons, const BTScores& fixed,
                         const std::vector<std::string>& new_ids, const BtOptions& options = {});

/// Sum over records of log(pi_winner / (pi_winner + pi_loser)).
double log_likelihood(const BTScores& scores, const ComparisonSet& comparisons);

struct GroupWinRate {
    double win_rate = 0.0;  // percent
    double ci_low = 0.0;
    double ci_high = 0.0;
    int n_comparisons = 0;
};

struct WinRateSummary {
    std::map<std::string, GroupWinRate> groups;
};

/// Per-group win rate over cross-group records, with seeded percentile
/// bootstrap CIs (2.5/97.5) over n_boot resamples of each group's records.
WinRateSummary win_rate_summary(const ComparisonSet& comparisons,
                                const std::map<std::string, std::string>& group_of, int n_boot,
                                std::uint64_t seed);

std::string scores_to_csv(const BTScores& scores);
std::string win_rates_to_csv(const WinRateSummary& summary);

}  // namespace autopersuade
