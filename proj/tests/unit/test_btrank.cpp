#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <numeric>
#include <vector>

#include "autopersuade/btrank.hpp"
#include "autopersuade/errors.hpp"
#include "autopersuade/evaluation.hpp"
#include "autopersuade/rng.hpp"

using namespace autopersuade;

namespace {

ComparisonRecord rec(const std::string& left, const std::string& right, Winner winner) {
    return {"s", left, right, winner};
}

double spearman(const std::vector<double>& a, const std::vector<double>& b) {
    auto ranks = [](const std::vector<double>& v) {
        std::vector<std::size_t> order(v.size());
        std::iota(order.begin(), order.end(), std::size_t{0});
        std::sort(order.begin(), order.end(), [&](std::size_t i, std::size_t j) { return v[i] < v[j]; });
        std::vector<double> r(v.size());
        for (std::size_t i = 0; i < order.size(); ++i) r[order[i]] = static_cast<double>(i);
        return r;
    };
    const auto ra = ranks(a), rb = ranks(b);
    const double n = static_cast<double>(a.size());
    const double mean = (n - 1.0) / 2.0;
    double cov = 0.0, va = 0.0, vb = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) {
        cov += (ra[i] - mean) * (rb[i] - mean);
        va += (ra[i] - mean) * (ra[i] - mean);
        vb += (rb[i] - mean) * (rb[i] - mean);
    }
    return cov / std::sqrt(va * vb);
}

}  // namespace

TEST_SUITE("btrank") {

TEST_CASE("two items recover the win ratio under the mean-one constraint") {
    ComparisonSet set;
    set.records = {rec("a", "b", Winner::left), rec("a", "b", Winner::left),
                   rec("a", "b", Winner::right)};
    const BtFitResult result = fit_bt(set);
    CHECK(result.converged);
    CHECK(result.scores.at("a") == doctest::Approx(4.0 / 3.0).epsilon(1e-9));
    CHECK(result.scores.at("b") == doctest::Approx(2.0 / 3.0).epsilon(1e-9));
    CHECK(result.scores.at("a") / result.scores.at("b") == doctest::Approx(2.0).epsilon(1e-9));
    CHECK(result.warnings.empty());
}

TEST_CASE("a symmetric record set gives every item strength one") {
    ComparisonSet set;
    for (auto [l, r] : {std::pair{"a", "b"}, {"b", "c"}, {"a", "c"}}) {
        set.records.push_back(rec(l, r, Winner::left));
        set.records.push_back(rec(l, r, Winner::right));
    }
    const BtFitResult result = fit_bt(set);
    for (const char* id : {"a", "b", "c"}) {
        CHECK(result.scores.at(id) == doctest::Approx(1.0).epsilon(1e-9));
    }
}

TEST_CASE("objective trace is monotone non-decreasing sweep over sweep") {
    Rng rng(17);
    for (int instance = 0; instance < 100; ++instance) {
        const int n = 5 + static_cast<int>(rng.uniform_index(20));
        std::vector<std::string> ids;
        for (int i = 0; i < n; ++i) ids.push_back("i" + std::to_string(i));
        ComparisonSet set;
        for (int i = 0; i + 1 < n; ++i) {  // connectivity backbone
            set.records.push_back(rec(ids[i], ids[i + 1],
                                      rng.uniform() < 0.5 ? Winner::left : Winner::right));
        }
        for (int k = 0; k < 4 * n; ++k) {
            const auto i = rng.uniform_index(ids.size());
            auto j = rng.uniform_index(ids.size());
            if (i == j) continue;
            set.records.push_back(rec(ids[i], ids[j],
                                      rng.uniform() < 0.5 ? Winner::left : Winner::right));
        }
        const BtFitResult result = fit_bt(set);
        for (std::size_t s = 1; s < result.ll_trace.size(); ++s) {
            const double prev = result.ll_trace[s - 1];
            CHECK(result.ll_trace[s] >= prev - 1e-12 * std::max(1.0, std::abs(prev)));
        }
    }
}

TEST_CASE("recovered ranking tracks planted strengths") {
    const int n = 200;
    std::vector<std::string> ids;
    Vector strengths(n);
    Rng rng(23);
    for (int i = 0; i < n; ++i) {
        ids.push_back(i < 10 ? "i0" + std::to_string(i) : "i" + std::to_string(i));
        strengths(i) = std::exp(2.0 * rng.normal());  // well-spread log strengths
    }
    // 50 appearances per item over pairwise records
    const ComparisonSet set = simulate_comparisons(ids, strengths, n * 50 / 2, 5);
    const BtFitResult result = fit_bt(set);
    std::vector<double> truth, fitted;
    for (int i = 0; i < n; ++i) {
        truth.push_back(strengths(i));
        fitted.push_back(result.scores.at(ids[static_cast<std::size_t>(i)]));
    }
    CHECK(spearman(truth, fitted) > 0.95);
}

TEST_CASE("mirroring every record leaves the fit unchanged") {
    Rng rng(31);
    ComparisonSet set, mirrored;
    std::vector<std::string> ids{"a", "b", "c", "d", "e"};
    for (int k = 0; k < 40; ++k) {
        const auto i = rng.uniform_index(5);
        auto j = rng.uniform_index(5);
        if (i == j) continue;
        const Winner w = rng.uniform() < 0.5 ? Winner::left : Winner::right;
        set.records.push_back(rec(ids[i], ids[j], w));
        mirrored.records.push_back(rec(ids[j], ids[i], w == Winner::left ? Winner::right : Winner::left));
    }
    const BtFitResult a = fit_bt(set);
    const BtFitResult b = fit_bt(mirrored);
    for (const auto& [id, score] : a.scores.scores) CHECK(score == b.scores.at(id));
}

TEST_CASE("one-sided records trigger the virtual-opponent warning, not a failure") {
    ComparisonSet set;
    set.records = {rec("a", "b", Winner::left), rec("a", "c", Winner::left),
                   rec("b", "c", Winner::left)};
    const BtFitResult result = fit_bt(set);
    CHECK(result.warnings.size() >= 2);  // a never loses, c never wins
    CHECK(result.scores.at("a") > result.scores.at("b"));
    CHECK(result.scores.at("b") > result.scores.at("c"));
}

TEST_CASE("disconnected comparison graphs are rejected with the components named") {
    ComparisonSet set;
    set.records = {rec("a", "b", Winner::left), rec("c", "d", Winner::left)};
    CHECK_THROWS_WITH_AS(fit_bt(set), doctest::Contains("c"), ValidationError);
    ComparisonSet empty;
    CHECK_THROWS_AS(fit_bt(empty), ValidationError);
}

TEST_CASE("anchored fit keeps anchors bit-identical and matches closed forms") {
    BTScores fixed;
    fixed.scores = {{"a", 1.0}, {"b", 0.731}};

    ComparisonSet one_each;
    one_each.records = {rec("x", "a", Winner::left), rec("x", "a", Winner::right)};
    const BtFitResult balanced = fit_bt_fixed(one_each, fixed, {"x"});
    CHECK(balanced.scores.at("a") == 1.0);      // anchors pass through untouched
    CHECK(balanced.scores.at("b") == 0.731);
    CHECK(balanced.scores.at("x") == doctest::Approx(1.0).epsilon(1e-9));
    CHECK(balanced.scores.anchored);

    ComparisonSet two_one;
    two_one.records = {rec("x", "a", Winner::left), rec("x", "a", Winner::left),
                       rec("x", "a", Winner::right)};
    const BtFitResult skewed = fit_bt_fixed(two_one, fixed, {"x"});
    CHECK(skewed.scores.at("x") == doctest::Approx(2.0).epsilon(1e-9));

    const BtFitResult noop = fit_bt_fixed(ComparisonSet{}, fixed, {});
    CHECK(noop.scores.at("b") == 0.731);

    // new items must reach an anchor through the comparison graph
    ComparisonSet detached;
    detached.records = {rec("x", "y", Winner::left)};
    CHECK_THROWS_AS(fit_bt_fixed(detached, fixed, {"x", "y"}), ValidationError);
}

TEST_CASE("log-likelihood matches the paired-logit form") {
    BTScores scores;
    scores.scores = {{"a", 2.0}, {"b", 1.0}};
    ComparisonSet set;
    set.records = {rec("a", "b", Winner::left)};
    CHECK(log_likelihood(scores, set) == doctest::Approx(std::log(2.0 / 3.0)).epsilon(1e-12));
    CHECK(log_likelihood(scores, ComparisonSet{}) == 0.0);
}

TEST_CASE("group win rates count cross-group records with bootstrap intervals") {
    ComparisonSet set;
    // A beats B 3 of 4; one within-group record must be ignored
    set.records = {rec("a1", "b1", Winner::left), rec("a1", "b2", Winner::left),
                   rec("a2", "b1", Winner::left), rec("a2", "b2", Winner::right),
                   rec("a1", "a2", Winner::left)};
    const std::map<std::string, std::string> groups{
        {"a1", "A"}, {"a2", "A"}, {"b1", "B"}, {"b2", "B"}};
    const WinRateSummary summary = win_rate_summary(set, groups, 200, 7);
    REQUIRE(summary.groups.count("A") == 1);
    const GroupWinRate& a = summary.groups.at("A");
    CHECK(a.win_rate == doctest::Approx(75.0).epsilon(1e-12));
    CHECK(a.n_comparisons == 4);
    CHECK(a.ci_low <= a.win_rate);
    CHECK(a.ci_high >= a.win_rate);
    const WinRateSummary again = win_rate_summary(set, groups, 200, 7);
    CHECK(again.groups.at("B").ci_low == summary.groups.at("B").ci_low);

    CHECK_THROWS_AS(win_rate_summary(set, {{"a1", "A"}}, 10, 7), ValidationError);
}

}  // TEST_SUITE
