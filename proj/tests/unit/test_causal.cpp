#include <doctest.h>
#include <nlohmann/json.hpp>

#include <cmath>
#include <limits>
#include <numeric>

#include "autopersuade/causal.hpp"
#include "autopersuade/errors.hpp"
#include "autopersuade/rng.hpp"

using namespace autopersuade;

namespace {

TopicLoadings loadings_from(const Matrix& w) {
    TopicLoadings l;
    l.w_new = w;
    for (Eigen::Index i = 0; i < w.rows(); ++i) l.ids.push_back("d" + std::to_string(i));
    return l;
}

Matrix random_matrix(Rng& rng, Eigen::Index r, Eigen::Index c) {
    Matrix m(r, c);
    for (Eigen::Index i = 0; i < r; ++i) {
        for (Eigen::Index j = 0; j < c; ++j) m(i, j) = rng.normal();
    }
    return m;
}

}  // namespace

TEST_SUITE("causal") {

TEST_CASE("the design matrix stacks intercept, topics, then covariates") {
    Rng rng(3);
    const Matrix w = random_matrix(rng, 5, 3).cwiseAbs();
    Vector length(5);
    length << 10, 20, 30, 40, 50;
    const DesignMatrix design = build_design(loadings_from(w), {{"length_chars", length}});
    CHECK(design.terms ==
          std::vector<std::string>{"const", "topic(1)", "topic(2)", "topic(3)", "length_chars"});
    REQUIRE(design.values.cols() == 5);
    CHECK(design.values.col(0) == Vector::Ones(5));
    CHECK(design.values.col(1) == w.col(0));
    CHECK(design.values.col(4) == length);

    const DesignMatrix bare = build_design(loadings_from(w), {});
    CHECK(bare.values.cols() == 4);

    Vector short_cov(3);
    short_cov << 1, 2, 3;
    CHECK_THROWS_AS(build_design(loadings_from(w), {{"x", short_cov}}), ValidationError);
    CHECK_THROWS_AS(build_design(loadings_from(w), {{"a", length}, {"a", length}}),
                    ValidationError);
}

TEST_CASE("rank-deficient designs are rejected with the dependent column named") {
    Rng rng(7);
    const Matrix w = random_matrix(rng, 6, 2).cwiseAbs();
    const Vector copy = w.col(1);
    CHECK_THROWS_WITH_AS(build_design(loadings_from(w), {{"echo", copy}}),
                         doctest::Contains("echo"), ValidationError);
    const Vector constant = Vector::Constant(6, 3.0);
    CHECK_THROWS_AS(build_design(loadings_from(w), {{"flat", constant}}), ValidationError);
}

TEST_CASE("a noiseless linear response is recovered exactly") {
    Rng rng(11);
    const Matrix w = random_matrix(rng, 30, 2).cwiseAbs();
    const DesignMatrix design = build_design(loadings_from(w), {});
    const Vector y = Vector::Ones(30) * 1.0 + 2.0 * w.col(0) - 3.0 * w.col(1);
    const RegressionResult result = estimate_amce(design, y);
    CHECK(result.at("const").coef == doctest::Approx(1.0).epsilon(1e-10));
    CHECK(result.at("topic(1)").coef == doctest::Approx(2.0).epsilon(1e-10));
    CHECK(result.at("topic(2)").coef == doctest::Approx(-3.0).epsilon(1e-10));
    CHECK(result.r_squared == doctest::Approx(1.0).epsilon(1e-12));
    CHECK(result.n_obs == 30);
    // residual variance is pure roundoff, so the fit looks arbitrarily sharp
    CHECK(result.at("topic(1)").se < 1e-12);
    CHECK(std::abs(result.at("topic(1)").t) > 1e10);
    CHECK(result.at("topic(1)").p < 1e-12);
}

TEST_CASE("non-finite statistics export as json null") {
    RegressionResult degenerate;
    degenerate.terms = {"const", "topic(1)"};
    TermStats flat;
    flat.coef = 1.0;
    flat.t = std::numeric_limits<double>::infinity();
    flat.p = 0.0;
    degenerate.stats["const"] = flat;
    degenerate.stats["topic(1)"] = TermStats{};
    degenerate.f_statistic = std::numeric_limits<double>::infinity();
    const auto parsed = nlohmann::json::parse(effect_json(degenerate));
    CHECK(parsed["t"][0].is_null());
    CHECK(parsed["t"][1] == 0.0);
    CHECK(parsed["f_statistic"].is_null());
    CHECK(parsed["coef"][0] == 1.0);
}

TEST_CASE("standard errors match the explicit normal-equations formula") {
    Rng rng(13);
    const Matrix w = random_matrix(rng, 40, 2).cwiseAbs();
    const DesignMatrix design = build_design(loadings_from(w), {});
    Vector y(40);
    for (Eigen::Index i = 0; i < 40; ++i) y(i) = 0.5 + w(i, 0) - 2.0 * w(i, 1) + rng.normal();
    const RegressionResult result = estimate_amce(design, y);

    const Matrix& x = design.values;
    const Vector beta = (x.transpose() * x).ldlt().solve(x.transpose() * y);
    const Vector resid = y - x * beta;
    const double s2 = resid.squaredNorm() / static_cast<double>(40 - 3);
    const Matrix cov = s2 * (x.transpose() * x).inverse();
    for (int k = 0; k < 3; ++k) {
        const auto& stats = result.at(design.terms[static_cast<std::size_t>(k)]);
        CHECK(stats.coef == doctest::Approx(beta(k)).epsilon(1e-8));
        CHECK(stats.se == doctest::Approx(std::sqrt(cov(k, k))).epsilon(1e-8));
        CHECK(stats.t == doctest::Approx(beta(k) / std::sqrt(cov(k, k))).epsilon(1e-8));
        CHECK(stats.ci_low < stats.coef);
        CHECK(stats.ci_high > stats.coef);
    }
    CHECK(resid.sum() == doctest::Approx(0.0).epsilon(1e-8));  // intercept absorbs the mean
    CHECK(result.f_statistic > 0.0);
    CHECK(result.adj_r_squared < result.r_squared);
}

TEST_CASE("row permutations do not change the estimates") {
    Rng rng(17);
    const Matrix w = random_matrix(rng, 25, 2).cwiseAbs();
    Vector y(25);
    for (Eigen::Index i = 0; i < 25; ++i) y(i) = w(i, 0) - w(i, 1) + 0.3 * rng.normal();

    std::vector<Eigen::Index> perm(25);
    std::iota(perm.begin(), perm.end(), Eigen::Index{0});
    Rng shuffler(23);
    shuffler.shuffle(perm);
    Matrix w2(25, 2);
    Vector y2(25);
    for (Eigen::Index i = 0; i < 25; ++i) {
        w2.row(i) = w.row(perm[static_cast<std::size_t>(i)]);
        y2(i) = y(perm[static_cast<std::size_t>(i)]);
    }
    const RegressionResult a = estimate_amce(build_design(loadings_from(w), {}), y);
    const RegressionResult b = estimate_amce(build_design(loadings_from(w2), {}), y2);
    for (const auto& term : a.terms) {
        CHECK(a.at(term).coef == doctest::Approx(b.at(term).coef).epsilon(1e-10));
        CHECK(a.at(term).se == doctest::Approx(b.at(term).se).epsilon(1e-10));
    }
}

TEST_CASE("rescaling a covariate rescales its coefficient but not its t statistic") {
    Rng rng(19);
    const Matrix w = random_matrix(rng, 30, 1).cwiseAbs();
    Vector cov(30);
    for (Eigen::Index i = 0; i < 30; ++i) cov(i) = rng.uniform(5.0, 50.0);
    Vector y(30);
    for (Eigen::Index i = 0; i < 30; ++i) y(i) = w(i, 0) + 0.1 * cov(i) + 0.2 * rng.normal();

    const RegressionResult base =
        estimate_amce(build_design(loadings_from(w), {{"len", cov}}), y);
    const Vector scaled_cov = 100.0 * cov;
    const RegressionResult scaled =
        estimate_amce(build_design(loadings_from(w), {{"len", scaled_cov}}), y);
    CHECK(scaled.at("len").coef == doctest::Approx(base.at("len").coef / 100.0).epsilon(1e-10));
    CHECK(scaled.at("len").t == doctest::Approx(base.at("len").t).epsilon(1e-10));
    CHECK(scaled.at("topic(1)").coef == doctest::Approx(base.at("topic(1)").coef).epsilon(1e-10));
}

TEST_CASE("more observations than parameters are required") {
    Matrix w(3, 3);
    w << 1, 0, 0, 0, 1, 0, 0, 0, 1;
    const DesignMatrix design = build_design(loadings_from(w), {});
    Vector y(3);
    y << 1, 2, 3;
    CHECK_THROWS_AS(estimate_amce(design, y), ValidationError);
}

TEST_CASE("effect tables round-trip through csv and export valid json") {
    Rng rng(29);
    const Matrix w = random_matrix(rng, 30, 3).cwiseAbs();
    Vector y(30);
    for (Eigen::Index i = 0; i < 30; ++i) y(i) = w(i, 0) + rng.normal();
    const RegressionResult result = estimate_amce(build_design(loadings_from(w), {}), y);

    const auto parsed = parse_effect_csv(effect_csv(result));
    for (const auto& term : result.terms) {
        CHECK(parsed.at(term).coef == result.at(term).coef);
        CHECK(parsed.at(term).se == result.at(term).se);
        CHECK(parsed.at(term).p == result.at(term).p);
        CHECK(parsed.at(term).ci_high == result.at(term).ci_high);
    }

    const nlohmann::json j = nlohmann::json::parse(effect_json(result));
    CHECK(j.contains("terms"));
    CHECK(j.contains("r_squared"));
    CHECK(j["n_obs"] == 30);
    CHECK(j["terms"].size() == result.terms.size());
}

}  // TEST_SUITE
