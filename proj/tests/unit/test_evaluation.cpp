#include <doctest.h>
#include <nlohmann/json.hpp>

#include <cmath>
#include <set>

#include "autopersuade/corpus.hpp"
#include "autopersuade/errors.hpp"
#include "autopersuade/evaluation.hpp"
#include "autopersuade/rng.hpp"
#include "autopersuade/sunmodel.hpp"

using namespace autopersuade;

namespace {

Corpus corpus_from_texts(const std::vector<std::string>& texts) {
    std::vector<Document> docs;
    for (std::size_t i = 0; i < texts.size(); ++i) {
        Document d;
        d.id = "d" + std::to_string(i);
        d.text = texts[i];
        d.length_chars = static_cast<std::int64_t>(texts[i].size());
        docs.push_back(d);
    }
    return Corpus(std::move(docs));
}

CandidateInfo info(std::initializer_list<double> loadings, double score) {
    CandidateInfo c;
    c.loadings = Vector(static_cast<Eigen::Index>(loadings.size()));
    Eigen::Index i = 0;
    for (double v : loadings) c.loadings(i++) = v;
    c.predicted_score = score;
    return c;
}

}  // namespace

TEST_SUITE("evaluation") {

TEST_CASE("mse matches its definition") {
    Vector a(2), b(2);
    a << 0.0, 0.0;
    b << 3.0, 1.0;
    CHECK(mse(a, a) == 0.0);
    CHECK(mse(a, b) == doctest::Approx(5.0).epsilon(1e-15));
    Vector c(3);
    CHECK_THROWS_AS(mse(a, c), ValidationError);
}

TEST_CASE("tf-idf favors rare terms, folds case, and drops noise tokens") {
    const Corpus corpus = corpus_from_texts({
        "Cow COW cow barn farm",
        "chicken barn farm",
        "chicken coop farm",
        "tractor field farm the ab",
    });
    const auto top = tfidf_top_words(corpus, {"d0", "d1"}, 3);
    REQUIRE(top.size() == 3);
    CHECK(top[0] == "cow");       // tf 3, df 1
    CHECK(top[1] == "barn");      // tf 2, df 2
    CHECK(top[2] == "chicken");   // tf 1, df 2
    // "farm" appears in every document: idf = 0 keeps it out of the top 3
    for (const auto& w : top) CHECK(w != "farm");
    // stopwords and sub-3-letter tokens never appear
    const auto noisy = tfidf_top_words(corpus, {"d3"}, 10);
    for (const auto& w : noisy) {
        CHECK(w != "the");
        CHECK(w != "ab");
    }
}

TEST_CASE("tf-idf breaks exact ties alphabetically") {
    const Corpus corpus = corpus_from_texts({"zeta echo", "other words"});
    const auto top = tfidf_top_words(corpus, {"d0"}, 2);
    REQUIRE(top.size() == 2);
    CHECK(top[0] == "echo");
    CHECK(top[1] == "zeta");
}

TEST_CASE("coherence matches hand-computed document frequencies") {
    // D(apple)=3, D(banana)=3, D(cherry)=3; co-occurrence D(banana,apple)=2,
    // D(cherry,apple)=1, D(cherry,banana)=2.
    const Corpus corpus = corpus_from_texts({
        "apple banana cherry",
        "apple banana",
        "apple dust",
        "banana cherry",
        "cherry dust",
        "dust dust",
    });
    const double expected = std::log(3.0 / 3.0) + std::log(2.0 / 3.0) + std::log(3.0 / 3.0);
    CHECK(topic_coherence({"apple", "banana", "cherry"}, corpus) ==
          doctest::Approx(expected).epsilon(1e-12));

    // two-word cases pin the formula's orientation
    CHECK(topic_coherence({"apple", "banana"}, corpus) ==
          doctest::Approx(std::log(3.0 / 3.0)).epsilon(1e-12));
    CHECK(topic_coherence({"banana", "apple"}, corpus) ==
          doctest::Approx(std::log(3.0 / 3.0)).epsilon(1e-12));
    CHECK(topic_coherence({"dust"}, corpus) == 0.0);
    CHECK_THROWS_AS(topic_coherence({"missing", "apple"}, corpus), ValidationError);
}

TEST_CASE("coherence is order-sensitive exactly as the formula dictates") {
    const Corpus corpus = corpus_from_texts({
        "alpha beta",
        "alpha beta",
        "alpha gamma",
        "alpha gamma",
        "alpha gamma",
        "beta delta",
    });
    // D(alpha)=5, D(beta)=3, co-occurrence 2
    const double ab = topic_coherence({"alpha", "beta"}, corpus);
    const double ba = topic_coherence({"beta", "alpha"}, corpus);
    CHECK(ab == doctest::Approx(std::log(3.0 / 5.0)).epsilon(1e-12));
    CHECK(ba == doctest::Approx(std::log(3.0 / 3.0)).epsilon(1e-12));
    CHECK(ab != ba);
}

TEST_CASE("the coherence report ranks documents by loading per topic") {
    const Corpus corpus = corpus_from_texts({
        "apple banana cherry",
        "apple banana",
        "cherry dust",
        "banana dust",
    });
    SunModel model;
    model.w = Matrix::Zero(4, 2);
    model.h = Matrix::Ones(2, 3);
    model.alpha = 0.5;
    model.j_topics = 2;
    model.scaling = ScalingParams::identity(2);

    TopicLoadings loadings;
    loadings.ids = {"d0", "d1", "d2", "d3"};
    loadings.w_new = Matrix::Zero(4, 2);
    loadings.w_new << 0.9, 0.1,  //
        0.7, 0.2,                //
        0.1, 0.8,                //
        0.2, 0.6;
    const CoherenceReport report = coherence_report(model, loadings, corpus);
    REQUIRE(report.topics.size() == 2);
    CHECK(report.topics[0].top_docs[0] == "d0");
    CHECK(report.topics[0].top_docs[1] == "d1");
    CHECK(report.topics[1].top_docs[0] == "d2");
    CHECK(report.topics[1].top_docs[1] == "d3");
    CHECK(report.average_coherence ==
          doctest::Approx((report.topics[0].coherence + report.topics[1].coherence) / 2.0)
              .epsilon(1e-12));

    const CoherenceReport again = coherence_report(model, loadings, corpus);
    CHECK(again.topics[0].top_words == report.topics[0].top_words);
    CHECK(again.average_coherence == report.average_coherence);

    const nlohmann::json j = nlohmann::json::parse(coherence_to_json(report));
    CHECK(j["topics"].size() == 2);
    CHECK(j.contains("average_coherence"));
}

TEST_CASE("synthesis filtering needs a strict score win and the right top-two topics") {
    const std::map<std::string, std::vector<std::string>> protos_of{
        {"good", {"p"}}, {"weak", {"p"}}, {"offtopic", {"p"}}};
    const std::map<std::string, CandidateInfo> protos{{"p", info({1.0, 1.0, 1.0}, 4.0)}};
    FilterCriteria criteria;
    criteria.mode = FilterMode::synthesis;
    criteria.target_topics = {0, 1};

    const auto decisions = filter_candidates(
        {{"good", info({3.0, 2.0, 1.0}, 5.0)},
         {"weak", info({3.0, 2.0, 1.0}, 3.0)},
         {"offtopic", info({3.0, 1.0, 2.0}, 5.0)}},
        protos_of, protos, criteria);
    REQUIRE(decisions.size() == 3);
    std::map<std::string, FilterDecision> by_id;
    for (const auto& d : decisions) by_id[d.candidate_id] = d;
    CHECK(by_id.at("good").accepted);
    CHECK(by_id.at("good").reason.empty());
    CHECK(!by_id.at("weak").accepted);
    CHECK(by_id.at("weak").reason == "score");
    CHECK(!by_id.at("offtopic").accepted);
    CHECK(by_id.at("offtopic").reason == "topic-rank");

    FilterCriteria bad = criteria;
    bad.target_topics = {0};
    CHECK_THROWS_AS(
        filter_candidates({{"good", info({1.0, 1.0, 1.0}, 5.0)}}, protos_of, protos, bad),
        ValidationError);

    const std::string csv = decisions_to_csv(decisions);
    CHECK(csv.find("candidate_id,accepted,reason") == 0);
    CHECK(csv.find("weak,false,score") != std::string::npos);
}

TEST_CASE("emphasis filtering requires the target to be the unique top topic") {
    const std::map<std::string, std::vector<std::string>> protos_of{
        {"strong", {"p"}}, {"tied", {"p"}}};
    const std::map<std::string, CandidateInfo> protos{{"p", info({1.0, 1.0, 1.0}, 1.0)}};
    FilterCriteria criteria;
    criteria.mode = FilterMode::emphasis;
    criteria.target_topics = {1};

    const auto decisions = filter_candidates(
        {{"strong", info({1.0, 5.0, 2.0}, 2.0)}, {"tied", info({5.0, 5.0, 2.0}, 2.0)}},
        protos_of, protos, criteria);
    std::map<std::string, FilterDecision> by_id;
    for (const auto& d : decisions) by_id[d.candidate_id] = d;
    CHECK(by_id.at("strong").accepted);
    CHECK(!by_id.at("tied").accepted);
    CHECK(by_id.at("tied").reason == "topic-rank");
}

TEST_CASE("topic-shift filtering demands crossing the threshold against every proto") {
    FilterCriteria criteria;
    criteria.mode = FilterMode::topic_shift;
    criteria.target_topics = {0};
    criteria.direction = ShiftDirection::decrease;
    criteria.threshold = 2.0;

    const std::map<std::string, std::vector<std::string>> protos_of{
        {"drops", {"high"}}, {"already_low", {"low"}}, {"multi", {"high", "low"}}};
    const std::map<std::string, CandidateInfo> protos{
        {"high", info({2.6}, 0.0)}, {"low", info({1.8}, 0.0)}};

    const auto decisions = filter_candidates(
        {{"drops", info({1.4}, 0.0)}, {"already_low", info({1.4}, 0.0)},
         {"multi", info({1.4}, 0.0)}},
        protos_of, protos, criteria);
    std::map<std::string, FilterDecision> by_id;
    for (const auto& d : decisions) by_id[d.candidate_id] = d;
    CHECK(by_id.at("drops").accepted);                       // 2.6 -> 1.4 crosses 2.0 downward
    CHECK(!by_id.at("already_low").accepted);                // the proto never sat above it
    CHECK(by_id.at("already_low").reason == "threshold");
    CHECK(!by_id.at("multi").accepted);                      // one of two protos fails

    criteria.direction = ShiftDirection::increase;
    const auto up = filter_candidates({{"rises", info({2.5}, 0.0)}},
                                      {{"rises", {"low"}}}, protos, criteria);
    CHECK(up[0].accepted);

    CHECK_THROWS_AS(filter_candidates({{"drops", info({1.4}, 0.0)}}, {}, protos, criteria),
                    ValidationError);
}

TEST_CASE("synthetic data plants an exact low-rank structure when noiseless") {
    SyntheticSpec spec;
    spec.n = 30;
    spec.s = 8;
    spec.j_topics = 3;
    spec.noise_sd = 0.0;
    spec.true_gamma = Vector(3);
    spec.true_gamma << 1.0, -1.0, 0.5;
    spec.n_roots = 5;
    spec.seed = 4;

    const SyntheticData data = generate_synthetic(spec);
    REQUIRE(data.corpus.size() == 30);
    REQUIRE(data.embeddings.rows() == 30);
    REQUIRE(data.embeddings.dim() == 8);
    CHECK(data.w_true.minCoeff() >= 0.0);
    CHECK((data.embeddings.values - data.w_true * data.b_true).cwiseAbs().maxCoeff() == 0.0);
    CHECK((data.y - data.w_true * data.gamma_true).cwiseAbs().maxCoeff() == 0.0);

    const Eigen::JacobiSVD<Matrix> svd(data.embeddings.values);
    CHECK(svd.singularValues()(3) < 1e-8 * svd.singularValues()(0));

    std::set<std::string> roots;
    for (const auto& doc : data.corpus.documents()) {
        REQUIRE(doc.root_id.has_value());
        roots.insert(*doc.root_id);
        CHECK(!doc.text.empty());
    }
    CHECK(roots.size() == 5);

    const SyntheticData same = generate_synthetic(spec);
    CHECK(same.embeddings.values == data.embeddings.values);
    CHECK(same.y == data.y);
}

TEST_CASE("simulated comparisons are connected, grouped, and reproducible") {
    std::vector<std::string> ids{"a", "b", "c", "d", "e"};
    const Vector strengths = Vector::Ones(5);
    const ComparisonSet set = simulate_comparisons(ids, strengths, 12, 9);
    REQUIRE(set.size() == 12);
    // the backbone touches every consecutive pair so the graph is connected
    CHECK(set.records[0].left_id == "a");
    CHECK(set.records[0].right_id == "b");
    CHECK(set.records[3].left_id == "d");
    CHECK(set.records[3].right_id == "e");
    std::set<std::string> sessions;
    for (const auto& r : set.records) {
        CHECK(r.left_id != r.right_id);
        sessions.insert(r.session_id);
    }
    CHECK(sessions.size() == 3);  // a dozen records in sessions of five

    const ComparisonSet again = simulate_comparisons(ids, strengths, 12, 9);
    for (std::size_t i = 0; i < set.records.size(); ++i) {
        CHECK(set.records[i].winner_id() == again.records[i].winner_id());
    }
    CHECK_THROWS_AS(simulate_comparisons(ids, strengths, 3, 9), ValidationError);
    Vector bad = strengths;
    bad(2) = 0.0;
    CHECK_THROWS_AS(simulate_comparisons(ids, bad, 12, 9), ValidationError);
}

TEST_CASE("cross-validation prefers the planted topic count over a collapsed model") {
    Rng rng(77);
    const Eigen::Index n = 60, s = 12;
    Matrix w(n, 3), b(3, s);
    for (Eigen::Index i = 0; i < n; ++i) {
        for (Eigen::Index j = 0; j < 3; ++j) w(i, j) = std::abs(rng.normal());
    }
    for (Eigen::Index i = 0; i < 3; ++i) {
        for (Eigen::Index j = 0; j < s; ++j) b(i, j) = rng.normal();
    }
    Vector gamma(3);
    gamma << 2.0, -1.0, 1.0;
    Matrix m = w * b;
    Vector y = w * gamma;
    for (Eigen::Index i = 0; i < n; ++i) {
        y(i) += 0.05 * rng.normal();
        for (Eigen::Index j = 0; j < s; ++j) m(i, j) += 0.05 * rng.normal();
    }

    CvOptions options;
    options.folds = 5;
    options.n_iters = 60;
    options.seed = 3;
    const std::vector<std::pair<int, double>> grid{{1, 0.5}, {3, 0.5}};
    const CVReport report = cross_validate(m, y, grid, options);

    REQUIRE(report.entries.size() == 15);  // 2 cells x 5 folds + 5 baseline rows
    int baseline_rows = 0;
    for (const auto& e : report.entries) {
        CHECK(std::isfinite(e.test_mse));
        if (e.j_topics == 0) ++baseline_rows;
    }
    CHECK(baseline_rows == 5);
    CHECK(report.mean_test_mse(3, 0.5) < report.mean_test_mse(1, 0.5));
    CHECK(report.mean_test_mse(3, 0.5) < report.mean_test_mse(0, 0.0));

    // per-cell seeding depends on values, not grid position
    const CVReport reversed = cross_validate(m, y, {{3, 0.5}, {1, 0.5}}, options);
    CHECK(reversed.mean_test_mse(3, 0.5) == report.mean_test_mse(3, 0.5));
    CHECK(reversed.mean_test_mse(1, 0.5) == report.mean_test_mse(1, 0.5));

    const std::string csv = cv_to_csv(report);
    CHECK(csv.find("J,alpha,fold,train_mse,test_mse") == 0);

    CvOptions tight = options;
    tight.folds = 30;  // folds of two cannot support three topics
    CHECK_THROWS_AS(cross_validate(m, y, {{3, 0.5}}, tight), ValidationError);
}

}  // TEST_SUITE
