#include <doctest.h>

#include <cmath>
#include <set>
#include <string>

#include "autopersuade/comparisons.hpp"
#include "autopersuade/corpus.hpp"
#include "autopersuade/embedding.hpp"
#include "autopersuade/errors.hpp"
#include "autopersuade/io_util.hpp"
#include "autopersuade/rng.hpp"
#include "test_util.hpp"

using namespace autopersuade;
using test_util::TempDir;

TEST_SUITE("ingest") {

TEST_CASE("format_double round-trips arbitrary values exactly") {
    Rng rng(42);
    for (int i = 0; i < 500; ++i) {
        const double x = (rng.uniform() - 0.5) * std::pow(10.0, rng.uniform(-12.0, 12.0));
        CHECK(io::parse_double(io::format_double(x), "round-trip") == x);
    }
    CHECK(io::format_double(1.0) == "1");
    CHECK(io::parse_double(io::format_double(0.1), "t") == 0.1);
}

TEST_CASE("strict numeric parsing rejects partial tokens") {
    CHECK_THROWS_AS(io::parse_double("", "f"), ValidationError);
    CHECK_THROWS_AS(io::parse_double("1.2x", "f"), ValidationError);
    CHECK_THROWS_AS(io::parse_double("--3", "f"), ValidationError);
    CHECK_THROWS_AS(io::parse_int("3.5", "f"), ValidationError);
    CHECK_THROWS_AS(io::parse_int("12a", "f"), ValidationError);
    CHECK(io::parse_int("-7", "f") == -7);
}

TEST_CASE("split_lines tolerates CRLF and a trailing newline") {
    const auto lines = io::split_lines("a\r\nb\nc\n");
    REQUIRE(lines.size() == 3);
    CHECK(lines[0] == "a");
    CHECK(lines[1] == "b");
    CHECK(lines[2] == "c");
}

TEST_CASE("sha256 matches the published test vector") {
    CHECK(io::sha256_hex("abc") ==
          "ba7816bf8f01cfea414140de5dae2223b00361a396177a9cb410ff61f20015ad");
    CHECK(io::sha256_hex("") ==
          "e3b0c44298fc1c149afbf4c8996fb92427ae41e4649b934ca495991b7852b855");
}

TEST_CASE("seed derivation separates streams deterministically") {
    CHECK(derive_seed(7, "alpha") == derive_seed(7, "alpha"));
    CHECK(derive_seed(7, "alpha") != derive_seed(7, "beta"));
    CHECK(derive_seed(7, "alpha") != derive_seed(8, "alpha"));
}

TEST_CASE("rng draws are bounded and reproducible") {
    Rng a(3), b(3);
    for (int i = 0; i < 100; ++i) {
        const double u = a.uniform();
        CHECK(u >= 0.0);
        CHECK(u < 1.0);
        CHECK(u == b.uniform());
    }
    Rng c(5);
    for (int i = 0; i < 100; ++i) CHECK(c.uniform_index(7) < 7);
    std::vector<int> v1{1, 2, 3, 4, 5, 6}, v2 = v1;
    Rng d(9), e(9);
    d.shuffle(v1);
    e.shuffle(v2);
    CHECK(v1 == v2);
}

TEST_CASE("corpus loads json-lines with unicode-aware lengths") {
    TempDir tmp;
    const auto path = tmp.file("corpus.jsonl",
                               "{\"id\":\"a\",\"text\":\"h\xc3\xa9llo\"}\n"
                               "{\"id\":\"b\",\"text\":\"x\",\"root_id\":\"r1\"}\n");
    const Corpus corpus = load_corpus(path);
    REQUIRE(corpus.size() == 2);
    CHECK(corpus.at("a").length_chars == 5);  // é is one character, two bytes
    CHECK(!corpus.at("a").root_id.has_value());
    CHECK(corpus.at("b").root_id.value() == "r1");
    CHECK(corpus.documents()[0].id == "a");
}

TEST_CASE("corpus loader rejects malformed input with line numbers") {
    TempDir tmp;
    CHECK_THROWS_WITH_AS(load_corpus(tmp.file("dup.jsonl",
                                              "{\"id\":\"a\",\"text\":\"x\"}\n"
                                              "{\"id\":\"a\",\"text\":\"y\"}\n")),
                         doctest::Contains("duplicate"), ValidationError);
    CHECK_THROWS_WITH_AS(load_corpus(tmp.file("bad.jsonl",
                                              "{\"id\":\"a\",\"text\":\"x\"}\n"
                                              "not json\n")),
                         doctest::Contains("bad.jsonl:2"), ValidationError);
    CHECK_THROWS_AS(load_corpus(tmp.file("missing.jsonl", "{\"id\":\"a\"}\n")), ValidationError);
    // ids must survive the CSV-based downstream artifacts
    CHECK_THROWS_AS(load_corpus(tmp.file("comma.jsonl", "{\"id\":\"a,b\",\"text\":\"x\"}\n")),
                    ValidationError);
    CHECK_THROWS_AS(load_corpus(tmp.file("empty.jsonl", "")), ValidationError);
}

static Corpus rooted_corpus() {
    std::vector<Document> docs;
    for (int r = 0; r < 3; ++r) {
        for (int i = 0; i < 3; ++i) {
            Document d;
            d.id = "r" + std::to_string(r) + "d" + std::to_string(i);
            d.text = "text";
            d.root_id = "root" + std::to_string(r);
            d.length_chars = 4;
            docs.push_back(d);
        }
    }
    return Corpus(std::move(docs));
}

TEST_CASE("stratified split allocates two train plus one estimation per root of three") {
    const Corpus split = stratified_split(rooted_corpus(), 2.0 / 3.0, 11);
    REQUIRE(split.has_split());
    for (int r = 0; r < 3; ++r) {
        int train = 0;
        for (int i = 0; i < 3; ++i) {
            const auto id = "r" + std::to_string(r) + "d" + std::to_string(i);
            if (split.split_of(id) == Split::train) ++train;
        }
        CHECK(train == 2);
    }
    CHECK(split.ids_in_split(Split::train).size() == 6);
    CHECK(split.ids_in_split(Split::estimation).size() == 3);
}

TEST_CASE("stratified split hits the rounded global target on singleton groups") {
    std::vector<Document> docs;
    for (int i = 0; i < 1309; ++i) {
        Document d;
        d.id = "d" + std::to_string(i);
        d.text = "t";
        docs.push_back(d);
    }
    const Corpus corpus(std::move(docs));
    const Corpus s1 = stratified_split(corpus, 2.0 / 3.0, 1);
    const auto target = static_cast<std::size_t>(std::llround(2.0 / 3.0 * 1309.0));
    CHECK(s1.ids_in_split(Split::train).size() == target);

    const Corpus s1_again = stratified_split(corpus, 2.0 / 3.0, 1);
    CHECK(s1.split_assignment() == s1_again.split_assignment());
    const Corpus s2 = stratified_split(corpus, 2.0 / 3.0, 2);
    CHECK(s1.split_assignment() != s2.split_assignment());
}

TEST_CASE("split file round-trips") {
    TempDir tmp;
    const Corpus split = stratified_split(rooted_corpus(), 2.0 / 3.0, 11);
    const auto path = tmp.file("split.csv", split_to_csv(split));
    CHECK(load_split_csv(path) == split.split_assignment());
    CHECK_THROWS_AS(stratified_split(rooted_corpus(), 1.5, 0), ValidationError);
}

TEST_CASE("embeddings load, reject bad rows, and select in order") {
    TempDir tmp;
    const auto path = tmp.file("emb.csv",
                               "id,e0,e1\n"
                               "a,1,2\n"
                               "b,3,4\n"
                               "c,5,6\n");
    const EmbeddingMatrix emb = load_embeddings(path);
    REQUIRE(emb.rows() == 3);
    REQUIRE(emb.dim() == 2);
    CHECK(emb.values(1, 1) == 4.0);

    const EmbeddingMatrix sub = emb.select({"c", "a"});
    CHECK(sub.ids == std::vector<std::string>{"c", "a"});
    CHECK(sub.values(0, 0) == 5.0);
    CHECK(sub.values(1, 0) == 1.0);
    CHECK_THROWS_AS(emb.select({"nope"}), ValidationError);

    CHECK_THROWS_AS(load_embeddings(tmp.file("ragged.csv", "id,e0,e1\na,1\n")), ValidationError);
    CHECK_THROWS_WITH_AS(load_embeddings(tmp.file("nan.csv", "id,e0\na,nan\n")),
                         doctest::Contains("a"), ValidationError);
    CHECK_THROWS_AS(load_embeddings(tmp.file("dup.csv", "id,e0\na,1\na,2\n")), ValidationError);
}

TEST_CASE("scaling standardizes columns and divides by the embedding divisor") {
    Matrix m(2, 1);
    m << 1.0, 3.0;
    Vector y(2);
    y << 10.0, 14.0;
    const ScalingParams params = fit_scaling(m, y, 2.0, nullptr);
    CHECK(params.dim_means(0) == doctest::Approx(2.0).epsilon(1e-15));
    CHECK(params.dim_stds(0) == doctest::Approx(1.0).epsilon(1e-15));  // population std

    const Matrix scaled = scale_embeddings(m, params);
    CHECK(scaled(0, 0) == doctest::Approx(-0.5).epsilon(1e-15));
    CHECK(scaled(1, 0) == doctest::Approx(0.5).epsilon(1e-15));

    const Vector ys = scale_response(y, params);
    CHECK(ys(0) == doctest::Approx(-1.0).epsilon(1e-15));
    CHECK(unscale_response(ys, params).isApprox(y, 1e-12));
    CHECK(unscale_embeddings(scaled, params).isApprox(m, 1e-12));
}

TEST_CASE("scaling flags dead embedding dimensions and rejects constant responses") {
    Matrix m(3, 2);
    m << 1, 5, 1, 6, 1, 7;  // column 0 constant
    Vector y(3);
    y << 1, 2, 3;
    std::vector<std::string> warnings;
    const ScalingParams params = fit_scaling(m, y, 2.0, &warnings);
    REQUIRE(warnings.size() == 1);
    CHECK(params.dim_means(0) == 0.0);
    CHECK(params.dim_stds(0) == 1.0);

    Vector constant = Vector::Constant(3, 4.0);
    CHECK_THROWS_AS(fit_scaling(m, constant, 2.0, nullptr), ValidationError);
}

TEST_CASE("comparisons load and validate against the corpus") {
    TempDir tmp;
    const auto path = tmp.file("cmp.csv",
                               "session_id,left_id,right_id,winner\n"
                               "s1,a,b,left\n"
                               "s1,b,c,right\n");
    const ComparisonSet set = load_comparisons(path);
    REQUIRE(set.size() == 2);
    CHECK(set.records[0].winner_id() == "a");
    CHECK(set.records[1].winner_id() == "c");
    CHECK(set.ids() == std::vector<std::string>{"a", "b", "c"});

    std::vector<Document> docs;
    for (const char* id : {"a", "b", "c"}) docs.push_back({id, "t", std::nullopt, 1});
    validate_against(set, Corpus(docs));
    docs.pop_back();
    CHECK_THROWS_WITH_AS(validate_against(set, Corpus(docs)), doctest::Contains("c"),
                         ValidationError);

    CHECK_THROWS_AS(load_comparisons(tmp.file("tie.csv",
                                              "session_id,left_id,right_id,winner\ns,a,b,tie\n")),
                    ValidationError);
    CHECK_THROWS_AS(load_comparisons(tmp.file("self.csv",
                                              "session_id,left_id,right_id,winner\ns,a,a,left\n")),
                    ValidationError);
    CHECK_THROWS_AS(load_comparisons(tmp.file("hdr.csv", "left,right,winner\na,b,left\n")),
                    ValidationError);

    const auto round = tmp.file("round.csv", comparisons_to_csv(set));
    CHECK(load_comparisons(round).size() == set.size());
}

}  // TEST_SUITE
