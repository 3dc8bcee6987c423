#pragma once

#include <cstdint>
#include <map>
#include <string>
#include <utility>
#include <vector>

#include "autopersuade/comparisons.hpp"
#include "autopersuade/corpus.hpp"
#include "autopersuade/embedding.hpp"
#include "autopersuade/inference.hpp"
#include "autopersuade/sunmodel.hpp"

namespace autopersuade {

struct CvEntry {
    int j_topics = 0;  // 0 marks the grid-external mean-predictor baseline
    double alpha = 0.0;
    int fold = 0;
    double train_mse = 0.0;
    double test_mse = 0.0;
};

struct CVReport {
    std::vector<CvEntry> entries;
    int folds = 0;
    std::uint64_t seed = 0;

    double mean_test_mse(int j_topics, double alpha) const;
};

struct CvOptions {
    int folds = 10;
    int n_iters = 100;
    double embedding_divisor = 2.0;
    std::uint64_t seed = 0;
};

/// K-fold CV over the (J, alpha) grid on raw (unscaled) data. Scaling is
/// refit inside each fold's training portion; held-out loadings come from
/// converged inference; MSEs are reported in original response units.
/// Appends mean-predictor baseline rows flagged with J = 0.
CVReport cross_validate(const Matrix& m_raw, const Vector& y_raw,
                        const std::vector<std::pair<int, double>>& grid, const CvOptions& options);

std::string cv_to_csv(const CVReport& report);

double mse(const Vector& predicted, const Vector& actual);

/// Top-n words of the concatenated doc_ids texts by TF-IDF. IDF uses the
/// full corpus document frequency. Lowercased, split on non-alphanumeric
/// characters, tokens shorter than 3 and built-in stopwords dropped. Ties
/// break alphabetically.
std::vector<std::string> tfidf_top_words(const Corpus& corpus, const std::vector<std::string>& doc_ids,
                                         int top_n);

/// Co-occurrence coherence: sum over ordered pairs of
/// log((D(v_m, v_l) + 1) / D(v_l)), document frequencies over the corpus.
double topic_coherence(const std::vector<std::string>& top_words, const Corpus& corpus);

struct TopicDiagnostics {
    int topic = 0;
    std::vector<std::string> top_docs;   // up to 25, by loading descending
    std::vector<std::string> top_words;  // up to 5, by TF-IDF
    double coherence = 0.0;
};

struct CoherenceReport {
    std::vector<TopicDiagnostics> topics;
    double average_coherence = 0.0;
};

CoherenceReport coherence_report(const SunModel& model, const TopicLoadings& training_loadings,
                                 const Corpus& corpus);

std::string coherence_to_json(const CoherenceReport& report);

enum class FilterMode { synthesis, emphasis, topic_shift };
enum class ShiftDirection { increase, decrease };

std::string to_string(FilterMode mode);
FilterMode filter_mode_from_string(const std::string& text);
ShiftDirection shift_direction_from_string(const std::string& text);

struct FilterCriteria {
    FilterMode mode = FilterMode::synthesis;
    std::vector<int> target_topics;  // 0-based topic indices
    ShiftDirection direction = ShiftDirection::increase;  // topic_shift only
    double threshold = 0.0;                               // topic_shift only
};

struct CandidateInfo {
    Vector loadings;
    double predicted_score = 0.0;
};

struct FilterDecision {
    std::string candidate_id;
    bool accepted = false;
    std::string reason;  // empty when accepted; "score", "topic-rank", "threshold", "proto-side" otherwise
};

/// Rejection-sampling rules over candidates vs their proto documents:
/// synthesis needs a strictly higher score than every proto and the two
/// target topics as the two highest loadings; emphasis needs a strictly
/// higher score and the target topic as the unique highest loading;
/// topic_shift needs the target loading to cross the threshold in the given
/// direction relative to every proto.
std::vector<FilterDecision> filter_candidates(const std::map<std::string, CandidateInfo>& candidates,
                                              const std::map<std::string, std::vector<std::string>>& protos_of,
                                              const std::map<std::string, CandidateInfo>& protos,
                                              const FilterCriteria& criteria);

std::string decisions_to_csv(const std::vector<FilterDecision>& decisions);

struct SyntheticSpec {
    Eigen::Index n = 600;
    Eigen::Index s = 64;
    int j_topics = 5;
    double noise_sd = 0.05;
    double loading_scale = 1.0;  // half-normal scale of the planted loadings
    Vector true_gamma;           // length j_topics
    Eigen::Index n_roots = 0;    // 0 = max(1, n / 10)
    std::uint64_t seed = 0;
};

struct SyntheticData {
    Corpus corpus;
    EmbeddingMatrix embeddings;
    Vector y;
    Matrix w_true;
    Matrix b_true;
    Vector gamma_true;
};

/// Planted-factorization oracle: W* half-normal, B* standard normal,
/// M = W*B* + noise, Y = W*gamma + noise, plus a stub corpus whose texts
/// reflect each document's dominant topics.
SyntheticData generate_synthetic(const SyntheticSpec& spec);

/// Simulated forced-choice records from known strengths: a connectivity
/// backbone over consecutive ids plus random pairs, winners drawn from the
/// strength ratio model, grouped into sessions of five.
ComparisonSet simulate_comparisons(const std::vector<std::string>& ids, const Vector& strengths,
                                   int n_records, std::uint64_t seed);

}  // namespace autopersuade
