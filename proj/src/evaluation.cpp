#include "autopersuade/evaluation.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <set>
#include <sstream>
#include <unordered_map>
#include <unordered_set>

#include "autopersuade/errors.hpp"
#include "autopersuade/io_util.hpp"
#include "autopersuade/rng.hpp"

namespace autopersuade {

double CVReport::mean_test_mse(int j_topics, double alpha) const {
    double sum = 0.0;
    int count = 0;
    for (const auto& e : entries) {
        if (e.j_topics == j_topics && e.alpha == alpha) {
            sum += e.test_mse;
            ++count;
        }
    }
    if (count == 0) {
        throw ValidationError("no CV entries for J=" + std::to_string(j_topics) + ", alpha=" +
                              io::format_double(alpha));
    }
    return sum / count;
}

double mse(const Vector& predicted, const Vector& actual) {
    if (predicted.size() != actual.size()) throw ValidationError("MSE inputs have different lengths");
    if (predicted.size() == 0) throw ValidationError("MSE of empty vectors");
    return (predicted - actual).squaredNorm() / static_cast<double>(predicted.size());
}

CVReport cross_validate(const Matrix& m_raw, const Vector& y_raw,
                        const std::vector<std::pair<int, double>>& grid, const CvOptions& options) {
    const Eigen::Index n = m_raw.rows();
    if (y_raw.size() != n) throw ValidationError("response length does not match embedding rows");
    if (grid.empty()) throw ValidationError("empty cross-validation grid");
    if (options.folds < 2) throw ValidationError("folds must be >= 2");
    if (options.folds > n) throw ValidationError("more folds than documents");

    // Seeded fold assignment: disjoint, exhaustive, sizes differ by at most one.
    std::vector<Eigen::Index> perm(static_cast<std::size_t>(n));
    std::iota(perm.begin(), perm.end(), 0);
    Rng fold_rng(derive_seed(options.seed, "cv-folds"));
    fold_rng.shuffle(perm);
    std::vector<int> fold_of(static_cast<std::size_t>(n));
    for (std::size_t i = 0; i < perm.size(); ++i) {
        fold_of[static_cast<std::size_t>(perm[i])] = static_cast<int>(i % static_cast<std::size_t>(options.folds));
    }

    std::vector<std::vector<Eigen::Index>> test_rows(static_cast<std::size_t>(options.folds));
    for (Eigen::Index i = 0; i < n; ++i) {
        test_rows[static_cast<std::size_t>(fold_of[static_cast<std::size_t>(i)])].push_back(i);
    }
    std::size_t min_fold = test_rows[0].size();
    for (const auto& rows : test_rows) min_fold = std::min(min_fold, rows.size());
    for (const auto& [j_topics, alpha] : grid) {
        if (static_cast<std::size_t>(j_topics) > min_fold) {
            throw ValidationError("a fold holds " + std::to_string(min_fold) +
                                  " documents, fewer than J=" + std::to_string(j_topics));
        }
    }

    CVReport report;
    report.folds = options.folds;
    report.seed = options.seed;

    std::vector<std::vector<Eigen::Index>> train_rows(static_cast<std::size_t>(options.folds));
    for (Eigen::Index i = 0; i < n; ++i) {
        for (int f = 0; f < options.folds; ++f) {
            if (fold_of[static_cast<std::size_t>(i)] != f) train_rows[static_cast<std::size_t>(f)].push_back(i);
        }
    }

    auto take = [&](const std::vector<Eigen::Index>& rows, Matrix* m_out, Vector* y_out) {
        m_out->resize(static_cast<Eigen::Index>(rows.size()), m_raw.cols());
        y_out->resize(static_cast<Eigen::Index>(rows.size()));
        for (std::size_t i = 0; i < rows.size(); ++i) {
            m_out->row(static_cast<Eigen::Index>(i)) = m_raw.row(rows[i]);
            (*y_out)(static_cast<Eigen::Index>(i)) = y_raw(rows[i]);
        }
    };

    for (const auto& [j_topics, alpha] : grid) {
        for (int f = 0; f < options.folds; ++f) {
            Matrix m_train, m_test;
            Vector y_train, y_test;
            take(train_rows[static_cast<std::size_t>(f)], &m_train, &y_train);
            take(test_rows[static_cast<std::size_t>(f)], &m_test, &y_test);

            ScalingParams scaling = fit_scaling(m_train, y_train, options.embedding_divisor);
            SupervisedMatrix x = build_supervised_matrix(scale_embeddings(m_train, scaling),
                                                         scale_response(y_train, scaling), alpha);
            // Seeds derive from the cell's values, so the report is invariant
            // to grid ordering.
            const std::uint64_t cell_seed =
                derive_seed(options.seed, "cv-J" + std::to_string(j_topics) + "-alpha" +
                                              io::format_double(alpha) + "-fold" + std::to_string(f));
            SunModel model = fit(x, j_topics, options.n_iters, cell_seed);
            model.scaling = scaling;

            const Vector y_hat_train = unscale_response(model.w * model.gamma(), scaling);
            const TopicLoadings test_loadings =
                infer_converged(scale_embeddings(m_test, scaling), model);
            const Vector y_hat_test = predict_response(test_loadings, model);

            report.entries.push_back({j_topics, alpha, f, mse(y_hat_train, y_train), mse(y_hat_test, y_test)});
        }
    }

    // Grid-external reference: predict the training mean everywhere.
    for (int f = 0; f < options.folds; ++f) {
        Matrix m_train, m_test;
        Vector y_train, y_test;
        take(train_rows[static_cast<std::size_t>(f)], &m_train, &y_train);
        take(test_rows[static_cast<std::size_t>(f)], &m_test, &y_test);
        const double y_bar = y_train.mean();
        const double train_mse = (y_train.array() - y_bar).square().mean();
        const double test_mse = (y_test.array() - y_bar).square().mean();
        report.entries.push_back({0, 0.0, f, train_mse, test_mse});
    }
    return report;
}

std::string cv_to_csv(const CVReport& report) {
    std::ostringstream out;
    out << "J,alpha,fold,train_mse,test_mse\n";
    for (const auto& e : report.entries) {
        out << e.j_topics << ',' << io::format_double(e.alpha) << ',' << e.fold << ','
            << io::format_double(e.train_mse) << ',' << io::format_double(e.test_mse) << '\n';
    }
    return out.str();
}

namespace {

// Fixed stopword list: reproducible top words across environments.
const std::unordered_set<std::string>& stopwords() {
    static const std::unordered_set<std::string> words = {
        "about", "above", "after", "again", "against", "all", "and", "any", "are", "because",
        "been", "before", "being", "below", "between", "both", "but", "can", "cannot", "could",
        "did", "does", "doing", "down", "during", "each", "few", "for", "from", "further",
        "had", "has", "have", "having", "her", "here", "hers", "herself", "him", "himself",
        "his", "how", "into", "its", "itself", "just", "more", "most", "myself", "nor", "not",
        "now", "off", "once", "only", "other", "our", "ours", "ourselves", "out", "over", "own",
        "same", "she", "should", "some", "such", "than", "that", "the", "their", "theirs",
        "them", "themselves", "then", "there", "these", "they", "this", "those", "through",
        "too", "under", "until", "very", "was", "were", "what", "when", "where", "which",
        "while", "who", "whom", "why", "will", "with", "would", "you", "your", "yours",
        "yourself", "yourselves",
    };
    return words;
}

std::vector<std::string> tokenize(const std::string& text) {
    std::vector<std::string> tokens;
    std::string current;
    auto flush = [&]() {
        if (current.size() >= 3 && !stopwords().count(current)) tokens.push_back(current);
        current.clear();
    };
    for (char ch : text) {
        const unsigned char c = static_cast<unsigned char>(ch);
        if (c >= 'A' && c <= 'Z') {
            current.push_back(static_cast<char>(c - 'A' + 'a'));
        } else if ((c >= 'a' && c <= 'z') || (c >= '0' && c <= '9')) {
            current.push_back(ch);
        } else {
            flush();
        }
    }
    flush();
    return tokens;
}

std::unordered_map<std::string, int> document_frequencies(const Corpus& corpus) {
    std::unordered_map<std::string, int> df;
    for (const auto& doc : corpus.documents()) {
        std::set<std::string> seen;
        for (auto& tok : tokenize(doc.text)) seen.insert(std::move(tok));
        for (const auto& tok : seen) ++df[tok];
    }
    return df;
}

}  // namespace

std::vector<std::string> tfidf_top_words(const Corpus& corpus, const std::vector<std::string>& doc_ids,
                                         int top_n) {
    if (top_n < 1) throw ValidationError("top_n must be >= 1");
    if (doc_ids.empty()) throw ValidationError("no documents selected for top words");

    std::map<std::string, int> tf;
    for (const auto& id : doc_ids) {
        for (const auto& tok : tokenize(corpus.at(id).text)) ++tf[tok];
    }
    if (tf.empty()) throw ValidationError("empty vocabulary after token filtering");

    const auto df = document_frequencies(corpus);
    const double n_docs = static_cast<double>(corpus.size());

    // score desc, then word asc; map iteration already yields words sorted.
    std::vector<std::pair<double, std::string>> ranked;
    ranked.reserve(tf.size());
    for (const auto& [word, count] : tf) {
        const double idf = std::log(n_docs / static_cast<double>(df.at(word)));
        ranked.emplace_back(static_cast<double>(count) * idf, word);
    }
    std::stable_sort(ranked.begin(), ranked.end(),
                     [](const auto& a, const auto& b) { return a.first > b.first; });

    std::vector<std::string> out;
    for (std::size_t i = 0; i < ranked.size() && out.size() < static_cast<std::size_t>(top_n); ++i) {
        out.push_back(ranked[i].second);
    }
    return out;
}

double topic_coherence(const std::vector<std::string>& top_words, const Corpus& corpus) {
    if (top_words.empty()) throw ValidationError("empty top-word list");

    // Per-word sets of containing documents, over the full corpus.
    std::vector<std::set<std::size_t>> containing(top_words.size());
    for (std::size_t d = 0; d < corpus.size(); ++d) {
        std::set<std::string> seen;
        for (auto& tok : tokenize(corpus.documents()[d].text)) seen.insert(std::move(tok));
        for (std::size_t w = 0; w < top_words.size(); ++w) {
            if (seen.count(top_words[w])) containing[w].insert(d);
        }
    }

    double coherence = 0.0;
    for (std::size_t m = 1; m < top_words.size(); ++m) {
        for (std::size_t l = 0; l < m; ++l) {
            const double d_l = static_cast<double>(containing[l].size());
            if (d_l == 0.0) {
                throw ValidationError("word '" + top_words[l] + "' appears in no corpus document");
            }
            std::size_t both = 0;
            for (std::size_t d : containing[m]) both += containing[l].count(d);
            coherence += std::log((static_cast<double>(both) + 1.0) / d_l);
        }
    }
    return coherence;
}

CoherenceReport coherence_report(const SunModel& model, const TopicLoadings& training_loadings,
                                 const Corpus& corpus) {
    const Eigen::Index m = training_loadings.w_new.rows();
    if (training_loadings.ids.size() != static_cast<std::size_t>(m)) {
        throw ValidationError("training loadings must carry document ids");
    }
    if (training_loadings.w_new.cols() != model.j_topics) {
        throw ValidationError("loadings topic count does not match the model");
    }

    CoherenceReport report;
    double sum = 0.0;
    for (int j = 0; j < model.j_topics; ++j) {
        std::vector<std::pair<double, std::string>> by_loading;
        by_loading.reserve(static_cast<std::size_t>(m));
        for (Eigen::Index r = 0; r < m; ++r) {
            by_loading.emplace_back(training_loadings.w_new(r, j), training_loadings.ids[static_cast<std::size_t>(r)]);
        }
        std::sort(by_loading.begin(), by_loading.end(), [](const auto& a, const auto& b) {
            if (a.first != b.first) return a.first > b.first;
            return a.second < b.second;
        });

        TopicDiagnostics diag;
        diag.topic = j;
        for (std::size_t i = 0; i < by_loading.size() && i < 25; ++i) {
            diag.top_docs.push_back(by_loading[i].second);
        }
        diag.top_words = tfidf_top_words(corpus, diag.top_docs, 5);
        diag.coherence = topic_coherence(diag.top_words, corpus);
        sum += diag.coherence;
        report.topics.push_back(std::move(diag));
    }
    report.average_coherence = sum / static_cast<double>(model.j_topics);
    return report;
}

std::string coherence_to_json(const CoherenceReport& report) {
    std::ostringstream out;
    out << "{\n  \"topics\": [\n";
    for (std::size_t i = 0; i < report.topics.size(); ++i) {
        const auto& t = report.topics[i];
        out << "    {\"topic\": " << t.topic << ", \"coherence\": " << io::format_double(t.coherence)
            << ", \"top_words\": [";
        for (std::size_t w = 0; w < t.top_words.size(); ++w) {
            out << (w ? ", " : "") << '"' << t.top_words[w] << '"';
        }
        out << "], \"top_docs\": [";
        for (std::size_t d = 0; d < t.top_docs.size(); ++d) {
            out << (d ? ", " : "") << '"' << t.top_docs[d] << '"';
        }
        out << "]}" << (i + 1 < report.topics.size() ? "," : "") << "\n";
    }
    out << "  ],\n  \"average_coherence\": " << io::format_double(report.average_coherence) << "\n}\n";
    return out.str();
}

std::string to_string(FilterMode mode) {
    switch (mode) {
        case FilterMode::synthesis: return "synthesis";
        case FilterMode::emphasis: return "emphasis";
        case FilterMode::topic_shift: return "topic_shift";
    }
    return "synthesis";
}

FilterMode filter_mode_from_string(const std::string& text) {
    if (text == "synthesis") return FilterMode::synthesis;
    if (text == "emphasis") return FilterMode::emphasis;
    if (text == "topic_shift") return FilterMode::topic_shift;
    throw ValidationError("filter mode must be synthesis, emphasis, or topic_shift; got '" + text + "'");
}

ShiftDirection shift_direction_from_string(const std::string& text) {
    if (text == "increase") return ShiftDirection::increase;
    if (text == "decrease") return ShiftDirection::decrease;
    throw ValidationError("direction must be increase or decrease, got '" + text + "'");
}

namespace {

void validate_criteria(const FilterCriteria& criteria) {
    const std::size_t n_targets = criteria.target_topics.size();
    switch (criteria.mode) {
        case FilterMode::synthesis:
            if (n_targets != 2 || criteria.target_topics[0] == criteria.target_topics[1]) {
                throw ValidationError("synthesis filtering needs exactly 2 distinct target topics");
            }
            break;
        case FilterMode::emphasis:
            if (n_targets != 1) throw ValidationError("emphasis filtering needs exactly 1 target topic");
            break;
        case FilterMode::topic_shift:
            if (n_targets != 1) throw ValidationError("topic_shift filtering needs exactly 1 target topic");
            if (!std::isfinite(criteria.threshold)) {
                throw ValidationError("topic_shift filtering needs a finite threshold");
            }
            break;
    }
}

// Indices of the two largest loadings, value descending with index ascending
// on ties.
std::pair<int, int> top_two(const Vector& v) {
    int first = 0;
    for (int i = 1; i < v.size(); ++i) {
        if (v(i) > v(first)) first = i;
    }
    int second = first == 0 ? 1 : 0;
    for (int i = 0; i < v.size(); ++i) {
        if (i == first) continue;
        if (v(i) > v(second)) second = i;
    }
    return {first, second};
}

}  // namespace

std::vector<FilterDecision> filter_candidates(const std::map<std::string, CandidateInfo>& candidates,
                                              const std::map<std::string, std::vector<std::string>>& protos_of,
                                              const std::map<std::string, CandidateInfo>& protos,
                                              const FilterCriteria& criteria) {
    validate_criteria(criteria);

    std::vector<FilterDecision> decisions;
    for (const auto& [id, cand] : candidates) {
        auto proto_it = protos_of.find(id);
        if (proto_it == protos_of.end() || proto_it->second.empty()) {
            throw ValidationError("candidate '" + id + "' has no proto documents");
        }
        std::vector<const CandidateInfo*> cand_protos;
        for (const auto& pid : proto_it->second) {
            auto p = protos.find(pid);
            if (p == protos.end()) {
                throw ValidationError("missing proto data for '" + pid + "' (candidate '" + id + "')");
            }
            cand_protos.push_back(&p->second);
        }
        const int j = static_cast<int>(cand.loadings.size());
        for (int t : criteria.target_topics) {
            if (t < 0 || t >= j) {
                throw ValidationError("target topic index " + std::to_string(t) + " outside 0.." +
                                      std::to_string(j - 1));
            }
        }

        FilterDecision decision;
        decision.candidate_id = id;
        switch (criteria.mode) {
            case FilterMode::synthesis: {
                bool beats_all = true;
                for (const auto* p : cand_protos) {
                    if (!(cand.predicted_score > p->predicted_score)) beats_all = false;
                }
                if (!beats_all) {
                    decision.reason = "score";
                    break;
                }
                const auto [first, second] = top_two(cand.loadings);
                const std::set<int> top_set = {first, second};
                const std::set<int> want(criteria.target_topics.begin(), criteria.target_topics.end());
                if (top_set != want) {
                    decision.reason = "topic-rank";
                    break;
                }
                decision.accepted = true;
                break;
            }
            case FilterMode::emphasis: {
                bool beats_all = true;
                for (const auto* p : cand_protos) {
                    if (!(cand.predicted_score > p->predicted_score)) beats_all = false;
                }
                if (!beats_all) {
                    decision.reason = "score";
                    break;
                }
                const int target = criteria.target_topics[0];
                bool unique_top = true;
                for (int i = 0; i < j; ++i) {
                    if (i != target && !(cand.loadings(target) > cand.loadings(i))) unique_top = false;
                }
                if (!unique_top) {
                    decision.reason = "topic-rank";
                    break;
                }
                decision.accepted = true;
                break;
            }
            case FilterMode::topic_shift: {
                const int target = criteria.target_topics[0];
                const double c = cand.loadings(target);
                bool crossed_all = true;
                for (const auto* p : cand_protos) {
                    if (target >= p->loadings.size()) {
                        throw ValidationError("proto loadings for candidate '" + id +
                                              "' do not cover the target topic");
                    }
                    const double pl = p->loadings(target);
                    const bool crossed = criteria.direction == ShiftDirection::decrease
                                             ? (c < criteria.threshold && pl >= criteria.threshold)
                                             : (c > criteria.threshold && pl <= criteria.threshold);
                    if (!crossed) crossed_all = false;
                }
                if (!crossed_all) {
                    decision.reason = "threshold";
                    break;
                }
                decision.accepted = true;
                break;
            }
        }
        decisions.push_back(std::move(decision));
    }
    return decisions;
}

std::string decisions_to_csv(const std::vector<FilterDecision>& decisions) {
    std::ostringstream out;
    out << "candidate_id,accepted,reason\n";
    for (const auto& d : decisions) {
        out << d.candidate_id << ',' << (d.accepted ? "true" : "false") << ',' << d.reason << '\n';
    }
    return out.str();
}

SyntheticData generate_synthetic(const SyntheticSpec& spec) {
    if (spec.n < 2 || spec.s < 1 || spec.j_topics < 1) {
        throw ValidationError("synthetic spec needs n >= 2, s >= 1, J >= 1");
    }
    if (spec.noise_sd < 0.0) throw ValidationError("noise_sd must be >= 0");
    if (!(spec.loading_scale > 0.0)) throw ValidationError("loading_scale must be positive");
    if (spec.true_gamma.size() != spec.j_topics) {
        throw ValidationError("true_gamma must have one entry per topic");
    }

    const Eigen::Index n = spec.n, s = spec.s;
    const int j = spec.j_topics;

    // Each document leans on one dominant topic: non-dominant loadings stay
    // half-normal but at a fifth of the scale. A dense equal-scale W admits
    // shear transforms (W(I + eps*E) >= 0 at the same loss), so the planted
    // basis would not be recoverable from the data at all.
    constexpr double kMinorTopicScale = 0.2;
    Matrix w_true(n, j);
    Rng rng_w(derive_seed(spec.seed, "synth-w"));
    for (Eigen::Index r = 0; r < n; ++r) {
        const int dominant = static_cast<int>(r % j);
        for (int c = 0; c < j; ++c) {
            const double scale =
                c == dominant ? spec.loading_scale : kMinorTopicScale * spec.loading_scale;
            w_true(r, c) = rng_w.half_normal(scale);
        }
    }

    Matrix b_true(j, s);
    Rng rng_b(derive_seed(spec.seed, "synth-b"));
    for (int r = 0; r < j; ++r) {
        for (Eigen::Index c = 0; c < s; ++c) b_true(r, c) = rng_b.normal();
    }

    Matrix m = w_true * b_true;
    Rng rng_nm(derive_seed(spec.seed, "synth-noise-m"));
    if (spec.noise_sd > 0.0) {
        for (Eigen::Index r = 0; r < n; ++r) {
            for (Eigen::Index c = 0; c < s; ++c) m(r, c) += rng_nm.normal(0.0, spec.noise_sd);
        }
    }

    Vector y = w_true * spec.true_gamma;
    Rng rng_ny(derive_seed(spec.seed, "synth-noise-y"));
    if (spec.noise_sd > 0.0) {
        for (Eigen::Index r = 0; r < n; ++r) y(r) += rng_ny.normal(0.0, spec.noise_sd);
    }

    const Eigen::Index n_roots = spec.n_roots > 0 ? spec.n_roots : std::max<Eigen::Index>(1, n / 10);

    std::vector<Document> docs;
    std::vector<std::string> ids;
    docs.reserve(static_cast<std::size_t>(n));
    for (Eigen::Index i = 0; i < n; ++i) {
        char buf[16];
        std::snprintf(buf, sizeof(buf), "doc%05lld", static_cast<long long>(i));
        Document doc;
        doc.id = buf;
        doc.root_id = "root" + std::to_string(i % n_roots);

        // Stub text naming the two dominant planted topics, so word-based
        // diagnostics have co-occurrence structure to find.
        int first = 0, second = 0;
        for (int c = 1; c < j; ++c) {
            if (w_true(i, c) > w_true(i, first)) first = c;
        }
        double best2 = -1.0;
        for (int c = 0; c < j; ++c) {
            if (c != first && w_true(i, c) > best2) {
                best2 = w_true(i, c);
                second = c;
            }
        }
        if (j == 1) second = first;
        std::ostringstream text;
        for (int k = 0; k < 5; ++k) text << "topic" << first << "word" << k << ' ';
        for (int k = 0; k < 3; ++k) text << "topic" << second << "word" << k << (k < 2 ? " " : "");
        doc.text = text.str();
        doc.length_chars = io::utf8_length(doc.text);
        ids.push_back(doc.id);
        docs.push_back(std::move(doc));
    }

    SyntheticData data;
    data.corpus = Corpus(std::move(docs));
    data.embeddings.ids = ids;
    data.embeddings.values = std::move(m);
    data.y = std::move(y);
    data.w_true = std::move(w_true);
    data.b_true = std::move(b_true);
    data.gamma_true = spec.true_gamma;
    return data;
}

ComparisonSet simulate_comparisons(const std::vector<std::string>& ids, const Vector& strengths,
                                   int n_records, std::uint64_t seed) {
    const std::size_t n = ids.size();
    if (n < 2) throw ValidationError("need at least 2 documents to simulate comparisons");
    if (strengths.size() != static_cast<Eigen::Index>(n)) {
        throw ValidationError("strength vector length does not match ids");
    }
    if (strengths.minCoeff() <= 0.0) throw ValidationError("strengths must be positive");
    if (n_records < static_cast<int>(n)) {
        throw ValidationError("need at least one comparison per document (n_records >= n)");
    }

    ComparisonSet set;
    Rng rng(derive_seed(seed, "simulate-comparisons"));
    for (int k = 0; k < n_records; ++k) {
        std::size_t a, b;
        if (k < static_cast<int>(n)) {
            a = static_cast<std::size_t>(k);  // backbone ring keeps the graph connected
            b = (a + 1) % n;
        } else {
            a = rng.uniform_index(n);
            b = rng.uniform_index(n - 1);
            if (b >= a) ++b;
        }
        const double p_a = strengths(static_cast<Eigen::Index>(a)) /
                           (strengths(static_cast<Eigen::Index>(a)) + strengths(static_cast<Eigen::Index>(b)));
        ComparisonRecord rec;
        rec.session_id = "s" + std::to_string(k / 5);
        rec.left_id = ids[a];
        rec.right_id = ids[b];
        rec.winner = rng.uniform() < p_a ? Winner::left : Winner::right;
        set.records.push_back(std::move(rec));
    }
    return set;
}

}  // namespace autopersuade
