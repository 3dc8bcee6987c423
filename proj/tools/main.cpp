// Batch pipeline driver: scoring, model fitting, selection, inference,
// effect estimation, diagnostics, and filtering over file artifacts.

#include <algorithm>
#include <filesystem>
#include <iostream>
#include <map>
#include <optional>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <nlohmann/json.hpp>

#include "autopersuade/btrank.hpp"
#include "autopersuade/causal.hpp"
#include "autopersuade/comparisons.hpp"
#include "autopersuade/config.hpp"
#include "autopersuade/corpus.hpp"
#include "autopersuade/embedding.hpp"
#include "autopersuade/errors.hpp"
#include "autopersuade/evaluation.hpp"
#include "autopersuade/inference.hpp"
#include "autopersuade/io_util.hpp"
#include "autopersuade/manifest.hpp"
#include "autopersuade/rng.hpp"
#include "autopersuade/sunmodel.hpp"

namespace ap = autopersuade;
namespace fs = std::filesystem;

namespace {

void warn(const std::string& message) { std::cerr << "warning: " << message << "\n"; }

// Collects inputs and pending outputs so a command touches the filesystem
// only after all validation and computation succeeded.
struct Stage {
    ap::RunConfig config;
    fs::path out_dir;
    std::string name;
    std::map<std::string, std::string> inputs;
    std::map<std::string, std::string> extra_config;
    std::vector<std::pair<std::string, std::string>> pending;  // rel path -> content

    Stage(const ap::RunConfig& cfg, std::string stage_name)
        : config(cfg), out_dir(cfg.output_dir), name(std::move(stage_name)) {}

    void add_input(const fs::path& path) { inputs[path.string()] = ap::io::sha256_file(path); }

    void stage_output(const std::string& rel_path, std::string content) {
        pending.emplace_back(rel_path, std::move(content));
    }

    fs::path path_of(const std::string& rel) const { return out_dir / rel; }

    void commit() {
        ap::StageRecord record;
        record.status = "ok";
        record.timestamp = ap::utc_timestamp();
        record.config = ap::config_snapshot(config);
        for (const auto& [k, v] : extra_config) record.config[k] = v;
        record.inputs = inputs;
        for (const auto& [rel, content] : pending) {
            ap::io::write_file(out_dir / rel, content);
            record.outputs[rel] = ap::io::sha256_hex(content);
        }
        ap::Manifest manifest = ap::Manifest::load_or_empty(out_dir / "manifest.json");
        manifest.record(name, std::move(record));
        manifest.save(out_dir / "manifest.json");
    }
};

void require_path(const std::string& value, const std::string& key) {
    if (value.empty()) throw ap::ValidationError("config key '" + key + "' is required for this command");
    if (!fs::exists(value)) throw ap::ValidationError(key + " file not found: " + value);
}

ap::Corpus load_corpus_checked(Stage& stage, bool require_split) {
    require_path(stage.config.corpus, "corpus");
    stage.add_input(stage.config.corpus);
    ap::Corpus corpus = ap::load_corpus(stage.config.corpus);

    const fs::path split_path = stage.out_dir / "split.csv";
    if (fs::exists(split_path)) {
        stage.add_input(split_path);
        corpus.set_split(ap::load_split_csv(split_path));
    } else if (require_split) {
        throw ap::ValidationError("no split.csv in " + stage.out_dir.string() + "; run the split command first");
    }
    return corpus;
}

ap::EmbeddingMatrix load_embeddings_checked(Stage& stage) {
    require_path(stage.config.embeddings, "embeddings");
    stage.add_input(stage.config.embeddings);
    return ap::load_embeddings(stage.config.embeddings);
}

ap::ComparisonSet load_comparisons_checked(Stage& stage) {
    require_path(stage.config.comparisons, "comparisons");
    stage.add_input(stage.config.comparisons);
    return ap::load_comparisons(stage.config.comparisons);
}

ap::SunModel load_model_checked(Stage& stage) {
    const fs::path path = stage.out_dir / "models" / "model.json";
    if (!fs::exists(path)) {
        throw ap::ValidationError("no model at " + path.string() + "; run the fit command first");
    }
    stage.add_input(path);
    return ap::load_model(path);
}

struct ScoreRow {
    double score = 0.0;
    bool anchored = false;
};

std::map<std::string, ScoreRow> load_scores_checked(Stage& stage) {
    const fs::path path = stage.out_dir / "scores" / "bt_scores.csv";
    if (!fs::exists(path)) {
        throw ap::ValidationError("no scores at " + path.string() + "; run the bt command first");
    }
    stage.add_input(path);
    const auto lines = ap::io::split_lines(ap::io::read_file(path));
    if (lines.empty() || lines[0] != "id,score,anchored") {
        throw ap::ValidationError("unexpected scores header in " + path.string());
    }
    std::map<std::string, ScoreRow> rows;
    for (std::size_t i = 1; i < lines.size(); ++i) {
        if (lines[i].empty()) continue;
        const auto fields = ap::io::split_csv_line(lines[i]);
        if (fields.size() != 3) {
            throw ap::ValidationError("bad scores row at " + path.string() + " line " + std::to_string(i + 1));
        }
        ScoreRow row;
        row.score = ap::io::parse_double(fields[1], "score");
        row.anchored = fields[2] == "true";
        rows[fields[0]] = row;
    }
    return rows;
}

// Ids from `wanted` that have scores, in the given order; warns on gaps.
std::vector<std::string> with_scores(const std::vector<std::string>& wanted,
                                     const std::map<std::string, ScoreRow>& scores,
                                     const std::string& what) {
    std::vector<std::string> kept;
    std::size_t missing = 0;
    for (const auto& id : wanted) {
        if (scores.count(id)) {
            kept.push_back(id);
        } else {
            ++missing;
        }
    }
    if (missing > 0) {
        warn(std::to_string(missing) + " " + what + " document(s) have no strength score and are skipped");
    }
    if (kept.empty()) throw ap::ValidationError("no scored " + what + " documents to work with");
    return kept;
}

ap::Vector scores_vector(const std::vector<std::string>& ids,
                         const std::map<std::string, ScoreRow>& scores) {
    ap::Vector y(static_cast<Eigen::Index>(ids.size()));
    for (std::size_t i = 0; i < ids.size(); ++i) y(static_cast<Eigen::Index>(i)) = scores.at(ids[i]).score;
    return y;
}

ap::TopicLoadings infer_with_mode(const ap::Matrix& m_scaled, const ap::SunModel& model,
                                  const ap::RunConfig& config, const std::string& seed_stream) {
    if (ap::inference_mode_from_string(config.inference_mode) == ap::InferenceMode::converged) {
        return ap::infer_converged(m_scaled, model);
    }
    return ap::infer_iterative(m_scaled, model, config.n_iters,
                               ap::derive_seed(config.seed, seed_stream));
}

// ---------------------------------------------------------------- commands

void cmd_split(const ap::RunConfig& config) {
    Stage stage(config, "split");
    ap::Corpus corpus = load_corpus_checked(stage, false);
    const ap::Corpus split_corpus =
        ap::stratified_split(corpus, config.train_fraction, ap::derive_seed(config.seed, "split"));
    stage.stage_output("split.csv", ap::split_to_csv(split_corpus));
    stage.commit();
    std::cout << "split written: " << stage.path_of("split.csv").string() << "\n";
}

void cmd_bt(const ap::RunConfig& config) {
    Stage stage(config, "bt");
    ap::Corpus corpus = load_corpus_checked(stage, true);
    ap::ComparisonSet comparisons = load_comparisons_checked(stage);
    ap::validate_against(comparisons, corpus);

    auto is_train = [&](const std::string& id) { return corpus.split_of(id) == ap::Split::train; };
    const ap::ComparisonSet train_records = comparisons.filter(
        [&](const ap::ComparisonRecord& r) { return is_train(r.left_id) && is_train(r.right_id); });
    const ap::ComparisonSet holdout_records = comparisons.filter(
        [&](const ap::ComparisonRecord& r) { return !is_train(r.left_id) || !is_train(r.right_id); });
    if (train_records.records.empty()) {
        throw ap::ValidationError("no comparisons between training documents");
    }

    const ap::BtFitResult trained = ap::fit_bt(train_records);
    for (const auto& w : trained.warnings) warn(w);
    {
        std::size_t unscored = 0;
        for (const auto& id : corpus.ids_in_split(ap::Split::train)) {
            if (!trained.scores.scores.count(id)) ++unscored;
        }
        if (unscored > 0) {
            warn(std::to_string(unscored) + " training document(s) appear in no training comparison");
        }
    }

    std::vector<std::string> new_ids;
    for (const auto& id : holdout_records.ids()) {
        if (!is_train(id)) new_ids.push_back(id);
    }
    ap::BTScores anchored;
    if (!new_ids.empty()) {
        const ap::BtFitResult scored = ap::fit_bt_fixed(holdout_records, trained.scores, new_ids);
        for (const auto& w : scored.warnings) warn(w);
        anchored = scored.scores;
    }

    std::ostringstream csv;
    csv << "id,score,anchored\n";
    std::map<std::string, std::pair<double, bool>> rows;
    for (const auto& [id, s] : trained.scores.scores) rows[id] = {s, false};
    for (const auto& id : new_ids) rows[id] = {anchored.at(id), true};
    for (const auto& [id, row] : rows) {
        csv << id << ',' << ap::io::format_double(row.first) << ',' << (row.second ? "true" : "false")
            << '\n';
    }
    stage.stage_output("scores/bt_scores.csv", csv.str());
    stage.commit();
    std::cout << "scores written: " << stage.path_of("scores/bt_scores.csv").string() << "\n";
}

void cmd_fit(const ap::RunConfig& config) {
    Stage stage(config, "fit");
    ap::Corpus corpus = load_corpus_checked(stage, true);
    ap::EmbeddingMatrix embeddings = load_embeddings_checked(stage);
    const auto scores = load_scores_checked(stage);

    const std::vector<std::string> train_ids =
        with_scores(corpus.ids_in_split(ap::Split::train), scores, "training");
    const ap::EmbeddingMatrix m_train = embeddings.select(train_ids);
    const ap::Vector y_train = scores_vector(train_ids, scores);

    std::vector<std::string> scaling_warnings;
    const ap::ScalingParams scaling =
        ap::fit_scaling(m_train.values, y_train, config.embedding_divisor, &scaling_warnings);
    for (const auto& w : scaling_warnings) warn(w);

    const ap::SupervisedMatrix x = ap::build_supervised_matrix(
        ap::scale_embeddings(m_train.values, scaling), ap::scale_response(y_train, scaling), config.alpha);

    ap::MultiRestartResult result =
        ap::multi_restart_fit(x, config.j_topics, config.n_iters, config.n_restarts, 0.2,
                              ap::derive_seed(config.seed, "fit"));
    result.model.scaling = scaling;

    std::ostringstream restarts;
    restarts << "restart,seed,holdout_mse\n";
    for (const auto& entry : result.report) {
        restarts << entry.restart << ',' << entry.seed << ',' << ap::io::format_double(entry.holdout_mse)
                 << '\n';
    }
    stage.extra_config["winning_seed"] = std::to_string(result.model.seed);
    stage.stage_output("models/model.json", ap::model_to_json(result.model));
    stage.stage_output("models/restarts.csv", restarts.str());
    stage.commit();
    std::cout << "model written: " << stage.path_of("models/model.json").string() << "\n";
}

void cmd_cv(const ap::RunConfig& config) {
    Stage stage(config, "cv");
    ap::Corpus corpus = load_corpus_checked(stage, false);
    ap::EmbeddingMatrix embeddings = load_embeddings_checked(stage);
    const auto scores = load_scores_checked(stage);

    const std::vector<std::string> pool_ids =
        corpus.has_split() ? corpus.ids_in_split(ap::Split::train)
                           : [&] {
                                 std::vector<std::string> all;
                                 for (const auto& d : corpus.documents()) all.push_back(d.id);
                                 return all;
                             }();
    const std::vector<std::string> ids = with_scores(pool_ids, scores, "training");
    const ap::EmbeddingMatrix m = embeddings.select(ids);
    const ap::Vector y = scores_vector(ids, scores);

    std::vector<std::pair<int, double>> grid;
    for (int j : config.grid_j) {
        for (double a : config.grid_alpha) grid.emplace_back(j, a);
    }
    ap::CvOptions options;
    options.folds = config.folds;
    options.n_iters = config.n_iters;
    options.embedding_divisor = config.embedding_divisor;
    options.seed = ap::derive_seed(config.seed, "cv");

    const ap::CVReport report = ap::cross_validate(m.values, y, grid, options);
    stage.stage_output("cv/cv_report.csv", ap::cv_to_csv(report));
    stage.commit();
    std::cout << "cv report written: " << stage.path_of("cv/cv_report.csv").string() << "\n";
}

void cmd_infer(const ap::RunConfig& config, const std::string& ids_arg,
               const std::string& new_embeddings_path) {
    Stage stage(config, "infer");
    const ap::SunModel model = load_model_checked(stage);

    std::vector<std::string> ids;
    ap::Matrix values;
    if (!new_embeddings_path.empty()) {
        if (!fs::exists(new_embeddings_path)) {
            throw ap::ValidationError("new-embeddings file not found: " + new_embeddings_path);
        }
        stage.add_input(new_embeddings_path);
        ap::EmbeddingMatrix fresh = ap::load_embeddings(new_embeddings_path);
        ids = fresh.ids;
        values = std::move(fresh.values);
    } else {
        ap::EmbeddingMatrix embeddings = load_embeddings_checked(stage);
        if (!ids_arg.empty()) {
            std::istringstream in(ids_arg);
            std::string token;
            while (std::getline(in, token, ',')) {
                if (!token.empty()) ids.push_back(token);
            }
            if (ids.empty()) throw ap::ValidationError("--ids produced an empty id list");
        } else {
            ap::Corpus corpus = load_corpus_checked(stage, false);
            ids = corpus.has_split() ? corpus.ids_in_split(ap::Split::estimation)
                                     : embeddings.ids;
            if (ids.empty()) throw ap::ValidationError("no documents to infer");
        }
        values = embeddings.select(ids).values;
    }

    ap::TopicLoadings loadings =
        infer_with_mode(ap::scale_embeddings(values, model.scaling), model, config, "infer");
    loadings.ids = ids;
    const ap::Vector predicted = ap::predict_response(loadings, model);

    stage.stage_output("reports/loadings.csv", ap::loadings_to_csv(loadings, predicted));
    stage.commit();
    std::cout << "loadings written: " << stage.path_of("reports/loadings.csv").string() << "\n";
}

void cmd_amce(const ap::RunConfig& config) {
    Stage stage(config, "amce");
    ap::Corpus corpus = load_corpus_checked(stage, true);
    ap::EmbeddingMatrix embeddings = load_embeddings_checked(stage);
    const auto scores = load_scores_checked(stage);
    const ap::SunModel model = ap::normalize(load_model_checked(stage));

    const std::vector<std::string> est_ids =
        with_scores(corpus.ids_in_split(ap::Split::estimation), scores, "estimation");
    const ap::Matrix m_est = embeddings.select(est_ids).values;

    ap::TopicLoadings loadings =
        infer_with_mode(ap::scale_embeddings(m_est, model.scaling), model, config, "amce-infer");
    loadings.ids = est_ids;

    std::vector<std::pair<std::string, ap::Vector>> covariates;
    for (const auto& name : config.covariates) {
        // validate_config restricts names to length_chars already
        ap::Vector lengths(static_cast<Eigen::Index>(est_ids.size()));
        for (std::size_t i = 0; i < est_ids.size(); ++i) {
            lengths(static_cast<Eigen::Index>(i)) =
                static_cast<double>(corpus.at(est_ids[i]).length_chars);
        }
        covariates.emplace_back(name, std::move(lengths));
    }

    const ap::DesignMatrix design = ap::build_design(loadings, covariates);
    const ap::Vector y_est = scores_vector(est_ids, scores);
    const ap::RegressionResult result = ap::estimate_amce(design, y_est);

    stage.stage_output("amce/effects.csv", ap::effect_csv(result));
    stage.stage_output("amce/effects.json", ap::effect_json(result));
    stage.commit();
    std::cout << "effects written: " << stage.path_of("amce/effects.csv").string() << "\n";
}

void cmd_coherence(const ap::RunConfig& config) {
    Stage stage(config, "coherence");
    ap::Corpus corpus = load_corpus_checked(stage, false);
    ap::EmbeddingMatrix embeddings = load_embeddings_checked(stage);
    const ap::SunModel model = load_model_checked(stage);

    std::vector<std::string> train_ids;
    if (corpus.has_split()) {
        train_ids = corpus.ids_in_split(ap::Split::train);
    } else {
        for (const auto& d : corpus.documents()) train_ids.push_back(d.id);
    }

    std::vector<ap::Document> subset;
    for (const auto& id : train_ids) subset.push_back(corpus.at(id));
    const ap::Corpus train_corpus(std::move(subset));

    const ap::Matrix m_train = embeddings.select(train_ids).values;
    ap::TopicLoadings loadings = ap::infer_converged(ap::scale_embeddings(m_train, model.scaling), model);
    loadings.ids = train_ids;

    const ap::CoherenceReport report = ap::coherence_report(model, loadings, train_corpus);

    nlohmann::json out = nlohmann::json::parse(ap::coherence_to_json(report));
    const fs::path restarts_path = stage.out_dir / "models" / "restarts.csv";
    if (fs::exists(restarts_path)) {
        stage.add_input(restarts_path);
        double best = std::numeric_limits<double>::infinity();
        const auto lines = ap::io::split_lines(ap::io::read_file(restarts_path));
        for (std::size_t i = 1; i < lines.size(); ++i) {
            if (lines[i].empty()) continue;
            const auto fields = ap::io::split_csv_line(lines[i]);
            if (fields.size() == 3) best = std::min(best, ap::io::parse_double(fields[2], "holdout_mse"));
        }
        if (std::isfinite(best)) out["best_holdout_mse"] = best;
    }

    stage.stage_output("reports/coherence.json", out.dump(1) + "\n");
    stage.commit();
    std::cout << "coherence written: " << stage.path_of("reports/coherence.json").string() << "\n";
}

void cmd_filter(const ap::RunConfig& config, const std::string& candidates_path,
                const std::string& protos_path, const std::string& mode_text,
                const std::string& targets_arg, const std::string& direction_text, double threshold,
                bool threshold_set) {
    Stage stage(config, "filter");
    const ap::SunModel model = ap::normalize(load_model_checked(stage));

    if (!fs::exists(candidates_path)) {
        throw ap::ValidationError("candidates file not found: " + candidates_path);
    }
    if (!fs::exists(protos_path)) throw ap::ValidationError("protos file not found: " + protos_path);
    stage.add_input(candidates_path);
    stage.add_input(protos_path);

    ap::FilterCriteria criteria;
    criteria.mode = ap::filter_mode_from_string(mode_text);
    {
        std::istringstream in(targets_arg);
        std::string token;
        while (std::getline(in, token, ',')) {
            if (token.empty()) continue;
            const long long one_based = ap::io::parse_int(token, "--targets");
            if (one_based < 1) throw ap::ValidationError("--targets uses 1-based topic numbers");
            criteria.target_topics.push_back(static_cast<int>(one_based - 1));
        }
    }
    if (criteria.mode == ap::FilterMode::topic_shift) {
        if (!threshold_set) throw ap::ValidationError("topic_shift filtering requires --threshold");
        criteria.direction = ap::shift_direction_from_string(direction_text);
        criteria.threshold = threshold;
    }

    const ap::EmbeddingMatrix cand_emb = ap::load_embeddings(candidates_path);

    // proto map: CSV candidate_id,proto_id
    const auto lines = ap::io::split_lines(ap::io::read_file(protos_path));
    if (lines.empty() || lines[0] != "candidate_id,proto_id") {
        throw ap::ValidationError("protos file must start with header 'candidate_id,proto_id'");
    }
    std::map<std::string, std::vector<std::string>> protos_of;
    std::set<std::string> proto_ids;
    for (std::size_t i = 1; i < lines.size(); ++i) {
        if (lines[i].empty()) continue;
        const auto fields = ap::io::split_csv_line(lines[i]);
        if (fields.size() != 2 || fields[0].empty() || fields[1].empty()) {
            throw ap::ValidationError("bad protos row at line " + std::to_string(i + 1));
        }
        protos_of[fields[0]].push_back(fields[1]);
        proto_ids.insert(fields[1]);
    }

    ap::EmbeddingMatrix main_emb = load_embeddings_checked(stage);
    const ap::EmbeddingMatrix proto_emb =
        main_emb.select(std::vector<std::string>(proto_ids.begin(), proto_ids.end()));

    auto describe = [&](const ap::EmbeddingMatrix& emb) {
        ap::TopicLoadings loadings =
            ap::infer_converged(ap::scale_embeddings(emb.values, model.scaling), model);
        loadings.ids = emb.ids;
        const ap::Vector predicted = ap::predict_response(loadings, model);
        std::map<std::string, ap::CandidateInfo> info;
        for (std::size_t i = 0; i < emb.ids.size(); ++i) {
            info[emb.ids[i]] = {loadings.w_new.row(static_cast<Eigen::Index>(i)).transpose(),
                                predicted(static_cast<Eigen::Index>(i))};
        }
        return info;
    };

    const auto candidates = describe(cand_emb);
    const auto protos = describe(proto_emb);
    const auto decisions = ap::filter_candidates(candidates, protos_of, protos, criteria);

    stage.stage_output("reports/filter_decisions.csv", ap::decisions_to_csv(decisions));
    stage.commit();
    std::cout << "decisions written: " << stage.path_of("reports/filter_decisions.csv").string() << "\n";
}

void cmd_winrates(const ap::RunConfig& config, const std::string& groups_path) {
    Stage stage(config, "winrates");
    ap::ComparisonSet comparisons = load_comparisons_checked(stage);

    if (!fs::exists(groups_path)) throw ap::ValidationError("groups file not found: " + groups_path);
    stage.add_input(groups_path);
    const auto lines = ap::io::split_lines(ap::io::read_file(groups_path));
    if (lines.empty() || lines[0] != "id,group") {
        throw ap::ValidationError("groups file must start with header 'id,group'");
    }
    std::map<std::string, std::string> group_of;
    for (std::size_t i = 1; i < lines.size(); ++i) {
        if (lines[i].empty()) continue;
        const auto fields = ap::io::split_csv_line(lines[i]);
        if (fields.size() != 2 || fields[0].empty() || fields[1].empty()) {
            throw ap::ValidationError("bad groups row at line " + std::to_string(i + 1));
        }
        group_of[fields[0]] = fields[1];
    }

    const ap::WinRateSummary summary = ap::win_rate_summary(
        comparisons, group_of, config.n_boot, ap::derive_seed(config.seed, "winrates"));
    stage.stage_output("reports/win_rates.csv", ap::win_rates_to_csv(summary));
    stage.commit();
    std::cout << "win rates written: " << stage.path_of("reports/win_rates.csv").string() << "\n";
}

void cmd_synth(const ap::RunConfig& config, const std::string& spec_path) {
    Stage stage(config, "synth");
    if (!fs::exists(spec_path)) throw ap::ValidationError("spec file not found: " + spec_path);
    stage.add_input(spec_path);

    ap::SyntheticSpec spec;
    spec.seed = config.seed;
    long long n_records = 0;
    {
        const auto lines = ap::io::split_lines(ap::io::read_file(spec_path));
        std::vector<double> gamma;
        for (std::size_t i = 0; i < lines.size(); ++i) {
            std::string line = lines[i];
            if (const auto hash = line.find('#'); hash != std::string::npos) line = line.substr(0, hash);
            const auto eq = line.find('=');
            if (line.find_first_not_of(" \t") == std::string::npos) continue;
            if (eq == std::string::npos) {
                throw ap::ValidationError("expected 'key = value' at " + spec_path + " line " +
                                          std::to_string(i + 1));
            }
            auto trim = [](const std::string& s) {
                const auto b = s.find_first_not_of(" \t");
                const auto e = s.find_last_not_of(" \t");
                return b == std::string::npos ? std::string() : s.substr(b, e - b + 1);
            };
            const std::string key = trim(line.substr(0, eq));
            const std::string value = trim(line.substr(eq + 1));
            const std::string ctx = "synthetic spec key '" + key + "'";
            if (key == "n") {
                spec.n = ap::io::parse_int(value, ctx);
            } else if (key == "s") {
                spec.s = ap::io::parse_int(value, ctx);
            } else if (key == "J") {
                spec.j_topics = static_cast<int>(ap::io::parse_int(value, ctx));
            } else if (key == "noise_sd") {
                spec.noise_sd = ap::io::parse_double(value, ctx);
            } else if (key == "loading_scale") {
                spec.loading_scale = ap::io::parse_double(value, ctx);
            } else if (key == "n_roots") {
                spec.n_roots = ap::io::parse_int(value, ctx);
            } else if (key == "seed") {
                spec.seed = static_cast<std::uint64_t>(ap::io::parse_int(value, ctx));
            } else if (key == "n_records") {
                n_records = ap::io::parse_int(value, ctx);
            } else if (key == "gamma") {
                gamma.clear();
                std::istringstream in(value);
                std::string token;
                while (std::getline(in, token, ',')) {
                    token = trim(token);
                    if (!token.empty()) gamma.push_back(ap::io::parse_double(token, ctx));
                }
            } else {
                throw ap::ValidationError("unknown synthetic spec key '" + key + "'");
            }
        }
        if (gamma.empty()) throw ap::ValidationError("synthetic spec needs gamma = g1,...,gJ");
        spec.true_gamma = Eigen::Map<const ap::Vector>(gamma.data(), static_cast<Eigen::Index>(gamma.size()));
    }
    if (n_records == 0) n_records = 10 * spec.n;

    const ap::SyntheticData data = ap::generate_synthetic(spec);

    // Strengths from the planted response: standardize, exponentiate.
    const double mean = data.y.mean();
    const double sd = std::sqrt((data.y.array() - mean).square().sum() / static_cast<double>(data.y.size()));
    if (sd <= 1e-12) throw ap::ValidationError("planted response is constant; cannot simulate comparisons");
    const ap::Vector strengths = ((data.y.array() - mean) / sd).exp();

    std::vector<std::string> ids;
    for (const auto& d : data.corpus.documents()) ids.push_back(d.id);
    const ap::ComparisonSet comparisons =
        ap::simulate_comparisons(ids, strengths, static_cast<int>(n_records), spec.seed);

    std::ostringstream corpus_out;
    for (const auto& d : data.corpus.documents()) {
        nlohmann::json rec = {{"id", d.id}, {"text", d.text}};
        if (d.root_id) rec["root_id"] = *d.root_id;
        corpus_out << rec.dump() << "\n";
    }

    std::ostringstream emb_out;
    emb_out << "id";
    for (Eigen::Index c = 0; c < data.embeddings.dim(); ++c) emb_out << ",e" << c;
    emb_out << "\n";
    for (Eigen::Index r = 0; r < data.embeddings.rows(); ++r) {
        emb_out << data.embeddings.ids[static_cast<std::size_t>(r)];
        for (Eigen::Index c = 0; c < data.embeddings.dim(); ++c) {
            emb_out << ',' << ap::io::format_double(data.embeddings.values(r, c));
        }
        emb_out << "\n";
    }

    nlohmann::json truth;
    auto matrix_json = [](const ap::Matrix& m) {
        nlohmann::json rows = nlohmann::json::array();
        for (Eigen::Index r = 0; r < m.rows(); ++r) {
            nlohmann::json row = nlohmann::json::array();
            for (Eigen::Index c = 0; c < m.cols(); ++c) row.push_back(m(r, c));
            rows.push_back(std::move(row));
        }
        return rows;
    };
    truth["W_true"] = matrix_json(data.w_true);
    truth["B_true"] = matrix_json(data.b_true);
    truth["gamma_true"] = std::vector<double>(data.gamma_true.data(),
                                              data.gamma_true.data() + data.gamma_true.size());
    truth["Y"] = std::vector<double>(data.y.data(), data.y.data() + data.y.size());

    stage.stage_output("corpus.jsonl", corpus_out.str());
    stage.stage_output("embeddings.csv", emb_out.str());
    stage.stage_output("comparisons.csv", ap::comparisons_to_csv(comparisons));
    stage.stage_output("truth.json", truth.dump(1) + "\n");
    stage.commit();
    std::cout << "synthetic dataset written under " << stage.out_dir.string() << "\n";
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"AutoPersuade pipeline: pairwise strength scoring, supervised topic modeling, "
                 "held-out inference, and topic effect estimation"};
    app.require_subcommand(1);
    app.fallthrough();

    std::string config_path;
    app.add_option("--config", config_path, "run configuration file (key = value lines)")->required();
    std::optional<long long> seed_flag;
    app.add_option("--seed", seed_flag, "override the config seed");
    std::optional<double> alpha_flag;
    app.add_option("--alpha", alpha_flag, "override alpha");
    std::optional<int> topics_flag;
    app.add_option("--topics", topics_flag, "override the topic count J");
    std::optional<int> iters_flag;
    app.add_option("--iters", iters_flag, "override n_iters");
    std::optional<int> restarts_flag;
    app.add_option("--restarts", restarts_flag, "override n_restarts");
    std::optional<int> folds_flag;
    app.add_option("--folds", folds_flag, "override folds");
    std::string mode_flag;
    app.add_option("--mode", mode_flag, "override inference_mode (iterative|converged)");
    std::string out_flag;
    app.add_option("--out", out_flag, "override output_dir");

    CLI::App* sc_split = app.add_subcommand("split", "stratified train/estimation split");
    CLI::App* sc_bt = app.add_subcommand("bt", "fit pairwise strength scores");
    CLI::App* sc_cv = app.add_subcommand("cv", "cross-validated (J, alpha) grid");
    CLI::App* sc_fit = app.add_subcommand("fit", "fit the topic model with restarts");
    CLI::App* sc_infer = app.add_subcommand("infer", "infer loadings and predictions");
    std::string ids_arg, new_embeddings_arg;
    sc_infer->add_option("--ids", ids_arg, "comma-separated document ids to infer");
    sc_infer->add_option("--new-embeddings", new_embeddings_arg, "embeddings CSV of new documents");
    CLI::App* sc_amce = app.add_subcommand("amce", "estimate topic effects on the estimation set");
    CLI::App* sc_coherence = app.add_subcommand("coherence", "topic coherence diagnostics");
    CLI::App* sc_filter = app.add_subcommand("filter", "accept/reject candidate arguments");
    std::string candidates_arg, protos_arg, filter_mode_arg = "synthesis", targets_arg,
                direction_arg = "increase";
    double threshold_arg = 0.0;
    sc_filter->add_option("--candidates", candidates_arg, "embeddings CSV of candidate documents")
        ->required();
    sc_filter->add_option("--protos", protos_arg, "CSV candidate_id,proto_id")->required();
    sc_filter->add_option("--filter-mode", filter_mode_arg, "synthesis|emphasis|topic_shift")->required();
    sc_filter->add_option("--targets", targets_arg, "comma-separated 1-based target topics")->required();
    sc_filter->add_option("--direction", direction_arg, "increase|decrease (topic_shift)");
    CLI::Option* threshold_opt =
        sc_filter->add_option("--threshold", threshold_arg, "loading threshold (topic_shift)");
    CLI::App* sc_winrates = app.add_subcommand("winrates", "group win rates with bootstrap CIs");
    std::string groups_arg;
    sc_winrates->add_option("--groups", groups_arg, "CSV id,group")->required();
    CLI::App* sc_synth = app.add_subcommand("synth", "generate a planted synthetic dataset");
    std::string spec_arg;
    sc_synth->add_option("--spec", spec_arg, "synthetic spec file (key = value lines)")->required();

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        std::cerr << nlohmann::json{{"error", "validation"}, {"message", e.what()}}.dump() << "\n";
        return 2;
    }

    try {
        ap::RunConfig config = ap::load_config(config_path);
        if (seed_flag) {
            if (*seed_flag < 0) throw ap::ValidationError("--seed must be nonnegative");
            config.seed = static_cast<std::uint64_t>(*seed_flag);
        }
        if (alpha_flag) config.alpha = *alpha_flag;
        if (topics_flag) config.j_topics = *topics_flag;
        if (iters_flag) config.n_iters = *iters_flag;
        if (restarts_flag) config.n_restarts = *restarts_flag;
        if (folds_flag) config.folds = *folds_flag;
        if (!mode_flag.empty()) config.inference_mode = mode_flag;
        if (!out_flag.empty()) config.output_dir = out_flag;
        ap::validate_config(config);

        if (sc_split->parsed()) {
            cmd_split(config);
        } else if (sc_bt->parsed()) {
            cmd_bt(config);
        } else if (sc_cv->parsed()) {
            cmd_cv(config);
        } else if (sc_fit->parsed()) {
            cmd_fit(config);
        } else if (sc_infer->parsed()) {
            cmd_infer(config, ids_arg, new_embeddings_arg);
        } else if (sc_amce->parsed()) {
            cmd_amce(config);
        } else if (sc_coherence->parsed()) {
            cmd_coherence(config);
        } else if (sc_filter->parsed()) {
            cmd_filter(config, candidates_arg, protos_arg, filter_mode_arg, targets_arg, direction_arg,
                       threshold_arg, threshold_opt->count() > 0);
        } else if (sc_winrates->parsed()) {
            cmd_winrates(config, groups_arg);
        } else if (sc_synth->parsed()) {
            cmd_synth(config, spec_arg);
        }
        return 0;
    } catch (const ap::ValidationError& e) {
        std::cerr << nlohmann::json{{"error", "validation"}, {"message", e.what()}}.dump() << "\n";
        return 2;
    } catch (const ap::NumericalError& e) {
        std::cerr << nlohmann::json{{"error", "numerical"}, {"message", e.what()}}.dump() << "\n";
        return 3;
    } catch (const std::exception& e) {
        std::cerr << nlohmann::json{{"error", "internal"}, {"message", e.what()}}.dump() << "\n";
        return 3;
    }
}
