#include "autopersuade/config.hpp"

#include <algorithm>
#include <sstream>

#include "autopersuade/errors.hpp"
#include "autopersuade/inference.hpp"
#include "autopersuade/io_util.hpp"

namespace autopersuade {

namespace {

std::string trim(std::string_view s) {
    std::size_t b = s.find_first_not_of(" \t");
    if (b == std::string_view::npos) return {};
    std::size_t e = s.find_last_not_of(" \t");
    return std::string(s.substr(b, e - b + 1));
}

std::string unquote(std::string s) {
    if (s.size() >= 2 && ((s.front() == '"' && s.back() == '"') || (s.front() == '\'' && s.back() == '\''))) {
        return s.substr(1, s.size() - 2);
    }
    return s;
}

std::vector<std::string> split_list(const std::string& value) {
    std::string body = value;
    if (body.size() >= 2 && body.front() == '[' && body.back() == ']') {
        body = body.substr(1, body.size() - 2);
    }
    std::vector<std::string> items;
    std::string current;
    std::istringstream in(body);
    while (std::getline(in, current, ',')) {
        current = unquote(trim(current));
        if (!current.empty()) items.push_back(current);
    }
    return items;
}

void apply_key(RunConfig& config, const std::string& key, const std::string& value,
               const std::string& where) {
    const std::string ctx = "config key '" + key + "' (" + where + ")";
    if (key == "corpus") {
        config.corpus = value;
    } else if (key == "embeddings") {
        config.embeddings = value;
    } else if (key == "comparisons") {
        config.comparisons = value;
    } else if (key == "output_dir") {
        config.output_dir = value;
    } else if (key == "alpha") {
        config.alpha = io::parse_double(value, ctx);
    } else if (key == "J") {
        config.j_topics = static_cast<int>(io::parse_int(value, ctx));
    } else if (key == "n_iters") {
        config.n_iters = static_cast<int>(io::parse_int(value, ctx));
    } else if (key == "n_restarts") {
        config.n_restarts = static_cast<int>(io::parse_int(value, ctx));
    } else if (key == "folds") {
        config.folds = static_cast<int>(io::parse_int(value, ctx));
    } else if (key == "embedding_divisor") {
        config.embedding_divisor = io::parse_double(value, ctx);
    } else if (key == "seed") {
        const long long raw = io::parse_int(value, ctx);
        if (raw < 0) throw ValidationError("seed must be nonnegative in " + ctx);
        config.seed = static_cast<std::uint64_t>(raw);
    } else if (key == "inference_mode") {
        config.inference_mode = value;
    } else if (key == "covariates") {
        config.covariates = split_list(value);
    } else if (key == "train_fraction") {
        config.train_fraction = io::parse_double(value, ctx);
    } else if (key == "n_boot") {
        config.n_boot = static_cast<int>(io::parse_int(value, ctx));
    } else if (key == "grid_J") {
        config.grid_j.clear();
        for (const auto& item : split_list(value)) {
            config.grid_j.push_back(static_cast<int>(io::parse_int(item, ctx)));
        }
    } else if (key == "grid_alpha") {
        config.grid_alpha.clear();
        for (const auto& item : split_list(value)) {
            config.grid_alpha.push_back(io::parse_double(item, ctx));
        }
    } else {
        throw ValidationError("unknown config key '" + key + "' (" + where + ")");
    }
}

}  // namespace

RunConfig load_config(const std::filesystem::path& path) {
    RunConfig config;
    const auto lines = io::split_lines(io::read_file(path));
    for (std::size_t i = 0; i < lines.size(); ++i) {
        std::string line = lines[i];
        if (const auto hash = line.find('#'); hash != std::string::npos) line = line.substr(0, hash);
        line = trim(line);
        if (line.empty()) continue;
        const auto eq = line.find('=');
        if (eq == std::string::npos) {
            throw ValidationError("expected 'key = value' at " + path.string() + " line " +
                                  std::to_string(i + 1));
        }
        const std::string key = trim(line.substr(0, eq));
        const std::string value = unquote(trim(line.substr(eq + 1)));
        apply_key(config, key, value, path.string() + " line " + std::to_string(i + 1));
    }
    return config;
}

void validate_config(const RunConfig& config) {
    if (!(config.alpha > 0.0 && config.alpha < 1.0)) {
        throw ValidationError("alpha must lie strictly between 0 and 1");
    }
    if (config.j_topics < 1) throw ValidationError("J must be >= 1");
    if (config.n_iters < 1) throw ValidationError("n_iters must be >= 1");
    if (config.n_restarts < 1) throw ValidationError("n_restarts must be >= 1");
    if (config.folds < 2) throw ValidationError("folds must be >= 2");
    if (!(config.embedding_divisor > 0.0)) throw ValidationError("embedding_divisor must be positive");
    if (!(config.train_fraction > 0.0 && config.train_fraction < 1.0)) {
        throw ValidationError("train_fraction must lie strictly between 0 and 1");
    }
    if (config.n_boot < 1) throw ValidationError("n_boot must be >= 1");
    inference_mode_from_string(config.inference_mode);  // throws on bad token
    if (config.grid_j.empty() || config.grid_alpha.empty()) {
        throw ValidationError("grid_J and grid_alpha must be non-empty");
    }
    for (int j : config.grid_j) {
        if (j < 1) throw ValidationError("grid_J entries must be >= 1");
    }
    for (double a : config.grid_alpha) {
        if (!(a > 0.0 && a < 1.0)) throw ValidationError("grid_alpha entries must lie in (0, 1)");
    }
    for (const auto& cov : config.covariates) {
        if (cov != "length_chars") {
            throw ValidationError("unsupported covariate '" + cov + "' (supported: length_chars)");
        }
    }
    if (config.output_dir.empty()) throw ValidationError("output_dir must be set");
}

std::map<std::string, std::string> config_snapshot(const RunConfig& config) {
    auto join_strings = [](const std::vector<std::string>& v) {
        std::string out;
        for (std::size_t i = 0; i < v.size(); ++i) out += (i ? "," : "") + v[i];
        return out;
    };
    std::string grid_j;
    for (std::size_t i = 0; i < config.grid_j.size(); ++i) {
        grid_j += (i ? "," : "") + std::to_string(config.grid_j[i]);
    }
    std::string grid_alpha;
    for (std::size_t i = 0; i < config.grid_alpha.size(); ++i) {
        grid_alpha += (i ? "," : "") + io::format_double(config.grid_alpha[i]);
    }
    return {
        {"corpus", config.corpus},
        {"embeddings", config.embeddings},
        {"comparisons", config.comparisons},
        {"output_dir", config.output_dir},
        {"alpha", io::format_double(config.alpha)},
        {"J", std::to_string(config.j_topics)},
        {"n_iters", std::to_string(config.n_iters)},
        {"n_restarts", std::to_string(config.n_restarts)},
        {"folds", std::to_string(config.folds)},
        {"embedding_divisor", io::format_double(config.embedding_divisor)},
        {"seed", std::to_string(config.seed)},
        {"inference_mode", config.inference_mode},
        {"covariates", join_strings(config.covariates)},
        {"train_fraction", io::format_double(config.train_fraction)},
        {"n_boot", std::to_string(config.n_boot)},
        {"grid_J", grid_j},
        {"grid_alpha", grid_alpha},
    };
}

}  // namespace autopersuade
