#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <string>
#include <vector>

namespace autopersuade {

/// Flat key = value run configuration. Every key can be overridden by the
/// same-named command-line flag; flags win.
struct RunConfig {
    std::string corpus;
    std::string embeddings;
    std::string comparisons;
    std::string output_dir;

    double alpha = 0.5;
    int j_topics = 10;
    int n_iters = 100;
    int n_restarts = 1;
    int folds = 10;
    double embedding_divisor = 2.0;
    std::uint64_t seed = 0;
    std::string inference_mode = "converged";
    std::vector<std::string> covariates = {"length_chars"};
    double train_fraction = 2.0 / 3.0;
    int n_boot = 500;
    std::vector<int> grid_j = {5, 10, 15, 20};
    std::vector<double> grid_alpha = {0.3, 0.5, 0.7};
};

RunConfig load_config(const std::filesystem::path& path);

/// Cross-field validation shared by every command.
void validate_config(const RunConfig& config);

/// Flat snapshot for the run manifest.
std::map<std::string, std::string> config_snapshot(const RunConfig& config);

}  // namespace autopersuade
