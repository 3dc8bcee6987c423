#pragma once

#include <cmath>
#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "autopersuade/embedding.hpp"

namespace autopersuade {

/// Stacked data matrix X = (sqrt(alpha)*M | sqrt(1-alpha)*Y) whose plain
/// least-squares objective splits into the weighted reconstruction and
/// response losses.
class SupervisedMatrix {
  public:
    SupervisedMatrix(Matrix x, double alpha, Eigen::Index s);

    const Matrix& x() const { return x_; }
    double alpha() const { return alpha_; }
    Eigen::Index s() const { return s_; }
    Eigen::Index rows() const { return x_.rows(); }

    Matrix scaled_m() const { return x_.leftCols(s_) / std::sqrt(alpha_); }
    Vector scaled_y() const { return x_.col(s_) / std::sqrt(1.0 - alpha_); }

    SupervisedMatrix select_rows(const std::vector<Eigen::Index>& rows) const;

  private:
    Matrix x_;
    double alpha_;
    Eigen::Index s_;
};

SupervisedMatrix build_supervised_matrix(const Matrix& m_scaled, const Vector& y_scaled, double alpha);

struct SunModel {
    Matrix w;  // n x J, entrywise >= 0
    Matrix h;  // J x (s+1)
    double alpha = 0.5;
    int j_topics = 0;
    std::uint64_t seed = 0;
    int n_iters = 0;
    std::vector<double> loss_trace;
    ScalingParams scaling;
    bool normalized = false;

    Eigen::Index s() const { return h.cols() - 1; }
    /// Topic-to-embedding map, recovered from H on access.
    Matrix b() const { return h.leftCols(h.cols() - 1) / std::sqrt(alpha); }
    /// Persuasion coefficients, recovered from H on access.
    Vector gamma() const { return h.col(h.cols() - 1) / std::sqrt(1.0 - alpha); }
};

/// S0: K-means (k-means++ seeding, Lloyd, <= 300 iterations) on the rows of X;
/// W0 = cluster indicators + 0.2.
Matrix init_w_kmeans(const SupervisedMatrix& x, int j_topics, std::uint64_t seed);

/// S1: H = pinv(W'W) W'X (singular values below 1e-10 * max are dropped).
Matrix update_h(const SupervisedMatrix& x, const Matrix& w);
Matrix update_h(const Matrix& x, const Matrix& w);

/// S2: multiplicative nonnegativity-preserving update of W.
Matrix update_w(const SupervisedMatrix& x, const Matrix& w, const Matrix& h);
Matrix update_w(const Matrix& x, const Matrix& w, const Matrix& h);

/// 0.5 * ||X - WH||_F^2.
double total_loss(const SupervisedMatrix& x, const Matrix& w, const Matrix& h);
double total_loss(const Matrix& x, const Matrix& w, const Matrix& h);

struct FitOptions {
    /// When positive, stop once the relative loss change drops below this.
    double stop_tol = 0.0;
};

SunModel fit(const SupervisedMatrix& x, int j_topics, int n_iters, std::uint64_t seed,
             const FitOptions& options = {});

/// Divides each W column by its population std and scales the matching H row
/// up, leaving WH and all predictions unchanged.
SunModel normalize(const SunModel& model);

struct RestartEntry {
    int restart = 0;
    std::uint64_t seed = 0;
    double holdout_mse = 0.0;
};

struct MultiRestartResult {
    SunModel model;  // winner refit on the full data
    std::vector<RestartEntry> report;
};

/// Fits n_restarts models on a (1 - holdout_fraction) row subset, scores each
/// by held-out response MSE via converged inference, and refits the winning
/// seed on all rows. Ties break toward the earlier restart.
MultiRestartResult multi_restart_fit(const SupervisedMatrix& x, int j_topics, int n_iters,
                                     int n_restarts, double holdout_fraction, std::uint64_t seed);

std::string model_to_json(const SunModel& model);
SunModel model_from_json(const std::string& text);
void save_model(const SunModel& model, const std::filesystem::path& path);
SunModel load_model(const std::filesystem::path& path);

}  // namespace autopersuade
