#pragma once

#include <Eigen/Dense>

#include <filesystem>
#include <string>
#include <vector>

namespace autopersuade {

using Matrix = Eigen::MatrixXd;
using Vector = Eigen::VectorXd;

/// n document embeddings of dimension s, rows aligned with ids.
struct EmbeddingMatrix {
    std::vector<std::string> ids;
    Matrix values;

    Eigen::Index rows() const { return values.rows(); }
    Eigen::Index dim() const { return values.cols(); }

    /// Row-subset in the order of `wanted`; throws on unknown ids.
    EmbeddingMatrix select(const std::vector<std::string>& wanted) const;
};

/// Loads CSV `id,e0,...,e{s-1}`. Rejects ragged rows, non-finite values
/// (naming the row id and column), and a missing header.
EmbeddingMatrix load_embeddings(const std::filesystem::path& path);

/// Standardization state fitted on training data and re-applied verbatim to
/// new documents. Embedding columns are centered and divided by their
/// population standard deviation, then divided once more by
/// embedding_divisor so the embedding block and the response carry
/// comparable variance. The response is centered and divided by its
/// population standard deviation.
struct ScalingParams {
    Vector dim_means;
    Vector dim_stds;
    double embedding_divisor = 2.0;
    double response_mean = 0.0;
    double response_std = 1.0;

    Eigen::Index dim() const { return dim_means.size(); }

    /// No-op scaling of the given dimension (used for fits on data that is
    /// already in model units).
    static ScalingParams identity(Eigen::Index s);
};

/// Computes per-dimension means and population standard deviations of M and
/// of the response Y. Dimensions with std below 1e-12 are left uncentered
/// and unscaled (mean 0, std 1) and a warning is appended. A zero-variance
/// response is an error.
ScalingParams fit_scaling(const Matrix& M, const Vector& Y, double embedding_divisor,
                          std::vector<std::string>* warnings = nullptr);

Matrix scale_embeddings(const Matrix& M, const ScalingParams& params);
Matrix unscale_embeddings(const Matrix& M_scaled, const ScalingParams& params);
Vector scale_response(const Vector& Y, const ScalingParams& params);
Vector unscale_response(const Vector& Y_scaled, const ScalingParams& params);

}  // namespace autopersuade
