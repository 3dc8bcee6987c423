#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "autopersuade/embedding.hpp"
#include "autopersuade/sunmodel.hpp"

namespace autopersuade {

enum class InferenceMode { iterative, converged };

std::string to_string(InferenceMode mode);
InferenceMode inference_mode_from_string(const std::string& text);

struct TopicLoadings {
    std::vector<std::string> ids;  // may be empty when inferring from bare matrices
    Matrix w_new;                  // m x J, entrywise >= 0
    InferenceMode mode = InferenceMode::converged;
    double kkt_max_violation = 0.0;  // converged mode only
};

/// Early-stopped multiplicative updates against the frozen basis B.
/// Rows start at 0.2 plus seeded uniform noise in [0, 0.01); n_iters = 0
/// returns the initialization.
TopicLoadings infer_iterative(const Matrix& m_new_scaled, const SunModel& model, int n_iters,
                              std::uint64_t seed);

/// Per-document nonnegative least squares min_{w>=0} ||m - wB||^2 solved to a
/// KKT certificate: g = wBB' - mB' has g_j >= -tol and |g_j w_j| <= tol*(1+||m||^2).
TopicLoadings infer_converged(const Matrix& m_new_scaled, const SunModel& model, double tol = 1e-8);

/// W_new * gamma mapped back to original response units via the model scaling.
Vector predict_response(const TopicLoadings& loadings, const SunModel& model);

/// CSV `id,t0,...,t{J-1},predicted_score,mode`; ids fall back to row indices.
std::string loadings_to_csv(const TopicLoadings& loadings, const Vector& predicted);

}  // namespace autopersuade
