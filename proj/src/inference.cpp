#include "autopersuade/inference.hpp"

#include <cmath>
#include <sstream>

#include <Eigen/Dense>

#include "autopersuade/errors.hpp"
#include "autopersuade/io_util.hpp"
#include "autopersuade/rng.hpp"

namespace autopersuade {

std::string to_string(InferenceMode mode) {
    return mode == InferenceMode::iterative ? "iterative" : "converged";
}

InferenceMode inference_mode_from_string(const std::string& text) {
    if (text == "iterative") return InferenceMode::iterative;
    if (text == "converged") return InferenceMode::converged;
    throw ValidationError("inference mode must be 'iterative' or 'converged', got '" + text + "'");
}

namespace {

void check_dims(const Matrix& m_new, const SunModel& model) {
    if (!m_new.allFinite()) throw ValidationError("new embeddings contain non-finite values");
    if (m_new.cols() != model.s()) {
        throw ValidationError("embedding dimension " + std::to_string(m_new.cols()) +
                              " does not match the model basis dimension " + std::to_string(model.s()));
    }
}

}  // namespace

TopicLoadings infer_iterative(const Matrix& m_new_scaled, const SunModel& model, int n_iters,
                              std::uint64_t seed) {
    check_dims(m_new_scaled, model);
    if (n_iters < 0) throw ValidationError("n_iters must be >= 0");

    const double root_alpha = std::sqrt(model.alpha);
    const Matrix x = root_alpha * m_new_scaled;        // m x s
    const Matrix h = root_alpha * model.b();           // J x s, frozen
    const Eigen::Index m = x.rows(), j = h.rows();

    Matrix w(m, j);
    Rng rng(derive_seed(seed, "infer-init"));
    for (Eigen::Index r = 0; r < m; ++r) {
        for (Eigen::Index c = 0; c < j; ++c) {
            w(r, c) = 0.2 + 0.01 * rng.uniform();
        }
    }

    const Matrix hht = h * h.transpose();
    const Matrix hht_pos = 0.5 * (hht.cwiseAbs() + hht);
    const Matrix hht_neg = 0.5 * (hht.cwiseAbs() - hht);
    const Matrix xht = x * h.transpose();
    const Matrix xht_pos = 0.5 * (xht.cwiseAbs() + xht);
    const Matrix xht_neg = 0.5 * (xht.cwiseAbs() - xht);

    for (int t = 0; t < n_iters; ++t) {
        const Matrix num = xht_pos + w * hht_neg;
        const Matrix den = xht_neg + w * hht_pos;
        w = w.array() * (num.array() / (den.array() + 1e-12)).sqrt();
    }
    if (!w.allFinite()) throw NumericalError("iterative inference produced non-finite loadings");

    TopicLoadings out;
    out.w_new = std::move(w);
    out.mode = InferenceMode::iterative;
    return out;
}

namespace {

// Lawson-Hanson active-set NNLS on the normal-equations form:
// minimize 0.5 w G w' - c w  with  G = BB', c = mB'.
Vector nnls_row(const Matrix& gram, const Vector& c, double tol, double m_sq_norm, int max_passes,
                double* violation_out) {
    const Eigen::Index j = gram.rows();
    Vector w = Vector::Zero(j);
    std::vector<bool> passive(static_cast<std::size_t>(j), false);

    auto solve_passive = [&]() -> Vector {
        std::vector<Eigen::Index> idx;
        for (Eigen::Index k = 0; k < j; ++k) {
            if (passive[static_cast<std::size_t>(k)]) idx.push_back(k);
        }
        Vector z = Vector::Zero(j);
        if (idx.empty()) return z;
        Matrix gp(idx.size(), idx.size());
        Vector cp(idx.size());
        for (std::size_t a = 0; a < idx.size(); ++a) {
            cp(static_cast<Eigen::Index>(a)) = c(idx[a]);
            for (std::size_t b = 0; b < idx.size(); ++b) {
                gp(static_cast<Eigen::Index>(a), static_cast<Eigen::Index>(b)) = gram(idx[a], idx[b]);
            }
        }
        Vector zp = gp.completeOrthogonalDecomposition().solve(cp);
        for (std::size_t a = 0; a < idx.size(); ++a) z(idx[a]) = zp(static_cast<Eigen::Index>(a));
        return z;
    };

    auto kkt_violation = [&](const Vector& ww) {
        const Vector g = gram * ww - c;
        double v = 0.0;
        for (Eigen::Index k = 0; k < j; ++k) {
            v = std::max(v, -g(k));
            v = std::max(v, std::abs(g(k) * ww(k)) / (1.0 + m_sq_norm));
        }
        return v;
    };

    for (int pass = 0; pass < max_passes; ++pass) {
        const Vector neg_grad = c - gram * w;
        Eigen::Index entering = -1;
        double best = tol * 0.1;  // enter while any coordinate still violates a slice of tol
        for (Eigen::Index k = 0; k < j; ++k) {
            if (!passive[static_cast<std::size_t>(k)] && neg_grad(k) > best) {
                best = neg_grad(k);
                entering = k;
            }
        }
        if (entering < 0) break;
        passive[static_cast<std::size_t>(entering)] = true;

        for (int inner = 0; inner < max_passes; ++inner) {
            const Vector z = solve_passive();
            bool feasible = true;
            for (Eigen::Index k = 0; k < j; ++k) {
                if (passive[static_cast<std::size_t>(k)] && z(k) <= 0.0) {
                    feasible = false;
                    break;
                }
            }
            if (feasible) {
                w = z;
                break;
            }
            double step = 1.0;
            for (Eigen::Index k = 0; k < j; ++k) {
                if (passive[static_cast<std::size_t>(k)] && z(k) <= 0.0) {
                    step = std::min(step, w(k) / (w(k) - z(k)));
                }
            }
            w += step * (z - w);
            for (Eigen::Index k = 0; k < j; ++k) {
                if (passive[static_cast<std::size_t>(k)] && w(k) <= 1e-14) {
                    passive[static_cast<std::size_t>(k)] = false;
                    w(k) = 0.0;
                }
            }
        }
    }

    *violation_out = kkt_violation(w);
    return w;
}

}  // namespace

TopicLoadings infer_converged(const Matrix& m_new_scaled, const SunModel& model, double tol) {
    check_dims(m_new_scaled, model);
    if (!(tol > 0.0)) throw ValidationError("KKT tolerance must be positive");

    const Matrix b = model.b();  // J x s
    const Matrix gram = b * b.transpose();
    const Eigen::Index m = m_new_scaled.rows(), j = b.rows();
    const int max_passes = std::max<int>(30, 10 * static_cast<int>(j));

    TopicLoadings out;
    out.mode = InferenceMode::converged;
    out.w_new.resize(m, j);
    out.kkt_max_violation = 0.0;
    Eigen::Index worst_row = -1;

    for (Eigen::Index r = 0; r < m; ++r) {
        const Vector mrow = m_new_scaled.row(r).transpose();
        const Vector c = b * mrow;
        double violation = 0.0;
        out.w_new.row(r) = nnls_row(gram, c, tol, mrow.squaredNorm(), max_passes, &violation).transpose();
        if (violation > out.kkt_max_violation) {
            out.kkt_max_violation = violation;
            worst_row = r;
        }
    }
    if (out.kkt_max_violation > tol) {
        throw NumericalError("nonnegative least squares failed its optimality certificate (violation " +
                             io::format_double(out.kkt_max_violation) + " > " + io::format_double(tol) +
                             ") on document row " + std::to_string(worst_row));
    }
    return out;
}

Vector predict_response(const TopicLoadings& loadings, const SunModel& model) {
    if (loadings.w_new.cols() != model.j_topics) {
        throw ValidationError("loadings have " + std::to_string(loadings.w_new.cols()) +
                              " topics but the model has " + std::to_string(model.j_topics));
    }
    const Vector scaled = loadings.w_new * model.gamma();
    return unscale_response(scaled, model.scaling);
}

std::string loadings_to_csv(const TopicLoadings& loadings, const Vector& predicted) {
    if (predicted.size() != loadings.w_new.rows()) {
        throw ValidationError("prediction vector length does not match loadings rows");
    }
    std::ostringstream out;
    out << "id";
    for (Eigen::Index c = 0; c < loadings.w_new.cols(); ++c) out << ",t" << c;
    out << ",predicted_score,mode\n";
    for (Eigen::Index r = 0; r < loadings.w_new.rows(); ++r) {
        if (loadings.ids.empty()) {
            out << r;
        } else {
            out << loadings.ids[static_cast<std::size_t>(r)];
        }
        for (Eigen::Index c = 0; c < loadings.w_new.cols(); ++c) {
            out << ',' << io::format_double(loadings.w_new(r, c));
        }
        out << ',' << io::format_double(predicted(r)) << ',' << to_string(loadings.mode) << '\n';
    }
    return out.str();
}

}  // namespace autopersuade
