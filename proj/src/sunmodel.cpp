#include "autopersuade/sunmodel.hpp"

#include <algorithm>
#include <limits>
#include <numeric>

#include <Eigen/Dense>
#include <nlohmann/json.hpp>

#include "autopersuade/errors.hpp"
#include "autopersuade/inference.hpp"
#include "autopersuade/io_util.hpp"
#include "autopersuade/rng.hpp"

namespace autopersuade {

SupervisedMatrix::SupervisedMatrix(Matrix x, double alpha, Eigen::Index s)
    : x_(std::move(x)), alpha_(alpha), s_(s) {
    if (!(alpha_ > 0.0 && alpha_ < 1.0)) {
        throw ValidationError("alpha must lie strictly between 0 and 1, got " + io::format_double(alpha_));
    }
    if (s_ < 1 || x_.cols() != s_ + 1) {
        throw ValidationError("supervised matrix must have s+1 columns with s >= 1");
    }
    if (!x_.allFinite()) throw ValidationError("supervised matrix contains non-finite values");
}

SupervisedMatrix SupervisedMatrix::select_rows(const std::vector<Eigen::Index>& rows) const {
    Matrix sub(static_cast<Eigen::Index>(rows.size()), x_.cols());
    for (std::size_t i = 0; i < rows.size(); ++i) {
        if (rows[i] < 0 || rows[i] >= x_.rows()) {
            throw ValidationError("row index " + std::to_string(rows[i]) + " out of range");
        }
        sub.row(static_cast<Eigen::Index>(i)) = x_.row(rows[i]);
    }
    return SupervisedMatrix(std::move(sub), alpha_, s_);
}

SupervisedMatrix build_supervised_matrix(const Matrix& m_scaled, const Vector& y_scaled, double alpha) {
    if (m_scaled.rows() != y_scaled.size()) {
        throw ValidationError("embedding rows (" + std::to_string(m_scaled.rows()) +
                              ") and response length (" + std::to_string(y_scaled.size()) +
                              ") do not match");
    }
    if (!(alpha > 0.0 && alpha < 1.0)) {
        throw ValidationError("alpha must lie strictly between 0 and 1, got " + io::format_double(alpha));
    }
    Matrix x(m_scaled.rows(), m_scaled.cols() + 1);
    x.leftCols(m_scaled.cols()) = std::sqrt(alpha) * m_scaled;
    x.col(m_scaled.cols()) = std::sqrt(1.0 - alpha) * y_scaled;
    return SupervisedMatrix(std::move(x), alpha, m_scaled.cols());
}

Matrix init_w_kmeans(const SupervisedMatrix& x, int j_topics, std::uint64_t seed) {
    const Matrix& data = x.x();
    const Eigen::Index n = data.rows();
    if (j_topics < 1) throw ValidationError("topic count must be >= 1");
    if (j_topics > n) {
        throw ValidationError("topic count " + std::to_string(j_topics) + " exceeds document count " +
                              std::to_string(n));
    }
    const Eigen::Index j = j_topics;

    Rng rng(derive_seed(seed, "kmeans"));
    Matrix centers(j, data.cols());

    // k-means++ seeding
    centers.row(0) = data.row(static_cast<Eigen::Index>(rng.uniform_index(static_cast<std::size_t>(n))));
    Vector d2(n);
    for (Eigen::Index i = 0; i < n; ++i) d2(i) = (data.row(i) - centers.row(0)).squaredNorm();
    for (Eigen::Index k = 1; k < j; ++k) {
        const double total = d2.sum();
        Eigen::Index chosen = -1;
        if (total > 0.0) {
            const double target = rng.uniform() * total;
            double cum = 0.0;
            for (Eigen::Index i = 0; i < n; ++i) {
                cum += d2(i);
                if (cum > target) {
                    chosen = i;
                    break;
                }
            }
            if (chosen < 0) chosen = n - 1;  // guard against rounding at the top end
        } else {
            chosen = k % n;  // all remaining points coincide with existing centers
        }
        centers.row(k) = data.row(chosen);
        for (Eigen::Index i = 0; i < n; ++i) {
            d2(i) = std::min(d2(i), (data.row(i) - centers.row(k)).squaredNorm());
        }
    }

    // Lloyd iterations
    std::vector<int> assign(static_cast<std::size_t>(n), -1);
    for (int iter = 0; iter < 300; ++iter) {
        bool changed = false;
        for (Eigen::Index i = 0; i < n; ++i) {
            int best = 0;
            double best_d = (data.row(i) - centers.row(0)).squaredNorm();
            for (Eigen::Index k = 1; k < j; ++k) {
                const double d = (data.row(i) - centers.row(k)).squaredNorm();
                if (d < best_d) {
                    best_d = d;
                    best = static_cast<int>(k);
                }
            }
            if (assign[static_cast<std::size_t>(i)] != best) {
                assign[static_cast<std::size_t>(i)] = best;
                changed = true;
            }
        }

        // Re-seed any empty cluster from the point farthest from its center.
        std::vector<Eigen::Index> count(static_cast<std::size_t>(j), 0);
        for (Eigen::Index i = 0; i < n; ++i) ++count[static_cast<std::size_t>(assign[static_cast<std::size_t>(i)])];
        for (Eigen::Index k = 0; k < j; ++k) {
            if (count[static_cast<std::size_t>(k)] > 0) continue;
            Eigen::Index farthest = -1;
            double far_d = -1.0;
            for (Eigen::Index i = 0; i < n; ++i) {
                const int a = assign[static_cast<std::size_t>(i)];
                if (count[static_cast<std::size_t>(a)] <= 1) continue;
                const double d = (data.row(i) - centers.row(a)).squaredNorm();
                if (d > far_d) {
                    far_d = d;
                    farthest = i;
                }
            }
            if (farthest < 0) {
                throw NumericalError("cannot re-seed empty cluster " + std::to_string(k));
            }
            --count[static_cast<std::size_t>(assign[static_cast<std::size_t>(farthest)])];
            assign[static_cast<std::size_t>(farthest)] = static_cast<int>(k);
            ++count[static_cast<std::size_t>(k)];
            changed = true;
        }

        centers.setZero();
        for (Eigen::Index i = 0; i < n; ++i) {
            centers.row(assign[static_cast<std::size_t>(i)]) += data.row(i);
        }
        for (Eigen::Index k = 0; k < j; ++k) {
            centers.row(k) /= static_cast<double>(count[static_cast<std::size_t>(k)]);
        }
        if (!changed) break;
    }

    Matrix w0 = Matrix::Constant(n, j, 0.2);
    for (Eigen::Index i = 0; i < n; ++i) w0(i, assign[static_cast<std::size_t>(i)]) += 1.0;
    return w0;
}

Matrix update_h(const Matrix& x, const Matrix& w) {
    if (w.rows() != x.rows()) throw ValidationError("W rows must match X rows");
    if (!w.allFinite() || !x.allFinite()) throw ValidationError("non-finite input to the H update");
    if (w.minCoeff() < 0.0) throw ValidationError("W must be entrywise nonnegative");

    const Matrix wtw = w.transpose() * w;
    Eigen::SelfAdjointEigenSolver<Matrix> es(wtw);
    const Vector evals = es.eigenvalues();
    const double cutoff = 1e-10 * std::max(0.0, evals(evals.size() - 1));
    Vector inv = Vector::Zero(evals.size());
    for (Eigen::Index k = 0; k < evals.size(); ++k) {
        if (evals(k) > cutoff && evals(k) > 0.0) inv(k) = 1.0 / evals(k);
    }
    const Matrix pinv = es.eigenvectors() * inv.asDiagonal() * es.eigenvectors().transpose();
    return pinv * (w.transpose() * x);
}

Matrix update_h(const SupervisedMatrix& x, const Matrix& w) { return update_h(x.x(), w); }

Matrix update_w(const Matrix& x, const Matrix& w, const Matrix& h) {
    if (w.rows() != x.rows() || h.cols() != x.cols() || w.cols() != h.rows()) {
        throw ValidationError("shape mismatch in the W update");
    }
    if (w.minCoeff() < 0.0) throw ValidationError("W must be entrywise nonnegative");

    const Matrix xht = x * h.transpose();
    const Matrix hht = h * h.transpose();
    const Matrix xht_pos = 0.5 * (xht.cwiseAbs() + xht);
    const Matrix xht_neg = 0.5 * (xht.cwiseAbs() - xht);
    const Matrix hht_pos = 0.5 * (hht.cwiseAbs() + hht);
    const Matrix hht_neg = 0.5 * (hht.cwiseAbs() - hht);

    const Matrix num = xht_pos + w * hht_neg;
    const Matrix den = xht_neg + w * hht_pos;
    Matrix out = w.array() * (num.array() / (den.array() + 1e-12)).sqrt();
    if (!out.allFinite()) {
        for (Eigen::Index r = 0; r < out.rows(); ++r) {
            for (Eigen::Index c = 0; c < out.cols(); ++c) {
                if (!std::isfinite(out(r, c))) {
                    throw NumericalError("W update produced a non-finite value at (" + std::to_string(r) +
                                         ", " + std::to_string(c) + ")");
                }
            }
        }
    }
    return out;
}

Matrix update_w(const SupervisedMatrix& x, const Matrix& w, const Matrix& h) {
    return update_w(x.x(), w, h);
}

double total_loss(const Matrix& x, const Matrix& w, const Matrix& h) {
    if (w.rows() != x.rows() || h.cols() != x.cols() || w.cols() != h.rows()) {
        throw ValidationError("shape mismatch in the loss evaluation");
    }
    return 0.5 * (x - w * h).squaredNorm();
}

double total_loss(const SupervisedMatrix& x, const Matrix& w, const Matrix& h) {
    return total_loss(x.x(), w, h);
}

SunModel fit(const SupervisedMatrix& x, int j_topics, int n_iters, std::uint64_t seed,
             const FitOptions& options) {
    if (n_iters < 1) throw ValidationError("n_iters must be >= 1");

    Matrix w = init_w_kmeans(x, j_topics, seed);
    Matrix h;
    std::vector<double> trace;
    trace.reserve(static_cast<std::size_t>(n_iters));

    for (int t = 0; t < n_iters; ++t) {
        h = update_h(x, w);
        w = update_w(x, w, h);
        const double loss = total_loss(x, w, h);
        if (!trace.empty() && loss > trace.back() + 1e-9 * std::abs(trace.back())) {
            throw NumericalError("loss increased at step " + std::to_string(t) + ": " +
                                 io::format_double(trace.back()) + " -> " + io::format_double(loss));
        }
        const bool stop = options.stop_tol > 0.0 && !trace.empty() &&
                          trace.back() - loss <= options.stop_tol * std::abs(trace.back());
        trace.push_back(loss);
        if (stop) break;
    }

    SunModel model;
    model.w = std::move(w);
    model.h = std::move(h);
    model.alpha = x.alpha();
    model.j_topics = j_topics;
    model.seed = seed;
    model.n_iters = n_iters;
    model.loss_trace = std::move(trace);
    model.scaling = ScalingParams::identity(x.s());
    return model;
}

SunModel normalize(const SunModel& model) {
    SunModel out = model;
    const Eigen::Index n = out.w.rows();
    for (Eigen::Index k = 0; k < out.w.cols(); ++k) {
        const double mean = out.w.col(k).mean();
        const double sd = std::sqrt((out.w.col(k).array() - mean).square().sum() / static_cast<double>(n));
        if (sd <= 1e-12) {
            throw ValidationError("topic " + std::to_string(k) +
                                  " has zero-variance loadings (dead topic); cannot normalize");
        }
        out.w.col(k) /= sd;
        out.h.row(k) *= sd;
    }
    out.normalized = true;
    return out;
}

MultiRestartResult multi_restart_fit(const SupervisedMatrix& x, int j_topics, int n_iters,
                                     int n_restarts, double holdout_fraction, std::uint64_t seed) {
    if (n_restarts < 1) throw ValidationError("n_restarts must be >= 1");
    if (!(holdout_fraction > 0.0 && holdout_fraction < 1.0)) {
        throw ValidationError("holdout_fraction must lie strictly between 0 and 1");
    }
    const Eigen::Index n = x.rows();
    Eigen::Index n_hold = static_cast<Eigen::Index>(std::llround(static_cast<double>(n) * holdout_fraction));
    n_hold = std::max<Eigen::Index>(1, std::min(n_hold, n - 1));
    if (n - n_hold < j_topics) {
        throw ValidationError("restart training portion (" + std::to_string(n - n_hold) +
                              " rows) is smaller than the topic count " + std::to_string(j_topics));
    }

    std::vector<Eigen::Index> perm(static_cast<std::size_t>(n));
    std::iota(perm.begin(), perm.end(), 0);
    Rng holdout_rng(derive_seed(seed, "restart-holdout"));
    holdout_rng.shuffle(perm);
    std::vector<Eigen::Index> hold(perm.begin(), perm.begin() + n_hold);
    std::vector<Eigen::Index> train(perm.begin() + n_hold, perm.end());
    std::sort(hold.begin(), hold.end());
    std::sort(train.begin(), train.end());

    const SupervisedMatrix x_train = x.select_rows(train);
    const Matrix m_all = x.scaled_m();
    const Vector y_all = x.scaled_y();
    Matrix m_hold(n_hold, x.s());
    Vector y_hold(n_hold);
    for (Eigen::Index i = 0; i < n_hold; ++i) {
        m_hold.row(i) = m_all.row(hold[static_cast<std::size_t>(i)]);
        y_hold(i) = y_all(hold[static_cast<std::size_t>(i)]);
    }

    MultiRestartResult result;
    int best = -1;
    double best_mse = std::numeric_limits<double>::infinity();
    for (int r = 0; r < n_restarts; ++r) {
        const std::uint64_t child = derive_seed(seed, "restart:" + std::to_string(r));
        const SunModel candidate = fit(x_train, j_topics, n_iters, child);
        const TopicLoadings loadings = infer_converged(m_hold, candidate, 1e-8);
        const Vector y_hat = loadings.w_new * candidate.gamma();
        const double mse = (y_hat - y_hold).squaredNorm() / static_cast<double>(n_hold);
        result.report.push_back({r, child, mse});
        if (mse < best_mse) {
            best_mse = mse;
            best = r;
        }
    }

    const std::uint64_t winner = derive_seed(seed, "restart:" + std::to_string(best));
    result.model = fit(x, j_topics, n_iters, winner);
    return result;
}

namespace {

std::vector<double> to_std_vector(const Vector& v) {
    return {v.data(), v.data() + v.size()};
}

Vector to_eigen_vector(const std::vector<double>& v) {
    return Eigen::Map<const Vector>(v.data(), static_cast<Eigen::Index>(v.size()));
}

nlohmann::json matrix_to_json(const Matrix& m) {
    nlohmann::json rows = nlohmann::json::array();
    for (Eigen::Index r = 0; r < m.rows(); ++r) {
        nlohmann::json row = nlohmann::json::array();
        for (Eigen::Index c = 0; c < m.cols(); ++c) row.push_back(m(r, c));
        rows.push_back(std::move(row));
    }
    return rows;
}

Matrix matrix_from_json(const nlohmann::json& rows, const std::string& name) {
    if (!rows.is_array() || rows.empty()) throw ValidationError("model field '" + name + "' must be a non-empty array");
    const std::size_t n_cols = rows[0].size();
    Matrix m(static_cast<Eigen::Index>(rows.size()), static_cast<Eigen::Index>(n_cols));
    for (std::size_t r = 0; r < rows.size(); ++r) {
        if (!rows[r].is_array() || rows[r].size() != n_cols) {
            throw ValidationError("model field '" + name + "' has ragged rows");
        }
        for (std::size_t c = 0; c < n_cols; ++c) {
            m(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(c)) = rows[r][c].get<double>();
        }
    }
    return m;
}

}  // namespace

std::string model_to_json(const SunModel& model) {
    nlohmann::json j;
    j["format_version"] = 1;
    j["alpha"] = model.alpha;
    j["J"] = model.j_topics;
    j["seed"] = model.seed;
    j["n_iters"] = model.n_iters;
    j["W"] = matrix_to_json(model.w);
    j["H"] = matrix_to_json(model.h);
    j["loss_trace"] = model.loss_trace;
    j["scaling_params"] = {
        {"dim_means", to_std_vector(model.scaling.dim_means)},
        {"dim_stds", to_std_vector(model.scaling.dim_stds)},
        {"embedding_divisor", model.scaling.embedding_divisor},
        {"response_mean", model.scaling.response_mean},
        {"response_std", model.scaling.response_std},
    };
    j["normalized"] = model.normalized;
    return j.dump(1) + "\n";
}

SunModel model_from_json(const std::string& text) {
    nlohmann::json j;
    try {
        j = nlohmann::json::parse(text);
    } catch (const nlohmann::json::exception& e) {
        throw ValidationError(std::string("model file is not valid JSON: ") + e.what());
    }
    try {
        if (j.at("format_version").get<int>() != 1) {
            throw ValidationError("unsupported model format_version");
        }
        SunModel model;
        model.alpha = j.at("alpha").get<double>();
        model.j_topics = j.at("J").get<int>();
        model.seed = j.at("seed").get<std::uint64_t>();
        model.n_iters = j.at("n_iters").get<int>();
        model.w = matrix_from_json(j.at("W"), "W");
        model.h = matrix_from_json(j.at("H"), "H");
        model.loss_trace = j.at("loss_trace").get<std::vector<double>>();
        const auto& sp = j.at("scaling_params");
        model.scaling.dim_means = to_eigen_vector(sp.at("dim_means").get<std::vector<double>>());
        model.scaling.dim_stds = to_eigen_vector(sp.at("dim_stds").get<std::vector<double>>());
        model.scaling.embedding_divisor = sp.at("embedding_divisor").get<double>();
        model.scaling.response_mean = sp.at("response_mean").get<double>();
        model.scaling.response_std = sp.at("response_std").get<double>();
        model.normalized = j.at("normalized").get<bool>();

        if (model.h.rows() != model.j_topics || model.w.cols() != model.j_topics) {
            throw ValidationError("model W/H shapes disagree with the topic count");
        }
        if (static_cast<Eigen::Index>(model.scaling.dim_means.size()) != model.s()) {
            throw ValidationError("model scaling dimension disagrees with H");
        }
        if (!(model.alpha > 0.0 && model.alpha < 1.0)) throw ValidationError("model alpha out of range");
        if (model.w.minCoeff() < 0.0) throw ValidationError("model W has negative entries");
        return model;
    } catch (const nlohmann::json::exception& e) {
        throw ValidationError(std::string("model file is missing or mistypes a field: ") + e.what());
    }
}

void save_model(const SunModel& model, const std::filesystem::path& path) {
    io::write_file(path, model_to_json(model));
}

SunModel load_model(const std::filesystem::path& path) {
    return model_from_json(io::read_file(path));
}

}  // namespace autopersuade
