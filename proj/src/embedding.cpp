#include "autopersuade/embedding.hpp"

#include <cmath>
#include <unordered_map>

#include "autopersuade/errors.hpp"
#include "autopersuade/io_util.hpp"

namespace autopersuade {

EmbeddingMatrix EmbeddingMatrix::select(const std::vector<std::string>& wanted) const {
    std::unordered_map<std::string, Eigen::Index> index;
    index.reserve(ids.size());
    for (std::size_t i = 0; i < ids.size(); ++i) {
        index.emplace(ids[i], static_cast<Eigen::Index>(i));
    }
    EmbeddingMatrix out;
    out.ids = wanted;
    out.values.resize(static_cast<Eigen::Index>(wanted.size()), values.cols());
    for (std::size_t i = 0; i < wanted.size(); ++i) {
        auto it = index.find(wanted[i]);
        if (it == index.end()) {
            throw ValidationError("no embedding for document '" + wanted[i] + "'");
        }
        out.values.row(static_cast<Eigen::Index>(i)) = values.row(it->second);
    }
    return out;
}

EmbeddingMatrix load_embeddings(const std::filesystem::path& path) {
    const std::vector<std::string> lines = io::split_lines(io::read_file(path));
    if (lines.empty()) {
        throw ValidationError(path.string() + ": empty embeddings file");
    }

    const auto header = io::split_csv_line(lines[0]);
    if (header.size() < 2 || header[0] != "id") {
        throw ValidationError(path.string() + ": expected header 'id,e0,...,e{s-1}'");
    }
    const std::size_t dim = header.size() - 1;
    for (std::size_t j = 0; j < dim; ++j) {
        if (header[j + 1] != "e" + std::to_string(j)) {
            throw ValidationError(path.string() + ": expected header column 'e" +
                                  std::to_string(j) + "', found '" + header[j + 1] + "'");
        }
    }

    std::vector<std::string> ids;
    std::vector<double> data;
    std::unordered_map<std::string, std::size_t> seen;
    for (std::size_t i = 1; i < lines.size(); ++i) {
        if (lines[i].empty()) continue;
        const auto fields = io::split_csv_line(lines[i]);
        const std::string context = path.string() + ":" + std::to_string(i + 1);
        if (fields.size() != dim + 1) {
            throw ValidationError(context + ": expected " + std::to_string(dim + 1) +
                                  " fields, found " + std::to_string(fields.size()));
        }
        const std::string& id = fields[0];
        if (id.empty()) {
            throw ValidationError(context + ": empty id");
        }
        if (!seen.emplace(id, i).second) {
            throw ValidationError(context + ": duplicate id '" + id + "' (first seen on line " +
                                  std::to_string(seen.at(id) + 1) + ")");
        }
        for (std::size_t j = 0; j < dim; ++j) {
            const double v =
                io::parse_double(fields[j + 1], context + ", column e" + std::to_string(j));
            if (!std::isfinite(v)) {
                throw ValidationError(context + ": non-finite value for id '" + id +
                                      "' in column e" + std::to_string(j));
            }
            data.push_back(v);
        }
        ids.push_back(id);
    }
    if (ids.empty()) {
        throw ValidationError(path.string() + ": no embedding rows");
    }

    EmbeddingMatrix out;
    out.ids = std::move(ids);
    out.values.resize(static_cast<Eigen::Index>(out.ids.size()), static_cast<Eigen::Index>(dim));
    for (Eigen::Index i = 0; i < out.values.rows(); ++i) {
        for (Eigen::Index j = 0; j < out.values.cols(); ++j) {
            out.values(i, j) = data[static_cast<std::size_t>(i) * dim + static_cast<std::size_t>(j)];
        }
    }
    return out;
}

ScalingParams ScalingParams::identity(Eigen::Index s) {
    ScalingParams p;
    p.dim_means = Vector::Zero(s);
    p.dim_stds = Vector::Ones(s);
    p.embedding_divisor = 1.0;
    p.response_mean = 0.0;
    p.response_std = 1.0;
    return p;
}

ScalingParams fit_scaling(const Matrix& M, const Vector& Y, double embedding_divisor,
                          std::vector<std::string>* warnings) {
    if (M.rows() < 2) {
        throw ValidationError("fit_scaling requires at least 2 rows");
    }
    if (Y.size() != M.rows()) {
        throw ValidationError("response length " + std::to_string(Y.size()) +
                              " does not match embedding rows " + std::to_string(M.rows()));
    }
    if (!(embedding_divisor > 0.0)) {
        throw ValidationError("embedding_divisor must be positive");
    }

    ScalingParams p;
    p.embedding_divisor = embedding_divisor;
    p.dim_means = M.colwise().mean();
    const auto n = static_cast<double>(M.rows());
    p.dim_stds.resize(M.cols());
    for (Eigen::Index j = 0; j < M.cols(); ++j) {
        const double var = (M.col(j).array() - p.dim_means(j)).square().sum() / n;
        p.dim_stds(j) = std::sqrt(var);
        if (p.dim_stds(j) < 1e-12) {
            // Constant dimension: leave it untouched rather than divide by ~0.
            p.dim_means(j) = 0.0;
            p.dim_stds(j) = 1.0;
            if (warnings) {
                warnings->push_back("embedding dimension e" + std::to_string(j) +
                                    " has (near-)zero variance; left unstandardized");
            }
        }
    }

    p.response_mean = Y.mean();
    const double yvar = (Y.array() - p.response_mean).square().sum() / n;
    p.response_std = std::sqrt(yvar);
    if (p.response_std < 1e-12) {
        throw ValidationError("zero-variance response: all responses are (nearly) identical");
    }
    return p;
}

Matrix scale_embeddings(const Matrix& M, const ScalingParams& params) {
    if (M.cols() != params.dim()) {
        throw ValidationError("embedding dimension " + std::to_string(M.cols()) +
                              " does not match scaling dimension " + std::to_string(params.dim()));
    }
    return ((M.rowwise() - params.dim_means.transpose()).array().rowwise() /
            params.dim_stds.transpose().array())
               .matrix() /
           params.embedding_divisor;
}

Matrix unscale_embeddings(const Matrix& M_scaled, const ScalingParams& params) {
    if (M_scaled.cols() != params.dim()) {
        throw ValidationError("embedding dimension " + std::to_string(M_scaled.cols()) +
                              " does not match scaling dimension " + std::to_string(params.dim()));
    }
    return ((M_scaled * params.embedding_divisor).array().rowwise() *
            params.dim_stds.transpose().array())
               .matrix()
               .rowwise() +
           params.dim_means.transpose();
}

Vector scale_response(const Vector& Y, const ScalingParams& params) {
    return (Y.array() - params.response_mean) / params.response_std;
}

Vector unscale_response(const Vector& Y_scaled, const ScalingParams& params) {
    return Y_scaled.array() * params.response_std + params.response_mean;
}

}  // namespace autopersuade
