#include "autopersuade/causal.hpp"

#include <cmath>
#include <limits>
#include <sstream>

#include <Eigen/Dense>
#include <boost/math/distributions/students_t.hpp>

#include "autopersuade/errors.hpp"
#include "autopersuade/io_util.hpp"

namespace autopersuade {

const TermStats& RegressionResult::at(const std::string& term) const {
    auto it = stats.find(term);
    if (it == stats.end()) throw ValidationError("no regression term named '" + term + "'");
    return it->second;
}

namespace {

// Gram-Schmidt scan to name the columns that break full rank.
std::vector<std::string> dependent_columns(const DesignMatrix& design) {
    const Eigen::Index n = design.values.rows();
    Matrix basis(n, 0);
    std::vector<std::string> offending;
    for (Eigen::Index c = 0; c < design.values.cols(); ++c) {
        Vector col = design.values.col(c);
        Vector residual = col - basis * (basis.transpose() * col);
        residual -= basis * (basis.transpose() * residual);  // second pass for stability
        const double scale = std::max(col.norm(), 1.0);
        if (residual.norm() <= 1e-10 * scale) {
            offending.push_back(design.terms[static_cast<std::size_t>(c)]);
        } else {
            basis.conservativeResize(n, basis.cols() + 1);
            basis.col(basis.cols() - 1) = residual / residual.norm();
        }
    }
    return offending;
}

void require_full_rank(const DesignMatrix& design) {
    Eigen::JacobiSVD<Matrix> svd(design.values);
    const Vector sv = svd.singularValues();
    if (sv.size() == 0 || sv(sv.size() - 1) <= 1e-10 * sv(0)) {
        std::ostringstream msg;
        msg << "design matrix is rank deficient; dependent columns:";
        for (const auto& t : dependent_columns(design)) msg << " " << t;
        throw ValidationError(msg.str());
    }
}

}  // namespace

DesignMatrix build_design(const TopicLoadings& loadings,
                          const std::vector<std::pair<std::string, Vector>>& covariates) {
    const Eigen::Index n = loadings.w_new.rows();
    const Eigen::Index j = loadings.w_new.cols();
    if (n == 0) throw ValidationError("no observations for the design matrix");

    DesignMatrix design;
    design.terms.push_back("const");
    for (Eigen::Index k = 0; k < j; ++k) design.terms.push_back("topic(" + std::to_string(k + 1) + ")");

    design.values.resize(n, 1 + j + static_cast<Eigen::Index>(covariates.size()));
    design.values.col(0).setOnes();
    design.values.middleCols(1, j) = loadings.w_new;

    Eigen::Index col = 1 + j;
    for (const auto& [name, values] : covariates) {
        if (values.size() != n) {
            throw ValidationError("covariate '" + name + "' has " + std::to_string(values.size()) +
                                  " rows, expected " + std::to_string(n));
        }
        for (const auto& existing : design.terms) {
            if (existing == name) throw ValidationError("duplicate design term '" + name + "'");
        }
        design.terms.push_back(name);
        design.values.col(col++) = values;
    }

    require_full_rank(design);
    return design;
}

RegressionResult estimate_amce(const DesignMatrix& design, const Vector& y) {
    const Eigen::Index n = design.values.rows();
    const Eigen::Index k = design.values.cols();
    if (y.size() != n) throw ValidationError("response length does not match the design matrix");
    if (n <= k) {
        throw ValidationError("need more observations (" + std::to_string(n) + ") than terms (" +
                              std::to_string(k) + ")");
    }
    require_full_rank(design);

    Eigen::JacobiSVD<Matrix> svd(design.values, Eigen::ComputeThinU | Eigen::ComputeThinV);
    const Vector sv = svd.singularValues();
    const Vector beta = svd.matrixV() * (svd.singularValues().cwiseInverse().asDiagonal() *
                                         (svd.matrixU().transpose() * y));

    const Vector residuals = y - design.values * beta;
    const double rss = residuals.squaredNorm();
    const double dof = static_cast<double>(n - k);
    const double s2 = rss / dof;
    const Matrix cov =
        s2 * svd.matrixV() * sv.array().square().inverse().matrix().asDiagonal() * svd.matrixV().transpose();

    const double y_mean = y.mean();
    const double tss = (y.array() - y_mean).square().sum();
    if (tss <= 0.0) throw ValidationError("response is constant; nothing to estimate");

    boost::math::students_t tdist(dof);
    const double t_crit = boost::math::quantile(tdist, 0.975);

    RegressionResult result;
    result.terms = design.terms;
    result.n_obs = static_cast<int>(n);
    result.r_squared = 1.0 - rss / tss;
    result.adj_r_squared =
        1.0 - (1.0 - result.r_squared) * static_cast<double>(n - 1) / dof;
    if (k > 1) {
        result.f_statistic = result.r_squared >= 1.0
                                 ? std::numeric_limits<double>::infinity()
                                 : (result.r_squared / static_cast<double>(k - 1)) /
                                       ((1.0 - result.r_squared) / dof);
    }

    for (Eigen::Index i = 0; i < k; ++i) {
        TermStats ts;
        ts.coef = beta(i);
        ts.se = std::sqrt(std::max(0.0, cov(i, i)));
        if (ts.se > 0.0) {
            ts.t = ts.coef / ts.se;
            ts.p = 2.0 * boost::math::cdf(boost::math::complement(tdist, std::abs(ts.t)));
        } else {
            ts.t = ts.coef == 0.0 ? 0.0
                                  : std::copysign(std::numeric_limits<double>::infinity(), ts.coef);
            ts.p = ts.coef == 0.0 ? 1.0 : 0.0;
        }
        ts.ci_low = ts.coef - t_crit * ts.se;
        ts.ci_high = ts.coef + t_crit * ts.se;
        result.stats[design.terms[static_cast<std::size_t>(i)]] = ts;
    }
    return result;
}

std::string effect_csv(const RegressionResult& result) {
    std::ostringstream out;
    out << "term,coef,se,t,p,ci_low,ci_high\n";
    for (const auto& term : result.terms) {
        const TermStats& ts = result.at(term);
        out << term << ',' << io::format_double(ts.coef) << ',' << io::format_double(ts.se) << ','
            << io::format_double(ts.t) << ',' << io::format_double(ts.p) << ','
            << io::format_double(ts.ci_low) << ',' << io::format_double(ts.ci_high) << '\n';
    }
    return out.str();
}

std::string effect_json(const RegressionResult& result) {
    std::ostringstream out;
    // JSON has no infinities; degenerate t statistics become null
    const auto number = [](double x) { return std::isfinite(x) ? io::format_double(x) : "null"; };
    out << "{\n  \"terms\": [";
    for (std::size_t i = 0; i < result.terms.size(); ++i) {
        out << (i ? ", " : "") << '"' << result.terms[i] << '"';
    }
    out << "],\n";
    auto series = [&](const char* name, auto pick) {
        out << "  \"" << name << "\": [";
        for (std::size_t i = 0; i < result.terms.size(); ++i) {
            out << (i ? ", " : "") << number(pick(result.at(result.terms[i])));
        }
        out << "],\n";
    };
    series("coef", [](const TermStats& t) { return t.coef; });
    series("se", [](const TermStats& t) { return t.se; });
    series("t", [](const TermStats& t) { return t.t; });
    series("p", [](const TermStats& t) { return t.p; });
    series("ci_low", [](const TermStats& t) { return t.ci_low; });
    series("ci_high", [](const TermStats& t) { return t.ci_high; });
    out << "  \"r_squared\": " << number(result.r_squared) << ",\n";
    out << "  \"adj_r_squared\": " << number(result.adj_r_squared) << ",\n";
    out << "  \"n_obs\": " << result.n_obs << ",\n";
    out << "  \"f_statistic\": " << number(result.f_statistic) << ",\n";
    out << "  \"covariance_type\": \"" << result.covariance_type << "\"\n}\n";
    return out.str();
}

std::map<std::string, TermStats> parse_effect_csv(const std::string& text) {
    const auto lines = io::split_lines(text);
    if (lines.empty() || lines[0] != "term,coef,se,t,p,ci_low,ci_high") {
        throw ValidationError("unexpected effect table header");
    }
    std::map<std::string, TermStats> out;
    for (std::size_t i = 1; i < lines.size(); ++i) {
        if (lines[i].empty()) continue;
        const auto fields = io::split_csv_line(lines[i]);
        if (fields.size() != 7) {
            throw ValidationError("expected 7 fields in effect table line " + std::to_string(i + 1));
        }
        TermStats ts;
        ts.coef = io::parse_double(fields[1], "coef");
        ts.se = io::parse_double(fields[2], "se");
        ts.t = io::parse_double(fields[3], "t");
        ts.p = io::parse_double(fields[4], "p");
        ts.ci_low = io::parse_double(fields[5], "ci_low");
        ts.ci_high = io::parse_double(fields[6], "ci_high");
        out[fields[0]] = ts;
    }
    return out;
}

}  // namespace autopersuade
