#pragma once

// Benchmark tests: OLS t-test, White (HC0) corrected t-test and the
// Campbell-Dufour style sign-alignment count with an exact binomial cutoff.

#include <cmath>
#include <cstddef>
#include <limits>
#include <string>
#include <vector>

#include <Eigen/Dense>
#include <boost/math/distributions/students_t.hpp>

#include "pcpos/distributions.hpp"
#include "pcpos/errors.hpp"
#include "pcpos/regression.hpp"

namespace pcpos {

struct CompetitorOutcome {
    std::string name;
    double statistic = 0.0;
    double critical = 0.0;
    bool reject = false;
    double alpha = 0.05;
    std::string note;
};

struct CompetitorOptions {
    /// Tested coefficient; npos means the last column of X.
    std::size_t coefficient = std::numeric_limits<std::size_t>::max();
    double null_value = 0.0;
    /// Prepend a constant column before running OLS (t and WT only).
    bool add_intercept = false;
};

namespace detail {

inline Eigen::MatrixXd design(const RegressionData& data, const CompetitorOptions& opt) {
    if (!opt.add_intercept) return data.X;
    Eigen::MatrixXd X(data.X.rows(), data.X.cols() + 1);
    X.col(0).setOnes();
    X.rightCols(data.X.cols()) = data.X;
    return X;
}

inline Eigen::Index tested_column(Eigen::Index cols, const CompetitorOptions& opt, bool shifted) {
    if (opt.coefficient == std::numeric_limits<std::size_t>::max()) return cols - 1;
    const auto j = static_cast<Eigen::Index>(opt.coefficient) + (shifted ? 1 : 0);
    if (j >= cols) throw DomainError("competitor test: coefficient index out of range");
    return j;
}

struct OlsFit {
    Eigen::VectorXd beta;
    Eigen::VectorXd resid;
    Eigen::MatrixXd xtx_inv;
    Eigen::Index column = 0;
};

inline OlsFit ols_fit(const RegressionData& data, const CompetitorOptions& opt) {
    const Eigen::MatrixXd X = design(data, opt);
    if (X.rows() <= X.cols()) throw DomainError("competitor test: need T > k+1");
    OlsFit fit;
    fit.beta = ols(X, data.y);
    fit.resid = data.y - X * fit.beta;
    fit.xtx_inv = (X.transpose() * X).inverse();
    fit.column = tested_column(X.cols(), opt, opt.add_intercept);
    return fit;
}

}  // namespace detail

/// OLS t-statistic with a two-sided Student-t cutoff on T-(k+1) df.
[[nodiscard]] inline CompetitorOutcome t_test(const RegressionData& data, double alpha,
                                              const CompetitorOptions& opt = {}) {
    if (!(alpha > 0.0 && alpha < 1.0)) throw DomainError("t_test: alpha must lie in (0,1)");
    const auto fit = detail::ols_fit(data, opt);
    const double dof = static_cast<double>(fit.resid.size() - fit.beta.size());
    const double s2 = fit.resid.squaredNorm() / dof;
    const double se = std::sqrt(s2 * fit.xtx_inv(fit.column, fit.column));
    const double diff = fit.beta(fit.column) - opt.null_value;
    CompetitorOutcome out;
    out.name = "t";
    out.alpha = alpha;
    out.statistic = se > 0.0 ? diff / se : std::copysign(std::numeric_limits<double>::infinity(), diff);
    if (diff == 0.0) out.statistic = 0.0;
    out.critical = boost::math::quantile(boost::math::students_t(dof), 1.0 - alpha / 2.0);
    out.reject = std::abs(out.statistic) > out.critical;
    return out;
}

/// HC0 sandwich variance (X'X)^{-1} X' diag(e^2) X (X'X)^{-1}.
[[nodiscard]] inline Eigen::MatrixXd hc0_covariance(const Eigen::MatrixXd& X, const Eigen::VectorXd& resid) {
    const Eigen::MatrixXd bread = (X.transpose() * X).inverse();
    const Eigen::MatrixXd meat = X.transpose() * resid.array().square().matrix().asDiagonal() * X;
    return bread * meat * bread;
}

/// Same slope as t_test, HC0 standard error and a standard normal two-sided cutoff.
[[nodiscard]] inline CompetitorOutcome white_t_test(const RegressionData& data, double alpha,
                                                    const CompetitorOptions& opt = {}) {
    if (!(alpha > 0.0 && alpha < 1.0)) throw DomainError("white_t_test: alpha must lie in (0,1)");
    const auto fit = detail::ols_fit(data, opt);
    const Eigen::MatrixXd V = hc0_covariance(detail::design(data, opt), fit.resid);
    const double se = std::sqrt(V(fit.column, fit.column));
    const double diff = fit.beta(fit.column) - opt.null_value;
    CompetitorOutcome out;
    out.name = "wt";
    out.alpha = alpha;
    out.statistic = se > 0.0 ? diff / se : std::copysign(std::numeric_limits<double>::infinity(), diff);
    if (diff == 0.0) out.statistic = 0.0;
    out.critical = normal_quantile(1.0 - alpha / 2.0);
    out.reject = std::abs(out.statistic) > out.critical;
    return out;
}

/// P[X >= c] for X ~ Binomial(n, 1/2), summed exactly in log space.
[[nodiscard]] inline double binomial_upper_tail(std::size_t n, std::size_t c) {
    if (c == 0) return 1.0;
    if (c > n) return 0.0;
    double total = 0.0;
    const double log_half_n = static_cast<double>(n) * std::log(0.5);
    for (std::size_t k = c; k <= n; ++k) {
        const double lc = std::lgamma(static_cast<double>(n) + 1.0) - std::lgamma(static_cast<double>(k) + 1.0) -
                          std::lgamma(static_cast<double>(n - k) + 1.0);
        total += std::exp(lc + log_half_n);
    }
    return total;
}

struct SignCutoff {
    std::size_t cutoff = 0;  // reject when S >= cutoff
    double size = 0.0;
};

/// Attainable one-sided level nearest to alpha and its cutoff.
[[nodiscard]] inline SignCutoff cd_cutoff(std::size_t n, double alpha) {
    SignCutoff best{n + 1, 0.0};
    double gap = alpha;
    for (std::size_t c = n + 1; c-- > 0;) {
        const double tail = binomial_upper_tail(n, c);
        if (std::abs(tail - alpha) < gap) {
            gap = std::abs(tail - alpha);
            best = {c, tail};
        }
        if (tail > alpha) break;
    }
    return best;
}

/// S = #{t : e_t x_{t-1} >= 0} with e_t = y_t - b0 x_{t-1}; one-sided exact binomial test.
[[nodiscard]] inline CompetitorOutcome cd_sign_test(const RegressionData& data, double alpha,
                                                    const CompetitorOptions& opt = {}) {
    if (data.size() < 10) throw DomainError("cd_sign_test: need T >= 10");
    if (!(alpha > 0.0 && alpha < 1.0)) throw DomainError("cd_sign_test: alpha must lie in (0,1)");
    CompetitorOptions plain = opt;
    plain.add_intercept = false;
    const Eigen::Index j = detail::tested_column(data.X.cols(), plain, false);
    std::size_t s = 0;
    for (Eigen::Index t = 0; t < data.y.size(); ++t) {
        const double x = data.X(t, j);
        s += (data.y(t) - opt.null_value * x) * x >= 0.0;
    }
    const SignCutoff cut = cd_cutoff(data.size(), alpha);
    CompetitorOutcome out;
    out.name = "cd";
    out.alpha = alpha;
    out.statistic = static_cast<double>(s);
    out.critical = static_cast<double>(cut.cutoff);
    out.reject = s >= cut.cutoff;
    out.note = "realized size " + std::to_string(cut.size);
    return out;
}

}  // namespace pcpos
