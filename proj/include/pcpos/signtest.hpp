#pragma once

// Point-optimal sign statistics built on a discrete D-vine for the residual
// signs, their simulated null distributions and the split-sample test.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "pcpos/copula.hpp"
#include "pcpos/distributions.hpp"
#include "pcpos/dvine.hpp"
#include "pcpos/errors.hpp"
#include "pcpos/estimate.hpp"
#include "pcpos/random.hpp"
#include "pcpos/regression.hpp"

namespace pcpos {

/// Alternative success probabilities P[s_t = 1] = 1 - F(f(x,b0) - f(x,b1)).
[[nodiscard]] inline std::vector<double> alternative_margins(const RegressionData& data, const Eigen::VectorXd& beta0,
                                                             const Eigen::VectorXd& beta1,
                                                             const ErrorDistribution& errdist) {
    std::vector<double> p(data.size());
    for (std::size_t i = 0; i < data.size(); ++i) {
        const double shift = data.fitted(i, beta0) - data.fitted(i, beta1);
        p[i] = 1.0 - clamp_prob(errdist.cdf(shift));
    }
    return p;
}

/// Log-odds weights a_t = ln{(1 - p_t)/p_t}, p_t = F(f(x,b0) - f(x,b1)) clamped to [1e-12, 1-1e-12].
[[nodiscard]] inline std::vector<double> weights(const RegressionData& data, const Eigen::VectorXd& beta0,
                                                 const Eigen::VectorXd& beta1, const ErrorDistribution& errdist) {
    std::vector<double> a(data.size());
    for (std::size_t i = 0; i < data.size(); ++i) {
        const double p = clamp_prob(errdist.cdf(data.fitted(i, beta0) - data.fitted(i, beta1)));
        a[i] = std::log((1.0 - p) / p);
    }
    return a;
}

/// Statistic for a sign vector under a vine with alternative margins p_t:
/// log P_vine[s] - sum_t log(1 - p_t), which equals the sum of log pair-copula
/// densities plus sum_t s_t a_t.
[[nodiscard]] inline double sign_statistic(const VineSpec& spec, SignSpan signs, PmfWorkspace& ws) {
    double base = 0.0;
    for (double p : spec.margins()) base += std::log1p(-p);
    return joint_log_pmf(spec, signs, ws) - base;
}

/// SN_T(beta0 | beta1) with the copulas of `fitted` and margins implied by beta1.
[[nodiscard]] inline double statistic_SN(const RegressionData& data, const Eigen::VectorXd& beta0,
                                         const Eigen::VectorXd& beta1, const FittedVine& fitted,
                                         const ErrorDistribution& errdist) {
    const SignVector s = residual_signs(data, beta0);
    const VineSpec spec(alternative_margins(data, beta0, beta1, errdist), fitted.spec.trees(),
                        fitted.spec.truncation());
    PmfWorkspace ws;
    return sign_statistic(spec, s.bits, ws);
}

/// SL_T(beta1) for H0: beta = 0 in a linear model: signs of y itself and
/// margins 1 - F(-x'beta1).
[[nodiscard]] inline double statistic_SL(const Eigen::VectorXd& y, const Eigen::MatrixXd& X,
                                         const Eigen::VectorXd& beta1, const FittedVine& fitted,
                                         const ErrorDistribution& errdist) {
    if (y.size() != X.rows() || X.cols() != beta1.size()) throw DomainError("statistic_SL: dimension mismatch");
    const auto T = static_cast<std::size_t>(y.size());
    std::vector<std::uint8_t> s(T);
    std::vector<double> p(T);
    for (std::size_t t = 0; t < T; ++t) {
        const auto i = static_cast<Eigen::Index>(t);
        s[t] = y(i) >= 0.0;
        p[t] = 1.0 - clamp_prob(errdist.cdf(-X.row(i).dot(beta1)));
    }
    const VineSpec spec(std::move(p), fitted.spec.trees(), fitted.spec.truncation());
    PmfWorkspace ws;
    return sign_statistic(spec, s, ws);
}

/// i.i.d. fair coin signs for null replication r.
inline void draw_null_signs(std::uint64_t seed, std::size_t r, std::span<std::uint8_t> out) {
    Rng rng = make_rng(derive_seed(seed, {r}));
    std::uint64_t word = 0;
    int left = 0;
    for (auto& b : out) {
        if (left == 0) {
            word = rng();
            left = 64;
        }
        b = static_cast<std::uint8_t>(word & 1U);
        word >>= 1;
        --left;
    }
}

enum class NullMode {
    FixedVine,  // copula parameters held at their observed-sample estimates
    Refit,      // the vine is re-estimated on every simulated sign vector
};

/// Simulated null distribution of the statistic (sorted ascending). Signs are
/// redrawn as i.i.d. Bernoulli(1/2); margins, weights and (in FixedVine mode)
/// copula parameters stay fixed. Replication r uses seed derive_seed(seed, {r}).
[[nodiscard]] inline std::vector<double> null_distribution(const VineSpec& spec, std::size_t m1, std::uint64_t seed,
                                                           NullMode mode = NullMode::FixedVine,
                                                           const EstimationConfig* refit = nullptr) {
    if (m1 < 99) throw DomainError("null_distribution: need at least 99 replications");
    if (mode == NullMode::Refit && refit == nullptr) throw DomainError("null_distribution: refit needs a config");
    const std::size_t T = spec.size();
    std::vector<double> out(m1);
    parallel_for(m1, [&](std::size_t r) {
        thread_local PmfWorkspace ws;
        std::vector<std::uint8_t> s(T);
        draw_null_signs(seed, r, s);
        if (mode == NullMode::FixedVine) {
            out[r] = sign_statistic(spec, s, ws);
        } else {
            const FittedVine fit = fit_sequential(s, spec.margins(), *refit);
            out[r] = sign_statistic(fit.spec, s, ws);
        }
    });
    std::sort(out.begin(), out.end());
    return out;
}

[[nodiscard]] inline std::vector<double> null_distribution(const RegressionData& data, const Eigen::VectorXd& beta0,
                                                           const Eigen::VectorXd& beta1, const FittedVine& fitted,
                                                           const ErrorDistribution& errdist, std::size_t m1,
                                                           std::uint64_t seed) {
    const VineSpec spec(alternative_margins(data, beta0, beta1, errdist), fitted.spec.trees(),
                        fitted.spec.truncation());
    return null_distribution(spec, m1, seed);
}

/// Smallest null value c with #{null > c} / M1 <= alpha. `null` must be sorted.
[[nodiscard]] inline double critical_value(std::span<const double> null, double alpha) {
    if (!(alpha > 0.0 && alpha < 1.0)) throw DomainError("critical_value: alpha must lie in (0,1)");
    if (null.empty()) throw DomainError("critical_value: empty null distribution");
    const double m = static_cast<double>(null.size());
    for (std::size_t i = 0; i < null.size(); ++i) {
        const auto above = null.end() - std::upper_bound(null.begin(), null.end(), null[i]);
        if (static_cast<double>(above) / m <= alpha) return null[i];
    }
    return null.back();
}

/// (1 + #{null >= observed}) / (M1 + 1). `null` must be sorted.
[[nodiscard]] inline double mc_p_value(std::span<const double> null, double observed) {
    const auto ge = null.end() - std::lower_bound(null.begin(), null.end(), observed);
    return (1.0 + static_cast<double>(ge)) / (static_cast<double>(null.size()) + 1.0);
}

struct PosTestConfig {
    double alpha = 0.05;
    std::size_t m1 = 999;
    ErrorDistribution nominal = ErrorDistribution::normal();
    EstimationConfig estimation = EstimationConfig::jointly_symmetric_gaussian();
    NullMode null_mode = NullMode::Refit;
};

struct TestOutcome {
    double statistic = 0.0;
    double critical = 0.0;
    double p_value = 1.0;
    bool reject = false;
    Eigen::VectorXd beta1;
    std::size_t t1 = 0;
    std::size_t t2 = 0;
    std::uint64_t seed = 0;
    std::string vine;
};

/// Point-optimal sign test of H(beta0) against the fixed alternative beta1 on
/// all rows of `data`: signs, vine fit, statistic and simulated cutoff.
[[nodiscard]] inline TestOutcome point_optimal_test(const RegressionData& data, const Eigen::VectorXd& beta0,
                                                    const Eigen::VectorXd& beta1, const PosTestConfig& cfg,
                                                    std::uint64_t seed) {
    const std::size_t T = data.size();
    const SignVector s = residual_signs(data, beta0);
    std::vector<double> margins = alternative_margins(data, beta0, beta1, cfg.nominal);
    EstimationConfig est = cfg.estimation;
    est.truncation = std::min(est.truncation, T - 1);
    const FittedVine fitted = fit_sequential(s.bits, margins, est);

    PmfWorkspace ws;
    TestOutcome out;
    out.statistic = sign_statistic(fitted.spec, s.bits, ws);
    const auto null = null_distribution(fitted.spec, cfg.m1, seed, cfg.null_mode, &est);
    out.critical = critical_value(null, cfg.alpha);
    out.p_value = mc_p_value(null, out.statistic);
    out.reject = out.statistic > out.critical;
    out.beta1 = beta1;
    out.t2 = T;
    out.seed = seed;
    out.vine = fitted.summary();
    return out;
}

/// Number of observations kept for estimating the alternative.
[[nodiscard]] inline std::size_t split_size(std::size_t T, double fraction) {
    if (!(fraction > 0.0 && fraction < 1.0)) throw DomainError("split fraction must lie in (0,1)");
    return static_cast<std::size_t>(std::lround(fraction * static_cast<double>(T)));
}

/// Split-sample test: OLS on the first round(fraction*T) rows gives beta1; the
/// test runs on the remaining rows as a self-contained series.
[[nodiscard]] inline TestOutcome split_sample_test(const RegressionData& data, const Eigen::VectorXd& beta0,
                                                   double fraction, const PosTestConfig& cfg, std::uint64_t seed) {
    const std::size_t T = data.size();
    const std::size_t t1 = split_size(T, fraction);
    if (t1 < data.columns() + 1) throw DomainError("split_sample_test: first subsample too small for OLS");
    if (T - t1 < 10) throw DomainError("split_sample_test: second subsample needs at least 10 observations");
    const RegressionData first = data.slice(0, t1);
    const RegressionData second = data.slice(t1, T - t1);
    const Eigen::VectorXd beta1 = ols(first.X, first.y);
    TestOutcome out = point_optimal_test(second, beta0, beta1, cfg, seed);
    out.t1 = t1;
    out.t2 = T - t1;
    return out;
}

}  // namespace pcpos
