#pragma once

// Simulation designs: AR(1) regressor with endogenous innovation correlation
// and six error schemes.

#include <cmath>
#include <cstdint>
#include <string>
#include <string_view>

#include <Eigen/Dense>

#include "pcpos/distributions.hpp"
#include "pcpos/errors.hpp"
#include "pcpos/random.hpp"
#include "pcpos/regression.hpp"

namespace pcpos {

enum class ErrorScheme { Normal, Cauchy, T2, Mixture, BreakVariance, GarchJump };

inline constexpr ErrorScheme kAllSchemes[] = {ErrorScheme::Normal,  ErrorScheme::Cauchy,
                                              ErrorScheme::T2,      ErrorScheme::Mixture,
                                              ErrorScheme::BreakVariance, ErrorScheme::GarchJump};

[[nodiscard]] inline std::string scheme_name(ErrorScheme s) {
    switch (s) {
        case ErrorScheme::Normal: return "normal";
        case ErrorScheme::Cauchy: return "cauchy";
        case ErrorScheme::T2: return "t2";
        case ErrorScheme::Mixture: return "mixture";
        case ErrorScheme::BreakVariance: return "break";
        case ErrorScheme::GarchJump: return "garchjump";
    }
    return "?";
}

[[nodiscard]] inline ErrorScheme parse_scheme(std::string_view name) {
    for (auto s : kAllSchemes)
        if (scheme_name(s) == name) return s;
    throw ConfigError("unknown error scheme '" + std::string(name) + "'");
}

struct GarchParams {
    double omega = 0.00037;
    double alpha = 0.0888;
    double beta = 0.9024;

    [[nodiscard]] double unconditional() const { return omega / (1.0 - alpha - beta); }
};

inline constexpr std::size_t kBreakIndex = 25;  // 1-based position of the outlier
inline constexpr double kBreakVariance = 1000.0;
inline constexpr double kGarchJump = 50.0;

struct DgpSpec {
    std::size_t T = 50;
    double theta = 0.9;
    double rho = 0.0;
    ErrorScheme scheme = ErrorScheme::Normal;
    double beta = 0.0;
    std::uint64_t seed = 1;

    void validate() const {
        if (!(std::abs(theta) < 1.0)) throw DomainError("dgp: |theta| must be below 1");
        if (!(std::abs(rho) < 1.0)) throw DomainError("dgp: |rho| must be below 1");
        if (T < 5) throw DomainError("dgp: T must be at least 5");
        if ((scheme == ErrorScheme::BreakVariance || scheme == ErrorScheme::GarchJump) && T < kBreakIndex + 1)
            throw DomainError("dgp: break and garchjump schemes need T >= 26");
    }
};

/// Errors e_1..e_T (stored 0-based).
[[nodiscard]] inline Eigen::VectorXd draw_errors(const DgpSpec& spec, Rng& rng) {
    Eigen::VectorXd e(static_cast<Eigen::Index>(spec.T));
    const auto brk = static_cast<Eigen::Index>(kBreakIndex - 1);
    switch (spec.scheme) {
        case ErrorScheme::Normal:
        case ErrorScheme::BreakVariance: {
            const auto law = ErrorDistribution::normal();
            for (Eigen::Index t = 0; t < e.size(); ++t) e(t) = law.sample(rng);
            if (spec.scheme == ErrorScheme::BreakVariance) e(brk) *= std::sqrt(kBreakVariance);
            break;
        }
        case ErrorScheme::Cauchy: {
            const auto law = ErrorDistribution::cauchy();
            for (Eigen::Index t = 0; t < e.size(); ++t) e(t) = law.sample(rng);
            break;
        }
        case ErrorScheme::T2: {
            const auto law = ErrorDistribution::student_t(2.0);
            for (Eigen::Index t = 0; t < e.size(); ++t) e(t) = law.sample(rng);
            break;
        }
        case ErrorScheme::Mixture: {
            const auto law = ErrorDistribution::mixture();
            for (Eigen::Index t = 0; t < e.size(); ++t) e(t) = law.sample(rng);
            break;
        }
        case ErrorScheme::GarchJump: {
            const GarchParams g;
            const auto z = ErrorDistribution::normal();
            double var = g.unconditional();
            for (Eigen::Index t = 0; t < e.size(); ++t) {
                if (t > 0) var = g.omega + g.alpha * e(t - 1) * e(t - 1) + g.beta * var;
                e(t) = std::sqrt(var) * z.sample(rng);
                if (t == brk) e(t) *= kGarchJump;
            }
            break;
        }
    }
    return e;
}

/// y_t = beta x_{t-1} + e_t, x_t = theta x_{t-1} + rho e_t + w_t sqrt(1-rho^2),
/// x_0 = w_0 / sqrt(1-theta^2). X has the single column (x_0, ..., x_{T-1}).
[[nodiscard]] inline RegressionData generate(const DgpSpec& spec, Rng& rng) {
    spec.validate();
    const auto T = static_cast<Eigen::Index>(spec.T);
    const Eigen::VectorXd e = draw_errors(spec, rng);
    const auto z = ErrorDistribution::normal();
    const double mix = std::sqrt(1.0 - spec.rho * spec.rho);
    Eigen::MatrixXd X(T, 1);
    X(0, 0) = z.sample(rng) / std::sqrt(1.0 - spec.theta * spec.theta);
    for (Eigen::Index t = 1; t < T; ++t) X(t, 0) = spec.theta * X(t - 1, 0) + spec.rho * e(t - 1) + z.sample(rng) * mix;
    Eigen::VectorXd y = spec.beta * X.col(0) + e;
    return RegressionData(std::move(y), std::move(X));
}

[[nodiscard]] inline RegressionData generate(const DgpSpec& spec) {
    Rng rng = make_rng(spec.seed);
    return generate(spec, rng);
}

}  // namespace pcpos
