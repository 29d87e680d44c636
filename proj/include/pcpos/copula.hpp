#pragma once

// Bivariate parametric copulas and the discrete rectangle machinery built on
// them. A copula is an immutable value; evaluation is pure and thread-safe.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <memory>
#include <numbers>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "pcpos/detail/bivariate_normal.hpp"
#include "pcpos/distributions.hpp"
#include "pcpos/errors.hpp"

namespace pcpos {

/// Probabilities entering logs or divisions are clamped to this band.
inline constexpr double kProbFloor = 1e-12;
inline constexpr double kProbCeil = 1.0 - 1e-12;
/// Rectangle masses below -kRectangleTolerance signal a non-increasing copula.
inline constexpr double kRectangleTolerance = 1e-12;

[[nodiscard]] inline double clamp_prob(double p) noexcept { return std::clamp(p, kProbFloor, kProbCeil); }

enum class CopulaFamily { Independence, Gaussian, Clayton, Gumbel, JointlySymmetric };

[[nodiscard]] inline std::string_view family_name(CopulaFamily f) noexcept {
    switch (f) {
        case CopulaFamily::Independence: return "indep";
        case CopulaFamily::Gaussian: return "gaussian";
        case CopulaFamily::Clayton: return "clayton";
        case CopulaFamily::Gumbel: return "gumbel";
        case CopulaFamily::JointlySymmetric: return "js";
    }
    return "?";
}

class BivariateCopula {
public:
    BivariateCopula() = default;  // independence

    static BivariateCopula independence() { return {}; }

    static BivariateCopula gaussian(double rho) {
        if (!(rho > -1.0 && rho < 1.0)) throw DomainError("gaussian copula: rho must lie in (-1,1)");
        return BivariateCopula(CopulaFamily::Gaussian, rho);
    }

    static BivariateCopula clayton(double theta) {
        if (!(theta > 0.0) || !std::isfinite(theta)) throw DomainError("clayton copula: theta must lie in (0,inf)");
        return BivariateCopula(CopulaFamily::Clayton, theta);
    }

    static BivariateCopula gumbel(double theta) {
        if (!(theta >= 1.0) || !std::isfinite(theta)) throw DomainError("gumbel copula: theta must lie in [1,inf)");
        return BivariateCopula(CopulaFamily::Gumbel, theta);
    }

    /// Average of the four axis reflections of `base`.
    static BivariateCopula jointly_symmetric(const BivariateCopula& base) {
        BivariateCopula c(CopulaFamily::JointlySymmetric, base.parameter());
        c.base_ = std::make_shared<const BivariateCopula>(base);
        return c;
    }

    /// Builds a copula of `family` with parameter `value`; for jointly symmetric
    /// copulas the value is the base copula's parameter and `base_family` names it.
    static BivariateCopula make(CopulaFamily family, double value,
                                CopulaFamily base_family = CopulaFamily::Gaussian) {
        switch (family) {
            case CopulaFamily::Independence: return independence();
            case CopulaFamily::Gaussian: return gaussian(value);
            case CopulaFamily::Clayton: return clayton(value);
            case CopulaFamily::Gumbel: return gumbel(value);
            case CopulaFamily::JointlySymmetric: return jointly_symmetric(make(base_family, value));
        }
        throw DomainError("unknown copula family");
    }

    /// Parses `indep`, `gaussian(rho)`, `clayton(theta)`, `gumbel(theta)`, `js(<base>)`.
    static BivariateCopula parse(std::string_view text);

    [[nodiscard]] CopulaFamily family() const noexcept { return family_; }
    [[nodiscard]] double parameter() const noexcept { return parameter_; }
    [[nodiscard]] const BivariateCopula* base() const noexcept { return base_.get(); }
    [[nodiscard]] int parameter_count() const noexcept {
        if (family_ == CopulaFamily::JointlySymmetric) return base_->parameter_count();
        return family_ == CopulaFamily::Independence ? 0 : 1;
    }
    [[nodiscard]] bool is_independence() const noexcept {
        if (family_ == CopulaFamily::JointlySymmetric) return base_->is_independence();
        return family_ == CopulaFamily::Independence || (family_ == CopulaFamily::Gaussian && parameter_ == 0.0) ||
               (family_ == CopulaFamily::Gumbel && parameter_ == 1.0);
    }

    /// Same family (and base family) with a new parameter value.
    [[nodiscard]] BivariateCopula with_parameter(double value) const {
        if (family_ == CopulaFamily::JointlySymmetric) return jointly_symmetric(base_->with_parameter(value));
        return make(family_, value);
    }

    [[nodiscard]] std::string to_string() const;

    /// C(u,v). Arguments outside [0,1] are clamped onto the square.
    [[nodiscard]] double cdf(double u, double v) const {
        u = std::clamp(u, 0.0, 1.0);
        v = std::clamp(v, 0.0, 1.0);
        if (u == 0.0 || v == 0.0) return 0.0;
        if (u == 1.0) return v;
        if (v == 1.0) return u;
        double c = interior_cdf(u, v);
        return std::clamp(c, std::max(u + v - 1.0, 0.0), std::min(u, v));
    }

    friend bool operator==(const BivariateCopula& a, const BivariateCopula& b) {
        if (a.family_ != b.family_ || a.parameter_ != b.parameter_) return false;
        if (a.family_ == CopulaFamily::JointlySymmetric) return *a.base_ == *b.base_;
        return true;
    }

private:
    BivariateCopula(CopulaFamily f, double p) : family_(f), parameter_(p) {}

    [[nodiscard]] double interior_cdf(double u, double v) const {
        switch (family_) {
            case CopulaFamily::Independence: return u * v;
            case CopulaFamily::Gaussian:
                if (parameter_ == 0.0) return u * v;
                return detail::bvn_cdf(normal_quantile(u), normal_quantile(v), parameter_);
            case CopulaFamily::Clayton: {
                // (u^-t + v^-t - 1)^(-1/t) written with expm1/log1p for small t
                const double s = std::expm1(-parameter_ * std::log(u)) + std::expm1(-parameter_ * std::log(v));
                return std::exp(-std::log1p(s) / parameter_);
            }
            case CopulaFamily::Gumbel: {
                if (parameter_ == 1.0) return u * v;
                const double a = std::pow(-std::log(u), parameter_);
                const double b = std::pow(-std::log(v), parameter_);
                return std::exp(-std::pow(a + b, 1.0 / parameter_));
            }
            case CopulaFamily::JointlySymmetric: {
                // A radially symmetric, exchangeable base collapses the sum to
                // (C_r(u,v) + C_{-r}(u,v)) / 2.
                if (base_->family_ == CopulaFamily::Gaussian)
                    return 0.5 * detail::bvn_cdf_pair(normal_quantile(u), normal_quantile(v), base_->parameter_);
                // (1/4) sum_{k1,k2 in {0,1,2}} (-1)^R C(u~1, u~2), u~ in {1, u, 1-u}
                const double uu[3] = {1.0, u, 1.0 - u};
                const double vv[3] = {1.0, v, 1.0 - v};
                double sum = 0.0;
                for (int k1 = 0; k1 < 3; ++k1) {
                    for (int k2 = 0; k2 < 3; ++k2) {
                        const int r = (k1 == 2) + (k2 == 2);
                        const double term = base_->cdf(uu[k1], vv[k2]);
                        sum += (r % 2 == 0) ? term : -term;
                    }
                }
                return 0.25 * sum;
            }
        }
        return u * v;
    }

    CopulaFamily family_ = CopulaFamily::Independence;
    double parameter_ = 0.0;
    std::shared_ptr<const BivariateCopula> base_;
};

/// C^{++}, C^{+-}, C^{-+}, C^{--} at (F^{+/-}_u, F^{+/-}_v).
struct CornerValues {
    double cpp = 0.0;
    double cpm = 0.0;
    double cmp = 0.0;
    double cmm = 0.0;

    [[nodiscard]] double signed_sum() const noexcept { return cpp - cpm - cmp + cmm; }
};

struct Rectangle {
    CornerValues corners;
    double mass = 0.0;
};

/// Bernoulli CDF values bracketing the observed cell on one axis.
struct CellBounds {
    double plus = 1.0;   // F^+
    double minus = 0.0;  // F^-
};

namespace detail {
inline thread_local std::uint64_t rectangle_calls = 0;
}

/// Number of rectangle evaluations performed on this thread since the last reset.
[[nodiscard]] inline std::uint64_t rectangle_call_count() noexcept { return detail::rectangle_calls; }
inline void reset_rectangle_call_count() noexcept { detail::rectangle_calls = 0; }

[[nodiscard]] inline CornerValues corners(const BivariateCopula& c, CellBounds u, CellBounds v) {
    return {c.cdf(u.plus, v.plus), c.cdf(u.plus, v.minus), c.cdf(u.minus, v.plus), c.cdf(u.minus, v.minus)};
}

/// Copula mass of the cell [F^-_u, F^+_u] x [F^-_v, F^+_v].
/// Throws NonIncreasingCopula when the signed corner sum is below -1e-12.
[[nodiscard]] inline Rectangle rectangle(const BivariateCopula& c, CellBounds u, CellBounds v) {
    if (!(u.minus <= u.plus) || !(v.minus <= v.plus)) throw DomainError("rectangle: F^- must not exceed F^+");
    ++detail::rectangle_calls;
    Rectangle r{corners(c, u, v), 0.0};
    const double m = r.corners.signed_sum();
    if (m < -kRectangleTolerance) throw NonIncreasingCopula(m);
    r.mass = std::clamp(m, 0.0, 1.0);
    return r;
}

[[nodiscard]] inline Rectangle rectangle(const BivariateCopula& c, double fplus_u, double fminus_u, double fplus_v,
                                         double fminus_v) {
    return rectangle(c, CellBounds{fplus_u, fminus_u}, CellBounds{fplus_v, fminus_v});
}

/// Kendall's tau to copula parameter: Gaussian rho = sin(pi tau/2),
/// Clayton theta = 2tau/(1-tau), Gumbel theta = 1/(1-tau).
[[nodiscard]] inline double tau_to_parameter(CopulaFamily family, double tau) {
    switch (family) {
        case CopulaFamily::Independence: return 0.0;
        case CopulaFamily::Gaussian:
            if (!(tau > -1.0 && tau < 1.0)) throw DomainError("gaussian: tau must lie in (-1,1)");
            return std::sin(std::numbers::pi * tau / 2.0);
        case CopulaFamily::Clayton:
            if (!(tau > 0.0 && tau < 1.0)) throw DomainError("clayton: tau must lie in (0,1)");
            return 2.0 * tau / (1.0 - tau);
        case CopulaFamily::Gumbel:
            if (!(tau > 0.0 && tau < 1.0)) throw DomainError("gumbel: tau must lie in (0,1)");
            return 1.0 / (1.0 - tau);
        case CopulaFamily::JointlySymmetric: break;
    }
    throw DomainError("tau inversion is not defined for jointly symmetric copulas");
}

/// Population Kendall's tau of a copula (zero for jointly symmetric ones).
[[nodiscard]] inline double kendall_tau(const BivariateCopula& c) {
    switch (c.family()) {
        case CopulaFamily::Independence: return 0.0;
        case CopulaFamily::Gaussian: return 2.0 * std::asin(c.parameter()) / std::numbers::pi;
        case CopulaFamily::Clayton: return c.parameter() / (c.parameter() + 2.0);
        case CopulaFamily::Gumbel: return 1.0 - 1.0 / c.parameter();
        case CopulaFamily::JointlySymmetric: return 0.0;
    }
    return 0.0;
}

/// AIC = -2 sum log(mass) + 2 (#parameters), masses clamped to [1e-12, 1-1e-12].
/// Throws Error when every rectangle mass is zero.
[[nodiscard]] inline double aic_score(const BivariateCopula& c, std::span<const std::pair<CellBounds, CellBounds>> cells) {
    if (cells.empty()) throw DomainError("aic_score: empty pair sequence");
    double loglik = 0.0;
    bool any_positive = false;
    for (const auto& [u, v] : cells) {
        const double m = rectangle(c, u, v).mass;
        any_positive = any_positive || m > 0.0;
        loglik += std::log(clamp_prob(m));
    }
    if (!any_positive) throw Error("aic_score: all rectangle masses are zero");
    return -2.0 * loglik + 2.0 * c.parameter_count();
}

inline BivariateCopula BivariateCopula::parse(std::string_view text) {
    auto [name, args] = detail::split_call(text);
    // a bare family name starts at a representative parameter value
    auto one = [&](double bare) {
        if (args.empty() && text.find('(') == std::string_view::npos) return bare;
        if (args.size() != 1) throw ConfigError("copula '" + name + "' takes one argument");
        return detail::to_double(args[0]);
    };
    try {
        if (name == "indep" || name == "independence") {
            if (!args.empty()) throw ConfigError("indep takes no argument");
            return independence();
        }
        if (name == "gaussian") return gaussian(one(0.0));
        if (name == "clayton") return clayton(one(1.0));
        if (name == "gumbel") return gumbel(one(2.0));
        if (name == "js") {
            if (args.size() != 1) throw ConfigError("js takes one base copula");
            return jointly_symmetric(parse(args[0]));
        }
    } catch (const DomainError& e) {
        throw ConfigError(e.what());
    }
    throw ConfigError("unknown copula '" + std::string(text) + "'");
}

inline std::string BivariateCopula::to_string() const {
    switch (family_) {
        case CopulaFamily::Independence: return "indep";
        case CopulaFamily::JointlySymmetric: return "js(" + base_->to_string() + ")";
        default: break;
    }
    char buf[64];
    std::snprintf(buf, sizeof buf, "%.10g", parameter_);
    return std::string(family_name(family_)) + "(" + buf + ")";
}

}  // namespace pcpos
