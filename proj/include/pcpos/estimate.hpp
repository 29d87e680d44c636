#pragma once

// Sequential tree-by-tree estimation of a D-vine on a single sign series.
// Each tree carries one parameter shared by all of its edges, estimated from
// the pooled sliding-window discrete likelihood with earlier trees held fixed.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include <boost/math/tools/minima.hpp>

#include "pcpos/copula.hpp"
#include "pcpos/dvine.hpp"
#include "pcpos/errors.hpp"
#include "pcpos/random.hpp"

namespace pcpos {

struct EstimationConfig {
    /// Candidate families; one entry means a fixed family, several mean AIC
    /// selection per tree. Only family (and base family) of each entry matter.
    std::vector<BivariateCopula> candidates{BivariateCopula::gaussian(0.0)};
    std::size_t truncation = 2;
    double tolerance = 1e-8;
    int max_iterations = 200;
    /// Gaussian and jointly symmetric Gaussian trees solve the score equation
    /// with safeguarded Newton steps instead of the derivative-free search.
    bool analytic_gradient = true;
    std::uint64_t jitter_seed = 0x5eed;

    void validate(std::size_t T) const {
        if (candidates.empty()) throw DomainError("estimation: candidate set is empty");
        if (truncation < 1) throw DomainError("estimation: truncation must be at least 1");
        if (T >= 2 && truncation > T - 1) throw DomainError("estimation: truncation exceeds T-1");
    }

    /// The standard AIC candidate set.
    static std::vector<BivariateCopula> aic_set() {
        return {BivariateCopula::independence(), BivariateCopula::gaussian(0.0), BivariateCopula::clayton(1.0),
                BivariateCopula::gumbel(2.0), BivariateCopula::jointly_symmetric(BivariateCopula::gaussian(0.0))};
    }

    /// Jointly symmetric Gaussian trees: the family the sign tests use by default.
    static EstimationConfig jointly_symmetric_gaussian() {
        EstimationConfig c;
        c.candidates = {BivariateCopula::jointly_symmetric(BivariateCopula::gaussian(0.0))};
        return c;
    }

    /// "aic" gives aic_set(); otherwise a ';'-separated list of copulas.
    static std::vector<BivariateCopula> parse_candidates(std::string_view text) {
        if (detail::trim(text) == "aic") return aic_set();
        std::vector<BivariateCopula> out;
        std::string item;
        for (std::size_t i = 0; i <= text.size(); ++i) {
            if (i == text.size() || text[i] == ';') {
                if (!detail::trim(item).empty()) out.push_back(BivariateCopula::parse(item));
                item.clear();
            } else {
                item += text[i];
            }
        }
        if (out.empty()) throw ConfigError("no copula candidates in '" + std::string(text) + "'");
        return out;
    }
};

struct TreeFit {
    BivariateCopula copula;
    double loglik = 0.0;        // pooled log-likelihood at the estimate
    double indep_loglik = 0.0;  // same windows under the independence copula
    double aic = 0.0;
    int iterations = 0;
    bool degenerate = false;  // conditionals collapsed; tree forced to independence
};

struct FittedVine {
    VineSpec spec;
    std::vector<TreeFit> trees;

    /// Pooled log-likelihood gain over the independence vine, summed over the
    /// estimated trees. Adding a tree never lowers it.
    [[nodiscard]] double total_loglik() const {
        double s = 0.0;
        for (const auto& t : trees) s += t.loglik - t.indep_loglik;
        return s;
    }
    [[nodiscard]] std::string summary() const {
        std::string out;
        for (std::size_t l = 0; l < trees.size(); ++l) {
            if (l) out += ';';
            out += trees[l].copula.to_string();
        }
        return out;
    }
};

namespace detail {

/// Map between a family's parameter and an unconstrained search coordinate.
struct ParameterMap {
    CopulaFamily family;  // base family for jointly symmetric copulas
    double lo, hi;        // search interval on the coordinate

    static ParameterMap of(const BivariateCopula& c) {
        const CopulaFamily f = c.family() == CopulaFamily::JointlySymmetric ? c.base()->family() : c.family();
        switch (f) {
            case CopulaFamily::Gaussian: return {f, -3.8, 3.8};  // |rho| <= 0.999
            case CopulaFamily::Clayton:
            case CopulaFamily::Gumbel: return {f, std::log(1e-4), std::log(50.0)};
            default: return {f, 0.0, 0.0};
        }
    }
    [[nodiscard]] double to_param(double z) const {
        switch (family) {
            case CopulaFamily::Gaussian: return std::tanh(z);
            case CopulaFamily::Clayton: return std::exp(z);
            case CopulaFamily::Gumbel: return 1.0 + std::exp(z);
            default: return 0.0;
        }
    }
    [[nodiscard]] double to_coord(double theta) const {
        switch (family) {
            case CopulaFamily::Gaussian: return std::atanh(std::clamp(theta, -0.999, 0.999));
            case CopulaFamily::Clayton: return std::log(std::max(theta, 1e-4));
            case CopulaFamily::Gumbel: return std::log(std::max(theta - 1.0, 1e-4));
            default: return 0.0;
        }
    }
    /// Coordinate at which the family is the independence copula (Clayton has none).
    [[nodiscard]] double independence_coord() const {
        return family == CopulaFamily::Gumbel ? -std::numeric_limits<double>::infinity() : 0.0;
    }
};

inline double neutral_start(CopulaFamily f) {
    switch (f) {
        case CopulaFamily::Gaussian: return 0.0;
        case CopulaFamily::Clayton: return 0.5;
        case CopulaFamily::Gumbel: return 1.5;
        default: return 0.0;
    }
}

inline double pooled_loglik(const BivariateCopula& c, std::span<const EdgeArguments> edges) {
    double ll = 0.0;
    for (const auto& e : edges) ll += std::log(clamp_prob(rectangle(c, e.first, e.second).mass));
    return ll;
}

/// Naive O(n^2) Kendall tau-a of paired samples (ties count as neither).
inline double kendall_tau_sample(std::span<const double> a, std::span<const double> b) {
    const std::size_t n = a.size();
    if (n < 2) return 0.0;
    double s = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        for (std::size_t j = i + 1; j < n; ++j) {
            const double d = (a[i] - a[j]) * (b[i] - b[j]);
            s += (d > 0.0) - (d < 0.0);
        }
    }
    return 2.0 * s / (static_cast<double>(n) * static_cast<double>(n - 1));
}

}  // namespace detail

/// Optimizer start from the empirical Kendall tau of the continuously extended
/// signs u_t = F^-_t + U_t f_t, U_t ~ Uniform(0,1), taken over pairs (t, t+lag).
/// Falls back to the family's neutral start when tau is infeasible.
[[nodiscard]] inline double tau_initializer(SignSpan signs, std::span<const double> success,
                                            std::uint64_t jitter_seed, CopulaFamily family, std::size_t lag = 1) {
    const std::size_t T = signs.size();
    if (T < 10) throw DomainError("tau_initializer: need at least 10 observations");
    if (success.size() != T) throw DomainError("tau_initializer: margins length mismatch");
    if (lag < 1 || lag >= T) throw DomainError("tau_initializer: bad lag");
    Rng rng = make_rng(jitter_seed);
    std::vector<double> ext(T);
    for (std::size_t t = 0; t < T; ++t) {
        const CellBounds c = sign_cell(signs[t], success[t]);
        ext[t] = c.minus + uniform01(rng) * (c.plus - c.minus);
    }
    const std::span<const double> all(ext);
    const double tau = detail::kendall_tau_sample(all.first(T - lag), all.subspan(lag));
    try {
        return tau_to_parameter(family, tau);
    } catch (const DomainError&) {
        return detail::neutral_start(family);
    }
}

namespace detail {

/// Pooled tree likelihood of a Gaussian or jointly symmetric Gaussian copula as
/// a function of rho, with first and second derivatives. Corner quantiles are
/// computed once; dC/drho is the bivariate normal density.
class GaussianTreeLikelihood {
public:
    struct Value {
        double f = 0.0;
        double d1 = 0.0;
        double d2 = 0.0;
    };

    GaussianTreeLikelihood(std::span<const EdgeArguments> edges, bool symmetric) : symmetric_(symmetric) {
        end_.reserve(edges.size());
        constant_.reserve(edges.size());
        for (const auto& e : edges) {
            double k0 = 0.0;
            add(e.first.plus, e.second.plus, 1.0, k0);
            add(e.first.plus, e.second.minus, -1.0, k0);
            add(e.first.minus, e.second.plus, -1.0, k0);
            add(e.first.minus, e.second.minus, 1.0, k0);
            end_.push_back(corners_.size());
            constant_.push_back(k0);
        }
    }

    [[nodiscard]] Value operator()(double rho) const {
        Value out;
        std::size_t begin = 0;
        for (std::size_t e = 0; e < end_.size(); ++e) {
            double m = constant_[e], m1 = 0.0, m2 = 0.0;
            for (std::size_t i = begin; i < end_[e]; ++i) {
                const Corner& c = corners_[i];
                double cdf, d1, d2;
                if (symmetric_) {
                    cdf = 0.5 * bvn_cdf_pair(c.h, c.k, rho);
                    const auto [pp, pp1] = density(c, rho);
                    const auto [pm, pm1] = density(c, -rho);
                    d1 = 0.5 * (pp - pm);
                    d2 = 0.5 * (pp1 + pm1);
                } else {
                    cdf = bvn_cdf(c.h, c.k, rho);
                    const auto [p, p1] = density(c, rho);
                    d1 = p;
                    d2 = p1;
                }
                m += c.sign * cdf;
                m1 += c.sign * d1;
                m2 += c.sign * d2;
            }
            begin = end_[e];
            if (m < kProbFloor) {
                out.f += std::log(kProbFloor);
                continue;
            }
            const double g = m1 / m;
            out.f += std::log(m);
            out.d1 += g;
            out.d2 += m2 / m - g * g;
        }
        return out;
    }

private:
    struct Corner {
        double h, k, sign;
    };

    void add(double u, double v, double sign, double& constant) {
        u = std::clamp(u, 0.0, 1.0);
        v = std::clamp(v, 0.0, 1.0);
        if (u == 0.0 || v == 0.0) return;
        if (u == 1.0) {
            constant += sign * v;
        } else if (v == 1.0) {
            constant += sign * u;
        } else {
            corners_.push_back({normal_quantile(u), normal_quantile(v), sign});
        }
    }

    /// Bivariate normal density at (h, k) and its derivative in r.
    static std::pair<double, double> density(const Corner& c, double r) {
        const double one = 1.0 - r * r;
        const double q = c.h * c.h - 2.0 * r * c.h * c.k + c.k * c.k;
        const double phi = std::exp(-q / (2.0 * one)) / (2.0 * std::numbers::pi * std::sqrt(one));
        const double dlog = r / one + c.h * c.k / one - r * q / (one * one);
        return {phi, phi * dlog};
    }

    std::vector<Corner> corners_;
    std::vector<std::size_t> end_;
    std::vector<double> constant_;
    bool symmetric_;
};

/// Maximizes a Gaussian-type tree likelihood over rho. The score is bracketed by
/// stepping outwards on the artanh scale, then its root is polished by Newton
/// steps. Returns rho and the evaluation count.
inline std::pair<double, int> maximize_gaussian(const GaussianTreeLikelihood& lik, bool symmetric, double start,
                                                const EstimationConfig& cfg) {
    const double z_hi = 3.8;
    const double z_lo = symmetric ? 0.0 : -3.8;
    int evals = 0;
    auto score = [&](double z) {
        ++evals;
        return lik(std::tanh(z)).d1;
    };
    // The symmetric family is even in rho with a stationary point at 0.
    double z0 = symmetric ? std::max(std::atanh(std::min(std::abs(start), 0.999)), 0.3)
                          : std::clamp(std::atanh(std::clamp(start, -0.999, 0.999)), z_lo, z_hi);
    double g0 = score(z0);
    if (g0 == 0.0) return {std::tanh(z0), evals};
    const double dir = g0 > 0.0 ? 1.0 : -1.0;
    double step = 0.5;
    double za = z0, zb = z0;
    bool bracketed = false;
    while (evals < cfg.max_iterations) {
        const double z1 = std::clamp(z0 + dir * step, z_lo, z_hi);
        const double g1 = score(z1);
        if ((g1 > 0.0) != (dir > 0.0) || g1 == 0.0) {
            za = std::min(z0, z1);
            zb = std::max(z0, z1);
            bracketed = true;
            break;
        }
        if (z1 == z_lo || z1 == z_hi) return {std::tanh(z1), evals};
        z0 = z1;
        step *= 2.0;
    }
    if (!bracketed) throw NoConvergence(std::tanh(z0), lik(std::tanh(z0)).f);

    // Newton on the score inside [a, b] with score(a) > 0 > score(b); steps that
    // leave the bracket or shrink it too slowly are replaced by bisection.
    double a = std::tanh(za);
    double b = std::tanh(zb);
    double x = 0.5 * (a + b);
    double dx_old = b - a;
    double dx = dx_old;
    auto v = lik(x);
    ++evals;
    while (evals < cfg.max_iterations) {
        const bool newton_ok = v.d2 < 0.0 && std::abs(2.0 * v.d1) < std::abs(dx_old * v.d2);
        dx_old = dx;
        if (newton_ok) {
            dx = -v.d1 / v.d2;
            const double next = x + dx;
            if (next <= a || next >= b) {
                dx = 0.5 * (b - a);
                x = a + dx;
            } else {
                x = next;
            }
        } else {
            dx = 0.5 * (b - a);
            x = a + dx;
        }
        if (std::abs(dx) < cfg.tolerance || b - a < cfg.tolerance) return {x, evals};
        v = lik(x);
        ++evals;
        if (v.d1 > 0.0) a = x;
        else if (v.d1 < 0.0) b = x;
        else return {x, evals};
    }
    throw NoConvergence(x, v.f);
}

inline bool is_gaussian_type(const BivariateCopula& c) {
    if (c.family() == CopulaFamily::Gaussian) return true;
    return c.family() == CopulaFamily::JointlySymmetric && c.base()->family() == CopulaFamily::Gaussian;
}

struct FamilyFit {
    BivariateCopula copula;
    double loglik;
    int iterations;
};

/// Maximizes the pooled likelihood of `edges` over the parameter of `family_of`.
inline FamilyFit maximize_family(const BivariateCopula& family_of, std::span<const EdgeArguments> edges,
                                 double start, const EstimationConfig& cfg) {
    if (family_of.parameter_count() == 0) {
        return {BivariateCopula::independence(), pooled_loglik(BivariateCopula::independence(), edges), 0};
    }
    if (cfg.analytic_gradient && is_gaussian_type(family_of)) {
        const bool symmetric = family_of.family() == CopulaFamily::JointlySymmetric;
        const GaussianTreeLikelihood lik(edges, symmetric);
        const auto [rho, used] = maximize_gaussian(lik, symmetric, start, cfg);
        double ll = pooled_loglik(family_of.with_parameter(rho), edges);
        const double li = pooled_loglik(family_of.with_parameter(0.0), edges);
        if (li >= ll) return {family_of.with_parameter(0.0), li, used};
        return {family_of.with_parameter(rho), ll, used};
    }
    const ParameterMap map = ParameterMap::of(family_of);
    auto objective = [&](double z) {
        try {
            return -pooled_loglik(family_of.with_parameter(map.to_param(z)), edges);
        } catch (const NonIncreasingCopula&) {
            return std::numeric_limits<double>::max();
        }
    };

    // Downhill bracket expansion from the start, clipped to the search interval.
    double z0 = std::clamp(map.to_coord(start), map.lo, map.hi);
    double f0 = objective(z0);
    double step = 0.25;
    double a = std::max(map.lo, z0 - step);
    double c = std::min(map.hi, z0 + step);
    double fa = objective(a);
    double fc = objective(c);
    int evals = 3;
    while (evals < cfg.max_iterations && (fa < f0 || fc < f0)) {
        step *= 2.0;
        if (fa < fc) {
            c = z0;
            fc = f0;
            z0 = a;
            f0 = fa;
            if (a <= map.lo) break;
            a = std::max(map.lo, a - step);
            fa = objective(a);
        } else {
            a = z0;
            fa = f0;
            z0 = c;
            f0 = fc;
            if (c >= map.hi) break;
            c = std::min(map.hi, c + step);
            fc = objective(c);
        }
        ++evals;
    }

    const int bits = static_cast<int>(std::ceil(1.0 - std::log2(cfg.tolerance)));
    std::uintmax_t iters = static_cast<std::uintmax_t>(std::max(1, cfg.max_iterations - evals));
    const std::uintmax_t budget = iters;
    auto [zbest, fbest] = boost::math::tools::brent_find_minima(objective, a, c, bits, iters);
    const int used = evals + static_cast<int>(iters);
    if (iters >= budget && c - a > cfg.tolerance) {
        throw NoConvergence(map.to_param(zbest), -fbest);
    }
    // Independence is the family's limit and always admissible. Clayton only
    // reaches it as theta -> 0, so it is returned as the independence copula.
    const double li = pooled_loglik(BivariateCopula::independence(), edges);
    if (li >= -fbest) {
        if (map.family == CopulaFamily::Clayton) return {BivariateCopula::independence(), li, used};
        return {family_of.with_parameter(map.to_param(map.independence_coord())), li, used};
    }
    return {family_of.with_parameter(map.to_param(zbest)), -fbest, used};
}

inline TreeFit fit_tree(std::span<const EdgeArguments> edges, SignSpan signs, std::span<const double> success,
                        std::size_t lag, const EstimationConfig& cfg) {
    TreeFit best;
    best.indep_loglik = pooled_loglik(BivariateCopula::independence(), edges);
    best.aic = std::numeric_limits<double>::infinity();
    for (const auto& candidate : cfg.candidates) {
        const CopulaFamily fam =
            candidate.family() == CopulaFamily::JointlySymmetric ? candidate.base()->family() : candidate.family();
        double start = neutral_start(fam);
        if (signs.size() >= 10 && candidate.family() != CopulaFamily::Independence &&
            candidate.family() != CopulaFamily::JointlySymmetric) {
            start = tau_initializer(signs, success, cfg.jitter_seed + lag, fam, lag);
        }
        const FamilyFit fit = maximize_family(candidate, edges, start, cfg);
        const double aic = -2.0 * fit.loglik + 2.0 * fit.copula.parameter_count();
        if (aic < best.aic) {
            best.copula = fit.copula;
            best.loglik = fit.loglik;
            best.aic = aic;
            best.iterations = fit.iterations;
        }
    }
    return best;
}

}  // namespace detail

/// Fits the copula of the first tree by maximizing the pooled likelihood of the
/// sliding pairs (s_t, s_{t+1}). Returns the copula and its log-likelihood.
[[nodiscard]] inline std::pair<BivariateCopula, double> fit_tree1(SignSpan signs, std::span<const double> success,
                                                                  const EstimationConfig& cfg) {
    const std::size_t T = signs.size();
    if (T < 3) throw DomainError("fit_tree1: need at least 3 observations");
    cfg.validate(T);
    const VineSpec indep(std::vector<double>(success.begin(), success.end()));
    PmfWorkspace ws;
    const auto edges = tree_arguments(indep, signs, 1, ws);
    const TreeFit fit = detail::fit_tree(edges, signs, success, 1, cfg);
    return {fit.copula, fit.loglik};
}

/// Sequential estimation of trees 1..truncation. Tree l uses the conditional
/// CDFs implied by the already-fitted trees 1..l-1; later trees never revise
/// earlier estimates.
[[nodiscard]] inline FittedVine fit_sequential(SignSpan signs, std::span<const double> success,
                                               const EstimationConfig& cfg) {
    const std::size_t T = signs.size();
    if (T < 3) throw DomainError("fit_sequential: need at least 3 observations");
    if (success.size() != T) throw DomainError("fit_sequential: margins length mismatch");
    cfg.validate(T);
    std::vector<double> margins(success.begin(), success.end());
    std::vector<BivariateCopula> trees;
    std::vector<TreeFit> fits;
    PmfWorkspace ws;
    for (std::size_t l = 1; l <= cfg.truncation; ++l) {
        const VineSpec current(margins, trees, T - 1);
        TreeFit fit;
        try {
            const auto edges = tree_arguments(current, signs, l, ws);
            fit = detail::fit_tree(edges, signs, margins, l, cfg);
        } catch (const DegenerateConditional&) {
            fit = TreeFit{};
            fit.degenerate = true;
        }
        trees.push_back(fit.copula);
        fits.push_back(fit);
    }
    return FittedVine{VineSpec(std::move(margins), std::move(trees), cfg.truncation), std::move(fits)};
}

}  // namespace pcpos
