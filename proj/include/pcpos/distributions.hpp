#pragma once

// Univariate error distributions: CDF, quantile and sampling for the error
// laws used as Bernoulli margins, log-odds weights and simulation innovations.

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <random>
#include <string>
#include <string_view>
#include <utility>
#include <variant>
#include <vector>

#include <boost/math/distributions/students_t.hpp>
#include <boost/math/special_functions/erf.hpp>

#include "pcpos/errors.hpp"
#include "pcpos/random.hpp"

namespace pcpos {

/// Standard normal CDF, Phi(x) = erfc(-x/sqrt2)/2.
[[nodiscard]] inline double normal_cdf(double x) noexcept {
    return 0.5 * std::erfc(-x * std::numbers::sqrt2 * 0.5);
}

/// Standard normal quantile. p must lie in (0,1).
[[nodiscard]] inline double normal_quantile(double p) {
    return -std::numbers::sqrt2 * boost::math::erfc_inv(2.0 * p);
}

[[nodiscard]] inline double normal_pdf(double x) noexcept {
    return std::exp(-0.5 * x * x) * 0.5 * std::numbers::inv_sqrtpi * std::numbers::sqrt2;
}

struct NormalLaw {
    double mean = 0.0;
    double sd = 1.0;
};

struct CauchyLaw {
    double location = 0.0;
    double scale = 1.0;
};

struct StudentTLaw {
    double df = 1.0;
};

/// e = s|C| - (1-s)|N| with P(s=1)=1/2, C standard Cauchy, N standard normal.
struct MixtureCauchyNormalLaw {};

/// Piecewise-linear CDF through (x_i, F_i); 0 left of the table, 1 right of it.
struct TabulatedLaw {
    std::vector<double> x;
    std::vector<double> cdf;
};

class ErrorDistribution {
public:
    using Law = std::variant<NormalLaw, CauchyLaw, StudentTLaw, MixtureCauchyNormalLaw, TabulatedLaw>;

    ErrorDistribution() : law_(NormalLaw{}) {}

    static ErrorDistribution normal(double mean = 0.0, double sd = 1.0) {
        if (!(sd > 0.0) || !std::isfinite(mean) || !std::isfinite(sd))
            throw DomainError("normal: sd must be positive and finite");
        return ErrorDistribution(NormalLaw{mean, sd});
    }
    static ErrorDistribution cauchy(double location = 0.0, double scale = 1.0) {
        if (!(scale > 0.0) || !std::isfinite(location) || !std::isfinite(scale))
            throw DomainError("cauchy: scale must be positive and finite");
        return ErrorDistribution(CauchyLaw{location, scale});
    }
    static ErrorDistribution student_t(double df) {
        if (!(df > 0.0) || !std::isfinite(df)) throw DomainError("student_t: df must be positive");
        return ErrorDistribution(StudentTLaw{df});
    }
    static ErrorDistribution mixture() { return ErrorDistribution(MixtureCauchyNormalLaw{}); }
    static ErrorDistribution tabulated(std::vector<double> x, std::vector<double> cdf) {
        if (x.size() < 2 || x.size() != cdf.size()) throw DomainError("tabulated: need >= 2 matching points");
        for (std::size_t i = 0; i < x.size(); ++i) {
            if (!std::isfinite(x[i]) || !(cdf[i] >= 0.0 && cdf[i] <= 1.0))
                throw DomainError("tabulated: invalid point");
            if (i > 0 && (x[i] <= x[i - 1] || cdf[i] < cdf[i - 1]))
                throw DomainError("tabulated: table must be increasing in x and nondecreasing in F");
        }
        return ErrorDistribution(TabulatedLaw{std::move(x), std::move(cdf)});
    }

    /// Parses `normal`, `normal(m,s)`, `cauchy`, `t(df)`, `mixture`.
    static ErrorDistribution parse(std::string_view text);

    [[nodiscard]] const Law& law() const noexcept { return law_; }
    [[nodiscard]] std::string name() const;

    [[nodiscard]] double cdf(double x) const {
        if (std::isnan(x)) throw DomainError("cdf: NaN argument");
        if (x == std::numeric_limits<double>::infinity()) return 1.0;
        if (x == -std::numeric_limits<double>::infinity()) return 0.0;
        return std::visit([x](const auto& law) { return cdf_of(law, x); }, law_);
    }

    [[nodiscard]] double quantile(double p) const {
        if (!(p > 0.0 && p < 1.0)) throw DomainError("quantile: p must lie in (0,1)");
        return std::visit([this, p](const auto& law) { return quantile_of(law, p); }, law_);
    }

    [[nodiscard]] double sample(Rng& rng) const {
        return std::visit([&rng](const auto& law) { return sample_of(law, rng); }, law_);
    }

private:
    explicit ErrorDistribution(Law law) : law_(std::move(law)) {}

    static double cdf_of(const NormalLaw& d, double x) { return normal_cdf((x - d.mean) / d.sd); }
    static double cdf_of(const CauchyLaw& d, double x) {
        return 0.5 + std::atan((x - d.location) / d.scale) * std::numbers::inv_pi;
    }
    static double cdf_of(const StudentTLaw& d, double x) {
        return boost::math::cdf(boost::math::students_t_distribution<double>(d.df), x);
    }
    static double cdf_of(const MixtureCauchyNormalLaw&, double x) {
        // x >= 0: 1/2 + P(|C| <= x)/2 ; x < 0: P(|N| >= -x)/2 = Phi(x)
        if (x >= 0.0) return 0.5 + std::atan(x) * std::numbers::inv_pi;
        return normal_cdf(x);
    }
    static double cdf_of(const TabulatedLaw& d, double x) {
        if (x <= d.x.front()) return x < d.x.front() ? 0.0 : d.cdf.front();
        if (x >= d.x.back()) return 1.0;
        auto it = std::upper_bound(d.x.begin(), d.x.end(), x);
        auto i = static_cast<std::size_t>(it - d.x.begin());
        double w = (x - d.x[i - 1]) / (d.x[i] - d.x[i - 1]);
        return d.cdf[i - 1] + w * (d.cdf[i] - d.cdf[i - 1]);
    }

    static double quantile_of(const NormalLaw& d, double p) { return d.mean + d.sd * normal_quantile(p); }
    static double quantile_of(const CauchyLaw& d, double p) {
        return d.location + d.scale * std::tan(std::numbers::pi * (p - 0.5));
    }
    static double quantile_of(const StudentTLaw& d, double p) {
        return boost::math::quantile(boost::math::students_t_distribution<double>(d.df), p);
    }
    static double quantile_of(const MixtureCauchyNormalLaw&, double p) {
        if (p >= 0.5) return std::tan(std::numbers::pi * (p - 0.5));
        return normal_quantile(p);
    }
    static double quantile_of(const TabulatedLaw& d, double p) {
        return invert_numerically([&d](double x) { return cdf_of(d, x); }, p, d.x.front(), d.x.back());
    }

    static double sample_of(const NormalLaw& d, Rng& rng) {
        return std::normal_distribution<double>(d.mean, d.sd)(rng);
    }
    static double sample_of(const CauchyLaw& d, Rng& rng) { return quantile_of(d, uniform01(rng)); }
    static double sample_of(const StudentTLaw& d, Rng& rng) {
        return std::student_t_distribution<double>(d.df)(rng);
    }
    static double sample_of(const MixtureCauchyNormalLaw&, Rng& rng) {
        const bool heads = (rng() >> 63) != 0;
        const double c = std::tan(std::numbers::pi * (uniform01(rng) - 0.5));
        const double n = std::normal_distribution<double>(0.0, 1.0)(rng);
        return heads ? std::abs(c) : -std::abs(n);
    }
    static double sample_of(const TabulatedLaw& d, Rng& rng) { return quantile_of(d, uniform01(rng)); }

    /// Safeguarded bisection with secant steps on a monotone CDF.
    template <class Cdf>
    static double invert_numerically(Cdf&& cdf, double p, double lo, double hi) {
        double flo = cdf(lo) - p;
        double fhi = cdf(hi) - p;
        if (flo >= 0.0) return lo;
        if (fhi <= 0.0) return hi;
        for (int it = 0; it < 400; ++it) {
            double x = lo - flo * (hi - lo) / (fhi - flo);
            if (!(x > lo && x < hi) || it % 3 == 2) x = 0.5 * (lo + hi);
            const double fx = cdf(x) - p;
            if (std::abs(fx) < 1e-13 || hi - lo < 1e-15 * (1.0 + std::abs(x))) return x;
            if (fx < 0.0) {
                lo = x;
                flo = fx;
            } else {
                hi = x;
                fhi = fx;
            }
        }
        return 0.5 * (lo + hi);
    }

    Law law_;
};

namespace detail {
inline std::string trim(std::string_view s) {
    auto b = s.find_first_not_of(" \t\r\n");
    if (b == std::string_view::npos) return {};
    auto e = s.find_last_not_of(" \t\r\n");
    return std::string(s.substr(b, e - b + 1));
}

/// Splits "name(a,b)" into name and argument list; no parentheses gives no arguments.
inline std::pair<std::string, std::vector<std::string>> split_call(std::string_view text) {
    std::string t = trim(text);
    auto open = t.find('(');
    if (open == std::string::npos) return {t, {}};
    if (t.back() != ')') throw ConfigError("unbalanced parentheses in '" + t + "'");
    std::string name = trim(std::string_view(t).substr(0, open));
    std::string inner = t.substr(open + 1, t.size() - open - 2);
    std::vector<std::string> args;
    int depth = 0;
    std::string cur;
    for (char c : inner) {
        if (c == '(') ++depth;
        if (c == ')') --depth;
        if (c == ',' && depth == 0) {
            args.push_back(trim(cur));
            cur.clear();
        } else {
            cur += c;
        }
    }
    if (!trim(cur).empty() || !args.empty()) args.push_back(trim(cur));
    return {name, args};
}

inline double to_double(const std::string& s) {
    try {
        std::size_t pos = 0;
        double v = std::stod(s, &pos);
        if (pos != s.size()) throw ConfigError("trailing characters in number '" + s + "'");
        return v;
    } catch (const std::logic_error&) {
        throw ConfigError("not a number: '" + s + "'");
    }
}
}  // namespace detail

inline ErrorDistribution ErrorDistribution::parse(std::string_view text) {
    auto [name, args] = detail::split_call(text);
    auto need = [&](std::size_t lo, std::size_t hi) {
        if (args.size() < lo || args.size() > hi) throw ConfigError("wrong argument count for '" + name + "'");
    };
    if (name == "normal") {
        need(0, 2);
        double m = args.empty() ? 0.0 : detail::to_double(args[0]);
        double s = args.size() < 2 ? 1.0 : detail::to_double(args[1]);
        return normal(m, s);
    }
    if (name == "cauchy") {
        need(0, 2);
        double m = args.empty() ? 0.0 : detail::to_double(args[0]);
        double s = args.size() < 2 ? 1.0 : detail::to_double(args[1]);
        return cauchy(m, s);
    }
    if (name == "t") {
        need(1, 1);
        return student_t(detail::to_double(args[0]));
    }
    if (name == "mixture") {
        need(0, 0);
        return mixture();
    }
    throw ConfigError("unknown error distribution '" + std::string(text) + "'");
}

inline std::string ErrorDistribution::name() const {
    struct Namer {
        std::string operator()(const NormalLaw& d) const {
            if (d.mean == 0.0 && d.sd == 1.0) return "normal";
            return "normal(" + std::to_string(d.mean) + "," + std::to_string(d.sd) + ")";
        }
        std::string operator()(const CauchyLaw& d) const {
            if (d.location == 0.0 && d.scale == 1.0) return "cauchy";
            return "cauchy(" + std::to_string(d.location) + "," + std::to_string(d.scale) + ")";
        }
        std::string operator()(const StudentTLaw& d) const {
            std::string s = std::to_string(d.df);
            s.erase(s.find_last_not_of('0') + 1);
            if (!s.empty() && s.back() == '.') s.pop_back();
            return "t(" + s + ")";
        }
        std::string operator()(const MixtureCauchyNormalLaw&) const { return "mixture"; }
        std::string operator()(const TabulatedLaw&) const { return "tabulated"; }
    };
    return std::visit(Namer{}, law_);
}

}  // namespace pcpos
