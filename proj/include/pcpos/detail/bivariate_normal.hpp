#pragma once

// Bivariate standard normal CDF after A. Genz (2004), "Numerical computation of
// rectangular bivariate and trivariate normal and t probabilities", based on the
// Drezner-Wesolowsky method with Gauss-Legendre quadrature. Absolute error is
// about 1e-15.

#include <algorithm>
#include <array>
#include <cmath>
#include <limits>
#include <numbers>

#include "pcpos/distributions.hpp"

namespace pcpos::detail {

namespace gl {
inline constexpr std::array<double, 3> w6{0.1713244923791705, 0.3607615730481384, 0.4679139345726904};
inline constexpr std::array<double, 3> x6{0.9324695142031522, 0.6612093864662647, 0.2386191860831970};
inline constexpr std::array<double, 6> w12{0.04717533638651177, 0.1069393259953183, 0.1600783285433464,
                                           0.2031674267230659,  0.2334925365383547, 0.2491470458134029};
inline constexpr std::array<double, 6> x12{0.9815606342467191, 0.9041172563704750, 0.7699026741943050,
                                           0.5873179542866171, 0.3678314989981802, 0.1252334085114692};
inline constexpr std::array<double, 10> w20{0.01761400713915212, 0.04060142980038694, 0.06267204833410906,
                                            0.08327674157670475, 0.1019301198172404,  0.1181945319615184,
                                            0.1316886384491766,  0.1420961093183821,  0.1491729864726037,
                                            0.1527533871307259};
inline constexpr std::array<double, 10> x20{0.9931285991850949, 0.9639719272779138, 0.9122344282513259,
                                            0.8391169718222188, 0.7463319064601508, 0.6360536807265150,
                                            0.5108670019508271, 0.3737060887154196, 0.2277858511416451,
                                            0.07652652113349733};
}  // namespace gl

/// P(X > dh, Y > dk) for standard bivariate normal with correlation r.
inline double bvn_upper(double dh, double dk, double r) {
    constexpr double inf = std::numeric_limits<double>::infinity();
    constexpr double two_pi = 2.0 * std::numbers::pi;
    if (dh == inf || dk == inf) return 0.0;
    if (dh == -inf) return dk == -inf ? 1.0 : normal_cdf(-dk);
    if (dk == -inf) return normal_cdf(-dh);
    if (r == 0.0) return normal_cdf(-dh) * normal_cdf(-dk);

    const double* w = nullptr;
    const double* x = nullptr;
    int n = 0;
    if (std::abs(r) < 0.3) {
        w = gl::w6.data();
        x = gl::x6.data();
        n = 3;
    } else if (std::abs(r) < 0.75) {
        w = gl::w12.data();
        x = gl::x12.data();
        n = 6;
    } else {
        w = gl::w20.data();
        x = gl::x20.data();
        n = 10;
    }

    double h = dh;
    double k = dk;
    double hk = h * k;
    double bvn = 0.0;
    if (std::abs(r) < 0.925) {
        const double hs = (h * h + k * k) / 2.0;
        const double asr = std::asin(r) / 2.0;
        for (int i = 0; i < n; ++i) {
            for (double sgn : {-1.0, 1.0}) {
                const double sn = std::sin(asr * (1.0 + sgn * x[i]));
                bvn += w[i] * std::exp((sn * hk - hs) / (1.0 - sn * sn));
            }
        }
        return std::clamp(bvn * asr / two_pi + normal_cdf(-h) * normal_cdf(-k), 0.0, 1.0);
    }

    if (r < 0.0) {
        k = -k;
        hk = -hk;
    }
    if (std::abs(r) < 1.0) {
        const double as = 1.0 - r * r;
        double a = std::sqrt(as);
        const double bs = (h - k) * (h - k);
        double asr = -(bs / as + hk) / 2.0;
        const double c = (4.0 - hk) / 8.0;
        const double d = (12.0 - hk) / 80.0;
        if (asr > -100.0) bvn = a * std::exp(asr) * (1.0 - c * (bs - as) * (1.0 - d * bs) / 3.0 + c * d * as * as);
        if (hk > -100.0) {
            const double b = std::sqrt(bs);
            const double sp = std::sqrt(two_pi) * normal_cdf(-b / a);
            bvn -= std::exp(-hk / 2.0) * sp * b * (1.0 - c * bs * (1.0 - d * bs) / 3.0);
        }
        a /= 2.0;
        double acc = 0.0;
        for (int i = 0; i < n; ++i) {
            for (double sgn : {-1.0, 1.0}) {
                double xs = a * (1.0 + sgn * x[i]);
                xs *= xs;
                asr = -(bs / xs + hk) / 2.0;
                if (asr > -100.0) {
                    const double sp = 1.0 + c * xs * (1.0 + 5.0 * d * xs);
                    const double rs = std::sqrt(1.0 - xs);
                    const double ep = std::exp(-(hk / 2.0) * xs / ((1.0 + rs) * (1.0 + rs))) / rs;
                    acc += w[i] * std::exp(asr) * (sp - ep);
                }
            }
        }
        bvn = (a * acc - bvn) / two_pi;
    }
    if (r > 0.0) {
        bvn += normal_cdf(-std::max(h, k));
    } else if (h >= k) {
        bvn = -bvn;
    } else {
        const double l = h < 0.0 ? normal_cdf(k) - normal_cdf(h) : normal_cdf(-h) - normal_cdf(-k);
        bvn = l - bvn;
    }
    return std::clamp(bvn, 0.0, 1.0);
}

/// P(X <= h, Y <= k) for standard bivariate normal with correlation r.
inline double bvn_cdf(double h, double k, double r) { return bvn_upper(-h, -k, r); }

/// bvn_cdf(h, k, r) + bvn_cdf(h, k, -r). Below |r| = 0.925 both integrals share
/// their quadrature nodes and the integrands combine into one sinh term.
inline double bvn_cdf_pair(double h, double k, double r) {
    if (!std::isfinite(h) || !std::isfinite(k) || std::abs(r) >= 0.925) return bvn_cdf(h, k, r) + bvn_cdf(h, k, -r);
    const double base = 2.0 * normal_cdf(h) * normal_cdf(k);
    if (r == 0.0) return base;
    const double* w = gl::w6.data();
    const double* x = gl::x6.data();
    int n = 3;
    if (std::abs(r) >= 0.75) {
        w = gl::w20.data();
        x = gl::x20.data();
        n = 10;
    } else if (std::abs(r) >= 0.3) {
        w = gl::w12.data();
        x = gl::x12.data();
        n = 6;
    }
    const double hk = h * k;
    const double hs = (h * h + k * k) / 2.0;
    const double asr = std::asin(r) / 2.0;
    double acc = 0.0;
    for (int i = 0; i < n; ++i) {
        for (double sgn : {-1.0, 1.0}) {
            const double sn = std::sin(asr * (1.0 + sgn * x[i]));
            const double q = 1.0 / (1.0 - sn * sn);
            acc += w[i] * std::exp(-hs * q) * std::sinh(sn * hk * q);
        }
    }
    return std::clamp(base + 2.0 * acc * asr / (2.0 * std::numbers::pi), 0.0, 2.0);
}

}  // namespace pcpos::detail
