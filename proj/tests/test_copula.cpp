#include <catch_amalgamated.hpp>

#include <cmath>
#include <numbers>
#include <utility>
#include <vector>

#include "pcpos/copula.hpp"

using namespace pcpos;
using Catch::Matchers::WithinAbs;

namespace {

// C(u,v) = int_{-inf}^{h} phi(x) Phi((k - r x)/sqrt(1-r^2)) dx by composite Simpson
double gaussian_copula_quadrature(double u, double v, double r) {
    const double h = normal_quantile(u), k = normal_quantile(v);
    const double lo = -12.0;
    const int n = 20000;
    const double step = (h - lo) / n;
    const double s = std::sqrt(1.0 - r * r);
    auto f = [&](double x) { return normal_pdf(x) * normal_cdf((k - r * x) / s); };
    double acc = f(lo) + f(h);
    for (int i = 1; i < n; ++i) acc += (i % 2 ? 4.0 : 2.0) * f(lo + i * step);
    return acc * step / 3.0;
}

double clayton_closed_form(double u, double v, double t) {
    return std::pow(std::pow(u, -t) + std::pow(v, -t) - 1.0, -1.0 / t);
}

double gumbel_closed_form(double u, double v, double t) {
    return std::exp(-std::pow(std::pow(-std::log(u), t) + std::pow(-std::log(v), t), 1.0 / t));
}

// Literal average of the four reflections of the base copula
double js_reflection_sum(const BivariateCopula& base, double u, double v) {
    const double c = base.cdf(u, v);
    const double c_flip_u = v - base.cdf(1.0 - u, v);
    const double c_flip_v = u - base.cdf(u, 1.0 - v);
    const double c_flip_both = u + v - 1.0 + base.cdf(1.0 - u, 1.0 - v);
    return 0.25 * (c + c_flip_u + c_flip_v + c_flip_both);
}

// tau = 1 - 4 int int C_u C_v du dv with central differences on a midpoint grid
double numeric_tau(const BivariateCopula& c) {
    const int n = 400;
    const double h = 1.0 / n, d = 1e-5;
    double acc = 0.0;
    for (int i = 0; i < n; ++i) {
        for (int j = 0; j < n; ++j) {
            const double u = (i + 0.5) * h, v = (j + 0.5) * h;
            const double cu = (c.cdf(u + d, v) - c.cdf(u - d, v)) / (2 * d);
            const double cv = (c.cdf(u, v + d) - c.cdf(u, v - d)) / (2 * d);
            acc += cu * cv;
        }
    }
    return 1.0 - 4.0 * acc * h * h;
}

std::vector<BivariateCopula> zoo() {
    return {BivariateCopula::independence(),
            BivariateCopula::gaussian(0.5),
            BivariateCopula::gaussian(-0.8),
            BivariateCopula::clayton(0.3),
            BivariateCopula::clayton(4.0),
            BivariateCopula::gumbel(1.0),
            BivariateCopula::gumbel(3.0),
            BivariateCopula::jointly_symmetric(BivariateCopula::gaussian(0.7)),
            BivariateCopula::jointly_symmetric(BivariateCopula::clayton(2.0)),
            BivariateCopula::jointly_symmetric(BivariateCopula::gumbel(1.5))};
}

const std::vector<double> kGrid{0.01, 0.1, 0.25, 0.5, 0.7, 0.9, 0.99};

}  // namespace

TEST_CASE("gaussian copula at the centre", "[copula]") {
    // C(1/2,1/2) = 1/4 + asin(rho)/(2 pi); 1/3 at rho = 1/2
    CHECK_THAT(BivariateCopula::gaussian(0.5).cdf(0.5, 0.5), WithinAbs(1.0 / 3.0, 1e-10));
    for (double r : {-0.95, -0.3, 0.1, 0.9})
        CHECK_THAT(BivariateCopula::gaussian(r).cdf(0.5, 0.5),
                   WithinAbs(0.25 + std::asin(r) / (2 * std::numbers::pi), 1e-10));
}

TEST_CASE("gaussian copula matches quadrature", "[copula]") {
    for (double r : {-0.95, -0.5, 0.2, 0.5, 0.93, 0.99}) {
        const auto c = BivariateCopula::gaussian(r);
        for (double u : kGrid)
            for (double v : kGrid) {
                INFO("r=" << r << " u=" << u << " v=" << v);
                CHECK_THAT(c.cdf(u, v), WithinAbs(gaussian_copula_quadrature(u, v, r), 1e-9));
            }
    }
}

TEST_CASE("archimedean copulas match their closed forms", "[copula]") {
    for (double t : {0.1, 1.0, 5.0}) {
        const auto c = BivariateCopula::clayton(t);
        for (double u : kGrid)
            for (double v : kGrid) CHECK_THAT(c.cdf(u, v), WithinAbs(clayton_closed_form(u, v, t), 1e-12));
    }
    for (double t : {1.2, 2.0, 6.0}) {
        const auto c = BivariateCopula::gumbel(t);
        for (double u : kGrid)
            for (double v : kGrid) CHECK_THAT(c.cdf(u, v), WithinAbs(gumbel_closed_form(u, v, t), 1e-12));
    }
}

TEST_CASE("jointly symmetric copula equals the reflection average", "[copula]") {
    for (const auto& base : {BivariateCopula::gaussian(0.3), BivariateCopula::gaussian(-0.9),
                             BivariateCopula::gaussian(0.97), BivariateCopula::clayton(2.0),
                             BivariateCopula::gumbel(2.5)}) {
        const auto js = BivariateCopula::jointly_symmetric(base);
        for (double u : kGrid)
            for (double v : kGrid) {
                INFO(js.to_string() << " u=" << u << " v=" << v);
                CHECK_THAT(js.cdf(u, v), WithinAbs(js_reflection_sum(base, u, v), 1e-9));
            }
    }
}

TEST_CASE("jointly symmetric copula is symmetric in each axis", "[copula]") {
    const auto js = BivariateCopula::jointly_symmetric(BivariateCopula::clayton(3.0));
    for (double u : kGrid)
        for (double v : kGrid) {
            CHECK_THAT(js.cdf(u, 1.0 - v), WithinAbs(u - js.cdf(u, v), 1e-12));
            CHECK_THAT(js.cdf(1.0 - u, v), WithinAbs(v - js.cdf(u, v), 1e-12));
        }
    // a gaussian base is identified only up to sign
    const auto a = BivariateCopula::jointly_symmetric(BivariateCopula::gaussian(0.6));
    const auto b = BivariateCopula::jointly_symmetric(BivariateCopula::gaussian(-0.6));
    for (double u : kGrid)
        for (double v : kGrid) CHECK_THAT(a.cdf(u, v), WithinAbs(b.cdf(u, v), 1e-12));
}

TEST_CASE("copula axioms hold for every family", "[copula]") {
    for (const auto& c : zoo()) {
        INFO(c.to_string());
        for (double u : kGrid) {
            CHECK(c.cdf(u, 0.0) == 0.0);
            CHECK(c.cdf(0.0, u) == 0.0);
            CHECK(c.cdf(u, 1.0) == u);
            CHECK(c.cdf(1.0, u) == u);
            for (double v : kGrid) {
                const double x = c.cdf(u, v);
                CHECK(x >= std::max(u + v - 1.0, 0.0));
                CHECK(x <= std::min(u, v));
            }
        }
        for (std::size_t i = 0; i + 1 < kGrid.size(); ++i)
            for (std::size_t j = 0; j + 1 < kGrid.size(); ++j) {
                const auto r = rectangle(c, kGrid[i + 1], kGrid[i], kGrid[j + 1], kGrid[j]);
                CHECK(r.mass >= 0.0);
            }
    }
}

TEST_CASE("out-of-range arguments are clamped onto the square", "[copula]") {
    const auto c = BivariateCopula::gaussian(0.4);
    CHECK(c.cdf(-0.2, 0.5) == 0.0);
    CHECK(c.cdf(1.7, 0.5) == 0.5);
}

TEST_CASE("bernoulli cell masses sum to one", "[copula]") {
    const double pu = 0.3, pv = 0.65;
    for (const auto& c : zoo()) {
        // cell for outcome 0 is [0, 1-p], for outcome 1 it is [1-p, 1]
        const CellBounds u0{1.0 - pu, 0.0}, u1{1.0, 1.0 - pu};
        const CellBounds v0{1.0 - pv, 0.0}, v1{1.0, 1.0 - pv};
        const double total = rectangle(c, u0, v0).mass + rectangle(c, u0, v1).mass + rectangle(c, u1, v0).mass +
                             rectangle(c, u1, v1).mass;
        CHECK_THAT(total, WithinAbs(1.0, 1e-12));
        // the margins are preserved
        CHECK_THAT(rectangle(c, u1, v0).mass + rectangle(c, u1, v1).mass, WithinAbs(pu, 1e-12));
    }
}

TEST_CASE("rectangle corners and validation", "[copula]") {
    const auto c = BivariateCopula::gaussian(0.5);
    const auto r = rectangle(c, 1.0, 0.5, 1.0, 0.5);
    CHECK(r.corners.cpp == 1.0);
    CHECK(r.corners.cpm == 0.5);
    CHECK(r.corners.cmp == 0.5);
    CHECK_THAT(r.corners.cmm, WithinAbs(1.0 / 3.0, 1e-10));
    CHECK_THAT(r.mass, WithinAbs(1.0 / 3.0, 1e-10));
    CHECK_THROWS_AS(rectangle(c, 0.2, 0.5, 1.0, 0.5), DomainError);

    reset_rectangle_call_count();
    (void)rectangle(c, 1.0, 0.5, 1.0, 0.5);
    (void)rectangle(c, 1.0, 0.5, 1.0, 0.5);
    CHECK(rectangle_call_count() == 2);
}

TEST_CASE("kendall tau matches numerical integration", "[copula]") {
    for (const auto& c : {BivariateCopula::gaussian(0.5), BivariateCopula::gaussian(-0.3), BivariateCopula::clayton(2.0),
                          BivariateCopula::gumbel(1.5)}) {
        INFO(c.to_string());
        CHECK_THAT(kendall_tau(c), WithinAbs(numeric_tau(c), 5e-3));
    }
    CHECK_THAT(numeric_tau(BivariateCopula::jointly_symmetric(BivariateCopula::clayton(3.0))), WithinAbs(0.0, 5e-3));
    CHECK(kendall_tau(BivariateCopula::jointly_symmetric(BivariateCopula::clayton(3.0))) == 0.0);
}

TEST_CASE("tau inversion round trips", "[copula]") {
    for (auto fam : {CopulaFamily::Gaussian, CopulaFamily::Clayton, CopulaFamily::Gumbel}) {
        for (double tau : {0.1, 0.4, 0.8}) {
            const auto c = BivariateCopula::make(fam, tau_to_parameter(fam, tau));
            CHECK_THAT(kendall_tau(c), WithinAbs(tau, 1e-12));
        }
    }
    CHECK_THROWS_AS(tau_to_parameter(CopulaFamily::Clayton, -0.1), DomainError);
    CHECK_THROWS_AS(tau_to_parameter(CopulaFamily::JointlySymmetric, 0.1), DomainError);
}

TEST_CASE("parameter validation", "[copula]") {
    CHECK_THROWS_AS(BivariateCopula::gaussian(1.0), DomainError);
    CHECK_THROWS_AS(BivariateCopula::clayton(0.0), DomainError);
    CHECK_THROWS_AS(BivariateCopula::gumbel(0.9), DomainError);
    CHECK(BivariateCopula::gumbel(1.0).is_independence());
    CHECK(BivariateCopula::jointly_symmetric(BivariateCopula::gaussian(0.0)).is_independence());
    CHECK(BivariateCopula::jointly_symmetric(BivariateCopula::clayton(2.0)).parameter_count() == 1);
    CHECK(BivariateCopula::independence().parameter_count() == 0);
}

TEST_CASE("aic score by hand", "[copula]") {
    // independence on two cells with masses 0.25 and 0.5
    std::vector<std::pair<CellBounds, CellBounds>> cells{{{0.5, 0.0}, {0.5, 0.0}}, {{1.0, 0.5}, {1.0, 0.0}}};
    CHECK_THAT(aic_score(BivariateCopula::independence(), cells), WithinAbs(-2.0 * (std::log(0.25) + std::log(0.5)), 1e-12));
    const auto g = BivariateCopula::gaussian(0.5);
    CHECK_THAT(aic_score(g, cells), WithinAbs(-2.0 * (std::log(1.0 / 3.0) + std::log(0.5)) + 2.0, 1e-9));
    std::vector<std::pair<CellBounds, CellBounds>> empty_cells{{{0.5, 0.5}, {0.5, 0.0}}};
    CHECK_THROWS_AS(aic_score(g, empty_cells), Error);
}

TEST_CASE("parse and print", "[copula]") {
    CHECK(BivariateCopula::parse("gaussian(0.25)") == BivariateCopula::gaussian(0.25));
    CHECK(BivariateCopula::parse("clayton(2)") == BivariateCopula::clayton(2.0));
    CHECK(BivariateCopula::parse("gumbel(1.5)") == BivariateCopula::gumbel(1.5));
    CHECK(BivariateCopula::parse("indep") == BivariateCopula::independence());
    CHECK(BivariateCopula::parse("js(gaussian(0.4))") ==
          BivariateCopula::jointly_symmetric(BivariateCopula::gaussian(0.4)));
    CHECK(BivariateCopula::parse("js(gaussian)").family() == CopulaFamily::JointlySymmetric);
    CHECK(BivariateCopula::parse("clayton").family() == CopulaFamily::Clayton);
    for (const auto& c : zoo()) CHECK(BivariateCopula::parse(c.to_string()) == c);
    CHECK_THROWS_AS(BivariateCopula::parse("frank(2)"), ConfigError);
    CHECK_THROWS_AS(BivariateCopula::parse("gaussian(2)"), ConfigError);
    CHECK_THROWS_AS(BivariateCopula::parse("gaussian()"), ConfigError);
    CHECK_THROWS_AS(BivariateCopula::parse("indep(1)"), ConfigError);
}
