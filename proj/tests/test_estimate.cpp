#include <catch_amalgamated.hpp>

#include <cmath>
#include <cstdint>
#include <vector>

#include "pcpos/estimate.hpp"

using namespace pcpos;
using Catch::Matchers::WithinAbs;
using Catch::Matchers::WithinRel;

namespace {

// Stationary two-state chain whose consecutive pairs follow copula c with
// Bernoulli(p) margins.
std::vector<std::uint8_t> markov_signs(const BivariateCopula& c, double p, std::size_t T, std::uint64_t seed) {
    Rng rng = make_rng(seed);
    std::vector<std::uint8_t> s(T);
    s[0] = uniform01(rng) < p;
    for (std::size_t t = 1; t < T; ++t) {
        const CellBounds prev = sign_cell(s[t - 1], p);
        const double joint_one = rectangle(c, prev, sign_cell(1, p)).mass;
        s[t] = uniform01(rng) < joint_one / (prev.plus - prev.minus);
    }
    return s;
}

std::vector<double> varying_margins(std::size_t T, std::uint64_t seed) {
    Rng rng = make_rng(seed);
    std::vector<double> p(T);
    for (auto& x : p) x = 0.3 + 0.4 * uniform01(rng);
    return p;
}

std::vector<std::uint8_t> coin_flips(std::size_t T, std::uint64_t seed) {
    Rng rng = make_rng(seed);
    std::vector<std::uint8_t> s(T);
    for (auto& b : s) b = uniform01(rng) < 0.5;
    return s;
}

std::vector<EdgeArguments> tree1_edges(const std::vector<std::uint8_t>& s, const std::vector<double>& p) {
    PmfWorkspace ws;
    return tree_arguments(VineSpec(p), s, 1, ws);
}

EstimationConfig fixed(const BivariateCopula& family, std::size_t truncation = 1) {
    EstimationConfig c;
    c.candidates = {family};
    c.truncation = truncation;
    return c;
}

}  // namespace

TEST_CASE("analytic likelihood derivatives match finite differences", "[estimate]") {
    const auto s = markov_signs(BivariateCopula::gaussian(0.5), 0.5, 80, 4);
    const auto p = varying_margins(80, 5);
    const auto edges = tree1_edges(s, p);
    for (bool symmetric : {false, true}) {
        const detail::GaussianTreeLikelihood lik(edges, symmetric);
        const BivariateCopula fam = symmetric ? BivariateCopula::jointly_symmetric(BivariateCopula::gaussian(0.0))
                                              : BivariateCopula::gaussian(0.0);
        for (double r : {-0.7, -0.2, 0.05, 0.4, 0.85}) {
            const double h = 1e-5;
            const auto v = lik(r);
            const double fd1 = (lik(r + h).f - lik(r - h).f) / (2 * h);
            const double fd2 = (lik(r + h).d1 - lik(r - h).d1) / (2 * h);
            INFO("symmetric=" << symmetric << " r=" << r);
            CHECK_THAT(v.f, WithinAbs(detail::pooled_loglik(fam.with_parameter(r), edges), 1e-9));
            CHECK_THAT(v.d1, WithinAbs(fd1, 1e-5 * (1.0 + std::abs(fd1))));
            CHECK_THAT(v.d2, WithinAbs(fd2, 1e-4 * (1.0 + std::abs(fd2))));
        }
    }
}

TEST_CASE("fitted tree attains the grid maximum", "[estimate]") {
    const std::size_t T = 120;
    const auto p = varying_margins(T, 8);
    for (const auto& truth : {BivariateCopula::gaussian(0.6), BivariateCopula::gaussian(-0.4),
                              BivariateCopula::clayton(2.0), BivariateCopula::gumbel(2.0)}) {
        const auto s = markov_signs(truth, 0.5, T, 21);
        const auto edges = tree1_edges(s, p);
        for (const auto& fam : {BivariateCopula::gaussian(0.0), BivariateCopula::clayton(1.0),
                                BivariateCopula::gumbel(2.0),
                                BivariateCopula::jointly_symmetric(BivariateCopula::gaussian(0.0))}) {
            const auto [fit, ll] = fit_tree1(s, p, fixed(fam));
            double grid_best = detail::pooled_loglik(BivariateCopula::independence(), edges);
            for (int i = 1; i < 400; ++i) {
                const double x = i / 400.0;
                double theta;
                switch (fam.family()) {
                    case CopulaFamily::Clayton: theta = 30.0 * x; break;
                    case CopulaFamily::Gumbel: theta = 1.0 + 20.0 * x; break;
                    default: theta = 2.0 * x - 1.0; break;
                }
                grid_best = std::max(grid_best, detail::pooled_loglik(fam.with_parameter(theta), edges));
            }
            INFO(truth.to_string() << " fitted with " << fam.to_string() << " -> " << fit.to_string());
            CHECK(ll >= grid_best - 1e-6);
            CHECK_THAT(ll, WithinAbs(detail::pooled_loglik(fit, edges), 1e-9));
        }
    }
}

TEST_CASE("newton and derivative-free searches agree", "[estimate]") {
    const std::size_t T = 150;
    const auto p = varying_margins(T, 2);
    for (double r : {0.0, 0.3, -0.6, 0.9}) {
        const auto s = markov_signs(BivariateCopula::gaussian(r), 0.5, T, 99);
        for (const auto& fam : {BivariateCopula::gaussian(0.0),
                                BivariateCopula::jointly_symmetric(BivariateCopula::gaussian(0.0))}) {
            auto fast = fixed(fam, 2);
            auto slow = fast;
            slow.analytic_gradient = false;
            const auto a = fit_sequential(s, p, fast);
            const auto b = fit_sequential(s, p, slow);
            for (std::size_t l = 0; l < 2; ++l) {
                INFO("r=" << r << " " << fam.to_string() << " tree " << l + 1);
                CHECK_THAT(a.trees[l].loglik, WithinAbs(b.trees[l].loglik, 1e-6));
                CHECK_THAT(std::abs(a.trees[l].copula.parameter()), WithinAbs(std::abs(b.trees[l].copula.parameter()), 1e-3));
            }
        }
    }
}

TEST_CASE("gaussian dependence is recovered from a long chain", "[estimate]") {
    const std::size_t T = 4000;
    const std::vector<double> p(T, 0.5);
    const auto s = markov_signs(BivariateCopula::gaussian(0.6), 0.5, T, 7);
    const auto [fit, ll] = fit_tree1(s, p, fixed(BivariateCopula::gaussian(0.0)));
    CHECK(fit.family() == CopulaFamily::Gaussian);
    CHECK_THAT(fit.parameter(), WithinAbs(0.6, 0.06));
    CHECK(ll > detail::pooled_loglik(BivariateCopula::independence(), tree1_edges(s, p)));
}

TEST_CASE("gains over independence are non-negative and accumulate", "[estimate]") {
    const std::size_t T = 60;
    const auto p = varying_margins(T, 12);
    const auto s = coin_flips(T, 13);
    const auto cfg1 = fixed(BivariateCopula::gaussian(0.0), 1);
    const auto cfg3 = fixed(BivariateCopula::gaussian(0.0), 3);
    const auto one = fit_sequential(s, p, cfg1);
    const auto three = fit_sequential(s, p, cfg3);
    REQUIRE(three.trees.size() == 3);
    for (const auto& t : three.trees) CHECK(t.loglik >= t.indep_loglik - 1e-12);
    CHECK(three.total_loglik() >= one.total_loglik() - 1e-12);
    // later trees never revise earlier ones
    CHECK(three.trees[0].copula == one.trees[0].copula);
    CHECK(three.spec.truncation() == 3);
    CHECK(three.summary().find(';') != std::string::npos);
}

TEST_CASE("aic selection picks the smallest criterion", "[estimate]") {
    const std::size_t T = 200;
    const std::vector<double> p(T, 0.5);
    const auto s = markov_signs(BivariateCopula::clayton(4.0), 0.5, T, 31);
    EstimationConfig cfg;
    cfg.candidates = EstimationConfig::aic_set();
    cfg.truncation = 1;
    const auto chosen = fit_sequential(s, p, cfg);
    for (const auto& cand : cfg.candidates) {
        const auto single = fit_sequential(s, p, fixed(cand));
        INFO(cand.to_string());
        CHECK(chosen.trees[0].aic <= single.trees[0].aic + 1e-9);
    }
}

TEST_CASE("estimation is deterministic", "[estimate]") {
    const std::size_t T = 70;
    const auto p = varying_margins(T, 40);
    const auto s = coin_flips(T, 41);
    EstimationConfig cfg;
    cfg.candidates = EstimationConfig::aic_set();
    const auto a = fit_sequential(s, p, cfg);
    const auto b = fit_sequential(s, p, cfg);
    for (std::size_t l = 0; l < a.trees.size(); ++l) {
        CHECK(a.trees[l].copula == b.trees[l].copula);
        CHECK(a.trees[l].loglik == b.trees[l].loglik);
    }
}

TEST_CASE("tau initializer", "[estimate]") {
    const std::size_t T = 500;
    const std::vector<double> p(T, 0.5);
    const auto s = markov_signs(BivariateCopula::gaussian(0.8), 0.5, T, 17);
    const double r = tau_initializer(s, p, 1, CopulaFamily::Gaussian);
    CHECK(r > 0.2);
    CHECK(r < 1.0);
    CHECK(tau_initializer(s, p, 1, CopulaFamily::Gaussian) == r);
    // negative tau is infeasible for Clayton, which falls back to the neutral start
    const auto neg = markov_signs(BivariateCopula::gaussian(-0.8), 0.5, T, 17);
    CHECK(tau_initializer(neg, p, 1, CopulaFamily::Clayton) == 0.5);
    const std::vector<std::uint8_t> short_s(9, 1);
    CHECK_THROWS_AS(tau_initializer(short_s, std::vector<double>(9, 0.5), 1, CopulaFamily::Gaussian), DomainError);
}

TEST_CASE("sample kendall tau", "[estimate]") {
    const std::vector<double> a{1, 2, 3, 4, 5}, b{2, 4, 6, 8, 10}, c{5, 4, 3, 2, 1}, d{1, 3, 2, 5, 4};
    CHECK(detail::kendall_tau_sample(a, b) == 1.0);
    CHECK(detail::kendall_tau_sample(a, c) == -1.0);
    // 8 concordant and 2 discordant pairs
    CHECK_THAT(detail::kendall_tau_sample(a, d), WithinAbs(0.6, 1e-15));
}

TEST_CASE("estimation configuration", "[estimate]") {
    EstimationConfig cfg;
    CHECK(cfg.candidates.size() == 1);
    CHECK(cfg.candidates[0].family() == CopulaFamily::Gaussian);
    CHECK_THROWS_AS(cfg.validate(2), DomainError);
    cfg.candidates.clear();
    CHECK_THROWS_AS(cfg.validate(50), DomainError);
    CHECK(EstimationConfig::parse_candidates("aic").size() == 5);
    CHECK(EstimationConfig::parse_candidates("gaussian; js(clayton(2))").size() == 2);
    CHECK_THROWS_AS(EstimationConfig::parse_candidates(" ; "), ConfigError);
    const std::vector<std::uint8_t> s{1, 0};
    CHECK_THROWS_AS(fit_sequential(s, std::vector<double>{0.5, 0.5}, EstimationConfig{}), DomainError);
    const std::vector<std::uint8_t> s3{1, 0, 1};
    CHECK_THROWS_AS(fit_sequential(s3, std::vector<double>{0.5, 0.5}, EstimationConfig{}), DomainError);
}
