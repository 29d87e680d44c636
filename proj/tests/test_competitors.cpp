#include <catch_amalgamated.hpp>

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <vector>

#include "pcpos/competitors.hpp"
#include "pcpos/dgp.hpp"

using namespace pcpos;
using Catch::Matchers::WithinAbs;
using Catch::Matchers::WithinRel;

namespace {

// P[Binomial(n,1/2) >= c] from integer binomial coefficients (exact for n <= 60)
double exact_tail(unsigned n, unsigned c) {
    std::vector<std::uint64_t> row{1};
    for (unsigned i = 0; i < n; ++i) {
        std::vector<std::uint64_t> next(row.size() + 1, 0);
        for (std::size_t k = 0; k < row.size(); ++k) {
            next[k] += row[k];
            next[k + 1] += row[k];
        }
        row = std::move(next);
    }
    std::uint64_t hits = 0;
    for (unsigned k = c; k <= n; ++k) hits += row[k];
    return static_cast<double>(hits) / std::ldexp(1.0, static_cast<int>(n));
}

RegressionData normal_noise(std::size_t T, std::uint64_t seed) {
    DgpSpec spec;
    spec.T = T;
    spec.seed = seed;
    return generate(spec);
}

}  // namespace

TEST_CASE("t statistic matches the scalar formula", "[competitors]") {
    const auto data = normal_noise(50, 3);
    const Eigen::VectorXd x = data.X.col(0);
    const double b = x.dot(data.y) / x.squaredNorm();
    const double s2 = (data.y - b * x).squaredNorm() / 49.0;
    const double t = b / std::sqrt(s2 / x.squaredNorm());
    const auto out = t_test(data, 0.05);
    CHECK(out.name == "t");
    CHECK_THAT(out.statistic, WithinRel(t, 1e-10));
    CHECK_THAT(out.critical, WithinAbs(2.009575237129235, 1e-9));  // t(49) 97.5% quantile
    CHECK(out.reject == (std::abs(out.statistic) > out.critical));
}

TEST_CASE("t test with intercept and a chosen coefficient", "[competitors]") {
    auto data = normal_noise(40, 5);
    data.y.array() += 3.0;
    CompetitorOptions opt;
    opt.add_intercept = true;
    const auto with = t_test(data, 0.05, opt);
    // with an intercept the t(38) cutoff applies
    CHECK_THAT(with.critical, WithinAbs(2.024394164575136, 1e-9));
    opt.coefficient = 0;
    const auto slope = t_test(data, 0.05, opt);
    CHECK(slope.statistic == with.statistic);
    CompetitorOptions bad;
    bad.coefficient = 3;
    CHECK_THROWS_AS(t_test(data, 0.05, bad), DomainError);
}

TEST_CASE("exact proportionality and orthogonality", "[competitors]") {
    Eigen::MatrixXd X(6, 1);
    X << 1, 2, 3, 4, 5, 6;
    const RegressionData prop(2.0 * X.col(0), X);
    const auto out = t_test(prop, 0.05);
    CHECK(std::isinf(out.statistic));
    CHECK(out.statistic > 0);
    CHECK(out.reject);
    // y orthogonal to x gives a zero slope
    Eigen::VectorXd y(6);
    y << 2, -1, 0, 0, 0, 0;
    REQUIRE(std::abs(y.dot(X.col(0))) < 1e-12);
    const RegressionData orth(y, X);
    CHECK_THAT(t_test(orth, 0.05).statistic, WithinAbs(0.0, 1e-12));
    CHECK_FALSE(t_test(orth, 0.05).reject);
    CHECK_THAT(white_t_test(orth, 0.05).statistic, WithinAbs(0.0, 1e-12));
}

TEST_CASE("HC0 with equal squared residuals is the classical covariance", "[competitors]") {
    Rng rng = make_rng(9);
    Eigen::MatrixXd X(30, 3);
    for (Eigen::Index i = 0; i < X.size(); ++i) X.data()[i] = ErrorDistribution::normal().sample(rng);
    Eigen::VectorXd e(30);
    for (Eigen::Index i = 0; i < 30; ++i) e(i) = i % 3 ? 1.5 : -1.5;
    const Eigen::MatrixXd V = hc0_covariance(X, e);
    const Eigen::MatrixXd classical = 2.25 * (X.transpose() * X).inverse();
    CHECK((V - classical).cwiseAbs().maxCoeff() < 1e-12);
}

TEST_CASE("white statistic uses the sandwich standard error", "[competitors]") {
    const auto data = normal_noise(50, 4);
    const Eigen::VectorXd x = data.X.col(0);
    const double b = x.dot(data.y) / x.squaredNorm();
    const Eigen::VectorXd e = data.y - b * x;
    const double se = std::sqrt((x.array().square() * e.array().square()).sum()) / x.squaredNorm();
    const auto out = white_t_test(data, 0.05);
    CHECK(out.name == "wt");
    CHECK_THAT(out.statistic, WithinRel(b / se, 1e-10));
    CHECK_THAT(out.critical, WithinAbs(1.959963984540054, 1e-9));
}

TEST_CASE("white and classical statistics share their sign", "[competitors]") {
    for (std::uint64_t seed = 0; seed < 200; ++seed) {
        const auto data = normal_noise(30, seed);
        const double a = t_test(data, 0.05).statistic, b = white_t_test(data, 0.05).statistic;
        CHECK((a > 0) == (b > 0));
    }
}

TEST_CASE("binomial tail and the 5.95% lattice size", "[competitors]") {
    for (unsigned n : {10U, 25U, 50U})
        for (unsigned c = 0; c <= n + 1; c += 3) CHECK_THAT(binomial_upper_tail(n, c), WithinAbs(exact_tail(n, c), 1e-13));
    const auto cut = cd_cutoff(50, 0.05);
    CHECK(cut.cutoff == 31);
    CHECK_THAT(cut.size, WithinAbs(exact_tail(50, 31), 1e-13));
    CHECK_THAT(cut.size, WithinAbs(0.0595, 5e-4));
    // no attainable level is nearer to 5%
    for (unsigned c = 0; c <= 51; ++c) CHECK(std::abs(exact_tail(50, c) - 0.05) >= std::abs(cut.size - 0.05) - 1e-15);
}

TEST_CASE("sign alignment count", "[competitors]") {
    Eigen::MatrixXd X(12, 1);
    X << 1, -2, 3, -1, 2, -3, 1, -2, 3, -1, 2, -3;
    const RegressionData aligned(X.col(0) * 0.5, X);
    const auto out = cd_sign_test(aligned, 0.05);
    CHECK(out.statistic == 12.0);
    CHECK(out.reject);
    CHECK(out.note.find("realized size") != std::string::npos);
    // invariant to positive rescaling of y and x
    const RegressionData scaled(aligned.y * 3.0, aligned.X * 0.1);
    CHECK(cd_sign_test(scaled, 0.05).statistic == out.statistic);
    // residuals under the null value are what gets signed
    CompetitorOptions opt;
    opt.null_value = 0.5;
    CHECK(cd_sign_test(aligned, 0.05, opt).statistic == 12.0);  // zero residuals count as aligned
    Eigen::MatrixXd small(9, 1);
    small.setOnes();
    CHECK_THROWS_AS(cd_sign_test(RegressionData(Eigen::VectorXd::Ones(9), small), 0.05), DomainError);
}

TEST_CASE("sign count is binomial under the null", "[competitors]") {
    const int reps = 2000, T = 50;
    std::vector<int> counts;
    for (int r = 0; r < reps; ++r)
        counts.push_back(static_cast<int>(cd_sign_test(normal_noise(T, 1000 + r), 0.05).statistic));
    std::sort(counts.begin(), counts.end());
    double worst = 0.0;
    for (int k = 0; k <= T; ++k) {
        const double emp = static_cast<double>(std::upper_bound(counts.begin(), counts.end(), k) - counts.begin()) / reps;
        worst = std::max(worst, std::abs(emp - (1.0 - exact_tail(T, k + 1))));
    }
    CHECK(worst < 1.36 / std::sqrt(static_cast<double>(reps)));
}

TEST_CASE("competitor sizes under normal errors", "[competitors]") {
    const int reps = 1000;
    int t_rej = 0, wt_rej = 0, agree = 0;
    for (int r = 0; r < reps; ++r) {
        const auto data = normal_noise(50, 5000 + r);
        const bool a = t_test(data, 0.05).reject, b = white_t_test(data, 0.05).reject;
        t_rej += a;
        wt_rej += b;
        agree += a == b;
    }
    CHECK(std::abs(t_rej / 1000.0 - 0.05) <= 0.02);
    CHECK(wt_rej / 1000.0 >= 0.03);
    CHECK(wt_rej / 1000.0 <= 0.09);
    CHECK(agree >= 900);
}

TEST_CASE("white test under a variance break", "[competitors]") {
    int rej = 0;
    for (int r = 0; r < 1000; ++r) {
        DgpSpec spec;
        spec.scheme = ErrorScheme::BreakVariance;
        spec.seed = 9000 + r;
        rej += white_t_test(generate(spec), 0.05).reject;
    }
    CHECK(rej / 1000.0 >= 0.02);
    CHECK(rej / 1000.0 <= 0.09);
}

TEST_CASE("competitor validation", "[competitors]") {
    const auto data = normal_noise(20, 1);
    CHECK_THROWS_AS(t_test(data, 0.0), DomainError);
    CHECK_THROWS_AS(white_t_test(data, 1.0), DomainError);
    CHECK_THROWS_AS(cd_sign_test(data, -0.1), DomainError);
    Eigen::MatrixXd X(6, 1);
    X.setZero();
    CHECK_THROWS_AS(t_test(RegressionData(Eigen::VectorXd::Ones(6), X), 0.05), SingularDesign);
}
