#pragma once

// Monte Carlo replication engine: size tables, power curves over a beta grid
// and the split-fraction envelope study.

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <ostream>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "pcpos/competitors.hpp"
#include "pcpos/dgp.hpp"
#include "pcpos/errors.hpp"
#include "pcpos/random.hpp"
#include "pcpos/signtest.hpp"

namespace pcpos {

struct StudySpec {
    DgpSpec dgp{};  // template: T, theta; scheme, rho and beta come from the lists below
    std::vector<ErrorScheme> schemes{ErrorScheme::Normal};
    std::vector<double> rhos{0.0};
    std::vector<double> betas = default_betas();
    std::vector<std::string> tests{"t", "wt", "cd", "pos"};
    std::size_t m2 = 1000;
    std::size_t m1 = 199;
    double alpha = 0.05;
    std::vector<double> fractions{0.1};
    std::uint64_t seed = 20240601;
    ErrorDistribution nominal = ErrorDistribution::normal();
    EstimationConfig estimation = EstimationConfig::jointly_symmetric_gaussian();
    NullMode null_mode = NullMode::Refit;
    std::string output;
    double max_failure_rate = 0.01;

    static std::vector<double> default_betas() {
        std::vector<double> b;
        for (int i = 0; i <= 10; ++i) b.push_back(0.05 * i);
        return b;
    }

    void validate() const {
        if (schemes.empty() || rhos.empty() || betas.empty() || tests.empty())
            throw ConfigError("study: schemes, rhos, betas and tests must be nonempty");
        if (m1 < 99 || m2 < 99) throw ConfigError("study: M1 and M2 must be at least 99");
        if (!(alpha > 0.0 && alpha < 1.0)) throw ConfigError("study: alpha must lie in (0,1)");
        if (fractions.empty()) throw ConfigError("study: fraction list is empty");
        for (double f : fractions) {
            if (!(f > 0.0 && f < 1.0)) throw ConfigError("study: fractions must lie in (0,1)");
            if (dgp.T - split_size(dgp.T, f) < 10) throw DomainError("study: fraction leaves fewer than 10 observations");
        }
        for (const auto& t : tests)
            if (t != "t" && t != "wt" && t != "cd" && t != "pos" && t != "pe")
                throw ConfigError("study: unknown test '" + t + "'");
        for (double r : rhos) {
            DgpSpec d = dgp;
            d.rho = r;
            for (auto s : schemes) {
                d.scheme = s;
                try {
                    d.validate();
                } catch (const DomainError& e) {
                    throw ConfigError(e.what());
                }
            }
        }
    }

    [[nodiscard]] PosTestConfig pos_config() const {
        PosTestConfig c;
        c.alpha = alpha;
        c.m1 = m1;
        c.nominal = nominal;
        c.estimation = estimation;
        c.null_mode = null_mode;
        return c;
    }
};

/// Curve label of a split-sample test, e.g. 0.1 -> "ss10-pos".
[[nodiscard]] inline std::string split_label(double fraction) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "ss%g-pos", 100.0 * fraction);
    return buf;
}

struct StudyRow {
    std::string dgp;
    double rho = 0.0;
    double beta = 0.0;
    std::string test;
    std::size_t rejections = 0;
    std::size_t reps = 0;
    std::size_t failures = 0;

    [[nodiscard]] double power() const { return reps ? static_cast<double>(rejections) / static_cast<double>(reps) : 0.0; }
    [[nodiscard]] double se() const {
        const double p = power();
        return reps ? std::sqrt(p * (1.0 - p) / static_cast<double>(reps)) : 0.0;
    }
};

struct StudyResult {
    std::vector<StudyRow> rows;
    std::size_t failures = 0;
    std::size_t attempts = 0;

    [[nodiscard]] const StudyRow* find(std::string_view dgp, double rho, double beta, std::string_view test) const {
        for (const auto& r : rows)
            if (r.dgp == dgp && r.rho == rho && r.beta == beta && r.test == test) return &r;
        return nullptr;
    }
};

namespace detail {

enum class TestKind { T, WT, CD, SplitPos, Envelope };

struct CurveDef {
    TestKind kind;
    double fraction = 0.0;
    std::string label;
};

inline std::vector<CurveDef> curves_for(const std::vector<std::string>& tests, const std::vector<double>& fractions) {
    std::vector<CurveDef> out;
    for (const auto& t : tests) {
        if (t == "t") out.push_back({TestKind::T, 0.0, "t"});
        else if (t == "wt") out.push_back({TestKind::WT, 0.0, "wt"});
        else if (t == "cd") out.push_back({TestKind::CD, 0.0, "cd"});
        else if (t == "pe") out.push_back({TestKind::Envelope, 0.0, "pe"});
        else if (t == "pos")
            for (double f : fractions) out.push_back({TestKind::SplitPos, f, split_label(f)});
    }
    return out;
}

/// 1 reject, 0 accept, -1 failure.
inline int run_curve(const CurveDef& c, const RegressionData& data, double beta, const PosTestConfig& pos,
                     std::uint64_t seed) {
    try {
        const Eigen::VectorXd beta0 = Eigen::VectorXd::Zero(data.X.cols());
        switch (c.kind) {
            case TestKind::T: return t_test(data, pos.alpha).reject;
            case TestKind::WT: return white_t_test(data, pos.alpha).reject;
            case TestKind::CD: return cd_sign_test(data, pos.alpha).reject;
            case TestKind::SplitPos: return split_sample_test(data, beta0, c.fraction, pos, seed).reject;
            case TestKind::Envelope: {
                const Eigen::VectorXd beta1 = Eigen::VectorXd::Constant(data.X.cols(), beta);
                return point_optimal_test(data, beta0, beta1, pos, seed).reject;
            }
        }
    } catch (const Error&) {
        return -1;
    }
    return -1;
}

}  // namespace detail

/// Replication seed for (scheme, rho, beta index, replication).
[[nodiscard]] inline std::uint64_t replication_seed(std::uint64_t master, ErrorScheme scheme, double rho,
                                                    std::size_t beta_index, std::size_t rep) {
    return derive_seed(master, {static_cast<std::uint64_t>(scheme), std::bit_cast<std::uint64_t>(rho + 0.0),
                                static_cast<std::uint64_t>(beta_index), static_cast<std::uint64_t>(rep)});
}

/// Rejection frequencies for every (scheme, rho, beta, test). Each replication
/// draws one dataset shared by all tests; inner null draws use seeds derived
/// from the replication seed, so output does not depend on thread scheduling.
[[nodiscard]] inline StudyResult power_curves(const StudySpec& study) {
    study.validate();
    const auto curves = detail::curves_for(study.tests, study.fractions);
    const PosTestConfig pos = study.pos_config();
    StudyResult result;
    std::vector<int> outcome(study.m2 * curves.size());

    for (auto scheme : study.schemes) {
        for (double rho : study.rhos) {
            for (std::size_t b = 0; b < study.betas.size(); ++b) {
                DgpSpec spec = study.dgp;
                spec.scheme = scheme;
                spec.rho = rho;
                spec.beta = study.betas[b];
                parallel_for(study.m2, [&](std::size_t r) {
                    const std::uint64_t rs = replication_seed(study.seed, scheme, rho, b, r);
                    Rng rng = make_rng(derive_seed(rs, {0}));
                    const RegressionData data = generate(spec, rng);
                    for (std::size_t c = 0; c < curves.size(); ++c)
                        outcome[r * curves.size() + c] =
                            detail::run_curve(curves[c], data, spec.beta, pos, derive_seed(rs, {1, c}));
                });
                for (std::size_t c = 0; c < curves.size(); ++c) {
                    StudyRow row{scheme_name(scheme), rho, spec.beta, curves[c].label};
                    for (std::size_t r = 0; r < study.m2; ++r) {
                        const int o = outcome[r * curves.size() + c];
                        if (o < 0) ++row.failures;
                        else {
                            ++row.reps;
                            row.rejections += static_cast<std::size_t>(o);
                        }
                    }
                    result.failures += row.failures;
                    result.attempts += study.m2;
                    result.rows.push_back(std::move(row));
                }
            }
        }
    }
    if (static_cast<double>(result.failures) > study.max_failure_rate * static_cast<double>(result.attempts))
        throw ReplicationFailure(std::to_string(result.failures) + " of " + std::to_string(result.attempts) +
                                 " replications failed");
    return result;
}

/// Rejection frequencies at beta = 0.
[[nodiscard]] inline StudyResult size_table(const StudySpec& study) {
    if (std::find(study.betas.begin(), study.betas.end(), 0.0) == study.betas.end())
        throw ConfigError("size_table: beta grid must contain 0");
    StudySpec s = study;
    s.betas = {0.0};
    return power_curves(s);
}

/// Split-sample curves for every fraction plus the simulated envelope "pe",
/// the point-optimal test evaluated with beta1 equal to the true beta.
[[nodiscard]] inline StudyResult envelope_study(const StudySpec& study) {
    StudySpec s = study;
    s.tests = {"pe", "pos"};
    return power_curves(s);
}

/// Mean over the beta grid of (envelope - curve) for one scheme and rho.
[[nodiscard]] inline double mean_envelope_gap(const StudyResult& r, std::string_view dgp, double rho,
                                              std::string_view curve) {
    double sum = 0.0;
    std::size_t n = 0;
    for (const auto& row : r.rows) {
        if (row.dgp != dgp || row.rho != rho || row.test != curve) continue;
        const StudyRow* pe = r.find(dgp, rho, row.beta, "pe");
        if (!pe) continue;
        sum += pe->power() - row.power();
        ++n;
    }
    return n ? sum / static_cast<double>(n) : 0.0;
}

inline void write_csv(std::ostream& os, const StudyResult& r) {
    os << "dgp,rho,beta,test,rejections,reps,power,se\n";
    char buf[256];
    for (const auto& row : r.rows) {
        std::snprintf(buf, sizeof buf, "%s,%.10g,%.10g,%s,%zu,%zu,%.6f,%.6f\n", row.dgp.c_str(), row.rho, row.beta,
                      row.test.c_str(), row.rejections, row.reps, row.power(), row.se());
        os << buf;
    }
}

}  // namespace pcpos
