// pos: command-line front end for the pair-copula point-optimal sign tests.
//
//   pos test        --data file.csv --beta0 0 [--test pos|t|wt|cd]
//   pos null-dist   --data file.csv --beta0 0
//   pos confidence  --data file.csv --grid lo:hi:n[,lo:hi:n]
//   pos simulate    --study config.ini
//   pos envelope    --study config.ini
//
// Exit codes: 0 success, 1 runtime error, 2 configuration error, 3 too many
// failed replications.

#include <cstdio>
#include <fstream>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "pcpos/competitors.hpp"
#include "pcpos/confregion.hpp"
#include "pcpos/signtest.hpp"
#include "pcpos/study.hpp"
#include "pcpos/study_io.hpp"

namespace {

using namespace pcpos;

RegressionData read_csv(const std::string& path, bool intercept) {
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot open data file '" + path + "'");
    std::string line;
    if (!std::getline(in, line)) throw ConfigError("data file is empty");
    const auto header = detail::split_list(line);
    if (header.size() < 2) throw ConfigError("data file needs columns y,x1[,x2...]");
    std::vector<std::vector<double>> rows;
    std::size_t lineno = 1;
    while (std::getline(in, line)) {
        ++lineno;
        if (detail::trim(line).empty()) continue;
        const auto cells = detail::split_list(line);
        if (cells.size() != header.size())
            throw ConfigError("data line " + std::to_string(lineno) + " has " + std::to_string(cells.size()) +
                              " fields, expected " + std::to_string(header.size()));
        std::vector<double> r;
        for (const auto& c : cells) r.push_back(detail::to_double(c));
        rows.push_back(std::move(r));
    }
    const auto T = static_cast<Eigen::Index>(rows.size());
    const auto k = static_cast<Eigen::Index>(header.size() - 1);
    const Eigen::Index off = intercept ? 1 : 0;
    Eigen::VectorXd y(T);
    Eigen::MatrixXd X(T, k + off);
    for (Eigen::Index t = 0; t < T; ++t) {
        y(t) = rows[static_cast<std::size_t>(t)][0];
        if (intercept) X(t, 0) = 1.0;
        for (Eigen::Index j = 0; j < k; ++j) X(t, j + off) = rows[static_cast<std::size_t>(t)][static_cast<std::size_t>(j + 1)];
    }
    try {
        return RegressionData(std::move(y), std::move(X));
    } catch (const DomainError& e) {
        throw ConfigError(std::string("data: ") + e.what());
    }
}

Eigen::VectorXd parse_beta(const std::string& text, std::size_t cols) {
    const auto parts = detail::split_list(text);
    if (parts.size() != cols)
        throw ConfigError("--beta0 needs " + std::to_string(cols) + " values, got " + std::to_string(parts.size()));
    Eigen::VectorXd b(static_cast<Eigen::Index>(cols));
    for (std::size_t i = 0; i < cols; ++i) b(static_cast<Eigen::Index>(i)) = detail::to_double(parts[i]);
    return b;
}

std::string fmt(double x) {
    char buf[64];
    std::snprintf(buf, sizeof buf, "%.10g", x);
    return buf;
}

struct DataOptions {
    std::string data;
    std::string beta0 = "0";
    bool intercept = false;
    double alpha = 0.05;
    double fraction = 0.1;
    std::size_t m1 = 999;
    std::uint64_t seed = 1;
    std::string nominal = "normal";
    std::string copula = "js(gaussian)";
    std::size_t truncation = 2;
    std::string null_mode = "refit";

    void attach(CLI::App* app) {
        app->add_option("--data", data, "CSV file with header y,x1,...,xk")->required()->check(CLI::ExistingFile);
        app->add_option("--beta0", beta0, "hypothesized coefficients, comma separated");
        app->add_flag("--intercept", intercept, "prepend a constant column to X");
        app->add_option("--alpha", alpha, "test level")->check(CLI::Range(0.0, 1.0));
        app->add_option("--fraction", fraction, "share of the sample used to estimate the alternative");
        app->add_option("--m1", m1, "null replications");
        app->add_option("--seed", seed, "seed of the null draws");
        app->add_option("--nominal", nominal, "error law for margins and weights: normal, cauchy, t(df), mixture");
        app->add_option("--copula", copula, "pair-copula family (js(gaussian), gaussian, clayton, gumbel, indep), a ;-list, or aic");
        app->add_option("--truncation", truncation, "number of estimated vine trees");
        app->add_option("--null", null_mode, "null simulation: refit or fixed")->check(CLI::IsMember({"refit", "fixed"}));
    }

    [[nodiscard]] PosTestConfig config() const {
        PosTestConfig c;
        c.alpha = alpha;
        c.m1 = m1;
        try {
            c.nominal = ErrorDistribution::parse(nominal);
        } catch (const DomainError& e) {
            throw ConfigError(e.what());
        }
        c.estimation.candidates = EstimationConfig::parse_candidates(copula);
        c.estimation.truncation = truncation;
        c.null_mode = null_mode == "fixed" ? NullMode::FixedVine : NullMode::Refit;
        return c;
    }
};

int run_test(const DataOptions& o, const std::string& which) {
    const RegressionData data = read_csv(o.data, o.intercept);
    if (which != "pos") {
        CompetitorOutcome out;
        CompetitorOptions opt;
        if (which == "t") out = t_test(data, o.alpha, opt);
        else if (which == "wt") out = white_t_test(data, o.alpha, opt);
        else out = cd_sign_test(data, o.alpha, opt);
        std::cout << "test,statistic,critical,reject,note\n"
                  << out.name << ',' << fmt(out.statistic) << ',' << fmt(out.critical) << ',' << out.reject << ','
                  << out.note << '\n';
        return 0;
    }
    const auto beta0 = parse_beta(o.beta0, data.columns());
    const TestOutcome out = split_sample_test(data, beta0, o.fraction, o.config(), o.seed);
    std::cout << "statistic,critical,p_value,reject";
    for (Eigen::Index j = 0; j < out.beta1.size(); ++j) std::cout << ",beta1_hat" << (j + 1);
    std::cout << ",t1,t2,seed,vine\n";
    std::cout << fmt(out.statistic) << ',' << fmt(out.critical) << ',' << fmt(out.p_value) << ',' << out.reject;
    for (Eigen::Index j = 0; j < out.beta1.size(); ++j) std::cout << ',' << fmt(out.beta1(j));
    std::cout << ',' << out.t1 << ',' << out.t2 << ',' << out.seed << ",\"" << out.vine << "\"\n";
    return 0;
}

int run_null(const DataOptions& o) {
    const RegressionData data = read_csv(o.data, o.intercept);
    const auto beta0 = parse_beta(o.beta0, data.columns());
    const PosTestConfig cfg = o.config();
    const std::size_t t1 = split_size(data.size(), o.fraction);
    if (t1 < data.columns() + 1 || data.size() - t1 < 10) throw DomainError("split leaves too few observations");
    const RegressionData first = data.slice(0, t1);
    const RegressionData second = data.slice(t1, data.size() - t1);
    const Eigen::VectorXd beta1 = ols(first.X, first.y);
    const SignVector s = residual_signs(second, beta0);
    EstimationConfig est = cfg.estimation;
    est.truncation = std::min(est.truncation, second.size() - 1);
    const FittedVine fitted = fit_sequential(s.bits, alternative_margins(second, beta0, beta1, cfg.nominal), est);
    const auto null = null_distribution(fitted.spec, cfg.m1, o.seed, cfg.null_mode, &est);
    std::cout << "statistic\n";
    for (double v : null) std::cout << fmt(v) << '\n';
    return 0;
}

int run_confidence(const DataOptions& o, const std::string& grid_text) {
    const RegressionData data = read_csv(o.data, o.intercept);
    const ParamGrid grid = ParamGrid::parse(grid_text);
    InversionConfig cfg;
    cfg.fraction = o.fraction;
    cfg.test = o.config();
    const ConfidenceRegion region = invert_test(data, grid, o.alpha, cfg, o.seed);
    for (std::size_t d = 0; d < grid.dimension(); ++d) std::cout << "beta0_" << (d + 1) << ',';
    std::cout << "p_value,accepted\n";
    for (const auto& p : region.points) {
        for (Eigen::Index d = 0; d < p.beta0.size(); ++d) std::cout << fmt(p.beta0(d)) << ',';
        std::cout << fmt(p.p_value) << ',' << p.accepted << '\n';
    }
    return 0;
}

int run_study(const std::string& path, const std::string& output, bool envelope, bool size_only) {
    StudySpec study = load_study(path);
    if (!output.empty()) study.output = output;
    const std::string command = envelope ? "envelope" : (size_only ? "simulate --size" : "simulate");
    const StudyResult result = envelope ? envelope_study(study) : (size_only ? size_table(study) : power_curves(study));
    if (study.output.empty() || study.output == "-") {
        write_csv(std::cout, result);
    } else {
        std::ofstream out(study.output, std::ios::binary);
        if (!out) throw ConfigError("cannot write '" + study.output + "'");
        write_csv(out, result);
        std::ofstream manifest(study.output + ".manifest.json");
        manifest << study_manifest(study, command, &result).dump(2) << '\n';
    }
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Pair-copula point-optimal sign tests for predictive regressions"};
    app.require_subcommand(1);

    DataOptions test_opts, null_opts, conf_opts;
    std::string which = "pos";
    auto* test = app.add_subcommand("test", "run one test on a dataset");
    test_opts.attach(test);
    test->add_option("--test", which, "pos, t, wt or cd")->check(CLI::IsMember({"pos", "t", "wt", "cd"}));

    auto* null = app.add_subcommand("null-dist", "print the simulated null distribution of the statistic");
    null_opts.attach(null);

    std::string grid;
    auto* conf = app.add_subcommand("confidence", "confidence region by test inversion");
    conf_opts.attach(conf);
    conf->add_option("--grid", grid, "lo:hi:n per coordinate, comma separated")->required();

    std::string sim_cfg, sim_out, env_cfg, env_out;
    bool size_only = false;
    auto* sim = app.add_subcommand("simulate", "size and power study");
    sim->add_option("--study", sim_cfg, "study configuration (INI)")->required();
    sim->add_option("--output", sim_out, "CSV output path, '-' for stdout");
    sim->add_flag("--size", size_only, "only the beta = 0 column");
    auto* env = app.add_subcommand("envelope", "split-fraction power envelope study");
    env->add_option("--study", env_cfg, "study configuration (INI)")->required();
    env->add_option("--output", env_out, "CSV output path, '-' for stdout");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int rc = app.exit(e);
        return rc == 0 ? 0 : 2;
    }

    try {
        if (*test) return run_test(test_opts, which);
        if (*null) return run_null(null_opts);
        if (*conf) return run_confidence(conf_opts, grid);
        if (*sim) return run_study(sim_cfg, sim_out, false, size_only);
        if (*env) return run_study(env_cfg, env_out, true, false);
    } catch (const ConfigError& e) {
        std::cerr << "configuration error: " << e.what() << '\n';
        return 2;
    } catch (const ReplicationFailure& e) {
        std::cerr << "study aborted: " << e.what() << '\n';
        return 3;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << '\n';
        return 1;
    }
    return 0;
}
