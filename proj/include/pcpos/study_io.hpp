#pragma once

// Study configuration files (INI sections dgp, test, study) and the JSON run
// manifest written next to the result CSV.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <fstream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <boost/property_tree/ini_parser.hpp>
#include <boost/property_tree/ptree.hpp>
#include <json.hpp>

#include "pcpos/copula.hpp"
#include "pcpos/distributions.hpp"
#include "pcpos/errors.hpp"
#include "pcpos/study.hpp"

namespace pcpos {

namespace detail {

inline std::vector<std::string> split_list(const std::string& text) {
    std::vector<std::string> out;
    std::stringstream ss(text);
    std::string item;
    while (std::getline(ss, item, ',')) {
        item = trim(item);
        if (!item.empty()) out.push_back(item);
    }
    return out;
}

/// Either "a,b,c" or a range "lo:hi:n".
inline std::vector<double> parse_values(const std::string& text) {
    std::vector<double> out;
    if (text.find(':') != std::string::npos) {
        const auto parts = [&] {
            std::vector<std::string> p;
            std::stringstream ss(text);
            std::string item;
            while (std::getline(ss, item, ':')) p.push_back(trim(item));
            return p;
        }();
        if (parts.size() != 3) throw ConfigError("range '" + text + "' is not lo:hi:n");
        const double lo = to_double(parts[0]);
        const double hi = to_double(parts[1]);
        const double n = to_double(parts[2]);
        if (n < 2 || n != std::floor(n)) throw ConfigError("range '" + text + "' needs an integer count >= 2");
        const auto count = static_cast<std::size_t>(n);
        for (std::size_t i = 0; i < count; ++i)
            out.push_back(i + 1 == count ? hi : lo + (hi - lo) * static_cast<double>(i) / static_cast<double>(count - 1));
        return out;
    }
    for (const auto& s : split_list(text)) out.push_back(to_double(s));
    if (out.empty()) throw ConfigError("empty value list");
    return out;
}

inline std::uint64_t to_u64(const std::string& s) {
    try {
        std::size_t used = 0;
        const auto v = std::stoull(s, &used, 0);
        if (used != s.size()) throw ConfigError("'" + s + "' is not an unsigned integer");
        return v;
    } catch (const std::logic_error&) {
        throw ConfigError("'" + s + "' is not an unsigned integer");
    }
}

using Ptree = boost::property_tree::ptree;

inline std::optional<std::string> lookup(const Ptree& pt, const std::string& section, const std::string& key) {
    const auto sec = pt.get_child_optional(Ptree::path_type(section, '/'));
    if (!sec) return std::nullopt;
    const auto v = sec->get_optional<std::string>(Ptree::path_type(key, '/'));
    if (!v) return std::nullopt;
    return trim(*v);
}

}  // namespace detail

/// Reads a study from INI text. Unknown keys are rejected so typos surface.
[[nodiscard]] inline StudySpec parse_study(std::istream& in) {
    detail::Ptree pt;
    try {
        boost::property_tree::ini_parser::read_ini(in, pt);
    } catch (const boost::property_tree::ini_parser_error& e) {
        throw ConfigError(std::string("config: ") + e.what());
    }
    static const std::vector<std::pair<std::string, std::vector<std::string>>> known = {
        {"dgp", {"scheme", "rho", "theta", "T", "beta"}},
        {"test", {"tests", "alpha", "m1", "nominal", "copula.family", "copula.aic_candidates", "vine.truncation",
                  "estimate.jitter_seed", "null"}},
        {"study", {"replications", "beta", "fractions", "seed", "output", "max_failure_rate"}},
    };
    for (const auto& [section, body] : pt) {
        const auto it = std::find_if(known.begin(), known.end(), [&](const auto& k) { return k.first == section; });
        if (it == known.end()) throw ConfigError("config: unknown section [" + section + "]");
        for (const auto& [key, value] : body) {
            (void)value;
            if (std::find(it->second.begin(), it->second.end(), key) == it->second.end())
                throw ConfigError("config: unknown key '" + key + "' in [" + section + "]");
        }
    }

    StudySpec s;
    using detail::lookup;
    if (auto v = lookup(pt, "dgp", "scheme")) {
        s.schemes.clear();
        for (const auto& name : detail::split_list(*v)) s.schemes.push_back(parse_scheme(name));
    }
    if (auto v = lookup(pt, "dgp", "rho")) s.rhos = detail::parse_values(*v);
    if (auto v = lookup(pt, "dgp", "theta")) s.dgp.theta = detail::to_double(*v);
    if (auto v = lookup(pt, "dgp", "T")) s.dgp.T = static_cast<std::size_t>(detail::to_u64(*v));
    if (auto v = lookup(pt, "dgp", "beta")) s.betas = detail::parse_values(*v);
    if (auto v = lookup(pt, "study", "beta")) s.betas = detail::parse_values(*v);

    if (auto v = lookup(pt, "test", "tests")) s.tests = detail::split_list(*v);
    if (auto v = lookup(pt, "test", "alpha")) s.alpha = detail::to_double(*v);
    if (auto v = lookup(pt, "test", "m1")) s.m1 = static_cast<std::size_t>(detail::to_u64(*v));
    try {
        if (auto v = lookup(pt, "test", "nominal")) s.nominal = ErrorDistribution::parse(*v);
    } catch (const DomainError& e) {
        throw ConfigError(e.what());
    }
    if (auto v = lookup(pt, "test", "copula.family")) s.estimation.candidates = EstimationConfig::parse_candidates(*v);
    // commas inside js(...) belong to the argument list, so the list is ';'-separated
    if (auto v = lookup(pt, "test", "copula.aic_candidates"))
        s.estimation.candidates = EstimationConfig::parse_candidates(*v);
    if (auto v = lookup(pt, "test", "vine.truncation")) s.estimation.truncation = static_cast<std::size_t>(detail::to_u64(*v));
    if (auto v = lookup(pt, "test", "estimate.jitter_seed")) s.estimation.jitter_seed = detail::to_u64(*v);
    if (auto v = lookup(pt, "test", "null")) {
        if (*v == "refit") s.null_mode = NullMode::Refit;
        else if (*v == "fixed") s.null_mode = NullMode::FixedVine;
        else throw ConfigError("config: null must be 'refit' or 'fixed'");
    }

    if (auto v = lookup(pt, "study", "replications")) s.m2 = static_cast<std::size_t>(detail::to_u64(*v));
    if (auto v = lookup(pt, "study", "fractions")) s.fractions = detail::parse_values(*v);
    if (auto v = lookup(pt, "study", "seed")) s.seed = detail::to_u64(*v);
    if (auto v = lookup(pt, "study", "output")) s.output = *v;
    if (auto v = lookup(pt, "study", "max_failure_rate")) s.max_failure_rate = detail::to_double(*v);

    try {
        s.estimation.validate(s.dgp.T - split_size(s.dgp.T, s.fractions.front()));
        s.validate();
    } catch (const DomainError& e) {
        throw ConfigError(e.what());
    }
    return s;
}

[[nodiscard]] inline StudySpec load_study(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot open config file '" + path + "'");
    return parse_study(in);
}

/// Every configuration value and seed of a run.
[[nodiscard]] inline nlohmann::ordered_json study_manifest(const StudySpec& s, const std::string& command,
                                                           const StudyResult* result = nullptr) {
    nlohmann::ordered_json j;
    j["command"] = command;
    std::vector<std::string> schemes;
    for (auto sc : s.schemes) schemes.push_back(scheme_name(sc));
    j["dgp"] = {{"scheme", schemes}, {"rho", s.rhos}, {"theta", s.dgp.theta}, {"T", s.dgp.T}};
    std::vector<std::string> cands;
    for (const auto& c : s.estimation.candidates) cands.push_back(c.to_string());
    j["test"] = {{"tests", s.tests},
                 {"alpha", s.alpha},
                 {"m1", s.m1},
                 {"nominal", s.nominal.name()},
                 {"copula_candidates", cands},
                 {"vine_truncation", s.estimation.truncation},
                 {"optimizer_tolerance", s.estimation.tolerance},
                 {"optimizer_max_iterations", s.estimation.max_iterations},
                 {"jitter_seed", s.estimation.jitter_seed},
                 {"null", s.null_mode == NullMode::Refit ? "refit" : "fixed"}};
    j["study"] = {{"replications", s.m2},
                  {"beta", s.betas},
                  {"fractions", s.fractions},
                  {"seed", s.seed},
                  {"output", s.output},
                  {"max_failure_rate", s.max_failure_rate}};
    j["seed_derivation"] =
        "replication = derive_seed(seed, {scheme id, bits(rho), beta index, rep}); data = derive_seed(replication, {0}); "
        "null draws of curve c = derive_seed(replication, {1, c})";
    if (result) j["result"] = {{"attempts", result->attempts}, {"failures", result->failures}};
    return j;
}

}  // namespace pcpos
