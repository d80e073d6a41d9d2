#ifndef WELFARE_CONFIG_HPP
#define WELFARE_CONFIG_HPP

#include <cmath>
#include <cstdint>
#include <cstdio>
#include <fstream>
#include <limits>
#include <sstream>
#include <string>
#include <utility>
#include <vector>

#include <json.hpp>

#include "welfare/cv.hpp"
#include "welfare/errors.hpp"
#include "welfare/math.hpp"
#include "welfare/policy.hpp"
#include "welfare/pum.hpp"
#include "welfare/roy.hpp"

namespace welfare {

namespace detail {

inline const nlohmann::json& need_field(const nlohmann::json& j, const char* key) {
    auto it = j.find(key);
    if (it == j.end()) throw BadConfig(std::string("missing field '") + key + "'");
    return *it;
}

inline double num_field(const nlohmann::json& j, const char* key) {
    const auto& v = need_field(j, key);
    if (!v.is_number()) throw BadConfig(std::string("field '") + key + "' must be a number");
    return v.get<double>();
}

inline double num_field_or(const nlohmann::json& j, const char* key, double fallback) {
    auto it = j.find(key);
    if (it == j.end()) return fallback;
    if (!it->is_number()) throw BadConfig(std::string("field '") + key + "' must be a number");
    return it->get<double>();
}

inline std::string str_field(const nlohmann::json& j, const char* key) {
    const auto& v = need_field(j, key);
    if (!v.is_string()) throw BadConfig(std::string("field '") + key + "' must be a string");
    return v.get<std::string>();
}

inline const nlohmann::json& arr_field(const nlohmann::json& j, const char* key) {
    const auto& v = need_field(j, key);
    if (!v.is_array()) throw BadConfig(std::string("field '") + key + "' must be an array");
    return v;
}

inline std::vector<double> num_vector(const nlohmann::json& arr, const char* what) {
    std::vector<double> out;
    out.reserve(arr.size());
    for (const auto& v : arr) {
        if (!v.is_number()) throw BadConfig(std::string(what) + " must contain only numbers");
        out.push_back(v.get<double>());
    }
    return out;
}

inline NoiseSpec parse_noise(const nlohmann::json& j) {
    std::string family = str_field(j, "family");
    if (family == "point_mass") return NoiseSpec::point_mass(num_field_or(j, "location", 0.0));
    if (family == "gumbel") {
        return NoiseSpec::gumbel(num_field_or(j, "location", 0.0),
                                 num_field_or(j, "scale", 1.0));
    }
    if (family == "normal") {
        return NoiseSpec::normal(num_field_or(j, "location", 0.0),
                                 num_field_or(j, "scale", 1.0));
    }
    if (family == "uniform") {
        return NoiseSpec::uniform(num_field(j, "lower"), num_field(j, "upper"));
    }
    if (family == "truncated_normal") {
        return NoiseSpec::truncated_normal(num_field_or(j, "location", 0.0),
                                           num_field_or(j, "scale", 1.0),
                                           num_field(j, "lower"), num_field(j, "upper"));
    }
    throw BadConfig("unknown noise family '" + family + "'");
}

inline std::vector<NoiseSpec> parse_noise_list(const nlohmann::json& arr) {
    std::vector<NoiseSpec> out;
    out.reserve(arr.size());
    for (const auto& v : arr) out.push_back(parse_noise(v));
    return out;
}

} // namespace detail

// A parsed scenario file.  `kind` selects which member is populated.
struct ScenarioConfig {
    std::string kind;
    PumScenario pum;
    double gamma = std::numeric_limits<double>::quiet_NaN(); // optional, pum only
    PriceScenario cv;
    PolicyScenario policy;
    std::vector<PolicyRule> rules; // policy only
    RoyScenario roy;
    std::string digest; // hash of the canonical serialized form

    bool has_gamma() const { return std::isfinite(gamma); }
};

namespace detail {

inline PumScenario parse_pum(const nlohmann::json& j) {
    PumScenario sc;
    sc.n_alternatives = static_cast<std::size_t>(num_field(j, "n_alternatives"));
    sc.noise = parse_noise_list(arr_field(j, "noise"));
    for (const auto& gj : arr_field(j, "groups")) {
        PumGroup g;
        g.prob = num_field(gj, "prob");
        g.util_before = num_vector(arr_field(gj, "util_before"), "util_before");
        g.util_after = num_vector(arr_field(gj, "util_after"), "util_after");
        sc.groups.push_back(std::move(g));
    }
    sc.validate();
    return sc;
}

inline PriceScenario parse_cv(const nlohmann::json& j) {
    PriceScenario sc;
    sc.marginal_utility_income = num_field(j, "marginal_utility_income");
    sc.income = num_field(j, "income");
    sc.price_before = num_vector(arr_field(j, "price_before"), "price_before");
    sc.price_after = num_vector(arr_field(j, "price_after"), "price_after");
    sc.noise = parse_noise_list(arr_field(j, "noise"));
    sc.cv_slack_mu = num_field_or(j, "cv_slack_mu",
                                  std::numeric_limits<double>::quiet_NaN());
    for (const auto& gj : arr_field(j, "groups")) {
        PriceGroup g;
        g.prob = num_field(gj, "prob");
        g.h = num_vector(arr_field(gj, "h"), "h");
        sc.groups.push_back(std::move(g));
    }
    return sc;
}

inline PolicyScenario parse_policy(const nlohmann::json& j, std::vector<PolicyRule>& rules) {
    std::vector<PolicyGroup> groups;
    std::vector<std::vector<double>> coeffs;
    std::vector<double> sds;
    for (const auto& gj : arr_field(j, "groups")) {
        PolicyGroup g;
        g.prob = num_field(gj, "prob");
        g.propensity = num_field(gj, "propensity");
        g.mean_v0 = num_field(gj, "mean_v0");
        groups.push_back(g);
        coeffs.push_back(num_vector(arr_field(gj, "mte_coeffs"), "mte_coeffs"));
        double sd = num_field_or(gj, "outcome_sd", 0.5);
        if (!(sd >= 0.0) || !std::isfinite(sd)) {
            throw BadConfig("outcome_sd must be finite and nonnegative");
        }
        sds.push_back(sd);
    }
    auto mte = [coeffs](std::size_t g, double u) {
        double acc = 0.0;
        double pw = 1.0;
        for (double c : coeffs[g]) {
            acc += c * pw;
            pw *= u;
        }
        return acc;
    };
    auto means = [groups](std::size_t g) { return groups[g].mean_v0; };
    auto outcomes = [mte, means, sds](std::size_t g, double u, SubstreamRng& rng) {
        double v0 = means(g) + sds[g] * rng.normal();
        double v1 = v0 + mte(g, u) + sds[g] * rng.normal();
        return std::pair<double, double>{v0, v1};
    };
    rules.clear();
    for (const auto& rj : arr_field(j, "rules")) {
        PolicyRule rule;
        rule.name = str_field(rj, "name");
        for (double v : num_vector(arr_field(rj, "assign"), "assign")) {
            if (v != 0.0 && v != 1.0) throw BadConfig("rule assignments must be 0 or 1");
            rule.assign.push_back(static_cast<int>(v));
        }
        rules.push_back(std::move(rule));
    }
    return make_policy_scenario(std::move(groups), std::move(mte), std::move(outcomes));
}

inline RoyScenario parse_roy(const nlohmann::json& j) {
    RoyScenario sc;
    for (const auto& gj : arr_field(j, "groups")) {
        RoyGroup g;
        g.prob = num_field(gj, "prob");
        g.mu0 = num_field(gj, "mu0");
        g.mu1 = num_field(gj, "mu1");
        g.muC = num_field(gj, "muC");
        sc.groups.push_back(g);
    }
    const auto& ej = need_field(j, "errors");
    std::string type = str_field(ej, "type");
    if (type == "joint_normal") {
        JointNormalErrors jn;
        auto mean = num_vector(arr_field(ej, "mean"), "mean");
        if (mean.size() != 3) throw BadConfig("errors.mean must have 3 entries");
        for (int i = 0; i < 3; ++i) jn.mean[i] = mean[i];
        const auto& cj = arr_field(ej, "cov");
        if (cj.size() != 3) throw BadConfig("errors.cov must be a 3x3 matrix");
        for (int i = 0; i < 3; ++i) {
            auto row = num_vector(cj[i], "cov row");
            if (row.size() != 3) throw BadConfig("errors.cov must be a 3x3 matrix");
            for (int k = 0; k < 3; ++k) jn.cov[i][k] = row[k];
        }
        sc.errors = RoyErrorSpec::joint_normal(jn);
    } else if (type == "independent") {
        IndependentErrors ind;
        ind.nu0 = parse_noise(need_field(ej, "nu0"));
        ind.nu1 = parse_noise(need_field(ej, "nu1"));
        ind.nuC = parse_noise(need_field(ej, "nuC"));
        sc.errors = RoyErrorSpec::independent(ind);
    } else {
        throw BadConfig("errors.type must be 'joint_normal' or 'independent'");
    }
    sc.validate();
    return sc;
}

} // namespace detail

inline ScenarioConfig parse_scenario(const std::string& text) {
    nlohmann::json j;
    try {
        j = nlohmann::json::parse(text);
    } catch (const nlohmann::json::exception& e) {
        throw BadConfig(std::string("config is not valid JSON: ") + e.what());
    }
    if (!j.is_object()) throw BadConfig("config root must be an object");
    ScenarioConfig cfg;
    try {
        cfg.kind = detail::str_field(j, "kind");
        if (cfg.kind == "pum") {
            cfg.pum = detail::parse_pum(j);
            cfg.gamma = detail::num_field_or(j, "gamma",
                                            std::numeric_limits<double>::quiet_NaN());
        } else if (cfg.kind == "cv") {
            cfg.cv = detail::parse_cv(j);
        } else if (cfg.kind == "policy") {
            cfg.policy = detail::parse_policy(j, cfg.rules);
        } else if (cfg.kind == "roy") {
            cfg.roy = detail::parse_roy(j);
        } else {
            throw BadConfig("kind must be one of pum, cv, policy, roy");
        }
    } catch (const nlohmann::json::exception& e) {
        throw BadConfig(std::string("malformed config: ") + e.what());
    }
    std::string canon = j.dump();
    char buf[20];
    std::snprintf(buf, sizeof(buf), "%016llx",
                  static_cast<unsigned long long>(fnv1a(canon.data(), canon.size())));
    cfg.digest = buf;
    return cfg;
}

inline ScenarioConfig load_scenario(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw MissingFile("cannot open '" + path + "'");
    std::ostringstream ss;
    ss << in.rdbuf();
    return parse_scenario(ss.str());
}

} // namespace welfare

#endif
