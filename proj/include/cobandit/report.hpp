#pragma once
// JSON/CSV emission for simulation bundles and verification reports.

#include "cobandit/cohort_io.hpp"
#include "cobandit/simulation.hpp"
#include "cobandit/verify.hpp"

#include <nlohmann/json.hpp>

#include <cmath>
#include <ostream>
#include <string>
#include <vector>

namespace cobandit {

inline constexpr const char kToolName[] = "cobandit";
inline constexpr const char kToolVersion[] = "1.0.0";

// Number rounded to 12 significant digits; non-finite values become null.
inline nlohmann::json number12(double x) {
    if (!std::isfinite(x)) return nullptr;
    return std::stod(format_number(x));
}

inline nlohmann::json raw_json(const RawProbabilities& r) {
    return {{"p01p", number12(r.p01p)}, {"p11p", number12(r.p11p)}, {"p01a", number12(r.p01a)}, {"p11a", number12(r.p11a)}};
}

struct CohortSource {
    std::string description;         // file path or generator spec
    std::vector<std::string> notes;  // substitutions worth flagging to the reader
};

inline nlohmann::json result_bundle(const RunResult& r, const CohortSource& source, bool include_timing) {
    using nlohmann::json;
    const auto& c = r.config;
    json bundle;
    bundle["tool"] = {{"name", kToolName}, {"version", kToolVersion}};
    bundle["config"] = {{"n_arms", c.n_arms}, {"budget", c.budget},       {"rounds", c.rounds},
                        {"trials", c.trials}, {"seed", c.seed},           {"beta", number12(c.beta)},
                        {"reference_tol", number12(c.reference_tol)}};
    bundle["cohort"] = {{"source", source.description}, {"notes", source.notes}};
    json policies = json::array();
    for (const auto& p : r.policies) {
        json entry;
        entry["policy"] = to_string(p.policy);
        entry["budget"] = p.budget;
        entry["mean_total_reward"] = number12(p.mean_total);
        entry["stderr_total_reward"] = number12(p.stderr_total);
        const auto ib = intervention_benefit(r, p.policy);
        entry["intervention_benefit"] = ib ? number12(*ib) : json(nullptr);
        json curve = json::array();
        for (double x : p.mean_round_reward) curve.push_back(number12(x));
        entry["mean_round_reward"] = std::move(curve);
        policies.push_back(std::move(entry));
    }
    bundle["policies"] = std::move(policies);
    if (include_timing) {
        json t = json::object();
        for (const auto& [k, v] : r.prepare_seconds) t[k] = std::round(v * 1000.0) / 1000.0;
        bundle["runtimes_seconds"] = std::move(t);
    }
    return bundle;
}

inline void write_summary_csv(std::ostream& out, const RunResult& r) {
    out << "policy,budget,mean_total_reward,stderr_total_reward,intervention_benefit\n";
    for (const auto& p : r.policies) {
        const auto ib = intervention_benefit(r, p.policy);
        out << to_string(p.policy) << ',' << p.budget << ',' << format_number(p.mean_total) << ','
            << format_number(p.stderr_total) << ',' << (ib ? format_number(*ib) : std::string("undefined")) << '\n';
    }
}

inline nlohmann::json to_json(const AgreementReport& r) {
    return {{"pass", r.pass},
            {"models", r.config.models},
            {"states", r.states},
            {"horizon", r.config.horizon},
            {"max_u", r.config.max_u},
            {"condition_beta", number12(r.config.condition_beta)},
            {"reference_beta", number12(r.config.reference_beta)},
            {"max_abs_diff", number12(r.max_abs_diff)},
            {"fraction_within_close", number12(r.fraction_close())},
            {"limits", {{"max_abs", r.config.max_abs}, {"close", r.config.close}, {"close_fraction", r.config.close_fraction}}},
            {"worst",
             {{"model", raw_json(r.worst.model)},
              {"omega", r.worst.state.omega},
              {"u", r.worst.state.u},
              {"threshold_index", number12(r.worst.threshold_index)},
              {"reference_index", number12(r.worst.reference_index)}}}};
}

inline nlohmann::json to_json(const IndexabilitySuite& s) {
    nlohmann::json failures = nlohmann::json::array();
    for (const auto& f : s.failures) failures.push_back({{"model", raw_json(f.model)}, {"subsidy", number12(f.subsidy)}});
    return {{"pass", s.pass},
            {"models", s.config.models},
            {"monotone", s.monotone},
            {"beta", number12(s.config.beta)},
            {"horizon", s.config.horizon},
            {"grid", {{"lo", s.config.m_lo}, {"hi", s.config.m_hi}, {"step", s.config.m_step}}},
            {"counterexamples", std::move(failures)}};
}

inline nlohmann::json to_json(const ConjectureReport& r) {
    nlohmann::json hits = nlohmann::json::array();
    for (const auto& h : r.dual_hits) {
        hits.push_back({{"model", raw_json(h.model)}, {"subsidy", h.subsidy}, {"beta", h.beta}, {"horizon", h.horizon}});
    }
    return {{"pass", r.pass},
            {"models", r.config.models},
            {"subsidies", r.config.subsidies},
            {"betas", r.config.betas},
            {"shape_counts", r.shape_counts},
            {"dual_counterexamples", std::move(hits)}};
}

} // namespace cobandit
