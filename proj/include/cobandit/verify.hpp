#pragma once
// Oracle-based verification suites: threshold index vs. reference index,
// numeric indexability, and the scan for dual-threshold optimal policies.

#include "cobandit/belief.hpp"
#include "cobandit/generators.hpp"
#include "cobandit/parallel.hpp"
#include "cobandit/random.hpp"
#include "cobandit/reference.hpp"
#include "cobandit/whittle.hpp"

#include <cmath>
#include <cstdint>
#include <map>
#include <string>
#include <vector>

namespace cobandit {

// Strict-natural model that is NIB at `horizon` and satisfies the forward
// condition at `beta`.
inline TransitionModel sample_guaranteed_model(std::mt19937_64& g, double beta, int horizon) {
    return detail::rejection_sample(
        [&] { return RawProbabilities{uniform01(g), uniform01(g), uniform01(g), uniform01(g)}; },
        [&](const TransitionModel& m) {
            return check_forward_condition(m, beta) && classify_trend(BeliefChains(m, horizon)) == BeliefTrend::NIB;
        },
        "NIB forward-threshold-optimal model");
}

struct AgreementConfig {
    int models = 100;
    std::uint64_t seed = 1;
    int horizon = 40;
    int max_u = 20;
    double condition_beta = 0.2;
    double reference_beta = 0.999;
    double tol = 1e-6;
    double max_abs = 0.05;
    double close = 0.02;
    double close_fraction = 0.95;
    int threads = 1;
};

struct AgreementCase {
    RawProbabilities model;
    BeliefStateId state;
    double threshold_index = 0.0;
    double reference_index = 0.0;
};

struct AgreementReport {
    AgreementConfig config;
    int states = 0;
    int within_close = 0;
    double max_abs_diff = 0.0;
    AgreementCase worst;
    bool pass = false;

    double fraction_close() const { return states ? static_cast<double>(within_close) / states : 0.0; }
};

inline AgreementReport verify_index_agreement(const AgreementConfig& cfg) {
    auto g = seeded_engine(cfg.seed, {0xa9eu});
    std::vector<TransitionModel> models;
    for (int i = 0; i < cfg.models; ++i) models.push_back(sample_guaranteed_model(g, cfg.condition_beta, cfg.horizon));

    std::vector<std::vector<AgreementCase>> cases(models.size());
    parallel_for(cfg.models, cfg.threads, [&](int i) {
        const auto& m = models[static_cast<std::size_t>(i)];
        const WhittleTable fast = compute_index_table(BeliefChains(m, cfg.horizon));
        for (int omega = 0; omega < 2; ++omega) {
            for (int u = 1; u <= cfg.max_u; ++u) {
                const BeliefStateId s{omega, u};
                cases[static_cast<std::size_t>(i)].push_back(
                    {m.raw(), s, fast.index(s), reference_whittle(m, s, cfg.reference_beta, cfg.horizon, cfg.tol)});
            }
        }
    });

    AgreementReport rep;
    rep.config = cfg;
    for (const auto& per_model : cases) {
        for (const auto& c : per_model) {
            const double diff = std::abs(c.threshold_index - c.reference_index);
            ++rep.states;
            if (diff <= cfg.close) ++rep.within_close;
            if (diff >= rep.max_abs_diff) {
                rep.max_abs_diff = diff;
                rep.worst = c;
            }
        }
    }
    rep.pass = rep.states > 0 && rep.max_abs_diff <= cfg.max_abs && rep.fraction_close() >= cfg.close_fraction;
    return rep;
}

struct IndexabilityConfig {
    int models = 50;
    std::uint64_t seed = 2;
    int horizon = 40;
    double beta = 0.2;
    double m_lo = -10.0;
    double m_hi = 10.0;
    double m_step = 0.01;
    int threads = 1;
};

struct IndexabilityFailure {
    RawProbabilities model;
    double subsidy = 0.0;
};

struct IndexabilitySuite {
    IndexabilityConfig config;
    int monotone = 0;
    std::vector<IndexabilityFailure> failures;
    bool pass = false;
};

inline std::vector<double> subsidy_grid(double lo, double hi, double step) {
    std::vector<double> grid;
    const auto n = static_cast<long>(std::llround((hi - lo) / step));
    for (long i = 0; i <= n; ++i) grid.push_back(lo + static_cast<double>(i) * step);
    return grid;
}

// Models satisfy the forward condition at cfg.beta, hence should be indexable.
inline IndexabilitySuite verify_indexability(const IndexabilityConfig& cfg) {
    auto g = seeded_engine(cfg.seed, {0x1d8u});
    std::vector<TransitionModel> models;
    for (int i = 0; i < cfg.models; ++i) {
        models.push_back(detail::rejection_sample(
            [&] { return RawProbabilities{uniform01(g), uniform01(g), uniform01(g), uniform01(g)}; },
            [&](const TransitionModel& m) { return check_forward_condition(m, cfg.beta); },
            "forward-threshold-optimal model"));
    }
    const auto grid = subsidy_grid(cfg.m_lo, cfg.m_hi, cfg.m_step);
    std::vector<IndexabilityReport> reports(models.size());
    parallel_for(cfg.models, cfg.threads, [&](int i) {
        reports[static_cast<std::size_t>(i)] =
            check_indexability(models[static_cast<std::size_t>(i)], cfg.beta, grid, cfg.horizon);
    });
    IndexabilitySuite suite;
    suite.config = cfg;
    for (std::size_t i = 0; i < reports.size(); ++i) {
        if (reports[i].monotone) ++suite.monotone;
        else suite.failures.push_back({models[i].raw(), grid[static_cast<std::size_t>(reports[i].first_violation)]});
    }
    suite.pass = suite.failures.empty();
    return suite;
}

struct ConjectureConfig {
    int models = 10000;
    std::uint64_t seed = 3;
    std::vector<double> subsidies{-0.5, 0.0, 0.25, 0.5, 1.0};
    std::vector<double> betas{0.5, 0.9, 0.99};
    int threads = 1;
};

struct DualHit {
    RawProbabilities model;
    double subsidy = 0.0;
    double beta = 0.0;
    int horizon = 0;
};

struct ConjectureReport {
    ConjectureConfig config;
    std::map<std::string, long> shape_counts;
    std::vector<DualHit> dual_hits;
    bool pass = false;
};

// Relaxed random models, each solved at its mixing horizon, classified for
// every (subsidy, discount) pair.
inline ConjectureReport scan_dual_policies(const ConjectureConfig& cfg) {
    auto g = seeded_engine(cfg.seed, {0xd0a1u});
    std::vector<TransitionModel> models;
    for (int i = 0; i < cfg.models; ++i) models.push_back(sample_relaxed(g));

    const std::size_t per_model = cfg.subsidies.size() * cfg.betas.size();
    std::vector<PolicyShape> shapes(models.size() * per_model);
    parallel_for(cfg.models, cfg.threads, [&](int i) {
        const auto& m = models[static_cast<std::size_t>(i)];
        const int horizon = mixing_horizon(m);
        std::size_t k = static_cast<std::size_t>(i) * per_model;
        for (double subsidy : cfg.subsidies) {
            for (double beta : cfg.betas) shapes[k++] = classify_policy_shape(m, subsidy, beta, horizon);
        }
    });

    ConjectureReport rep;
    rep.config = cfg;
    for (auto s : {PolicyShape::Forward, PolicyShape::Reverse, PolicyShape::Dual, PolicyShape::Other,
                   PolicyShape::AllPassive, PolicyShape::AllActive}) {
        rep.shape_counts[to_string(s)] = 0;
    }
    for (std::size_t i = 0; i < models.size(); ++i) {
        std::size_t k = i * per_model;
        for (double subsidy : cfg.subsidies) {
            for (double beta : cfg.betas) {
                const PolicyShape s = shapes[k++];
                ++rep.shape_counts[to_string(s)];
                if (s == PolicyShape::Dual) rep.dual_hits.push_back({models[i].raw(), subsidy, beta, mixing_horizon(models[i])});
            }
        }
    }
    rep.pass = rep.dual_hits.empty();
    return rep;
}

} // namespace cobandit
