#pragma once
// Multi-arm cohort simulator with a per-round action budget.
//
// Round t: the policy picks exactly k arms from the current belief states.
// Acting on an arm reveals its latent state (the observation), then every arm
// transitions under its chosen action. The round reward is the number of arms
// in the good state after the transition.
//
// Random numbers are common across policies within a trial: arm n consumes the
// uniform draw (n, t) in round t whichever transition row applies.

#include "cobandit/belief.hpp"
#include "cobandit/error.hpp"
#include "cobandit/parallel.hpp"
#include "cobandit/random.hpp"
#include "cobandit/reference.hpp"
#include "cobandit/whittle.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <map>
#include <numeric>
#include <optional>
#include <random>
#include <string>
#include <vector>

namespace cobandit {

enum class PolicyId { ThresholdWhittle, Reference, Myopic, Random, Oracle, NeverAct };

inline const char* to_string(PolicyId p) noexcept {
    switch (p) {
    case PolicyId::ThresholdWhittle: return "threshold_whittle";
    case PolicyId::Reference: return "reference";
    case PolicyId::Myopic: return "myopic";
    case PolicyId::Random: return "random";
    case PolicyId::Oracle: return "oracle";
    case PolicyId::NeverAct: return "never_act";
    }
    return "?";
}

inline PolicyId parse_policy(const std::string& name) {
    for (auto p : {PolicyId::ThresholdWhittle, PolicyId::Reference, PolicyId::Myopic, PolicyId::Random,
                   PolicyId::Oracle, PolicyId::NeverAct}) {
        if (name == to_string(p)) return p;
    }
    throw validation_error("unknown policy '" + name + "'");
}

struct SimulationConfig {
    int n_arms = 0;
    int budget = 0;         // k, arms acted on per round
    int rounds = 180;       // T; also the belief chain horizon
    int trials = 50;
    std::uint64_t seed = 0;
    double beta = 0.999;    // discount for the reference and oracle indices
    double reference_tol = 1e-6;
    int threads = 1;
    bool record_actions = false;  // keep the action matrix of trial 0

    void validate() const {
        if (n_arms < 1) throw validation_error("cohort needs at least one arm");
        if (budget < 0 || budget > n_arms) throw validation_error("budget k must satisfy 0 <= k <= N");
        if (rounds < 1) throw validation_error("rounds T must be >= 1");
        if (trials < 1) throw validation_error("trials must be >= 1");
        if (!(beta >= 0.0 && beta < 1.0)) throw validation_error("discount must lie in [0,1)");
        if (threads < 1) throw validation_error("threads must be >= 1");
    }
};

// Per-arm data computed once before round 1 and shared by all trials.
struct PreparedArm {
    TransitionModel model;
    BeliefChains chains;
    std::optional<WhittleTable> threshold_index;
    std::optional<WhittleTable> reference_index;
    std::optional<FullObservationIndex> oracle_index;
};

struct Cohort {
    int horizon = 1;
    std::vector<int> latent;
    std::vector<BeliefStateId> belief;
    std::vector<char> observed;  // false until the arm's first real observation
};

inline int count_active(const std::vector<char>& actions) {
    return static_cast<int>(std::count(actions.begin(), actions.end(), char{1}));
}

// Uniform draws for one trial: row n holds arm n's draws, column 0 the initial
// state, column 1 the first transition, column t+1 the transition of round t.
class TrialDraws {
public:
    TrialDraws(std::uint64_t seed, int trial, int n_arms, int rounds)
        : n_arms_(n_arms), cols_(rounds + 2), u_(static_cast<std::size_t>(n_arms) * static_cast<std::size_t>(rounds + 2)) {
        auto gen = seeded_engine(seed, {static_cast<std::uint32_t>(trial), 0x5eedu});
        for (auto& x : u_) x = uniform01(gen);
    }

    double at(int arm, int col) const {
        return u_[static_cast<std::size_t>(arm) * static_cast<std::size_t>(cols_) + static_cast<std::size_t>(col)];
    }
    int n_arms() const noexcept { return n_arms_; }

private:
    int n_arms_;
    int cols_;
    std::vector<double> u_;
};

// Initial latent s0 ~ Bernoulli(b*), treated as an observation at t = 0; the
// round-1 latent follows the active row so belief (s0, 1) is exact.
inline Cohort init_cohort(const std::vector<PreparedArm>& arms, const TrialDraws& draws, int horizon) {
    Cohort c;
    c.horizon = horizon;
    const auto n = arms.size();
    c.latent.resize(n);
    c.belief.resize(n);
    c.observed.assign(n, 0);
    for (std::size_t i = 0; i < n; ++i) {
        const int arm = static_cast<int>(i);
        const int s0 = draws.at(arm, 0) < arms[i].chains.stationary() ? 1 : 0;
        c.latent[i] = draws.at(arm, 1) < arms[i].model.to_good(s0, true) ? 1 : 0;
        c.belief[i] = {s0, 1};
    }
    return c;
}

struct Observation {
    int arm = 0;
    int value = 0;
};

struct StepOutcome {
    std::vector<Observation> observations;
    int reward = 0;
};

// Advances every arm one round. `column` selects the draw column in `draws`.
inline StepOutcome step(Cohort& c, const std::vector<PreparedArm>& arms, const std::vector<char>& actions,
                        int budget, const TrialDraws& draws, int column) {
    if (actions.size() != arms.size()) throw validation_error("action vector length differs from arm count");
    if (count_active(actions) != budget) {
        throw validation_error("action vector has " + std::to_string(count_active(actions)) +
                               " active arms, budget is " + std::to_string(budget));
    }
    StepOutcome out;
    for (std::size_t i = 0; i < arms.size(); ++i) {
        const int arm = static_cast<int>(i);
        const bool active = actions[i] != 0;
        const int before = c.latent[i];
        c.latent[i] = draws.at(arm, column) < arms[i].model.to_good(before, active) ? 1 : 0;
        if (active) {
            out.observations.push_back({arm, before});
            c.belief[i] = {before, 1};
            c.observed[i] = 1;
        } else {
            c.belief[i].u = std::min(c.belief[i].u + 1, c.horizon);
        }
        out.reward += c.latent[i];
    }
    return out;
}

// Top-k by score; ties go to the lowest arm id.
inline std::vector<char> select_top_k(const std::vector<double>& score, int k) {
    std::vector<int> order(score.size());
    std::iota(order.begin(), order.end(), 0);
    const auto kk = static_cast<std::size_t>(std::clamp(k, 0, static_cast<int>(score.size())));
    std::partial_sort(order.begin(), order.begin() + static_cast<std::ptrdiff_t>(kk), order.end(), [&](int a, int b) {
        const double sa = score[static_cast<std::size_t>(a)];
        const double sb = score[static_cast<std::size_t>(b)];
        if (sa != sb) return sa > sb;
        return a < b;
    });
    std::vector<char> act(score.size(), 0);
    for (std::size_t i = 0; i < kk; ++i) act[static_cast<std::size_t>(order[i])] = 1;
    return act;
}

// One-step expected gain of acting at belief b.
inline double myopic_gain(const TransitionModel& m, double b) noexcept {
    return b * (m.p11a() - m.p11p()) + (1.0 - b) * (m.p01a() - m.p01p());
}

inline std::vector<char> policy_threshold_whittle(const Cohort& c, const std::vector<PreparedArm>& arms, int k) {
    std::vector<double> s(arms.size());
    for (std::size_t i = 0; i < arms.size(); ++i) s[i] = arms[i].threshold_index->index(c.belief[i]);
    return select_top_k(s, k);
}

inline std::vector<char> policy_reference(const Cohort& c, const std::vector<PreparedArm>& arms, int k) {
    std::vector<double> s(arms.size());
    for (std::size_t i = 0; i < arms.size(); ++i) s[i] = arms[i].reference_index->index(c.belief[i]);
    return select_top_k(s, k);
}

inline std::vector<char> policy_myopic(const Cohort& c, const std::vector<PreparedArm>& arms, int k) {
    std::vector<double> s(arms.size());
    for (std::size_t i = 0; i < arms.size(); ++i) s[i] = myopic_gain(arms[i].model, arms[i].chains.belief(c.belief[i]));
    return select_top_k(s, k);
}

inline std::vector<char> policy_oracle(const Cohort& c, const std::vector<PreparedArm>& arms, int k) {
    std::vector<double> s(arms.size());
    for (std::size_t i = 0; i < arms.size(); ++i) {
        s[i] = arms[i].oracle_index->index[static_cast<std::size_t>(c.latent[i])];
    }
    return select_top_k(s, k);
}

// Uniform k-subset by partial Fisher-Yates.
inline std::vector<char> policy_random(std::size_t n, int k, std::mt19937_64& rng) {
    std::vector<int> ids(n);
    std::iota(ids.begin(), ids.end(), 0);
    std::vector<char> act(n, 0);
    for (int i = 0; i < k; ++i) {
        const auto remaining = n - static_cast<std::size_t>(i);
        auto j = static_cast<std::size_t>(i) +
                 static_cast<std::size_t>(uniform01(rng) * static_cast<double>(remaining));
        j = std::min(j, n - 1);
        std::swap(ids[static_cast<std::size_t>(i)], ids[j]);
        act[static_cast<std::size_t>(ids[static_cast<std::size_t>(i)])] = 1;
    }
    return act;
}

inline std::vector<char> policy_never_act(std::size_t n) { return std::vector<char>(n, 0); }

struct TrajectoryResult {
    PolicyId policy = PolicyId::NeverAct;
    int budget = 0;
    std::vector<double> total_reward;         // per trial
    std::vector<double> mean_round_reward;    // per round, averaged over trials
    double mean_total = 0.0;
    double stderr_total = 0.0;
    std::vector<std::vector<char>> actions;   // trial 0, per round, when recorded
};

struct RunResult {
    SimulationConfig config;
    std::vector<TrajectoryResult> policies;
    std::map<std::string, double> prepare_seconds;

    const TrajectoryResult& get(PolicyId p) const {
        for (const auto& r : policies) {
            if (r.policy == p) return r;
        }
        throw validation_error(std::string("no result for policy ") + to_string(p));
    }
};

inline int effective_budget(PolicyId p, int budget) { return p == PolicyId::NeverAct ? 0 : budget; }

inline std::vector<PreparedArm> prepare_arms(const std::vector<TransitionModel>& models, const SimulationConfig& cfg,
                                             const std::vector<PolicyId>& policies,
                                             std::map<std::string, double>* seconds = nullptr) {
    auto has = [&](PolicyId p) { return std::find(policies.begin(), policies.end(), p) != policies.end(); };
    std::vector<PreparedArm> arms;
    arms.reserve(models.size());
    for (const auto& m : models) arms.push_back({m, BeliefChains(m, cfg.rounds), std::nullopt, std::nullopt, std::nullopt});

    auto timed = [&](const char* name, auto&& fill) {
        const auto t0 = std::chrono::steady_clock::now();
        for (auto& a : arms) fill(a);
        if (seconds) (*seconds)[name] = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    };
    if (has(PolicyId::ThresholdWhittle)) {
        timed("threshold_whittle", [](PreparedArm& a) { a.threshold_index = compute_index_table(a.chains); });
    }
    if (has(PolicyId::Reference)) {
        if (cfg.rounds < 2) throw validation_error("reference policy needs T >= 2");
        timed("reference", [&](PreparedArm& a) {
            a.reference_index = reference_index_table(a.model, cfg.beta, cfg.rounds, cfg.reference_tol);
        });
    }
    if (has(PolicyId::Oracle)) {
        timed("oracle", [&](PreparedArm& a) { a.oracle_index = full_observation_whittle(a.model, cfg.beta, 1e-9); });
    }
    return arms;
}

namespace detail {

struct TrialOutput {
    std::vector<double> round_reward;
    std::vector<std::vector<char>> actions;
};

inline TrialOutput simulate_trial(const std::vector<PreparedArm>& arms, const SimulationConfig& cfg, PolicyId policy,
                                  const TrialDraws& draws, int trial, bool record) {
    TrialOutput out;
    out.round_reward.reserve(static_cast<std::size_t>(cfg.rounds));
    Cohort c = init_cohort(arms, draws, cfg.rounds);
    const int k = effective_budget(policy, cfg.budget);
    auto rng = seeded_engine(cfg.seed, {static_cast<std::uint32_t>(trial), 0xa11cu});
    for (int t = 1; t <= cfg.rounds; ++t) {
        std::vector<char> act;
        switch (policy) {
        case PolicyId::ThresholdWhittle: act = policy_threshold_whittle(c, arms, k); break;
        case PolicyId::Reference: act = policy_reference(c, arms, k); break;
        case PolicyId::Myopic: act = policy_myopic(c, arms, k); break;
        case PolicyId::Random: act = policy_random(arms.size(), k, rng); break;
        case PolicyId::Oracle: act = policy_oracle(c, arms, k); break;
        case PolicyId::NeverAct: act = policy_never_act(arms.size()); break;
        }
        const StepOutcome o = step(c, arms, act, k, draws, t + 1);
        out.round_reward.push_back(o.reward);
        if (record) out.actions.push_back(std::move(act));
    }
    return out;
}

} // namespace detail

// Simulates `trials` independent trials of each policy on already prepared arms.
inline RunResult run_prepared(const std::vector<PreparedArm>& arms, const SimulationConfig& cfg,
                              const std::vector<PolicyId>& policies) {
    cfg.validate();
    if (static_cast<int>(arms.size()) != cfg.n_arms) throw validation_error("config N differs from cohort size");
    RunResult res;
    res.config = cfg;
    std::vector<std::vector<detail::TrialOutput>> outputs(policies.size(),
                                                          std::vector<detail::TrialOutput>(static_cast<std::size_t>(cfg.trials)));
    parallel_for(cfg.trials, cfg.threads, [&](int trial) {
        const TrialDraws draws(cfg.seed, trial, cfg.n_arms, cfg.rounds);
        for (std::size_t p = 0; p < policies.size(); ++p) {
            outputs[p][static_cast<std::size_t>(trial)] =
                detail::simulate_trial(arms, cfg, policies[p], draws, trial, cfg.record_actions && trial == 0);
        }
    });
    for (std::size_t p = 0; p < policies.size(); ++p) {
        TrajectoryResult tr;
        tr.policy = policies[p];
        tr.budget = effective_budget(policies[p], cfg.budget);
        tr.mean_round_reward.assign(static_cast<std::size_t>(cfg.rounds), 0.0);
        for (auto& o : outputs[p]) {
            double total = 0.0;
            for (std::size_t t = 0; t < o.round_reward.size(); ++t) {
                total += o.round_reward[t];
                tr.mean_round_reward[t] += o.round_reward[t] / cfg.trials;
            }
            tr.total_reward.push_back(total);
        }
        const double n = static_cast<double>(cfg.trials);
        tr.mean_total = std::accumulate(tr.total_reward.begin(), tr.total_reward.end(), 0.0) / n;
        if (cfg.trials > 1) {
            double ss = 0.0;
            for (double x : tr.total_reward) ss += (x - tr.mean_total) * (x - tr.mean_total);
            tr.stderr_total = std::sqrt(ss / (n - 1.0) / n);
        }
        if (cfg.record_actions) tr.actions = std::move(outputs[p][0].actions);
        res.policies.push_back(std::move(tr));
    }
    return res;
}

inline RunResult run_trials(const std::vector<TransitionModel>& models, const SimulationConfig& cfg,
                            const std::vector<PolicyId>& policies) {
    cfg.validate();
    std::map<std::string, double> seconds;
    const auto arms = prepare_arms(models, cfg, policies, &seconds);
    RunResult res = run_prepared(arms, cfg, policies);
    res.prepare_seconds = std::move(seconds);
    return res;
}

// 100 * (R_pi - R_never) / (R_oracle - R_never); empty when the denominator is not positive.
inline std::optional<double> intervention_benefit(const RunResult& r, PolicyId p) {
    const double never = r.get(PolicyId::NeverAct).mean_total;
    const double oracle = r.get(PolicyId::Oracle).mean_total;
    const double denom = oracle - never;
    if (!(denom > 0.0)) return std::nullopt;
    return 100.0 * (r.get(p).mean_total - never) / denom;
}

} // namespace cobandit
