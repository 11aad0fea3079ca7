#pragma once
// Threshold-Whittle index computation for one arm.
//
// Under a forward threshold policy (x0, x1) the arm walks chain omega from its
// head down to state x_omega, acts there and jumps back to a head. The induced
// Markov chain has a closed-form stationary distribution, so the average reward
// of every such policy is linear in the passivity subsidy m:
//
//   J_m(x0, x1) = A(x0, x1) + m * C(x0, x1).
//
// The index of the state at a threshold is the subsidy that makes the policy
// and its neighbour (that threshold advanced by one) equally good. The
// sequential algorithm walks both thresholds from the chain heads, always
// committing the smaller of the two candidate subsidies.

#include "cobandit/belief.hpp"
#include "cobandit/error.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <cstddef>
#include <limits>
#include <optional>
#include <string>
#include <vector>

namespace cobandit {

struct ForwardThresholdPolicy {
    int x0 = 1;  // first state of chain 0 where the policy acts
    int x1 = 1;  // first state of chain 1 where the policy acts

    int threshold(int omega) const noexcept { return omega == 0 ? x0 : x1; }

    friend bool operator==(const ForwardThresholdPolicy&, const ForwardThresholdPolicy&) = default;
};

struct OccupancyProfile {
    ForwardThresholdPolicy policy;
    double alpha = 0.0;      // frequency of each chain-0 state u <= x0
    double beta_freq = 0.0;  // frequency of each chain-1 state u <= x1

    double frequency(BeliefStateId s) const noexcept {
        if (s.omega == 0) return s.u <= policy.x0 ? alpha : 0.0;
        return s.u <= policy.x1 ? beta_freq : 0.0;
    }
};

// Average reward of a threshold policy as a line in the subsidy.
struct LinearReward {
    double intercept = 0.0;     // A: belief-weighted occupancy
    double passive_mass = 0.0;  // C: long-run fraction of passive rounds

    double at(double subsidy) const noexcept { return intercept + subsidy * passive_mass; }
};

namespace detail {

inline constexpr double kSolveTolerance = 1e-12;

inline void occupancy_weights(double head0_at_threshold, double head1_at_threshold, int x0, int x1,
                              double& alpha, double& beta_freq) {
    const double leave1 = 1.0 - head1_at_threshold;
    if (!(leave1 > 1e-300)) {
        throw numerical_error("occupancy undefined: belief at chain-1 threshold is numerically 1");
    }
    const double ratio = head0_at_threshold / leave1;
    alpha = 1.0 / (static_cast<double>(x1) * ratio + static_cast<double>(x0));
    beta_freq = alpha * ratio;
}

inline std::optional<double> try_solve(const LinearReward& a, const LinearReward& b) {
    const double slope_gap = a.passive_mass - b.passive_mass;
    if (std::abs(slope_gap) <= kSolveTolerance) return std::nullopt;
    return (b.intercept - a.intercept) / slope_gap;
}

// Chains extended by one virtual state per chain whose belief is clamped to
// b_omega(T); running prefix sums make each policy evaluation O(1).
class ExtendedChains {
public:
    explicit ExtendedChains(const BeliefChains& chains) : horizon_(chains.horizon()) {
        for (int omega = 0; omega < 2; ++omega) {
            auto& b = belief_[static_cast<std::size_t>(omega)];
            auto& s = prefix_[static_cast<std::size_t>(omega)];
            b.assign(static_cast<std::size_t>(horizon_) + 2, 0.0);
            s.assign(static_cast<std::size_t>(horizon_) + 2, 0.0);
            for (int u = 1; u <= horizon_ + 1; ++u) {
                const auto iu = static_cast<std::size_t>(u);
                b[iu] = chains.belief(omega, u <= horizon_ ? u : horizon_);
                s[iu] = s[iu - 1] + b[iu];
            }
        }
    }

    int horizon() const noexcept { return horizon_; }

    double belief(int omega, int u) const {
        return belief_[static_cast<std::size_t>(omega)][static_cast<std::size_t>(u)];
    }

    LinearReward reward(int x0, int x1) const {
        double alpha = 0.0;
        double beta_freq = 0.0;
        occupancy_weights(belief(0, x0), belief(1, x1), x0, x1, alpha, beta_freq);
        LinearReward r;
        r.intercept = alpha * prefix_[0][static_cast<std::size_t>(x0)] +
                      beta_freq * prefix_[1][static_cast<std::size_t>(x1)];
        r.passive_mass = 1.0 - alpha - beta_freq;
        return r;
    }

    // Same quantity by explicit per-state summation; oracle for the prefix sums.
    LinearReward reward_naive(int x0, int x1) const {
        double alpha = 0.0;
        double beta_freq = 0.0;
        occupancy_weights(belief(0, x0), belief(1, x1), x0, x1, alpha, beta_freq);
        LinearReward r;
        for (int u = 1; u <= x0; ++u) r.intercept += belief(0, u) * alpha;
        for (int u = 1; u <= x1; ++u) r.intercept += belief(1, u) * beta_freq;
        r.passive_mass = 1.0 - alpha - beta_freq;
        return r;
    }

private:
    int horizon_;
    std::array<std::vector<double>, 2> belief_;
    std::array<std::vector<double>, 2> prefix_;
};

} // namespace detail

inline void check_policy(const BeliefChains& chains, ForwardThresholdPolicy p) {
    const int t = chains.horizon();
    if (p.x0 < 1 || p.x0 > t || p.x1 < 1 || p.x1 > t) {
        throw validation_error("threshold policy (" + std::to_string(p.x0) + "," + std::to_string(p.x1) +
                               ") outside chain horizon " + std::to_string(t));
    }
}

inline OccupancyProfile occupancy(const BeliefChains& chains, ForwardThresholdPolicy policy) {
    check_policy(chains, policy);
    OccupancyProfile out;
    out.policy = policy;
    detail::occupancy_weights(chains.belief(0, policy.x0), chains.belief(1, policy.x1), policy.x0, policy.x1,
                              out.alpha, out.beta_freq);
    return out;
}

// Direct occupancy-weighted sum over every belief state.
inline LinearReward avg_reward_linear(const BeliefChains& chains, ForwardThresholdPolicy policy) {
    const OccupancyProfile occ = occupancy(chains, policy);
    LinearReward r;
    for (int omega = 0; omega < 2; ++omega) {
        for (int u = 1; u <= chains.horizon(); ++u) {
            const BeliefStateId s{omega, u};
            r.intercept += chains.belief(s) * occ.frequency(s);
        }
    }
    r.passive_mass = 1.0 - occ.frequency({1, policy.x1}) - occ.frequency({0, policy.x0});
    return r;
}

// Subsidy at which two threshold policies have equal average reward.
inline double solve_subsidy(const LinearReward& a, const LinearReward& b) {
    auto m = detail::try_solve(a, b);
    if (!m) throw numerical_error("indeterminate subsidy: value lines are parallel");
    return *m;
}

inline double solve_subsidy(const BeliefChains& chains, ForwardThresholdPolicy a, ForwardThresholdPolicy b) {
    if (a == b) throw validation_error("subsidy solve needs two distinct policies");
    return solve_subsidy(avg_reward_linear(chains, a), avg_reward_linear(chains, b));
}

struct IndexAssignment {
    BeliefStateId state;
    double index = 0.0;
};

class WhittleTable {
public:
    WhittleTable() = default;
    explicit WhittleTable(int horizon) : horizon_(horizon) {
        for (auto& w : w_) w.assign(static_cast<std::size_t>(horizon), std::numeric_limits<double>::quiet_NaN());
    }

    int horizon() const noexcept { return horizon_; }

    double index(int omega, int u) const {
        return w_[static_cast<std::size_t>(omega)][static_cast<std::size_t>(u - 1)];
    }
    double index(BeliefStateId s) const { return index(s.omega, s.u); }

    // Assignments in the order the sequential algorithm produced them.
    const std::vector<IndexAssignment>& trace() const noexcept { return trace_; }
    const std::vector<std::string>& diagnostics() const noexcept { return diagnostics_; }

    void assign(BeliefStateId s, double m) {
        w_[static_cast<std::size_t>(s.omega)][static_cast<std::size_t>(s.u - 1)] = m;
        trace_.push_back({s, m});
    }
    void note(std::string message) { diagnostics_.push_back(std::move(message)); }

private:
    int horizon_ = 0;
    std::array<std::vector<double>, 2> w_;
    std::vector<IndexAssignment> trace_;
    std::vector<std::string> diagnostics_;
};

struct IndexOptions {
    // Recompute every policy reward by explicit summation instead of prefix sums.
    bool naive_occupancy = false;
};

namespace detail {

// Runs the sequential algorithm, handing each (state, index) to `visit`.
// `visit` returns true to stop early. `note` receives degenerate-case messages.
template <class Visit, class Note>
void sequential_indices(const BeliefChains& chains, const IndexOptions& opts, Visit&& visit, Note&& note) {
    const ExtendedChains ext(chains);
    const int horizon = chains.horizon();
    auto reward = [&](int x0, int x1) { return opts.naive_occupancy ? ext.reward_naive(x0, x1) : ext.reward(x0, x1); };
    auto advanced = [&](int x0, int x1, int omega) {
        return omega == 0 ? reward(x0 + 1, x1) : reward(x0, x1 + 1);
    };
    constexpr double inf = std::numeric_limits<double>::infinity();

    std::array<int, 2> x{1, 1};
    while (x[0] < horizon || x[1] < horizon) {
        const LinearReward current = reward(x[0], x[1]);
        std::array<std::optional<double>, 2> m;
        for (int omega = 0; omega < 2; ++omega) {
            if (x[static_cast<std::size_t>(omega)] < horizon) {
                m[static_cast<std::size_t>(omega)] = try_solve(current, advanced(x[0], x[1], omega));
            }
        }
        if (!m[0] && !m[1]) {
            note("indeterminate subsidy at thresholds (" + std::to_string(x[0]) + "," + std::to_string(x[1]) +
                 "); remaining states get +inf");
            for (int omega = 0; omega < 2; ++omega) {
                for (int u = x[static_cast<std::size_t>(omega)]; u <= horizon; ++u) {
                    if (visit(BeliefStateId{omega, u}, inf)) return;
                }
            }
            return;
        }
        if (m[0] && m[1] && std::abs(*m[0] - *m[1]) <= kSolveTolerance) {
            const double tied = std::min(*m[0], *m[1]);
            if (visit(BeliefStateId{0, x[0]}, tied)) return;
            if (visit(BeliefStateId{1, x[1]}, tied)) return;
            ++x[0];
            ++x[1];
            continue;
        }
        int pick = 0;
        if (!m[0]) pick = 1;
        else if (m[1] && *m[1] < *m[0]) pick = 1;
        const auto ip = static_cast<std::size_t>(pick);
        if (visit(BeliefStateId{pick, x[ip]}, *m[ip])) return;
        ++x[ip];
    }

    // Terminal states: partner policy acts at the clamped virtual state T+1.
    const LinearReward last = reward(horizon, horizon);
    for (int omega = 0; omega < 2; ++omega) {
        const auto m = try_solve(last, advanced(horizon, horizon, omega));
        if (!m) note("indeterminate subsidy for terminal state of chain " + std::to_string(omega) + "; index +inf");
        if (visit(BeliefStateId{omega, horizon}, m.value_or(inf))) return;
    }
}

} // namespace detail

inline WhittleTable compute_index_table(const BeliefChains& chains, const IndexOptions& opts = {}) {
    WhittleTable table(chains.horizon());
    detail::sequential_indices(
        chains, opts,
        [&](BeliefStateId s, double m) {
            table.assign(s, m);
            return false;
        },
        [&](std::string msg) { table.note(std::move(msg)); });
    return table;
}

// Index of a single state; stops the sequential walk as soon as it is assigned.
inline double whittle_on_demand(const BeliefChains& chains, BeliefStateId state) {
    if (state.omega < 0 || state.omega > 1 || state.u < 1 || state.u > chains.horizon()) {
        throw validation_error("belief state outside chain horizon");
    }
    std::optional<double> found;
    detail::sequential_indices(
        chains, IndexOptions{},
        [&](BeliefStateId s, double m) {
            if (s == state) {
                found = m;
                return true;
            }
            return false;
        },
        [](const std::string&) {});
    if (!found) throw numerical_error("sequential walk ended without assigning the requested state");
    return *found;
}

// States where an index decreases along its chain, reported as diagnostics.
inline std::vector<BeliefStateId> monotonicity_violations(const WhittleTable& table, double slack = 1e-12) {
    std::vector<BeliefStateId> out;
    for (int omega = 0; omega < 2; ++omega) {
        for (int u = 1; u < table.horizon(); ++u) {
            if (table.index(omega, u + 1) < table.index(omega, u) - slack) out.push_back({omega, u + 1});
        }
    }
    return out;
}

} // namespace cobandit
