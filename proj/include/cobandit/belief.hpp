#pragma once
// Single-arm model of a collapsing bandit: a binary latent process whose state
// is revealed only when the arm is acted on. Between observations the belief
// that the arm is in the good state (1) evolves deterministically, so every
// reachable belief is indexed by the last observation omega and the number of
// rounds u since it was made. Two chains, one per observation.

#include "cobandit/error.hpp"

#include <array>
#include <cmath>
#include <cstddef>
#include <string>
#include <vector>

namespace cobandit {

enum class Strictness {
    StrictNatural,  // bad->good less likely than staying good; acting helps in both states
    Relaxed,        // only (0,1) membership
};

// Probability of moving to latent state 1, from state 0/1, under the
// passive (p) and active (a) action.
struct RawProbabilities {
    double p01p = 0.0;
    double p11p = 0.0;
    double p01a = 0.0;
    double p11a = 0.0;
};

class TransitionModel {
public:
    double p01p() const noexcept { return p_.p01p; }
    double p11p() const noexcept { return p_.p11p; }
    double p01a() const noexcept { return p_.p01a; }
    double p11a() const noexcept { return p_.p11a; }
    Strictness strictness() const noexcept { return strictness_; }
    const RawProbabilities& raw() const noexcept { return p_; }

    // P(next latent = 1 | current latent, action).
    double to_good(int state, bool active) const noexcept {
        if (active) return state == 1 ? p_.p11a : p_.p01a;
        return state == 1 ? p_.p11p : p_.p01p;
    }

    // Per-step contraction of the passive belief map.
    double passive_drift() const noexcept { return p_.p11p - p_.p01p; }

    friend TransitionModel validate_model(const RawProbabilities&, Strictness);

private:
    TransitionModel(RawProbabilities p, Strictness s) : p_(p), strictness_(s) {}

    RawProbabilities p_;
    Strictness strictness_;
};

inline TransitionModel validate_model(const RawProbabilities& raw, Strictness strictness) {
    const std::array<std::pair<const char*, double>, 4> named{{
        {"p01p", raw.p01p}, {"p11p", raw.p11p}, {"p01a", raw.p01a}, {"p11a", raw.p11a}}};
    for (const auto& [name, v] : named) {
        if (!(v > 0.0 && v < 1.0)) {
            throw validation_error(std::string(name) + " = " + std::to_string(v) +
                                   " outside (0,1): transition probabilities are assumed to be nonzero and below one");
        }
    }
    if (strictness == Strictness::StrictNatural) {
        if (!(raw.p01p < raw.p11p)) throw validation_error("p01p < p11p violated");
        if (!(raw.p01a < raw.p11a)) throw validation_error("p01a < p11a violated");
        if (!(raw.p01p < raw.p01a)) throw validation_error("p01p < p01a violated");
        if (!(raw.p11p < raw.p11a)) throw validation_error("p11p < p11a violated");
    }
    return TransitionModel(raw, strictness);
}

// Fixed point of the one-step passive update b -> b*p11p + (1-b)*p01p.
inline double stationary_belief(const TransitionModel& m) noexcept {
    return m.p01p() / (1.0 + m.p01p() - m.p11p());
}

// Belief after `steps` passive rounds starting from belief b (closed form).
inline double tau(const TransitionModel& m, int steps, double b) noexcept {
    const double star = stationary_belief(m);
    return star + std::pow(m.passive_drift(), steps) * (b - star);
}

struct BeliefStateId {
    int omega = 0;  // last observation
    int u = 1;      // rounds since that observation, 1-based

    friend bool operator==(const BeliefStateId&, const BeliefStateId&) = default;
};

class BeliefChains {
public:
    BeliefChains(const TransitionModel& m, int horizon) : horizon_(horizon) {
        if (horizon < 1) throw validation_error("belief chains need horizon T >= 1");
        b_star_ = stationary_belief(m);
        const std::array<double, 2> heads{m.p01a(), m.p11a()};
        for (int omega = 0; omega < 2; ++omega) {
            auto& chain = values_[static_cast<std::size_t>(omega)];
            chain.resize(static_cast<std::size_t>(horizon));
            for (int u = 1; u <= horizon; ++u) {
                chain[static_cast<std::size_t>(u - 1)] = tau(m, u - 1, heads[static_cast<std::size_t>(omega)]);
            }
        }
    }

    int horizon() const noexcept { return horizon_; }
    double stationary() const noexcept { return b_star_; }

    // b_omega(u) for u in 1..T.
    double belief(int omega, int u) const {
        return values_[static_cast<std::size_t>(omega)][static_cast<std::size_t>(u - 1)];
    }
    double belief(BeliefStateId s) const { return belief(s.omega, s.u); }

    const std::vector<double>& chain(int omega) const {
        return values_[static_cast<std::size_t>(omega)];
    }

private:
    int horizon_;
    double b_star_ = 0.0;
    std::array<std::vector<double>, 2> values_;
};

inline BeliefChains build_chains(const TransitionModel& m, int horizon) {
    return BeliefChains(m, horizon);
}

enum class BeliefTrend {
    NIB,  // both chains non-increasing
    SB,   // chain 1 decays, chain 0 rises toward the stationary belief
};

inline const char* to_string(BeliefTrend t) noexcept {
    return t == BeliefTrend::NIB ? "NIB" : "SB";
}

inline BeliefTrend classify_trend(const BeliefChains& chains) {
    constexpr double slack = 1e-12;
    for (int omega = 0; omega < 2; ++omega) {
        for (int u = 1; u < chains.horizon(); ++u) {
            if (chains.belief(omega, u) < chains.belief(omega, u + 1) - slack) return BeliefTrend::SB;
        }
    }
    return BeliefTrend::NIB;
}

// Sufficient condition for an optimal forward threshold policy at discount beta.
inline bool check_forward_condition(const TransitionModel& m, double beta) {
    if (!(beta >= 0.0 && beta < 1.0)) throw validation_error("discount must lie in [0,1)");
    const double passive_gap = m.p11p() - m.p01p();
    const double active_gap = m.p11a() - m.p01a();
    return passive_gap * (1.0 + beta * active_gap) * (1.0 - beta) >= active_gap;
}

// Sufficient condition for an optimal reverse threshold policy at discount beta.
inline bool check_reverse_condition(const TransitionModel& m, double beta) {
    if (!(beta >= 0.0 && beta < 1.0)) throw validation_error("discount must lie in [0,1)");
    const double passive_gap = m.p11p() - m.p01p();
    const double active_gap = m.p11a() - m.p01a();
    return passive_gap * (1.0 + beta * active_gap / (1.0 - beta)) <= active_gap;
}

} // namespace cobandit
