#pragma once
// Slow reference computations for a single arm.
//
// These solve the subsidized discounted belief MDP directly, with no threshold
// assumption: passive moves (omega, u) -> (omega, min(u+1, T)) and earns b + m;
// active earns b and jumps to the head of chain 1 with probability b, else to
// the head of chain 0. The last state of each chain self-loops when passive,
// i.e. beliefs are clamped at b_omega(T).
//
// They serve as the "reference" baseline policy and as oracles for the
// threshold engine in whittle.hpp.

#include "cobandit/belief.hpp"
#include "cobandit/error.hpp"
#include "cobandit/whittle.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <cstddef>
#include <limits>
#include <string>
#include <utility>
#include <vector>

namespace cobandit {

inline constexpr double kStrictMargin = 1e-9;

// Smallest truncation T with |p11p - p01p|^T <= eps, clamped to [lo, hi].
// Chains cut before they have mixed freeze their last belief away from b*,
// which can fabricate action switches that vanish at longer horizons.
inline int mixing_horizon(const TransitionModel& m, double eps = 1e-10, int lo = 40, int hi = 5000) {
    const double d = std::abs(m.passive_drift());
    if (d <= 0.0) return lo;
    if (d >= 1.0) return hi;
    const double t = std::ceil(std::log(eps) / std::log(d));
    if (!(t < static_cast<double>(hi))) return hi;
    return std::max(lo, static_cast<int>(t));
}

// Value of every truncated belief state under subsidy m and discount beta.
struct ValueTable {
    int horizon = 0;
    double subsidy = 0.0;
    double discount = 0.0;
    std::array<std::vector<double>, 2> value;
    std::array<std::vector<double>, 2> passive_q;
    std::array<std::vector<double>, 2> active_q;
    int iterations = 0;
    double residual = 0.0;

    double v(BeliefStateId s) const { return value[idx(s.omega)][idx(s.u - 1)]; }
    // Passive minus active action value; positive means passive is better.
    double gap(BeliefStateId s) const {
        return passive_q[idx(s.omega)][idx(s.u - 1)] - active_q[idx(s.omega)][idx(s.u - 1)];
    }
    bool active(BeliefStateId s) const { return gap(s) < 0.0; }

private:
    static std::size_t idx(int i) { return static_cast<std::size_t>(i); }
};

namespace detail {

inline void check_discount(double beta) {
    if (!(beta >= 0.0 && beta < 1.0)) throw validation_error("discount must lie in [0,1)");
}

inline int iteration_cap(double tol, double beta, double subsidy) {
    constexpr int margin = 100;
    if (beta <= 0.0) return margin;
    const double scale = tol * (1.0 - beta) / (1.0 + std::abs(subsidy));
    return static_cast<int>(std::ceil(std::log(scale) / std::log(beta))) + margin;
}

// Truncated belief MDP with the subsidy left as a parameter.
class BeliefMdp {
public:
    BeliefMdp(const TransitionModel& model, double beta, int horizon)
        : chains_(model, horizon), beta_(beta), horizon_(horizon) {
        check_discount(beta);
        if (horizon < 2) throw validation_error("reference solver needs T >= 2");
    }

    int horizon() const noexcept { return horizon_; }
    double beta() const noexcept { return beta_; }
    const BeliefChains& chains() const noexcept { return chains_; }

    // Fills Q-values from a value vector.
    void q_values(const std::array<std::vector<double>, 2>& v, double m, ValueTable& out) const {
        const double head0 = v[0][0];
        const double head1 = v[1][0];
        for (std::size_t w = 0; w < 2; ++w) {
            for (int u = 1; u <= horizon_; ++u) {
                const auto i = static_cast<std::size_t>(u - 1);
                const double b = chains_.belief(static_cast<int>(w), u);
                const double next = v[w][static_cast<std::size_t>(std::min(u + 1, horizon_) - 1)];
                out.passive_q[w][i] = b + m + beta_ * next;
                out.active_q[w][i] = b + beta_ * (b * head1 + (1.0 - b) * head0);
            }
        }
    }

    // Exact value of a fixed stationary policy. Along each chain the value is
    // affine in the two head values, which closes as a 2x2 system.
    void evaluate(const std::array<std::vector<char>, 2>& act, double m, std::array<std::vector<double>, 2>& v) const {
        std::array<std::vector<double>, 2> c, g1, g0;
        for (std::size_t w = 0; w < 2; ++w) {
            c[w].assign(static_cast<std::size_t>(horizon_), 0.0);
            g1[w] = c[w];
            g0[w] = c[w];
            for (int u = horizon_; u >= 1; --u) {
                const auto i = static_cast<std::size_t>(u - 1);
                const double b = chains_.belief(static_cast<int>(w), u);
                if (act[w][i]) {
                    c[w][i] = b;
                    g1[w][i] = beta_ * b;
                    g0[w][i] = beta_ * (1.0 - b);
                } else if (u == horizon_) {
                    c[w][i] = (b + m) / (1.0 - beta_);
                } else {
                    c[w][i] = b + m + beta_ * c[w][i + 1];
                    g1[w][i] = beta_ * g1[w][i + 1];
                    g0[w][i] = beta_ * g0[w][i + 1];
                }
            }
        }
        // [1-g1_1  -g0_1] [H1]   [c_1]
        // [-g1_0  1-g0_0] [H0] = [c_0]
        const double a11 = 1.0 - g1[1][0], a12 = -g0[1][0];
        const double a21 = -g1[0][0], a22 = 1.0 - g0[0][0];
        const double det = a11 * a22 - a12 * a21;
        if (!(std::abs(det) > 1e-300)) throw numerical_error("singular head system in policy evaluation");
        const double h1 = (c[1][0] * a22 - a12 * c[0][0]) / det;
        const double h0 = (a11 * c[0][0] - a21 * c[1][0]) / det;
        for (std::size_t w = 0; w < 2; ++w) {
            v[w].resize(static_cast<std::size_t>(horizon_));
            for (std::size_t i = 0; i < v[w].size(); ++i) v[w][i] = c[w][i] + g1[w][i] * h1 + g0[w][i] * h0;
        }
    }

    // Howard policy iteration; `act` is used as the starting policy and
    // holds the optimal one on return.
    ValueTable solve(double m, double tol, std::array<std::vector<char>, 2>& act) const {
        for (auto& a : act) a.resize(static_cast<std::size_t>(horizon_), m < 0.0 ? 1 : 0);
        ValueTable out = blank(m);
        const int cap = iteration_cap(tol, beta_, m);
        for (int it = 1;; ++it) {
            evaluate(act, m, out.value);
            q_values(out.value, m, out);
            double scale = 1.0;
            for (const auto& row : out.value) {
                for (double x : row) scale = std::max(scale, std::abs(x));
            }
            const double eps = 1e-13 * scale;
            bool changed = false;
            for (std::size_t w = 0; w < 2; ++w) {
                for (std::size_t i = 0; i < act[w].size(); ++i) {
                    const double d = out.active_q[w][i] - out.passive_q[w][i];
                    if (act[w][i] && d < -eps) {
                        act[w][i] = 0;
                        changed = true;
                    } else if (!act[w][i] && d > eps) {
                        act[w][i] = 1;
                        changed = true;
                    }
                }
            }
            out.iterations = it;
            if (!changed) break;
            if (it >= cap) throw numerical_error("policy iteration did not converge within cap");
        }
        out.residual = bellman_residual(out);
        if (!(out.residual < tol)) {
            throw numerical_error("Bellman residual " + std::to_string(out.residual) + " above tolerance");
        }
        return out;
    }

    ValueTable blank(double m) const {
        ValueTable out;
        out.horizon = horizon_;
        out.subsidy = m;
        out.discount = beta_;
        for (std::size_t w = 0; w < 2; ++w) {
            out.value[w].assign(static_cast<std::size_t>(horizon_), 0.0);
            out.passive_q[w] = out.value[w];
            out.active_q[w] = out.value[w];
        }
        return out;
    }

    static double bellman_residual(const ValueTable& t) {
        double r = 0.0;
        for (std::size_t w = 0; w < 2; ++w) {
            for (std::size_t i = 0; i < t.value[w].size(); ++i) {
                r = std::max(r, std::abs(std::max(t.passive_q[w][i], t.active_q[w][i]) - t.value[w][i]));
            }
        }
        return r;
    }

private:
    BeliefChains chains_;
    double beta_;
    int horizon_;
};

enum class SearchStatus { Found, AlwaysPassive, AlwaysActive };

struct SearchResult {
    double index = 0.0;
    SearchStatus status = SearchStatus::Found;
};

// Smallest m with gap(m) >= 0. Bracket starts at [-2, 2] and doubles outward.
template <class Gap>
SearchResult bisect_subsidy(Gap&& gap, double tol) {
    constexpr int max_doublings = 10;
    double lo = -2.0, hi = 2.0;
    int doublings = 0;
    while (gap(lo) >= 0.0) {
        if (++doublings > max_doublings) return {lo, SearchStatus::AlwaysPassive};
        hi = lo;
        lo *= 2.0;
    }
    while (gap(hi) < 0.0) {
        if (++doublings > max_doublings) return {hi, SearchStatus::AlwaysActive};
        lo = hi;
        hi *= 2.0;
    }
    while (hi - lo >= tol) {
        const double mid = 0.5 * (lo + hi);
        if (gap(mid) >= 0.0) hi = mid;
        else lo = mid;
    }
    return {0.5 * (lo + hi), SearchStatus::Found};
}

inline void check_state(BeliefStateId s, int horizon) {
    if (s.omega < 0 || s.omega > 1 || s.u < 1 || s.u > horizon) {
        throw validation_error("belief state outside truncation horizon");
    }
}

} // namespace detail

// Optimal value table of the subsidized problem, solved by policy iteration
// with exact per-policy evaluation.
inline ValueTable solve_value_function(const TransitionModel& model, double subsidy, double beta, int horizon,
                                       double tol = kStrictMargin) {
    if (!(tol > 0.0)) throw validation_error("tolerance must be positive");
    const detail::BeliefMdp mdp(model, beta, horizon);
    std::array<std::vector<char>, 2> act;
    return mdp.solve(subsidy, tol, act);
}

// Plain successive approximation of the Bellman equation from V = 0.
inline ValueTable value_iteration(const TransitionModel& model, double subsidy, double beta, int horizon,
                                  double tol = kStrictMargin) {
    if (!(tol > 0.0)) throw validation_error("tolerance must be positive");
    const detail::BeliefMdp mdp(model, beta, horizon);
    ValueTable t = mdp.blank(subsidy);
    const int cap = detail::iteration_cap(tol, beta, subsidy);
    for (int it = 1; it <= cap; ++it) {
        mdp.q_values(t.value, subsidy, t);
        double residual = 0.0;
        for (std::size_t w = 0; w < 2; ++w) {
            for (std::size_t i = 0; i < t.value[w].size(); ++i) {
                const double next = std::max(t.passive_q[w][i], t.active_q[w][i]);
                residual = std::max(residual, std::abs(next - t.value[w][i]));
                t.value[w][i] = next;
            }
        }
        t.iterations = it;
        if (residual < tol) {
            mdp.q_values(t.value, subsidy, t);
            t.residual = detail::BeliefMdp::bellman_residual(t);
            return t;
        }
    }
    throw numerical_error("value iteration did not converge within " + std::to_string(cap) + " sweeps");
}

// Subsidy at which passive and active are equally good in `state`, by
// bisection over exact solves of the subsidized problem.
inline double reference_whittle(const TransitionModel& model, BeliefStateId state, double beta, int horizon,
                                double tol) {
    const detail::BeliefMdp mdp(model, beta, horizon);
    detail::check_state(state, horizon);
    std::array<std::vector<char>, 2> act;
    const auto r = detail::bisect_subsidy(
        [&](double m) { return mdp.solve(m, kStrictMargin, act).gap(state); }, tol);
    if (r.status != detail::SearchStatus::Found) {
        throw numerical_error("no sign change of the action gap at (" + std::to_string(state.omega) + "," +
                              std::to_string(state.u) + ") after 10 bracket doublings");
    }
    return r.index;
}

// Reference index for all 2T states. States whose action never switches get
// -inf (always passive) or +inf (always active) and a diagnostic.
inline WhittleTable reference_index_table(const TransitionModel& model, double beta, int horizon, double tol) {
    const detail::BeliefMdp mdp(model, beta, horizon);
    WhittleTable table(horizon);
    std::array<std::vector<char>, 2> act;
    for (int omega = 0; omega < 2; ++omega) {
        for (int u = 1; u <= horizon; ++u) {
            const BeliefStateId s{omega, u};
            const auto r = detail::bisect_subsidy([&](double m) { return mdp.solve(m, kStrictMargin, act).gap(s); },
                                                  tol);
            double w = r.index;
            if (r.status == detail::SearchStatus::AlwaysPassive) {
                w = -std::numeric_limits<double>::infinity();
                table.note("state (" + std::to_string(omega) + "," + std::to_string(u) + ") passive at every probe");
            } else if (r.status == detail::SearchStatus::AlwaysActive) {
                w = std::numeric_limits<double>::infinity();
                table.note("state (" + std::to_string(omega) + "," + std::to_string(u) + ") active at every probe");
            }
            table.assign(s, w);
        }
    }
    return table;
}

struct EnumerationResult {
    ForwardThresholdPolicy best;
    double value = 0.0;
};

inline constexpr int kMaxEnumerationHorizon = 64;

// Exhaustive maximisation of J_m over all T^2 forward threshold policies.
// Ties go to the lexicographically smaller (x0, x1).
inline EnumerationResult enumerate_threshold_policies(const BeliefChains& chains, double subsidy) {
    if (chains.horizon() > kMaxEnumerationHorizon) {
        throw validation_error("enumeration limited to T <= " + std::to_string(kMaxEnumerationHorizon));
    }
    EnumerationResult out;
    bool first = true;
    for (int x0 = 1; x0 <= chains.horizon(); ++x0) {
        for (int x1 = 1; x1 <= chains.horizon(); ++x1) {
            const double j = avg_reward_linear(chains, {x0, x1}).at(subsidy);
            if (first || j > out.value + 1e-12) {
                out = {{x0, x1}, j};
                first = false;
            }
        }
    }
    return out;
}

enum class PolicyShape { Forward, Reverse, Dual, Other, AllPassive, AllActive };

inline const char* to_string(PolicyShape s) noexcept {
    switch (s) {
    case PolicyShape::Forward: return "forward";
    case PolicyShape::Reverse: return "reverse";
    case PolicyShape::Dual: return "dual";
    case PolicyShape::Other: return "other";
    case PolicyShape::AllPassive: return "all_passive";
    case PolicyShape::AllActive: return "all_active";
    }
    return "?";
}

// Shape of an action pattern listed by increasing belief. Entries are
// +1 active, -1 passive, 0 indifferent (ignored).
inline PolicyShape shape_of_pattern(const std::vector<int>& by_belief) {
    std::vector<int> runs;
    for (int a : by_belief) {
        if (a == 0) continue;
        if (runs.empty() || runs.back() != a) runs.push_back(a);
    }
    if (runs.empty()) return PolicyShape::AllPassive;
    if (runs.size() == 1) return runs[0] > 0 ? PolicyShape::AllActive : PolicyShape::AllPassive;
    if (runs.size() == 2) return runs[0] > 0 ? PolicyShape::Forward : PolicyShape::Reverse;
    if (runs.size() == 3 && runs[0] < 0) return PolicyShape::Dual;
    return PolicyShape::Other;
}

// Reads the optimal actions off an exact solve, orders the 2T states by
// belief (merging ties at 1e-12) and names the resulting pattern. Actions
// whose margin is within `tol` count as indifferent.
inline PolicyShape classify_policy_shape(const TransitionModel& model, double subsidy, double beta, int horizon,
                                         double tol = kStrictMargin) {
    const ValueTable vt = solve_value_function(model, subsidy, beta, horizon, tol);
    const BeliefChains chains(model, horizon);
    struct Entry {
        double belief;
        int action;
    };
    std::vector<Entry> entries;
    entries.reserve(static_cast<std::size_t>(2 * horizon));
    for (int omega = 0; omega < 2; ++omega) {
        for (int u = 1; u <= horizon; ++u) {
            const BeliefStateId s{omega, u};
            const double g = vt.gap(s);
            entries.push_back({chains.belief(s), g > tol ? -1 : (g < -tol ? 1 : 0)});
        }
    }
    std::stable_sort(entries.begin(), entries.end(), [](const Entry& a, const Entry& b) { return a.belief < b.belief; });
    std::vector<int> pattern;
    for (std::size_t i = 0; i < entries.size();) {
        // A tied group with conflicting strict actions is treated as indifferent.
        int action = 0;
        bool conflict = false;
        std::size_t j = i;
        for (; j < entries.size() && entries[j].belief - entries[i].belief <= 1e-12; ++j) {
            const int a = entries[j].action;
            if (a == 0) continue;
            if (action == 0) action = a;
            else if (action != a) conflict = true;
        }
        pattern.push_back(conflict ? 0 : action);
        i = j;
    }
    return shape_of_pattern(pattern);
}

struct IndexabilityReport {
    std::vector<double> subsidies;
    std::vector<int> passive_set_size;
    bool monotone = true;
    // First grid position whose passive set is not a superset of the previous one.
    int first_violation = -1;
};

inline IndexabilityReport check_indexability(const TransitionModel& model, double beta,
                                             const std::vector<double>& m_grid, int horizon,
                                             double tol = kStrictMargin) {
    if (m_grid.empty() || !std::is_sorted(m_grid.begin(), m_grid.end())) {
        throw validation_error("subsidy grid must be non-empty and ascending");
    }
    if (m_grid.front() > -2.0 || m_grid.back() < 2.0) throw validation_error("subsidy grid must span [-2, 2]");
    const detail::BeliefMdp mdp(model, beta, horizon);
    IndexabilityReport rep;
    rep.subsidies = m_grid;
    std::array<std::vector<char>, 2> act;
    std::vector<char> prev;
    for (std::size_t k = 0; k < m_grid.size(); ++k) {
        const ValueTable vt = mdp.solve(m_grid[k], tol, act);
        std::vector<char> passive;
        passive.reserve(static_cast<std::size_t>(2 * horizon));
        int count = 0;
        for (int omega = 0; omega < 2; ++omega) {
            for (int u = 1; u <= horizon; ++u) {
                const bool p = vt.gap({omega, u}) > tol;
                passive.push_back(p ? 1 : 0);
                count += p ? 1 : 0;
            }
        }
        if (!prev.empty() && rep.monotone) {
            for (std::size_t i = 0; i < passive.size(); ++i) {
                if (prev[i] && !passive[i]) {
                    rep.monotone = false;
                    rep.first_violation = static_cast<int>(k);
                    break;
                }
            }
        }
        rep.passive_set_size.push_back(count);
        prev = std::move(passive);
    }
    return rep;
}

// Indices of latent states {0, 1} in the fully observed two-state problem
// (reward = latent state), used by the oracle policy.
struct FullObservationIndex {
    std::array<double, 2> index{};
};

namespace detail {

// Optimal Q-gap (passive minus active) of the fully observed arm at subsidy m.
// Every deterministic policy is evaluated exactly; V* is their pointwise max.
inline std::array<double, 2> full_observation_gap(const TransitionModel& model, double m, double beta) {
    std::array<double, 2> best{-std::numeric_limits<double>::infinity(), -std::numeric_limits<double>::infinity()};
    for (int mask = 0; mask < 4; ++mask) {
        std::array<double, 2> r{}, p1{};
        for (int s = 0; s < 2; ++s) {
            const bool active = (mask >> s) & 1;
            r[static_cast<std::size_t>(s)] = s + (active ? 0.0 : m);
            p1[static_cast<std::size_t>(s)] = model.to_good(s, active);
        }
        // (I - beta P) V = r with P rows [1-p1, p1].
        const double a11 = 1.0 - beta * (1.0 - p1[0]), a12 = -beta * p1[0];
        const double a21 = -beta * (1.0 - p1[1]), a22 = 1.0 - beta * p1[1];
        const double det = a11 * a22 - a12 * a21;
        const double v0 = (r[0] * a22 - a12 * r[1]) / det;
        const double v1 = (a11 * r[1] - a21 * r[0]) / det;
        best[0] = std::max(best[0], v0);
        best[1] = std::max(best[1], v1);
    }
    std::array<double, 2> gap{};
    for (int s = 0; s < 2; ++s) {
        auto q = [&](bool active) {
            const double p = model.to_good(s, active);
            return s + (active ? 0.0 : m) + beta * ((1.0 - p) * best[0] + p * best[1]);
        };
        gap[static_cast<std::size_t>(s)] = q(false) - q(true);
    }
    return gap;
}

} // namespace detail

inline FullObservationIndex full_observation_whittle(const TransitionModel& model, double beta, double tol) {
    detail::check_discount(beta);
    FullObservationIndex out;
    for (int s = 0; s < 2; ++s) {
        const auto r = detail::bisect_subsidy(
            [&](double m) { return detail::full_observation_gap(model, m, beta)[static_cast<std::size_t>(s)]; }, tol);
        if (r.status != detail::SearchStatus::Found) {
            throw numerical_error("fully observed index: no sign change for latent state " + std::to_string(s));
        }
        out.index[static_cast<std::size_t>(s)] = r.index;
    }
    return out;
}

} // namespace cobandit
