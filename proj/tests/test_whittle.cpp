#include "cobandit/reference.hpp"
#include "cobandit/random.hpp"
#include "cobandit/verify.hpp"
#include "cobandit/whittle.hpp"
#include "oracles.hpp"

#include <gtest/gtest.h>

#include <cmath>

using namespace cobandit;

namespace {

TransitionModel m1() { return validate_model({0.2, 0.6, 0.5, 0.8}, Strictness::StrictNatural); }

ForwardThresholdPolicy random_policy(std::mt19937_64& g, int horizon) {
    return {1 + static_cast<int>(uniform01(g) * horizon), 1 + static_cast<int>(uniform01(g) * horizon)};
}

} // namespace

TEST(Occupancy, Examples) {
    const auto chains = build_chains(m1(), 2);
    const auto a = occupancy(chains, {1, 1});
    EXPECT_NEAR(a.alpha, 2.0 / 7.0, 1e-15);
    EXPECT_NEAR(a.beta_freq, 5.0 / 7.0, 1e-15);
    const auto b = occupancy(chains, {2, 1});
    EXPECT_NEAR(b.alpha, 0.25, 1e-15);
    EXPECT_NEAR(b.beta_freq, 0.5, 1e-15);
    EXPECT_DOUBLE_EQ(b.frequency({0, 2}), 0.25);
    EXPECT_DOUBLE_EQ(b.frequency({1, 2}), 0.0);
}

TEST(Occupancy, RejectsPolicyOutsideHorizon) {
    const auto chains = build_chains(m1(), 3);
    EXPECT_THROW(occupancy(chains, {0, 1}), Error);
    EXPECT_THROW(occupancy(chains, {1, 4}), Error);
}

TEST(Occupancy, Normalization) {
    auto g = seeded_engine(31, {});
    for (int i = 0; i < 500; ++i) {
        const auto chains = build_chains(sample_uniform_natural(g), 30);
        const auto p = random_policy(g, 30);
        const auto occ = occupancy(chains, p);
        EXPECT_NEAR(p.x0 * occ.alpha + p.x1 * occ.beta_freq, 1.0, 1e-12);
        EXPECT_GE(occ.alpha, 0.0);
        EXPECT_GE(occ.beta_freq, 0.0);
    }
}

TEST(Occupancy, MatchesPowerIterationOfInducedChain) {
    auto g = seeded_engine(32, {});
    for (int i = 0; i < 500; ++i) {
        const auto chains = build_chains(sample_uniform_natural(g), 12);
        const auto p = random_policy(g, 12);
        const auto occ = occupancy(chains, p);
        const auto pi = oracle::induced_stationary(chains, p);
        std::size_t k = 0;
        for (int u = 1; u <= p.x0; ++u) EXPECT_NEAR(pi[k++], occ.alpha, 1e-9);
        for (int u = 1; u <= p.x1; ++u) EXPECT_NEAR(pi[k++], occ.beta_freq, 1e-9);
    }
}

TEST(AverageReward, Examples) {
    const auto chains = build_chains(m1(), 2);
    const auto r11 = avg_reward_linear(chains, {1, 1});
    EXPECT_NEAR(r11.intercept, 5.0 / 7.0, 1e-15);
    EXPECT_NEAR(r11.passive_mass, 0.0, 1e-15);
    const auto r21 = avg_reward_linear(chains, {2, 1});
    EXPECT_NEAR(r21.intercept, 0.625, 1e-15);
    EXPECT_NEAR(r21.passive_mass, 0.25, 1e-15);
    const auto r12 = avg_reward_linear(chains, {1, 2});
    EXPECT_NEAR(r12.intercept, 45.0 / 74.0, 1e-15);
    EXPECT_NEAR(r12.passive_mass, 25.0 / 74.0, 1e-15);
    const auto r22 = avg_reward_linear(chains, {2, 2});
    EXPECT_NEAR(r22.intercept, 6.0 / 11.0, 1e-15);
    EXPECT_NEAR(r22.passive_mass, 0.5, 1e-15);
}

TEST(AverageReward, LinearInSubsidy) {
    auto g = seeded_engine(33, {});
    for (int i = 0; i < 200; ++i) {
        const auto chains = build_chains(sample_uniform_natural(g), 10);
        const auto p = random_policy(g, 10);
        const auto lin = avg_reward_linear(chains, p);
        EXPECT_GE(lin.passive_mass, -1e-15);
        EXPECT_LE(lin.passive_mass, 1.0);
        EXPECT_GE(lin.intercept, 0.0);
        EXPECT_LE(lin.intercept, 1.0);
        const auto occ = occupancy(chains, p);
        for (double m : {-1.0, 0.0, 1.0, 2.0}) {
            double direct = 0.0;
            for (int omega = 0; omega < 2; ++omega) {
                for (int u = 1; u <= p.threshold(omega); ++u) {
                    const bool passive = u < p.threshold(omega);
                    direct += occ.frequency({omega, u}) * (chains.belief(omega, u) + (passive ? m : 0.0));
                }
            }
            EXPECT_NEAR(direct, lin.at(m), 1e-12);
            EXPECT_NEAR(oracle::induced_average_reward(chains, p, m), lin.at(m), 1e-9);
        }
    }
}

TEST(SolveSubsidy, Examples) {
    const auto chains = build_chains(m1(), 2);
    EXPECT_NEAR(solve_subsidy(chains, {1, 1}, {2, 1}), 5.0 / 14.0, 1e-12);
    EXPECT_NEAR(solve_subsidy(chains, {1, 1}, {1, 2}), 11.0 / 35.0, 1e-12);
    EXPECT_NEAR(solve_subsidy(chains, {1, 2}, {2, 2}), 17.0 / 44.0, 1e-12);
}

TEST(SolveSubsidy, AgreesWithGridCrossing) {
    const auto chains = build_chains(m1(), 2);
    const double m = solve_subsidy(chains, {1, 1}, {2, 1});
    EXPECT_LT(oracle::induced_average_reward(chains, {2, 1}, m - 1e-6), oracle::induced_average_reward(chains, {1, 1}, m - 1e-6));
    EXPECT_GT(oracle::induced_average_reward(chains, {2, 1}, m + 1e-6), oracle::induced_average_reward(chains, {1, 1}, m + 1e-6));
}

TEST(SolveSubsidy, ParallelLinesAreIndeterminate) {
    try {
        solve_subsidy(LinearReward{0.5, 0.25}, LinearReward{0.4, 0.25});
        FAIL() << "expected indeterminate solve";
    } catch (const Error& e) {
        EXPECT_EQ(e.kind(), ErrorKind::Numerical);
    }
    EXPECT_THROW(solve_subsidy(build_chains(m1(), 2), {1, 1}, {1, 1}), Error);
}

TEST(IndexTable, HandTraceOfM1) {
    const auto table = compute_index_table(build_chains(m1(), 2));
    ASSERT_GE(table.trace().size(), 2u);
    EXPECT_EQ(table.trace()[0].state, (BeliefStateId{1, 1}));
    EXPECT_NEAR(table.trace()[0].index, 11.0 / 35.0, 1e-12);
    EXPECT_EQ(table.trace()[1].state, (BeliefStateId{0, 1}));
    EXPECT_NEAR(table.trace()[1].index, 17.0 / 44.0, 1e-12);
    EXPECT_LE(table.trace()[0].index, table.trace()[1].index);
    EXPECT_EQ(table.trace().size(), 4u);
    for (int omega = 0; omega < 2; ++omega) {
        for (int u = 1; u <= 2; ++u) EXPECT_TRUE(std::isfinite(table.index(omega, u)));
    }
    EXPECT_TRUE(table.diagnostics().empty());
}

TEST(IndexTable, EnumerationBracketsHandTrace) {
    const auto chains = build_chains(m1(), 2);
    EXPECT_EQ(enumerate_threshold_policies(chains, 0.32).best, (ForwardThresholdPolicy{1, 2}));
    EXPECT_EQ(enumerate_threshold_policies(chains, 0.35).best, (ForwardThresholdPolicy{1, 2}));
    EXPECT_EQ(enumerate_threshold_policies(chains, 0.40).best, (ForwardThresholdPolicy{2, 2}));
    EXPECT_EQ(enumerate_threshold_policies(chains, 0.30).best, (ForwardThresholdPolicy{1, 1}));
}

TEST(IndexTable, SingleStateHorizonUsesTerminalRule) {
    const auto table = compute_index_table(build_chains(m1(), 1));
    EXPECT_EQ(table.trace().size(), 2u);
    EXPECT_TRUE(std::isfinite(table.index(0, 1)));
    EXPECT_TRUE(std::isfinite(table.index(1, 1)));
}

TEST(IndexTable, PrefixSumsMatchNaiveRecomputation) {
    auto g = seeded_engine(34, {});
    for (int i = 0; i < 100; ++i) {
        const auto chains = build_chains(sample_uniform_natural(g), 25);
        const auto fast = compute_index_table(chains);
        const auto naive = compute_index_table(chains, IndexOptions{true});
        ASSERT_EQ(fast.trace().size(), naive.trace().size());
        for (int omega = 0; omega < 2; ++omega) {
            for (int u = 1; u <= 25; ++u) EXPECT_NEAR(fast.index(omega, u), naive.index(omega, u), 1e-9);
        }
    }
}

TEST(IndexTable, AssignmentsSolveAdjacentPolicies) {
    // Replays the trace: each state's index must equalise its threshold policy
    // and the one with that threshold advanced by exactly one.
    auto g = seeded_engine(35, {});
    for (int i = 0; i < 50; ++i) {
        const int horizon = 15;
        const auto chains = build_chains(sample_guaranteed_model(g, 0.2, horizon), horizon);
        const auto table = compute_index_table(chains);
        ForwardThresholdPolicy x{1, 1};
        for (const auto& a : table.trace()) {
            if (a.state.u == horizon) break;
            ASSERT_EQ(a.state.u, x.threshold(a.state.omega));
            ForwardThresholdPolicy next = x;
            (a.state.omega == 0 ? next.x0 : next.x1) += 1;
            EXPECT_NEAR(avg_reward_linear(chains, x).at(a.index), avg_reward_linear(chains, next).at(a.index), 1e-12);
            x = next;
        }
    }
}

TEST(IndexTable, EveryStateGetsAFiniteIndex) {
    auto g = seeded_engine(36, {});
    for (int i = 0; i < 200; ++i) {
        const auto table = compute_index_table(build_chains(sample_uniform_natural(g), 40));
        EXPECT_EQ(table.trace().size(), 80u);
        for (int omega = 0; omega < 2; ++omega) {
            for (int u = 1; u <= 40; ++u) EXPECT_TRUE(std::isfinite(table.index(omega, u)));
        }
    }
}

TEST(IndexTable, MatchesEnumerationOnGuaranteedArms) {
    // Just below a state's index the best threshold policy acts there; just above it does not.
    auto g = seeded_engine(37, {});
    constexpr double delta = 1e-7;
    for (int i = 0; i < 40; ++i) {
        const int horizon = 2 + static_cast<int>(uniform01(g) * 11);
        const auto chains = build_chains(sample_guaranteed_model(g, 0.2, horizon), horizon);
        const auto table = compute_index_table(chains);
        for (int omega = 0; omega < 2; ++omega) {
            for (int u = 1; u < horizon; ++u) {
                const double w = table.index(omega, u);
                EXPECT_LE(enumerate_threshold_policies(chains, w - delta).best.threshold(omega), u);
                EXPECT_GT(enumerate_threshold_policies(chains, w + delta).best.threshold(omega), u);
            }
        }
        // Very negative subsidy: act at both heads.
        EXPECT_EQ(enumerate_threshold_policies(chains, table.trace().front().index - 1.0).best, (ForwardThresholdPolicy{1, 1}));
    }
}

TEST(IndexTable, GuaranteedArmsHaveNonDecreasingIndices) {
    // Interior states only: the terminal index uses the clamped virtual state and
    // may sit slightly below its predecessor. Slack covers solve round-off.
    auto g = seeded_engine(38, {});
    int violating_arms = 0;
    for (int i = 0; i < 200; ++i) {
        const auto chains = build_chains(sample_guaranteed_model(g, 0.2, 40), 40);
        const auto table = compute_index_table(chains);
        bool violated = false;
        for (const auto& s : monotonicity_violations(table, 1e-9)) violated = violated || s.u < 40;
        violating_arms += violated ? 1 : 0;
        for (std::size_t k = 1; k < table.trace().size(); ++k) {
            if (table.trace()[k].state.u == 40) break;
            EXPECT_LE(table.trace()[k - 1].index, table.trace()[k].index + 1e-9);
        }
    }
    EXPECT_EQ(violating_arms, 0);
}

TEST(WhittleOnDemand, Examples) {
    const auto chains = build_chains(m1(), 2);
    EXPECT_NEAR(whittle_on_demand(chains, {1, 1}), 11.0 / 35.0, 1e-12);
    EXPECT_NEAR(whittle_on_demand(chains, {0, 1}), 17.0 / 44.0, 1e-12);
    EXPECT_THROW(whittle_on_demand(chains, {0, 3}), Error);
}

TEST(WhittleOnDemand, EqualsTableEntries) {
    auto g = seeded_engine(39, {});
    for (int i = 0; i < 100; ++i) {
        const auto chains = build_chains(sample_uniform_natural(g), 20);
        const auto table = compute_index_table(chains);
        for (int omega = 0; omega < 2; ++omega) {
            for (int u = 1; u <= 20; ++u) EXPECT_EQ(whittle_on_demand(chains, {omega, u}), table.index(omega, u));
        }
    }
}

TEST(IndexTable, DegenerateSolvesFallBackToInfinity) {
    // Nearly identical rows: adjacent policies differ by round-off only.
    const auto near_one = validate_model({0.5, 0.5 + 1e-13, 0.5, 0.5 + 1e-13}, Strictness::Relaxed);
    const auto table = compute_index_table(build_chains(near_one, 5));
    for (int omega = 0; omega < 2; ++omega) {
        for (int u = 1; u <= 5; ++u) EXPECT_FALSE(std::isnan(table.index(omega, u)));
    }
}
