#include "cobandit/cohort_io.hpp"
#include "cobandit/generators.hpp"
#include "cobandit/report.hpp"

#include <gtest/gtest.h>

#include <cmath>
#include <sstream>

using namespace cobandit;

namespace {

std::vector<CohortEntry> parse(const std::string& text, Strictness s = Strictness::StrictNatural) {
    std::istringstream in(text);
    return parse_cohort(in, s, "test.csv");
}

std::string parse_error(const std::string& text, Strictness s = Strictness::StrictNatural) {
    try {
        parse(text, s);
    } catch (const Error& e) {
        EXPECT_EQ(e.kind(), ErrorKind::Validation);
        return e.what();
    }
    return {};
}

bool contains(const std::string& haystack, const std::string& needle) { return haystack.find(needle) != std::string::npos; }

} // namespace

TEST(Ingest, SingleRow) {
    const auto c = parse("arm_id,p01p,p11p,p01a,p11a\nm1,0.2,0.6,0.5,0.8\n");
    ASSERT_EQ(c.size(), 1u);
    EXPECT_EQ(c[0].arm_id, "m1");
    EXPECT_DOUBLE_EQ(c[0].model.p01a(), 0.5);
}

TEST(Ingest, ToleratesWhitespaceAndBlankLines) {
    const auto c = parse("arm_id, p01p, p11p, p01a, p11a\r\n\n a , 0.2 ,0.6,0.5,0.8\r\nb,0.1,0.5,0.3,0.9\n");
    ASSERT_EQ(c.size(), 2u);
    EXPECT_EQ(c[0].arm_id, "a");
    EXPECT_EQ(c[1].arm_id, "b");
}

TEST(Ingest, ZeroProbabilityIsRejected) {
    const auto msg = parse_error("arm_id,p01p,p11p,p01a,p11a\nx,0,0.6,0.5,0.8\n", Strictness::Relaxed);
    EXPECT_TRUE(contains(msg, "assumed to be nonzero")) << msg;
    EXPECT_TRUE(contains(msg, "test.csv:2")) << msg;
    EXPECT_TRUE(contains(msg, "'x'")) << msg;
}

TEST(Ingest, DuplicateIdsAreRejected) {
    const auto msg = parse_error("arm_id,p01p,p11p,p01a,p11a\na,0.2,0.6,0.5,0.8\na,0.2,0.6,0.5,0.8\n");
    EXPECT_TRUE(contains(msg, "duplicate")) << msg;
    EXPECT_TRUE(contains(msg, "test.csv:3")) << msg;
}

TEST(Ingest, ReportsLineOfBadRow) {
    const std::string head = "arm_id,p01p,p11p,p01a,p11a\na,0.2,0.6,0.5,0.8\n";
    EXPECT_TRUE(contains(parse_error(head + "b,0.2,0.6,0.5\n"), "test.csv:3"));
    EXPECT_TRUE(contains(parse_error(head + "b,0.2,zero,0.5,0.8\n"), "not a number"));
    EXPECT_TRUE(contains(parse_error(head + "b,0.6,0.2,0.5,0.8\n"), "p01p < p11p violated"));
}

TEST(Ingest, HeaderIsMandatory) {
    EXPECT_TRUE(contains(parse_error("a,0.2,0.6,0.5,0.8\n"), "header"));
    EXPECT_TRUE(contains(parse_error("arm,p01p,p11p,p01a,p11a\n"), "header"));
    EXPECT_TRUE(contains(parse_error(""), "missing header"));
}

TEST(Ingest, RelaxedAcceptsWhatStrictRejects) {
    const std::string text = "arm_id,p01p,p11p,p01a,p11a\nr,0.7,0.3,0.6,0.2\n";
    EXPECT_FALSE(parse_error(text).empty());
    EXPECT_EQ(parse(text, Strictness::Relaxed).size(), 1u);
}

TEST(Ingest, MissingFileIsValidationError) {
    try {
        ingest_cohort("/nonexistent/cohort.csv", Strictness::StrictNatural);
        FAIL();
    } catch (const Error& e) {
        EXPECT_EQ(e.kind(), ErrorKind::Validation);
    }
}

TEST(Emit, RoundTripReproducesModelsAtTwelveDigits) {
    GeneratorSpec spec;
    spec.count = 500;
    spec.seed = 77;
    const auto cohort = number_arms(generate_cohort(spec));
    std::ostringstream out;
    emit_cohort(out, cohort);
    std::istringstream in(out.str());
    const auto back = parse_cohort(in, Strictness::StrictNatural);
    ASSERT_EQ(back.size(), cohort.size());
    for (std::size_t i = 0; i < cohort.size(); ++i) {
        EXPECT_EQ(back[i].arm_id, cohort[i].arm_id);
        EXPECT_EQ(format_number(back[i].model.p01p()), format_number(cohort[i].model.p01p()));
        EXPECT_EQ(format_number(back[i].model.p11a()), format_number(cohort[i].model.p11a()));
        EXPECT_NEAR(back[i].model.p11p(), cohort[i].model.p11p(), 1e-12);
    }
    // A second round trip is exact.
    std::ostringstream again;
    emit_cohort(again, back);
    EXPECT_EQ(again.str(), out.str());
}

TEST(FormatNumber, Examples) {
    EXPECT_EQ(format_number(0.5), "0.5");
    EXPECT_EQ(format_number(1.0 / 3.0), "0.333333333333");
    EXPECT_EQ(format_number(std::numeric_limits<double>::infinity()), "inf");
    EXPECT_EQ(format_number(-std::numeric_limits<double>::infinity()), "-inf");
}

TEST(IndexCsv, RowsPerState) {
    const auto m = validate_model({0.2, 0.6, 0.5, 0.8}, Strictness::StrictNatural);
    std::ostringstream out;
    write_index_header(out);
    write_index_rows(out, "m1", compute_index_table(BeliefChains(m, 2)));
    EXPECT_EQ(out.str(),
              "arm_id,omega,u,index\nm1,0,1,0.386363636364\nm1,0,2,0.290909090909\nm1,1,1,0.314285714286\n"
              "m1,1,2," + format_number(compute_index_table(BeliefChains(m, 2)).index(1, 2)) + "\n");
}

TEST(Perturb, Examples) {
    const auto m = perturb_matrix(0.4, 0.8, {0.05, 0.05, 0.1, 0.1});
    EXPECT_NEAR(m.p01p(), 0.35, 1e-15);
    EXPECT_NEAR(m.p11p(), 0.75, 1e-15);
    EXPECT_NEAR(m.p01a(), 0.5, 1e-15);
    EXPECT_NEAR(m.p11a(), 0.9, 1e-15);
}

TEST(Perturb, ZeroDeltasFailStrictValidation) {
    EXPECT_THROW(perturb_matrix(0.4, 0.8, {}), Error);
}

TEST(Perturb, ClampsToEpsilon) {
    const auto m = perturb_matrix(0.01, 0.99, {0.05, 0.05, 0.05, 0.05});
    EXPECT_DOUBLE_EQ(m.p01p(), 1e-3);
    EXPECT_DOUBLE_EQ(m.p11a(), 1.0 - 1e-3);
    EXPECT_NEAR(m.p11p(), 0.94, 1e-15);
    EXPECT_NEAR(m.p01a(), 0.06, 1e-15);
}

TEST(Perturb, RejectsBadInputs) {
    EXPECT_THROW(perturb_matrix(0.0, 0.8, {0.01, 0.01, 0.01, 0.01}), Error);
    EXPECT_THROW(perturb_matrix(0.4, 0.8, {-0.01, 0.01, 0.01, 0.01}), Error);
}

TEST(Generators, ParseSpecStrings) {
    const auto a = parse_generator("self-correcting:fraction=0.6");
    EXPECT_EQ(a.kind, GeneratorSpec::Kind::SelfCorrectingMix);
    EXPECT_DOUBLE_EQ(a.fraction, 0.6);
    const auto b = parse_generator("threshold-mix:fraction=0.2,beta=0.5");
    EXPECT_EQ(b.kind, GeneratorSpec::Kind::ThresholdOptimalMix);
    EXPECT_DOUBLE_EQ(b.beta, 0.5);
    EXPECT_EQ(describe(b), "threshold-mix:fraction=0.2,beta=0.5");
    EXPECT_EQ(parse_generator("uniform").kind, GeneratorSpec::Kind::UniformNatural);
    EXPECT_EQ(parse_generator("entropy:x=0.45").x, 0.45);
    EXPECT_THROW(parse_generator("gaussian"), Error);
    EXPECT_THROW(parse_generator("entropy:x"), Error);
    EXPECT_THROW(parse_generator("entropy:x=abc"), Error);
    EXPECT_THROW(parse_generator("entropy:width=0.1"), Error);
}

TEST(Generators, TemplateOverrides) {
    EXPECT_EQ(describe(parse_generator("self-correcting:fraction=0.6")), "self-correcting:fraction=0.6");
    const auto s = parse_generator("self-correcting:fraction=0.5,nr=0.05/0.7/0.1/0.9,jitter=0");
    EXPECT_DOUBLE_EQ(s.templates.non_recoverable.p11p, 0.7);
    EXPECT_DOUBLE_EQ(s.templates.self_correcting.p11p, ArchetypeTemplates{}.self_correcting.p11p);
    EXPECT_EQ(describe(s), "self-correcting:fraction=0.5,nr=0.05/0.7/0.1/0.9,jitter=0");
    auto spec = s;
    spec.fraction = 0.0;
    spec.count = 5;
    for (const auto& m : generate_cohort(spec)) EXPECT_DOUBLE_EQ(m.raw().p11a, 0.9);
    EXPECT_THROW(parse_generator("self-correcting:sc=0.6/0.75/0.75"), Error);
    EXPECT_THROW(parse_generator("self-correcting:sc=0.6/0.75/x/0.9"), Error);
}

TEST(Generators, ThresholdMixAllForward) {
    GeneratorSpec spec;
    spec.kind = GeneratorSpec::Kind::ThresholdOptimalMix;
    spec.fraction = 1.0;
    spec.beta = 0.2;
    spec.count = 100;
    spec.seed = 5;
    for (const auto& m : generate_cohort(spec)) EXPECT_TRUE(check_forward_condition(m, 0.2));
}

TEST(Generators, ThresholdMixHonoursFraction) {
    GeneratorSpec spec;
    spec.kind = GeneratorSpec::Kind::ThresholdOptimalMix;
    spec.fraction = 0.3;
    spec.beta = 0.5;
    spec.count = 50;
    int forward = 0;
    for (const auto& m : generate_cohort(spec)) forward += check_forward_condition(m, 0.5);
    EXPECT_EQ(forward, 15);
}

TEST(Generators, EntropyWindow) {
    GeneratorSpec spec;
    spec.kind = GeneratorSpec::Kind::EntropySweep;
    spec.x = 0.45;
    spec.count = 200;
    for (const auto& m : generate_cohort(spec)) {
        for (double p : {m.p01p(), m.p11p(), m.p01a(), m.p11a()}) {
            EXPECT_GE(p, 0.45);
            EXPECT_LE(p, 0.55);
        }
    }
    spec.x = 0.95;
    EXPECT_THROW(generate_cohort(spec), Error);
}

TEST(Generators, SelfCorrectingBoundaries) {
    GeneratorSpec spec;
    spec.kind = GeneratorSpec::Kind::SelfCorrectingMix;
    spec.count = 40;
    for (const auto& m : generate_cohort(spec)) EXPECT_NEAR(m.p01p(), 0.05, 0.02 + 1e-12);
    spec.fraction = 1.0;
    for (const auto& m : generate_cohort(spec)) EXPECT_NEAR(m.p01p(), 0.60, 0.02 + 1e-12);
    spec.fraction = 0.6;
    int self_correcting = 0;
    for (const auto& m : generate_cohort(spec)) self_correcting += m.p01p() > 0.3;
    EXPECT_EQ(self_correcting, 24);
}

TEST(Generators, StateOneResponsiveRanges) {
    GeneratorSpec spec;
    spec.kind = GeneratorSpec::Kind::StateOneResponsive;
    spec.fraction = 1.0;
    spec.count = 100;
    for (const auto& m : generate_cohort(spec)) {
        for (double p : {m.p01p(), m.p11p(), m.p01a()}) {
            EXPECT_GE(p, 0.3);
            EXPECT_LE(p, 0.32);
        }
        EXPECT_GE(m.p11a(), 0.7);
        EXPECT_LE(m.p11a(), 0.72);
    }
}

TEST(Generators, AlwaysEmitStrictNaturalModels) {
    for (const char* text : {"self-correcting:fraction=0.5", "entropy:x=0.05", "entropy:x=0.85", "state-one:fraction=0.5",
                             "threshold-mix:fraction=0.5,beta=0.9", "uniform"}) {
        auto spec = parse_generator(text);
        spec.count = 100;
        spec.seed = 9;
        for (const auto& m : generate_cohort(spec)) {
            EXPECT_TRUE(detail::is_strict_natural(m.raw())) << text;
            EXPECT_EQ(m.strictness(), Strictness::StrictNatural);
        }
    }
}

TEST(Generators, DeterministicGivenSeed) {
    auto spec = parse_generator("self-correcting:fraction=0.6");
    spec.count = 30;
    spec.seed = 4;
    const auto a = generate_cohort(spec), b = generate_cohort(spec);
    for (std::size_t i = 0; i < a.size(); ++i) EXPECT_EQ(a[i].raw().p11a, b[i].raw().p11a);
}

TEST(Generators, InfeasibleSpecGivesUp) {
    // So close to one, the forward condition needs an action effect below ~1e-7.
    GeneratorSpec spec;
    spec.kind = GeneratorSpec::Kind::ThresholdOptimalMix;
    spec.fraction = 1.0;
    spec.beta = 0.9999999;
    spec.count = 1;
    try {
        generate_cohort(spec);
        FAIL() << "expected rejection sampling to give up";
    } catch (const Error& e) {
        EXPECT_TRUE(contains(e.what(), "10^6")) << e.what();
    }
    spec.fraction = 2.0;
    EXPECT_THROW(generate_cohort(spec), Error);
    spec.fraction = 0.5;
    spec.count = 0;
    EXPECT_THROW(generate_cohort(spec), Error);
}

TEST(Report, BundleIsDeterministicAndComplete) {
    GeneratorSpec gen;
    gen.count = 12;
    gen.seed = 3;
    const auto models = generate_cohort(gen);
    SimulationConfig cfg;
    cfg.n_arms = 12;
    cfg.budget = 2;
    cfg.rounds = 20;
    cfg.trials = 4;
    cfg.seed = 8;
    const std::vector<PolicyId> policies{PolicyId::ThresholdWhittle, PolicyId::Myopic, PolicyId::Oracle, PolicyId::NeverAct};
    const auto a = result_bundle(run_trials(models, cfg, policies), {"uniform", {}}, false).dump(2);
    const auto b = result_bundle(run_trials(models, cfg, policies), {"uniform", {}}, false).dump(2);
    EXPECT_EQ(a, b);
    const auto j = nlohmann::json::parse(a);
    EXPECT_EQ(j["tool"]["name"], "cobandit");
    EXPECT_EQ(j["policies"].size(), 4u);
    EXPECT_EQ(j["policies"][0]["mean_round_reward"].size(), 20u);
    EXPECT_FALSE(j.contains("runtimes_seconds"));
    EXPECT_EQ(j["policies"][3]["intervention_benefit"], 0.0);
    EXPECT_EQ(j["policies"][2]["intervention_benefit"], 100.0);
}

TEST(Report, TwelveDigitRounding) {
    EXPECT_EQ(number12(1.0 / 3.0).get<double>(), 0.333333333333);
    EXPECT_TRUE(number12(std::nan("")).is_null());
}
