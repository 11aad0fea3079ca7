// cobandit: index tables, cohort simulation, benchmarks and verification
// suites for collapsing two-state restless bandits.

#include "cobandit/cobandit.hpp"

#include <CLI11.hpp>

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <iostream>
#include <memory>
#include <sstream>
#include <string>
#include <vector>

namespace {

using namespace cobandit;

constexpr int kExitOk = 0;
constexpr int kExitError = 1;
constexpr int kExitVerificationFailed = 2;

// Output sink: a file when a path is given, stdout otherwise.
class Sink {
public:
    explicit Sink(const std::string& path) {
        if (!path.empty() && path != "-") {
            file_ = std::make_unique<std::ofstream>(path);
            if (!*file_) throw validation_error("cannot open output file '" + path + "'");
        }
    }
    std::ostream& stream() { return file_ ? *file_ : std::cout; }

private:
    std::unique_ptr<std::ofstream> file_;
};

struct CohortArgs {
    std::string arms_file;
    std::string generate;
    int n = 0;
    bool relaxed = false;
};

struct LoadedCohort {
    std::vector<CohortEntry> entries;
    CohortSource source;
};

void add_cohort_options(CLI::App* cmd, CohortArgs& a) {
    cmd->add_option("--arms-file", a.arms_file, "Cohort CSV with header arm_id,p01p,p11p,p01a,p11a");
    cmd->add_option("--generate", a.generate,
                    "Generator: self-correcting:fraction=F[,sc=a/b/c/d,nr=a/b/c/d,jitter=J] | entropy:x=X | state-one:fraction=F | "
                    "threshold-mix:fraction=F,beta=B | uniform");
    cmd->add_option("--n", a.n, "Number of arms to generate");
    cmd->add_flag("--relaxed", a.relaxed, "Accept models that only satisfy the range constraints");
}

LoadedCohort load_cohort(const CohortArgs& a, std::uint64_t seed) {
    if (a.arms_file.empty() == a.generate.empty()) {
        throw validation_error("exactly one of --arms-file and --generate is required");
    }
    LoadedCohort out;
    if (!a.arms_file.empty()) {
        out.entries = ingest_cohort(a.arms_file, a.relaxed ? Strictness::Relaxed : Strictness::StrictNatural);
        if (out.entries.empty()) throw validation_error("cohort file '" + a.arms_file + "' has no arms");
        if (a.n > 0 && a.n != static_cast<int>(out.entries.size())) {
            throw validation_error("--n " + std::to_string(a.n) + " differs from the " +
                                   std::to_string(out.entries.size()) + " arms in the cohort file");
        }
        out.source.description = a.arms_file;
        return out;
    }
    if (a.n < 1) throw validation_error("--generate needs --n >= 1");
    GeneratorSpec spec = parse_generator(a.generate);
    spec.count = a.n;
    spec.seed = seed;
    out.entries = number_arms(generate_cohort(spec));
    out.source.description = describe(spec) + " n=" + std::to_string(a.n) + " seed=" + std::to_string(seed);
    if (spec.kind == GeneratorSpec::Kind::StateOneResponsive && spec.fraction < 1.0) {
        out.source.notes.push_back("arms outside the state-one fraction are drawn from the uniform natural generator");
    }
    return out;
}

double seconds_since(std::chrono::steady_clock::time_point t0) {
    return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

std::vector<double> parse_list(const std::string& text, const char* what) {
    std::vector<double> out;
    std::stringstream ss(text);
    std::string item;
    while (std::getline(ss, item, ',')) {
        try {
            std::size_t used = 0;
            out.push_back(std::stod(item, &used));
            if (used != item.size()) throw std::invalid_argument(item);
        } catch (const std::exception&) {
            throw validation_error(std::string(what) + ": '" + item + "' is not a number");
        }
    }
    if (out.empty()) throw validation_error(std::string(what) + " is empty");
    return out;
}

// ---------------------------------------------------------------- index

struct IndexArgs {
    CohortArgs cohort;
    int horizon = 180;
    std::uint64_t seed = 0;
    int threads = 1;
    std::string out;
};

int cmd_index(const IndexArgs& a) {
    if (a.horizon < 1) throw validation_error("--t-horizon must be >= 1");
    const auto cohort = load_cohort(a.cohort, a.seed);
    const auto t0 = std::chrono::steady_clock::now();
    std::vector<WhittleTable> tables(cohort.entries.size());
    parallel_for(static_cast<int>(tables.size()), a.threads, [&](int i) {
        tables[static_cast<std::size_t>(i)] =
            compute_index_table(BeliefChains(cohort.entries[static_cast<std::size_t>(i)].model, a.horizon));
    });
    const double elapsed = seconds_since(t0);
    Sink sink(a.out);
    write_index_header(sink.stream());
    for (std::size_t i = 0; i < tables.size(); ++i) {
        write_index_rows(sink.stream(), cohort.entries[i].arm_id, tables[i]);
        for (const auto& d : tables[i].diagnostics()) std::cerr << "arm " << cohort.entries[i].arm_id << ": " << d << '\n';
        for (const auto& s : monotonicity_violations(tables[i])) {
            std::cerr << "arm " << cohort.entries[i].arm_id << ": index decreases at (" << s.omega << "," << s.u << ")\n";
        }
    }
    std::fprintf(stderr, "indexed %zu arms at T=%d in %.3f s\n", tables.size(), a.horizon, elapsed);
    return kExitOk;
}

// ------------------------------------------------------------- simulate

struct SimulateArgs {
    CohortArgs cohort;
    int k = -1;
    double k_pct = -1.0;
    int rounds = 180;
    int trials = 50;
    std::uint64_t seed = 0;
    double beta = 0.999;
    double reference_tol = 1e-6;
    std::vector<std::string> policies{"threshold_whittle", "myopic", "random"};
    int threads = 1;
    bool timing = false;
    std::string out;
    std::string summary;
};

int cmd_simulate(const SimulateArgs& a) {
    const auto cohort = load_cohort(a.cohort, a.seed);
    const int n = static_cast<int>(cohort.entries.size());
    if ((a.k >= 0) == (a.k_pct >= 0.0)) throw validation_error("exactly one of --k and --k-pct is required");
    int k = a.k;
    if (a.k_pct >= 0.0) {
        if (a.k_pct > 100.0) throw validation_error("--k-pct must lie in [0,100]");
        k = static_cast<int>(std::lround(a.k_pct / 100.0 * n));
    }

    std::vector<PolicyId> policies;
    auto add = [&](PolicyId p) {
        if (std::find(policies.begin(), policies.end(), p) == policies.end()) policies.push_back(p);
    };
    for (const auto& name : a.policies) add(parse_policy(name));
    add(PolicyId::NeverAct);
    add(PolicyId::Oracle);

    SimulationConfig cfg;
    cfg.n_arms = n;
    cfg.budget = k;
    cfg.rounds = a.rounds;
    cfg.trials = a.trials;
    cfg.seed = a.seed;
    cfg.beta = a.beta;
    cfg.reference_tol = a.reference_tol;
    cfg.threads = a.threads;
    const auto result = run_trials(models_of(cohort.entries), cfg, policies);

    Sink sink(a.out);
    sink.stream() << result_bundle(result, cohort.source, a.timing).dump(2) << '\n';
    if (!a.summary.empty()) {
        Sink csv(a.summary);
        write_summary_csv(csv.stream(), result);
    }
    return kExitOk;
}

// ---------------------------------------------------------------- bench

struct BenchArgs {
    std::string n_list = "10,50";
    std::string generate = "uniform";
    int horizon = 180;
    std::uint64_t seed = 0;
    double beta = 0.999;
    double reference_tol = 1e-6;
    std::string out;
};

int cmd_bench(const BenchArgs& a) {
    if (a.horizon < 2) throw validation_error("--t-horizon must be >= 2 for the reference solver");
    Sink sink(a.out);
    auto& os = sink.stream();
    os << "N,t_threshold_whittle,t_reference,speedup\n";
    for (double nv : parse_list(a.n_list, "--n-list")) {
        const int n = static_cast<int>(nv);
        if (n < 1 || n != nv) throw validation_error("--n-list entries must be positive integers");
        GeneratorSpec spec = parse_generator(a.generate);
        spec.count = n;
        spec.seed = a.seed;
        const auto models = generate_cohort(spec);

        auto t0 = std::chrono::steady_clock::now();
        double checksum = 0.0;
        for (const auto& m : models) checksum += compute_index_table(BeliefChains(m, a.horizon)).index(0, 1);
        const double fast = seconds_since(t0);

        t0 = std::chrono::steady_clock::now();
        for (const auto& m : models) checksum += reference_index_table(m, a.beta, a.horizon, a.reference_tol).index(0, 1);
        const double slow = seconds_since(t0);
        if (!std::isfinite(checksum)) std::cerr << "warning: non-finite head index in bench cohort\n";

        char line[128];
        std::snprintf(line, sizeof line, "%d,%.6f,%.3f,%.1f\n", n, fast, slow, fast > 0.0 ? slow / fast : 0.0);
        os << line << std::flush;
    }
    return kExitOk;
}

// --------------------------------------------------------------- verify

struct VerifyArgs {
    std::string suite = "all";
    std::uint64_t seed = 0;
    bool seed_given = false;
    int agreement_models = 100;
    int indexability_models = 50;
    int scan_models = 10000;
    double grid_step = 0.01;
    int threads = 1;
    std::string out;
};

int cmd_verify(const VerifyArgs& a) {
    const bool all = a.suite == "all";
    if (!all && a.suite != "agreement" && a.suite != "indexability" && a.suite != "dual") {
        throw validation_error("--suite must be one of agreement, indexability, dual, all");
    }
    nlohmann::json report;
    report["tool"] = {{"name", kToolName}, {"version", kToolVersion}};
    bool pass = true;

    if (all || a.suite == "agreement") {
        AgreementConfig cfg;
        cfg.models = a.agreement_models;
        if (a.seed_given) cfg.seed = a.seed;
        cfg.threads = a.threads;
        const auto r = verify_index_agreement(cfg);
        report["index_agreement"] = to_json(r);
        pass = pass && r.pass;
    }
    if (all || a.suite == "indexability") {
        IndexabilityConfig cfg;
        cfg.models = a.indexability_models;
        cfg.m_step = a.grid_step;
        if (a.seed_given) cfg.seed = a.seed;
        cfg.threads = a.threads;
        const auto r = verify_indexability(cfg);
        report["indexability"] = to_json(r);
        pass = pass && r.pass;
    }
    if (all || a.suite == "dual") {
        ConjectureConfig cfg;
        cfg.models = a.scan_models;
        if (a.seed_given) cfg.seed = a.seed;
        cfg.threads = a.threads;
        const auto r = scan_dual_policies(cfg);
        report["dual_scan"] = to_json(r);
        pass = pass && r.pass;
        for (const auto& h : r.dual_hits) {
            std::cerr << "dual policy: (" << h.model.p01p << "," << h.model.p11p << "," << h.model.p01a << ","
                      << h.model.p11a << ") m=" << h.subsidy << " beta=" << h.beta << " T=" << h.horizon << '\n';
        }
    }
    report["pass"] = pass;
    Sink sink(a.out);
    sink.stream() << report.dump(2) << '\n';
    if (!pass) std::cerr << "verification failed\n";
    return pass ? kExitOk : kExitVerificationFailed;
}

// ------------------------------------------------------------- generate

struct GenerateArgs {
    CohortArgs cohort;
    std::uint64_t seed = 0;
    std::string out;
};

int cmd_generate(const GenerateArgs& a) {
    if (!a.cohort.arms_file.empty()) throw validation_error("generate takes --generate, not --arms-file");
    const auto cohort = load_cohort(a.cohort, a.seed);
    Sink sink(a.out);
    emit_cohort(sink.stream(), cohort.entries);
    return kExitOk;
}

// -------------------------------------------------------------- perturb

struct PerturbArgs {
    std::string base;
    std::string deltas;
    double eps = 1e-3;
    std::string arm_id = "0";
    std::string out;
};

int cmd_perturb(const PerturbArgs& a) {
    const auto base = parse_list(a.base, "--base");
    const auto d = parse_list(a.deltas, "--deltas");
    if (base.size() != 2) throw validation_error("--base takes q01,q11");
    if (d.size() != 4) throw validation_error("--deltas takes four values");
    const auto m = perturb_matrix(base[0], base[1], {d[0], d[1], d[2], d[3]}, a.eps);
    Sink sink(a.out);
    emit_cohort(sink.stream(), {{a.arm_id, m}});
    return kExitOk;
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"Threshold Whittle indices and cohort simulation for collapsing bandits"};
    app.require_subcommand(1);
    app.set_version_flag("--version", std::string(kToolVersion));

    IndexArgs index_args;
    auto* index = app.add_subcommand("index", "Compute per-arm index tables (CSV arm_id,omega,u,index)");
    add_cohort_options(index, index_args.cohort);
    index->add_option("--t-horizon", index_args.horizon, "Belief chain length T")->capture_default_str();
    index->add_option("--seed", index_args.seed, "Generator seed")->capture_default_str();
    index->add_option("--threads", index_args.threads, "Worker threads")->capture_default_str()->check(CLI::PositiveNumber);
    index->add_option("--out", index_args.out, "Output file (default stdout)");

    SimulateArgs sim_args;
    auto* simulate = app.add_subcommand("simulate", "Run budgeted cohort trials and report intervention benefit (JSON)");
    add_cohort_options(simulate, sim_args.cohort);
    simulate->add_option("--k", sim_args.k, "Arms acted on per round");
    simulate->add_option("--k-pct", sim_args.k_pct, "Budget as a percentage of N");
    simulate->add_option("--t-horizon", sim_args.rounds, "Rounds per trial")->capture_default_str();
    simulate->add_option("--trials", sim_args.trials, "Independent trials")->capture_default_str();
    simulate->add_option("--seed", sim_args.seed, "Seed for generation and simulation")->capture_default_str();
    simulate->add_option("--beta", sim_args.beta, "Discount for the reference and oracle indices")->capture_default_str();
    simulate->add_option("--reference-tol", sim_args.reference_tol, "Bisection width for reference indices")
        ->capture_default_str();
    simulate->add_option("--policies", sim_args.policies,
                         "Comma-separated: threshold_whittle,reference,myopic,random,oracle,never_act")
        ->delimiter(',')
        ->capture_default_str();
    simulate->add_option("--threads", sim_args.threads, "Worker threads")->capture_default_str()->check(CLI::PositiveNumber);
    simulate->add_flag("--timing", sim_args.timing, "Include index precomputation runtimes in the JSON");
    simulate->add_option("--out", sim_args.out, "JSON output file (default stdout)");
    simulate->add_option("--summary", sim_args.summary, "Also write a per-policy summary CSV");

    BenchArgs bench_args;
    auto* bench = app.add_subcommand("bench", "Time index tables against the reference solver (CSV)");
    bench->add_option("--n-list", bench_args.n_list, "Comma-separated cohort sizes")->capture_default_str();
    bench->add_option("--generate", bench_args.generate, "Cohort generator")->capture_default_str();
    bench->add_option("--t-horizon", bench_args.horizon, "Belief chain length T")->capture_default_str();
    bench->add_option("--seed", bench_args.seed, "Generator seed")->capture_default_str();
    bench->add_option("--beta", bench_args.beta, "Reference discount")->capture_default_str();
    bench->add_option("--reference-tol", bench_args.reference_tol, "Bisection width for reference indices")
        ->capture_default_str();
    bench->add_option("--out", bench_args.out, "Output file (default stdout)");

    VerifyArgs verify_args;
    auto* verify = app.add_subcommand("verify", "Run the oracle verification suites (JSON report)");
    verify->add_option("--suite", verify_args.suite, "agreement | indexability | dual | all")->capture_default_str();
    auto* seed_opt = verify->add_option("--seed", verify_args.seed, "Sampling seed for every suite");
    verify->add_option("--agreement-models", verify_args.agreement_models, "Models in the agreement suite")
        ->capture_default_str();
    verify->add_option("--indexability-models", verify_args.indexability_models, "Models in the indexability suite")
        ->capture_default_str();
    verify->add_option("--scan-models", verify_args.scan_models, "Models in the dual-policy scan")->capture_default_str();
    verify->add_option("--grid-step", verify_args.grid_step, "Subsidy grid step for indexability")->capture_default_str();
    verify->add_option("--threads", verify_args.threads, "Worker threads")->capture_default_str()->check(CLI::PositiveNumber);
    verify->add_option("--out", verify_args.out, "Output file (default stdout)");

    GenerateArgs gen_args;
    auto* generate = app.add_subcommand("generate", "Write a synthetic cohort CSV");
    add_cohort_options(generate, gen_args.cohort);
    generate->add_option("--seed", gen_args.seed, "Generator seed")->capture_default_str();
    generate->add_option("--out", gen_args.out, "Output file (default stdout)");

    PerturbArgs perturb_args;
    auto* perturb = app.add_subcommand("perturb", "Split an averaged matrix into passive/active rows (cohort CSV)");
    perturb->add_option("--base", perturb_args.base, "q01,q11")->required();
    perturb->add_option("--deltas", perturb_args.deltas, "d1,d2,d3,d4: passive decrements, active increments")->required();
    perturb->add_option("--eps", perturb_args.eps, "Clamp margin")->capture_default_str();
    perturb->add_option("--arm-id", perturb_args.arm_id, "arm_id of the emitted row")->capture_default_str();
    perturb->add_option("--out", perturb_args.out, "Output file (default stdout)");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? kExitOk : kExitError;
    }

    try {
        verify_args.seed_given = seed_opt->count() > 0;
        if (*index) return cmd_index(index_args);
        if (*simulate) return cmd_simulate(sim_args);
        if (*bench) return cmd_bench(bench_args);
        if (*verify) return cmd_verify(verify_args);
        if (*generate) return cmd_generate(gen_args);
        if (*perturb) return cmd_perturb(perturb_args);
    } catch (const Error& e) {
        std::cerr << "error: " << e.what() << '\n';
        return kExitError;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << '\n';
        return kExitError;
    }
    return kExitError;
}
