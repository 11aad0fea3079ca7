#pragma once
// Synthetic cohort generators and the transition-matrix perturbation used to
// turn a single empirical matrix into passive/active rows.

#include "cobandit/belief.hpp"
#include "cobandit/error.hpp"
#include "cobandit/random.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <functional>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

namespace cobandit {

inline constexpr long kMaxRejections = 1'000'000;

namespace detail {

inline bool is_strict_natural(const RawProbabilities& r) {
    const auto in = [](double v) { return v > 0.0 && v < 1.0; };
    return in(r.p01p) && in(r.p11p) && in(r.p01a) && in(r.p11a) && r.p01p < r.p11p && r.p01a < r.p11a &&
           r.p01p < r.p01a && r.p11p < r.p11a;
}

template <class Draw, class Accept>
TransitionModel rejection_sample(Draw&& draw, Accept&& accept, const char* what) {
    for (long attempt = 0; attempt < kMaxRejections; ++attempt) {
        const RawProbabilities r = draw();
        if (!is_strict_natural(r)) continue;
        const TransitionModel m = validate_model(r, Strictness::StrictNatural);
        if (accept(m)) return m;
    }
    throw validation_error(std::string("rejection sampling exceeded 10^6 attempts for ") + what);
}

} // namespace detail

inline TransitionModel sample_uniform_natural(std::mt19937_64& g) {
    return detail::rejection_sample(
        [&] { return RawProbabilities{uniform01(g), uniform01(g), uniform01(g), uniform01(g)}; },
        [](const TransitionModel&) { return true; }, "uniform natural model");
}

// Any four probabilities in (0,1), no ordering constraints.
inline TransitionModel sample_relaxed(std::mt19937_64& g) {
    for (;;) {
        const RawProbabilities r{uniform01(g), uniform01(g), uniform01(g), uniform01(g)};
        if (r.p01p > 0.0 && r.p11p > 0.0 && r.p01a > 0.0 && r.p11a > 0.0) {
            return validate_model(r, Strictness::Relaxed);
        }
    }
}

struct ArchetypeTemplates {
    RawProbabilities self_correcting{0.60, 0.75, 0.75, 0.90};
    RawProbabilities non_recoverable{0.05, 0.90, 0.10, 0.97};
    double jitter = 0.02;
};

struct GeneratorSpec {
    enum class Kind { SelfCorrectingMix, EntropySweep, StateOneResponsive, ThresholdOptimalMix, UniformNatural };

    Kind kind = Kind::UniformNatural;
    double fraction = 0.0;  // SelfCorrectingMix, StateOneResponsive, ThresholdOptimalMix
    double x = 0.0;         // EntropySweep window start
    double beta = 0.999;    // ThresholdOptimalMix
    int count = 0;
    std::uint64_t seed = 0;
    ArchetypeTemplates templates;
};

inline const char* to_string(GeneratorSpec::Kind k) noexcept {
    switch (k) {
    case GeneratorSpec::Kind::SelfCorrectingMix: return "self-correcting";
    case GeneratorSpec::Kind::EntropySweep: return "entropy";
    case GeneratorSpec::Kind::StateOneResponsive: return "state-one";
    case GeneratorSpec::Kind::ThresholdOptimalMix: return "threshold-mix";
    case GeneratorSpec::Kind::UniformNatural: return "uniform";
    }
    return "?";
}

namespace detail {

inline double parse_number(const std::string& text, const std::string& item) {
    try {
        std::size_t used = 0;
        const double value = std::stod(text, &used);
        if (used == text.size()) return value;
    } catch (const std::exception&) {
    }
    throw validation_error("generator parameter '" + item + "' has a non-numeric value");
}

} // namespace detail

// Parses "name[:key=value,...]", e.g. "self-correcting:fraction=0.6",
// "entropy:x=0.45", "threshold-mix:fraction=0.2,beta=0.2", "uniform".
// self-correcting also takes sc=a/b/c/d, nr=a/b/c/d and jitter=J.
inline GeneratorSpec parse_generator(const std::string& text) {
    GeneratorSpec spec;
    const auto colon = text.find(':');
    const std::string name = text.substr(0, colon);
    bool known = false;
    for (auto k : {GeneratorSpec::Kind::SelfCorrectingMix, GeneratorSpec::Kind::EntropySweep,
                   GeneratorSpec::Kind::StateOneResponsive, GeneratorSpec::Kind::ThresholdOptimalMix,
                   GeneratorSpec::Kind::UniformNatural}) {
        if (name == to_string(k)) {
            spec.kind = k;
            known = true;
        }
    }
    if (!known) throw validation_error("unknown generator '" + name + "'");
    if (colon == std::string::npos) return spec;

    std::stringstream params(text.substr(colon + 1));
    std::string item;
    while (std::getline(params, item, ',')) {
        const auto eq = item.find('=');
        if (eq == std::string::npos) throw validation_error("generator parameter '" + item + "' is not key=value");
        const std::string key = item.substr(0, eq);
        const std::string text_value = item.substr(eq + 1);
        if (key == "sc" || key == "nr") {
            // four probabilities p01p/p11p/p01a/p11a
            std::stringstream parts(text_value);
            std::string part;
            std::vector<double> v;
            while (std::getline(parts, part, '/')) v.push_back(detail::parse_number(part, item));
            if (v.size() != 4) throw validation_error("generator parameter '" + item + "' needs four values a/b/c/d");
            (key == "sc" ? spec.templates.self_correcting : spec.templates.non_recoverable) = {v[0], v[1], v[2], v[3]};
            continue;
        }
        const double value = detail::parse_number(text_value, item);
        if (key == "fraction") spec.fraction = value;
        else if (key == "x") spec.x = value;
        else if (key == "beta") spec.beta = value;
        else if (key == "jitter") spec.templates.jitter = value;
        else throw validation_error("unknown generator parameter '" + key + "'");
    }
    return spec;
}

inline std::string describe(const GeneratorSpec& s) {
    std::ostringstream os;
    os << to_string(s.kind);
    switch (s.kind) {
    case GeneratorSpec::Kind::SelfCorrectingMix: {
        const ArchetypeTemplates d;
        auto same = [](const RawProbabilities& a, const RawProbabilities& b) {
            return a.p01p == b.p01p && a.p11p == b.p11p && a.p01a == b.p01a && a.p11a == b.p11a;
        };
        auto put = [&os](const char* key, const RawProbabilities& r) {
            os << ',' << key << '=' << r.p01p << '/' << r.p11p << '/' << r.p01a << '/' << r.p11a;
        };
        os << ":fraction=" << s.fraction;
        if (!same(s.templates.self_correcting, d.self_correcting)) put("sc", s.templates.self_correcting);
        if (!same(s.templates.non_recoverable, d.non_recoverable)) put("nr", s.templates.non_recoverable);
        if (s.templates.jitter != d.jitter) os << ",jitter=" << s.templates.jitter;
        break;
    }
    case GeneratorSpec::Kind::StateOneResponsive: os << ":fraction=" << s.fraction; break;
    case GeneratorSpec::Kind::EntropySweep: os << ":x=" << s.x; break;
    case GeneratorSpec::Kind::ThresholdOptimalMix: os << ":fraction=" << s.fraction << ",beta=" << s.beta; break;
    case GeneratorSpec::Kind::UniformNatural: break;
    }
    return os.str();
}

namespace detail {

inline TransitionModel jittered(const RawProbabilities& base, double jitter, std::mt19937_64& g) {
    constexpr double eps = 1e-3;
    auto j = [&](double v) { return std::clamp(v + uniform(g, -jitter, jitter), eps, 1.0 - eps); };
    return rejection_sample([&] { return RawProbabilities{j(base.p01p), j(base.p11p), j(base.p01a), j(base.p11a)}; },
                            [](const TransitionModel&) { return true; }, "jittered template");
}

inline TransitionModel state_one_responsive(std::mt19937_64& g) {
    return rejection_sample(
        [&] {
            std::array<double, 3> low{uniform(g, 0.3, 0.32), uniform(g, 0.3, 0.32), uniform(g, 0.3, 0.32)};
            // p01p must be the smallest of the three low entries.
            const auto it = std::min_element(low.begin(), low.end());
            std::iter_swap(low.begin(), it);
            return RawProbabilities{low[0], low[1], low[2], uniform(g, 0.7, 0.72)};
        },
        [](const TransitionModel&) { return true; }, "state-one responsive model");
}

inline void shuffle(std::vector<TransitionModel>& v, std::mt19937_64& g) {
    for (std::size_t i = v.size(); i > 1; --i) {
        const auto j = std::min(static_cast<std::size_t>(uniform01(g) * static_cast<double>(i)), i - 1);
        std::swap(v[i - 1], v[j]);
    }
}

inline int share(double fraction, int count) { return static_cast<int>(std::lround(fraction * count)); }

} // namespace detail

inline std::vector<TransitionModel> generate_cohort(const GeneratorSpec& spec) {
    if (spec.count < 1) throw validation_error("generator needs a sample count >= 1");
    if (!(spec.fraction >= 0.0 && spec.fraction <= 1.0)) throw validation_error("generator fraction must be in [0,1]");
    auto g = seeded_engine(spec.seed, {0x9e7u});
    std::vector<TransitionModel> out;
    out.reserve(static_cast<std::size_t>(spec.count));
    const int first = detail::share(spec.fraction, spec.count);

    switch (spec.kind) {
    case GeneratorSpec::Kind::SelfCorrectingMix:
        for (int i = 0; i < spec.count; ++i) {
            const auto& base = i < first ? spec.templates.self_correcting : spec.templates.non_recoverable;
            out.push_back(detail::jittered(base, spec.templates.jitter, g));
        }
        break;
    case GeneratorSpec::Kind::EntropySweep: {
        if (!(spec.x > 0.0 && spec.x + 0.1 < 1.0)) throw validation_error("entropy window [x, x+0.1] must lie in (0,1)");
        const double lo = spec.x, hi = spec.x + 0.1;
        for (int i = 0; i < spec.count; ++i) {
            out.push_back(detail::rejection_sample(
                [&] { return RawProbabilities{uniform(g, lo, hi), uniform(g, lo, hi), uniform(g, lo, hi), uniform(g, lo, hi)}; },
                [](const TransitionModel&) { return true; }, "entropy window model"));
        }
        break;
    }
    case GeneratorSpec::Kind::StateOneResponsive:
        for (int i = 0; i < spec.count; ++i) {
            out.push_back(i < first ? detail::state_one_responsive(g) : sample_uniform_natural(g));
        }
        break;
    case GeneratorSpec::Kind::ThresholdOptimalMix:
        for (int i = 0; i < spec.count; ++i) {
            const bool want = i < first;
            out.push_back(detail::rejection_sample(
                [&] { return RawProbabilities{uniform01(g), uniform01(g), uniform01(g), uniform01(g)}; },
                [&](const TransitionModel& m) { return check_forward_condition(m, spec.beta) == want; },
                want ? "forward-threshold-optimal model" : "non-forward-threshold-optimal model"));
        }
        break;
    case GeneratorSpec::Kind::UniformNatural:
        for (int i = 0; i < spec.count; ++i) out.push_back(sample_uniform_natural(g));
        break;
    }
    if (spec.kind != GeneratorSpec::Kind::UniformNatural && spec.kind != GeneratorSpec::Kind::EntropySweep) {
        detail::shuffle(out, g);
    }
    return out;
}

struct PerturbationDeltas {
    double lower_p01 = 0.0;  // subtracted from q01 for the passive row
    double lower_p11 = 0.0;  // subtracted from q11 for the passive row
    double raise_p01 = 0.0;  // added to q01 for the active row
    double raise_p11 = 0.0;  // added to q11 for the active row
};

// Passive/active rows from one averaged matrix (q01, q11), clamped to
// [eps, 1 - eps] and validated as strict-natural.
inline TransitionModel perturb_matrix(double q01, double q11, const PerturbationDeltas& d, double eps = 1e-3) {
    if (!(q01 > 0.0 && q01 < 1.0 && q11 > 0.0 && q11 < 1.0)) {
        throw validation_error("base probabilities must lie in (0,1)");
    }
    if (d.lower_p01 < 0.0 || d.lower_p11 < 0.0 || d.raise_p01 < 0.0 || d.raise_p11 < 0.0) {
        throw validation_error("perturbation deltas must be non-negative");
    }
    auto clamp = [eps](double v) { return std::clamp(v, eps, 1.0 - eps); };
    const RawProbabilities r{clamp(q01 - d.lower_p01), clamp(q11 - d.lower_p11), clamp(q01 + d.raise_p01),
                             clamp(q11 + d.raise_p11)};
    return validate_model(r, Strictness::StrictNatural);
}

} // namespace cobandit
