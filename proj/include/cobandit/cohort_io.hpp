#pragma once
// Cohort CSV ("arm_id,p01p,p11p,p01a,p11a") and index-table CSV
// ("arm_id,omega,u,index"). Numbers are written with 12 significant digits.

#include "cobandit/belief.hpp"
#include "cobandit/error.hpp"
#include "cobandit/whittle.hpp"

#include <charconv>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <istream>
#include <ostream>
#include <set>
#include <sstream>
#include <string>
#include <vector>

namespace cobandit {

struct CohortEntry {
    std::string arm_id;
    TransitionModel model;
};

inline std::string format_number(double x) {
    if (std::isnan(x)) return "nan";
    if (std::isinf(x)) return x > 0 ? "inf" : "-inf";
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.12g", x);
    return buf;
}

namespace detail {

inline std::string trim(const std::string& s) {
    const auto b = s.find_first_not_of(" \t\r");
    if (b == std::string::npos) return {};
    const auto e = s.find_last_not_of(" \t\r");
    return s.substr(b, e - b + 1);
}

inline std::vector<std::string> split_csv(const std::string& line) {
    std::vector<std::string> out;
    std::stringstream ss(line);
    std::string field;
    while (std::getline(ss, field, ',')) out.push_back(trim(field));
    if (!line.empty() && line.back() == ',') out.emplace_back();
    return out;
}

inline double parse_double(const std::string& s, const std::string& where) {
    double v = 0.0;
    const auto* end = s.data() + s.size();
    const auto [ptr, ec] = std::from_chars(s.data(), end, v);
    if (ec != std::errc() || ptr != end || s.empty()) throw validation_error(where + ": '" + s + "' is not a number");
    return v;
}

} // namespace detail

inline constexpr const char kCohortHeader[] = "arm_id,p01p,p11p,p01a,p11a";

inline std::vector<CohortEntry> parse_cohort(std::istream& in, Strictness strictness, const std::string& source = "cohort") {
    std::string line;
    int line_no = 0;
    bool header_seen = false;
    std::vector<CohortEntry> out;
    std::set<std::string> ids;
    while (std::getline(in, line)) {
        ++line_no;
        if (detail::trim(line).empty()) continue;
        const auto fields = detail::split_csv(line);
        const std::string where = source + ":" + std::to_string(line_no);
        if (!header_seen) {
            const std::vector<std::string> expected{"arm_id", "p01p", "p11p", "p01a", "p11a"};
            if (fields != expected) throw validation_error(where + ": header must be '" + std::string(kCohortHeader) + "'");
            header_seen = true;
            continue;
        }
        if (fields.size() != 5) throw validation_error(where + ": expected 5 fields, got " + std::to_string(fields.size()));
        if (fields[0].empty()) throw validation_error(where + ": empty arm_id");
        if (!ids.insert(fields[0]).second) throw validation_error(where + ": duplicate arm_id '" + fields[0] + "'");
        const RawProbabilities raw{detail::parse_double(fields[1], where), detail::parse_double(fields[2], where),
                                   detail::parse_double(fields[3], where), detail::parse_double(fields[4], where)};
        try {
            out.push_back({fields[0], validate_model(raw, strictness)});
        } catch (const Error& e) {
            throw validation_error(where + ": arm '" + fields[0] + "': " + e.what());
        }
    }
    if (!header_seen) throw validation_error(source + ": missing header '" + std::string(kCohortHeader) + "'");
    return out;
}

inline std::vector<CohortEntry> ingest_cohort(const std::string& path, Strictness strictness) {
    std::ifstream in(path);
    if (!in) throw validation_error("cannot open cohort file '" + path + "'");
    return parse_cohort(in, strictness, path);
}

inline void emit_cohort(std::ostream& out, const std::vector<CohortEntry>& cohort) {
    out << kCohortHeader << '\n';
    for (const auto& e : cohort) {
        const auto& m = e.model;
        out << e.arm_id << ',' << format_number(m.p01p()) << ',' << format_number(m.p11p()) << ','
            << format_number(m.p01a()) << ',' << format_number(m.p11a()) << '\n';
    }
}

// Arms numbered 0..N-1.
inline std::vector<CohortEntry> number_arms(const std::vector<TransitionModel>& models) {
    std::vector<CohortEntry> out;
    out.reserve(models.size());
    for (std::size_t i = 0; i < models.size(); ++i) out.push_back({std::to_string(i), models[i]});
    return out;
}

inline std::vector<TransitionModel> models_of(const std::vector<CohortEntry>& cohort) {
    std::vector<TransitionModel> out;
    out.reserve(cohort.size());
    for (const auto& e : cohort) out.push_back(e.model);
    return out;
}

inline void write_index_header(std::ostream& out) { out << "arm_id,omega,u,index\n"; }

inline void write_index_rows(std::ostream& out, const std::string& arm_id, const WhittleTable& table) {
    for (int omega = 0; omega < 2; ++omega) {
        for (int u = 1; u <= table.horizon(); ++u) {
            out << arm_id << ',' << omega << ',' << u << ',' << format_number(table.index(omega, u)) << '\n';
        }
    }
}

} // namespace cobandit
