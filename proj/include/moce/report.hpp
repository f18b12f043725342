#pragma once

// Serialization of simulation results: JSON report, aligned text tables and
// a per-replicate CSV (17 significant digits, readable back).

#include "moce/sim.hpp"

#include <json.hpp>

#include <charconv>
#include <cstdio>
#include <iomanip>
#include <ostream>
#include <sstream>

namespace moce::report {

using Json = nlohmann::ordered_json;

inline constexpr int kSchemaVersion = 1;

inline Json number_or_null(double v) { return std::isfinite(v) ? Json(v) : Json(nullptr); }

inline Json config_json(const sim::SimConfig& c)
{
    Json j;
    j["n"] = c.n;
    j["p"] = c.p;
    j["a"] = c.a;
    j["alpha"] = c.alpha;
    j["signal_low"] = c.signal_low;
    j["signal_high"] = c.signal_high;
    j["sigma"] = c.sigma();
    j["error_law"] = sim::to_string(c.error_law);
    j["replicates"] = c.replicates;
    j["seed"] = c.seed;
    j["C"] = c.C;
    j["cv_folds"] = c.cv_folds;
    j["grid_size"] = c.grid_size;
    j["scaling"] = moce::to_string(c.scaling);
    j["solver"] = sim::to_string(c.solver);
    Json g = Json::array();
    for (const auto& s : c.groups) g.push_back({{"size", s.size}, {"signals", s.signals}});
    j["groups"] = g;
    j["test_level"] = c.test_level;
    j["sigma_mode"] = sim::to_string(c.sigma_mode);
    j["oracle"] = c.oracle;
    j["rng"] = kRngName;
    return j;
}

inline Json set_json(const sim::SetMetrics& m)
{
    return {{"bias", m.bias}, {"ase", m.ase}, {"cp99", m.cp[0]}, {"cp95", m.cp[1]}, {"cp90", m.cp[2]}};
}

/// Everything in the report is a deterministic function of the config;
/// timing is included only when the config asks for it.
inline Json sim_report_json(const sim::SimReport& r, const Json& manifest = Json())
{
    Json j;
    j["schema_version"] = kSchemaVersion;
    if (!manifest.is_null()) j["manifest"] = manifest;
    j["config"] = config_json(r.config);
    Json fails = Json::array();
    for (const auto& [idx, msg] : r.failures) fails.push_back({{"replicate", idx}, {"message", msg}});
    j["replicates"] = {{"requested", r.config.replicates}, {"succeeded", r.successes}, {"failed", fails}};
    j["metrics"]["moce"] = {{"A", set_json(r.signal)}, {"Ac", set_json(r.null)}};
    if (r.config.oracle) j["metrics"]["oracle"] = {{"A", set_json(r.oracle)}};
    j["expansion"] = {{"mean_a_hat", r.mean_a_hat},
                      {"mean_a_tilde", r.mean_a_tilde},
                      {"mean_lambda", r.mean_lambda},
                      {"mean_sigma_hat", r.mean_sigma_hat},
                      {"all_signals_in_expanded", r.all_signals_in_expanded},
                      {"variance_ordered", r.variance_ordered},
                      {"tau_a_below_tau_c", r.tau_a_below_tau_c},
                      {"truncated", r.truncated},
                      {"short_pool", r.short_pool}};
    Json pw = Json::array();
    for (const auto& e : r.power)
        pw.push_back({{"group_size", e.spec.size},
                      {"signals", e.spec.signals},
                      {"wbs", {{"rate", number_or_null(e.wbs_rate())}, {"computable", e.wbs_computable}, {"rejections", e.wbs_rejections}}},
                      {"w1", {{"rate", number_or_null(e.w1_rate())}, {"computable", e.w1_computable}, {"rejections", e.w1_rejections}}}});
    j["power"] = pw;
    if (r.config.report_timing) j["timing"] = {{"mean_replicate_seconds", r.mean_seconds}};
    return j;
}

namespace detail {

inline std::string fixed(double v, int prec = 3)
{
    if (!std::isfinite(v)) return "NA";
    char buf[64];
    std::snprintf(buf, sizeof buf, "%.*f", prec, v);
    // "-0.000" reads as 0.000
    if (std::string(buf).find_first_not_of("-0.") == std::string::npos) std::snprintf(buf, sizeof buf, "%.*f", prec, 0.0);
    return buf;
}

} // namespace detail

/// Bias / ASE / CP table with Oracle and MOCE column blocks, one row per set.
inline void write_sim_table(std::ostream& o, const sim::SimReport& r)
{
    const auto& c = r.config;
    o << "n=" << c.n << " p=" << c.p << " a=" << c.a << " alpha=" << detail::fixed(c.alpha, 2)
      << " errors=" << sim::to_string(c.error_law) << " replicates=" << r.successes << "/" << c.replicates << "\n\n";
    auto row = [&](const char* set, const sim::SetMetrics* oracle, const sim::SetMetrics& m) {
        o << std::left << std::setw(4) << set << std::right;
        if (c.oracle) {
            if (oracle) {
                o << std::setw(8) << detail::fixed(oracle->bias) << std::setw(8) << detail::fixed(oracle->ase);
                for (double v : oracle->cp) o << std::setw(8) << detail::fixed(v);
            } else {
                // nulls are known to be zero under the oracle
                o << std::setw(8) << detail::fixed(0.0) << std::setw(8) << detail::fixed(0.0);
                for (int k = 0; k < 3; ++k) o << std::setw(8) << detail::fixed(1.0);
            }
            o << "  |";
        }
        o << std::setw(8) << detail::fixed(m.bias) << std::setw(8) << detail::fixed(m.ase);
        for (double v : m.cp) o << std::setw(8) << detail::fixed(v);
        o << "\n";
    };
    o << std::setw(4) << "";
    if (c.oracle) o << std::setw(40) << "Oracle" << "  |";
    o << std::setw(40) << "MOCE" << "\n" << std::left << std::setw(4) << "set" << std::right;
    const char* heads[] = {"Bias", "ASE", "CP99", "CP95", "CP90"};
    for (int b = 0; b < (c.oracle ? 2 : 1); ++b) {
        for (const char* h : heads) o << std::setw(8) << h;
        if (c.oracle && b == 0) o << "  |";
    }
    o << "\n";
    row("A", &r.oracle, r.signal);
    row("Ac", nullptr, r.null);
    o << "\nmean a_hat " << detail::fixed(r.mean_a_hat, 2) << ", mean a_tilde " << detail::fixed(r.mean_a_tilde, 2)
      << ", all signals expanded " << detail::fixed(r.all_signals_in_expanded) << ", variance ordered "
      << detail::fixed(r.variance_ordered) << "\n";

    if (!r.power.empty()) {
        o << "\nrejection rate at level " << detail::fixed(c.test_level, 2) << "\n"
          << std::setw(6) << "|G|" << std::setw(8) << "|G&A|" << std::setw(9) << "Wbs" << std::setw(9) << "W1"
          << std::setw(12) << "W1 usable" << "\n";
        for (const auto& e : r.power)
            o << std::setw(6) << e.spec.size << std::setw(8) << e.spec.signals << std::setw(9)
              << detail::fixed(e.wbs_rate()) << std::setw(9) << detail::fixed(e.w1_rate()) << std::setw(12)
              << e.w1_computable << "\n";
    }
    if (!r.failures.empty()) {
        o << "\nfailed replicates:\n";
        for (const auto& [idx, msg] : r.failures) o << "  " << idx << ": " << msg << "\n";
    }
    if (c.report_timing) o << "\nmean seconds per replicate " << detail::fixed(r.mean_seconds, 4) << "\n";
}

// ---- per-replicate CSV ----------------------------------------------------

namespace detail {

inline std::string g17(double v)
{
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

inline std::string quote(const std::string& s)
{
    std::string out = "\"";
    for (char ch : s) out += ch == '"' ? std::string("\"\"") : std::string(1, ch);
    return out + "\"";
}

inline std::vector<std::string> split_csv_line(const std::string& line)
{
    std::vector<std::string> out;
    std::string cur;
    bool inq = false;
    for (std::size_t i = 0; i < line.size(); ++i) {
        const char ch = line[i];
        if (inq) {
            if (ch == '"' && i + 1 < line.size() && line[i + 1] == '"') {
                cur += '"';
                ++i;
            } else if (ch == '"') {
                inq = false;
            } else {
                cur += ch;
            }
        } else if (ch == '"') {
            inq = true;
        } else if (ch == ',') {
            out.push_back(cur);
            cur.clear();
        } else {
            cur += ch;
        }
    }
    out.push_back(cur);
    return out;
}

inline double to_double(const std::string& s)
{
    char* end = nullptr;
    const double v = std::strtod(s.c_str(), &end);
    if (end == s.c_str()) throw InvalidArgument("csv: not a number: '" + s + "'");
    return v;
}

} // namespace detail

inline std::vector<std::string> record_columns(const sim::SimConfig& c)
{
    std::vector<std::string> h{"replicate", "ok", "failure", "lambda", "a_hat", "a_tilde", "injected",
                               "filled_by_order", "truncated", "tau_a", "tau_c", "sigma_hat", "signals_in_expanded",
                               "strong_missed", "a_star"};
    for (const char* set : {"A", "Ac", "oracle_A"})
        for (const char* m : {"bias", "ase", "cover99", "cover95", "cover90"}) h.push_back(std::string(m) + "_" + set);
    for (const char* m : {"variance_ordered", "width_expanded", "width_complement", "remainder_expanded",
                          "remainder_complement", "l2_ratio"})
        h.emplace_back(m);
    for (Index k = 0; k < c.a; ++k) h.push_back("pivot_" + std::to_string(k + 1));
    for (std::size_t k = 0; k < c.groups.size(); ++k) {
        const std::string g = "g" + std::to_string(c.groups[k].size) + "_" + std::to_string(c.groups[k].signals) + "_";
        for (const char* m : {"w1_ok", "w1", "w1_p", "wbs_ok", "wbs", "wbs_p"}) h.push_back(g + m);
    }
    if (c.report_timing) h.emplace_back("seconds");
    return h;
}

inline void write_records_csv(std::ostream& o, const sim::SimConfig& c, const std::vector<sim::ReplicateRecord>& recs)
{
    const auto head = record_columns(c);
    for (std::size_t i = 0; i < head.size(); ++i) o << (i ? "," : "") << head[i];
    o << "\n";
    using detail::g17;
    for (const auto& r : recs) {
        std::vector<std::string> f{std::to_string(r.index), r.ok ? "1" : "0", detail::quote(r.failure), g17(r.lambda),
                                   std::to_string(r.a_hat), std::to_string(r.a_tilde), std::to_string(r.injected),
                                   std::to_string(r.filled_by_order), r.truncated ? "1" : "0", g17(r.tau_a),
                                   g17(r.tau_c), g17(r.sigma_hat), std::to_string(r.signals_in_expanded),
                                   std::to_string(r.strong_missed), std::to_string(r.a_star)};
        for (const sim::SetSummary* s : {&r.signal, &r.null, &r.oracle}) {
            f.push_back(g17(s->bias));
            f.push_back(g17(s->ase));
            for (double v : s->cover) f.push_back(g17(v));
        }
        f.push_back(r.variance_ordered ? "1" : "0");
        for (double v : {r.width_expanded, r.width_complement, r.remainder_expanded, r.remainder_complement, r.l2_ratio})
            f.push_back(g17(v));
        for (Index k = 0; k < c.a; ++k)
            f.push_back(static_cast<std::size_t>(k) < r.pivots.size() ? g17(r.pivots[static_cast<std::size_t>(k)]) : "");
        for (std::size_t k = 0; k < c.groups.size(); ++k) {
            if (k < r.groups.size()) {
                const auto& go = r.groups[k];
                f.insert(f.end(), {go.w1_ok ? "1" : "0", g17(go.w1), g17(go.w1_p), go.wbs_ok ? "1" : "0", g17(go.wbs),
                                   g17(go.wbs_p)});
            } else {
                f.insert(f.end(), 6, std::string());
            }
        }
        if (c.report_timing) f.push_back(g17(r.seconds));
        for (std::size_t i = 0; i < f.size(); ++i) o << (i ? "," : "") << f[i];
        o << "\n";
    }
}

/// Inverse of write_records_csv for the same config.
inline std::vector<sim::ReplicateRecord> read_records_csv(std::istream& in, const sim::SimConfig& c)
{
    const auto head = record_columns(c);
    std::string line;
    if (!std::getline(in, line)) throw InvalidArgument("csv: empty input");
    if (detail::split_csv_line(line) != head) throw InvalidArgument("csv: header does not match the config");
    std::vector<sim::ReplicateRecord> out;
    while (std::getline(in, line)) {
        if (line.empty()) continue;
        const auto f = detail::split_csv_line(line);
        if (f.size() != head.size()) throw InvalidArgument("csv: row has " + std::to_string(f.size()) + " fields");
        std::size_t i = 0;
        auto num = [&] { return detail::to_double(f[i++]); };
        auto idx = [&] { return static_cast<Index>(std::stoll(f[i++])); };
        auto flag = [&] { return f[i++] == "1"; };
        sim::ReplicateRecord r;
        r.index = idx();
        r.ok = flag();
        r.failure = f[i++];
        r.lambda = num();
        r.a_hat = idx();
        r.a_tilde = idx();
        r.injected = idx();
        r.filled_by_order = idx();
        r.truncated = flag();
        r.tau_a = num();
        r.tau_c = num();
        r.sigma_hat = num();
        r.signals_in_expanded = idx();
        r.strong_missed = idx();
        r.a_star = idx();
        for (sim::SetSummary* s : {&r.signal, &r.null, &r.oracle}) {
            s->bias = num();
            s->ase = num();
            for (double& v : s->cover) v = num();
        }
        r.variance_ordered = flag();
        for (double* v : {&r.width_expanded, &r.width_complement, &r.remainder_expanded, &r.remainder_complement, &r.l2_ratio})
            *v = num();
        // empty fields: the replicate failed before producing these
        for (Index k = 0; k < c.a; ++k) {
            if (f[i].empty()) ++i;
            else r.pivots.push_back(num());
        }
        for (std::size_t k = 0; k < c.groups.size(); ++k) {
            if (f[i].empty()) {
                i += 6;
                continue;
            }
            sim::GroupOutcome go;
            go.spec = c.groups[k];
            go.w1_ok = flag();
            go.w1 = num();
            go.w1_p = num();
            go.wbs_ok = flag();
            go.wbs = num();
            go.wbs_p = num();
            r.groups.push_back(go);
        }
        if (c.report_timing) r.seconds = num();
        out.push_back(std::move(r));
    }
    return out;
}

} // namespace moce::report
