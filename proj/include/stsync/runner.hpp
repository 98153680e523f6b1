#pragma once

// Scenario execution: integration, requested analyses, series CSV and
// report JSON output.

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "stsync/scenario.hpp"

namespace stsync {

inline constexpr const char* kVersion = "0.1.0";

/// Process exit codes shared by the CLI and the report.
enum ExitCode : int {
    kExitOk = 0,
    kExitUsage = 1,
    kExitParse = 2,
    kExitValidation = 3,
    kExitDivergence = 4,
    kExitAuditFailed = 5,
    kExitExpectationUnmet = 6,
    kExitIo = 7,
    kExitInternal = 8,
};

/// Maps a library exception to its exit code.
inline int exit_code_for(const std::exception& e) {
    if (dynamic_cast<const ParseError*>(&e)) return kExitParse;
    if (dynamic_cast<const DivergenceError*>(&e)) return kExitDivergence;
    if (dynamic_cast<const IoError*>(&e)) return kExitIo;
    if (dynamic_cast<const Error*>(&e)) return kExitValidation;
    return kExitInternal;
}

// --- series CSV ----------------------------------------------------------------

/// Named columns, each as long as the trajectory.
struct SeriesTable {
    std::vector<std::string> names;
    std::vector<std::vector<double>> columns;

    void add(std::string name, std::vector<double> values) {
        names.push_back(std::move(name));
        columns.push_back(std::move(values));
    }
    const std::vector<double>* find(const std::string& name) const {
        for (std::size_t i = 0; i < names.size(); ++i)
            if (names[i] == name) return &columns[i];
        return nullptr;
    }
    const std::vector<double>& at(const std::string& name) const {
        const auto* c = find(name);
        if (!c) throw ValidationError("series has no column '" + name + "'");
        return *c;
    }
    std::size_t rows() const { return columns.empty() ? 0 : columns.front().size(); }
};

inline std::string format_double(double v) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

/// Writes `t,drift,diam_S` from the trajectory followed by the extra columns.
/// The file is written to a temporary name and renamed, so a failure never
/// leaves a partial file at `path`.
inline void emit_series(const Trajectory& traj, const SeriesTable& diag, const std::filesystem::path& path) {
    if (traj.empty()) throw InsufficientDataError("emit_series: empty trajectory");
    for (std::size_t c = 0; c < diag.columns.size(); ++c) {
        if (diag.columns[c].size() != traj.size()) {
            throw DimensionError("emit_series: column '" + diag.names[c] + "' has the wrong length");
        }
    }
    std::filesystem::path tmp = path;
    tmp += ".partial";
    {
        std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
        if (!out) throw IoError("emit_series: cannot open " + tmp.string());
        out << "t,drift,diam_S";
        for (const auto& n : diag.names) out << ',' << n;
        out << '\n';
        for (std::size_t k = 0; k < traj.size(); ++k) {
            out << format_double(traj.times[k]) << ',' << format_double(traj.drift[k]) << ','
                << format_double(traj.diameters[k]);
            for (const auto& col : diag.columns) out << ',' << format_double(col[k]);
            out << '\n';
        }
        out.flush();
        if (!out) {
            out.close();
            std::error_code ec;
            std::filesystem::remove(tmp, ec);
            throw IoError("emit_series: write failed for " + path.string());
        }
    }
    std::error_code ec;
    std::filesystem::rename(tmp, path, ec);
    if (ec) {
        std::filesystem::remove(tmp, ec);
        throw IoError("emit_series: cannot move output into place at " + path.string());
    }
}

inline SeriesTable read_series(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw IoError("cannot open series file " + path.string());
    SeriesTable table;
    std::string line;
    if (!std::getline(in, line) || line.empty()) throw ParseError(path.string() + ": missing header");
    {
        std::stringstream ss(line);
        std::string name;
        while (std::getline(ss, name, ',')) table.add(name, {});
    }
    std::size_t lineno = 1;
    while (std::getline(in, line)) {
        ++lineno;
        if (line.empty()) continue;
        std::size_t col = 0;
        const char* p = line.c_str();
        while (true) {
            char* end = nullptr;
            const double v = std::strtod(p, &end);
            if (end == p || col >= table.columns.size()) {
                throw ParseError(path.string() + ":" + std::to_string(lineno) + ": malformed row");
            }
            table.columns[col++].push_back(v);
            if (*end == ',') {
                p = end + 1;
            } else if (*end == '\0' || *end == '\r') {
                break;
            } else {
                throw ParseError(path.string() + ":" + std::to_string(lineno) + ": malformed number");
            }
        }
        if (col != table.columns.size()) {
            throw ParseError(path.string() + ":" + std::to_string(lineno) + ": wrong number of fields");
        }
    }
    return table;
}

// --- report ----------------------------------------------------------------------

struct AuditSummary {
    std::string id;
    bool pass = true;
    double max_violation = 0.0;
    double tol = 0.0;
    std::size_t points = 0;
};

inline AuditSummary summarize(const InequalityAudit& a) {
    return {to_string(a.kind), a.pass, a.max_violation, a.tol, a.times.size()};
}

struct DecaySummary {
    double rate = 0.0;
    double r_squared = 0.0;
    double t0 = 0.0, t1 = 0.0;
    std::optional<double> delta_lower;
};

struct RunReport {
    std::string scenario;
    std::optional<FrameworkReport> framework;
    std::optional<ConsensusResult> consensus;
    std::optional<DecaySummary> decay;
    std::map<std::string, double> gain;  ///< keyed by exponent, e.g. "1", "2", "4"
    std::vector<AuditSummary> audits;
    std::optional<bool> diameter_bound_held;
    std::optional<CubicReport> cubic;
    std::map<std::string, std::string> skipped;  ///< analysis -> reason
    std::vector<std::string> artifacts;
    std::vector<std::string> failures;
    int exit_code = kExitOk;

    bool audits_pass() const {
        for (const auto& a : audits)
            if (!a.pass) return false;
        return diameter_bound_held.value_or(true);
    }
};

inline std::string exponent_key(double q) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%g", q);
    return buf;
}

inline json to_json(const FrameworkReport& f) {
    static const char* names[4] = {"F1", "F2", "F3", "F4"};
    json conds = json::array();
    const double lhs[4] = {f.f1_lhs, f.f2_lhs, f.f3_lhs, f.f4_actual};
    const double rhs[4] = {f.f1_rhs, f.f2_rhs, f.f3_rhs, f.f4_bound};
    for (int k = 0; k < 4; ++k) {
        conds.push_back({{"id", names[k]}, {"lhs", lhs[k]}, {"rhs", rhs[k]}, {"margin", f.margin(k)},
                         {"satisfied", f.satisfied[k]}});
    }
    json j = {{"conditions", conds}, {"all_satisfied", f.all()}, {"eps_sup", f.eps_sup}};
    j["delta_lower"] = f.delta_lower ? json(*f.delta_lower) : json(nullptr);
    return j;
}

inline json to_json(const RunReport& r) {
    json j;
    j["scenario"] = r.scenario;
    j["version"] = kVersion;
    j["framework"] = r.framework ? to_json(*r.framework) : json(nullptr);
    if (r.consensus) {
        j["consensus"] = {{"status", to_string(r.consensus->kind)},
                          {"max_identity_gap", r.consensus->max_identity_gap},
                          {"max_variation", r.consensus->max_variation}};
    } else {
        j["consensus"] = nullptr;
    }
    if (r.decay) {
        j["decay"] = {{"rate", r.decay->rate}, {"r_squared", r.decay->r_squared},
                      {"window", {r.decay->t0, r.decay->t1}},
                      {"delta_lower", r.decay->delta_lower ? json(*r.decay->delta_lower) : json(nullptr)}};
    } else {
        j["decay"] = nullptr;
    }
    j["gain"] = r.gain;
    json audits = json::array();
    for (const auto& a : r.audits) {
        audits.push_back({{"id", a.id}, {"pass", a.pass}, {"max_violation", a.max_violation}, {"tol", a.tol},
                          {"points", a.points}});
    }
    j["audits"] = audits;
    j["diameter_bound_held"] = r.diameter_bound_held ? json(*r.diameter_bound_held) : json(nullptr);
    if (r.cubic) {
        j["cubic"] = {{"c", r.cubic->c}, {"roots", r.cubic->roots_in_range}, {"threshold", r.cubic->threshold},
                      {"f_at_bound", r.cubic->f_at_bound}, {"invariant_region_ok", r.cubic->invariant_region_ok}};
    } else {
        j["cubic"] = nullptr;
    }
    j["skipped"] = r.skipped;
    j["artifacts"] = r.artifacts;
    j["failures"] = r.failures;
    j["exit_code"] = r.exit_code;
    return j;
}

// --- audits over recorded series ----------------------------------------------

struct AuditBatch {
    std::vector<AuditSummary> audits;
    std::map<std::string, std::string> skipped;
};

/// Runs every inequality audit the columns of `series` support.
inline AuditBatch audit_series(const SeriesTable& s, const ModelConfig& cfg) {
    AuditBatch out;
    const auto& t = s.at("t");
    const bool separable = cfg.topology().is_separable();
    const auto* tilde = s.find("diam_S_tilde");

    if (separable) {
        out.audits.push_back(summarize(audit_diameter_growth(t, s.at("diam_S"), cfg)));
    } else {
        out.skipped["diameter_growth"] = "needs a separable topology";
    }

    if (!separable) {
        out.skipped["correlation_contraction"] = "needs a separable topology";
    } else if (tilde && s.find("A_diff2") && s.find("A_skew2")) {
        out.audits.push_back(summarize(
            audit_correlation_contraction(t, s.at("A_diff2"), s.at("A_skew2"), s.at("diam_S"), *tilde, cfg)));
    } else {
        out.skipped["correlation_contraction"] = "needs a companion solution (columns A_diff2, A_skew2, diam_S_tilde)";
    }

    std::vector<std::vector<double>> x;
    for (std::size_t i = 0; i < cfg.agents(); ++i) {
        const auto* c = s.find("x_" + std::to_string(i));
        if (!c) break;
        x.push_back(*c);
    }
    if (tilde && x.size() == cfg.agents()) {
        out.audits.push_back(
            summarize(audit_pair_distance(t, x, s.at("diam_S"), *tilde, cfg.topology(), cfg.kappa())));
    } else {
        out.skipped["pair_distance"] = "needs a companion solution (columns x_i, diam_S_tilde)";
    }
    return out;
}

// --- run -------------------------------------------------------------------------

namespace detail {

inline void require(bool ok, RunReport& r, const std::string& what) {
    if (!ok) r.failures.push_back(what);
}

}  // namespace detail

/// Integrates the scenario (and its companion, when one is needed), runs the
/// requested analyses and writes `<name>.csv` and `<name>.report.json` to `out_dir`.
/// Library errors propagate; failed audits and unmet expectations are
/// reported through RunReport::exit_code.
inline RunReport run_scenario(const Scenario& sc, const std::filesystem::path& out_dir) {
    RunReport r;
    r.scenario = sc.name;
    const ModelConfig& cfg = sc.model;
    const bool separable = cfg.topology().is_separable();

    if (sc.requests(AnalysisKind::Framework)) r.framework = check_framework(cfg, sc.initial);

    const Trajectory main = integrate(sc.initial, cfg, sc.integrator);
    std::optional<Trajectory> twin;
    const bool wants_twin = sc.requests(AnalysisKind::DecayFit) || sc.requests(AnalysisKind::Stability) ||
                            sc.requests(AnalysisKind::Audits);
    if (const auto comp = sc.companion_spec(); comp && wants_twin) {
        Rng rng(comp->seed);
        twin = integrate(perturb(sc.initial, comp->radius, rng), cfg, sc.integrator);
    }

    if (sc.requests(AnalysisKind::Consensus) || sc.expect_consensus) {
        r.consensus = consensus_status(main, sc.consensus.window_fraction * sc.integrator.t_end, sc.consensus.tol);
    }

    SeriesTable table;
    std::vector<double> gap_total;
    std::vector<CorrelationGap> gaps;
    if (twin) {
        gaps = correlation_gap_series(main, *twin);
        for (const auto& g : gaps) gap_total.push_back(g.total());
        table.add("diam_A", gap_total);
    }
    {
        std::vector<double> v;
        for (const auto& s : main.states) v.push_back(potential(s, cfg.topology()));
        table.add("V", std::move(v));
    }

    if (sc.requests(AnalysisKind::DecayFit)) {
        const double t_end = main.times.back();
        const auto [t0, t1] = sc.decay_window.value_or(std::make_pair(0.5 * t_end, t_end));
        const DecayFit fit = fit_decay_rate(main.times, gap_total, t0, t1);
        DecaySummary d{fit.rate, fit.r_squared, t0, t1, std::nullopt};
        const FrameworkReport fw = r.framework ? *r.framework : check_framework(cfg, sc.initial);
        d.delta_lower = fw.delta_lower;
        r.decay = d;
        detail::require(fit.rate > 0.0, r, "decay_fit: fitted rate is not positive");
    }

    if (const Analysis* st = sc.find(AnalysisKind::Stability)) {
        for (double q : st->p_exp) {
            const std::string key = exponent_key(q);
            r.gain[key] = stability_gain(main, *twin, q);
            std::vector<double> dist;
            for (std::size_t k = 0; k < main.size(); ++k) {
                dist.push_back(ensemble_lp_distance(main.states[k], twin->states[k], q));
            }
            table.add("dist_l" + key, std::move(dist));
        }
    }

    if (sc.requests(AnalysisKind::Audits)) {
        if (twin) {
            std::vector<double> sym, skew;
            for (const auto& g : gaps) {
                sym.push_back(g.sym_sq);
                skew.push_back(g.skew_sq);
            }
            table.add("diam_S_tilde", twin->diameters);
            table.add("A_diff2", std::move(sym));
            table.add("A_skew2", std::move(skew));
            const auto x = agent_distance_series(main, *twin);
            for (std::size_t i = 0; i < x.size(); ++i) table.add("x_" + std::to_string(i), x[i]);
        }
        SeriesTable full = table;
        full.names.insert(full.names.begin(), {"t", "drift", "diam_S"});
        full.columns.insert(full.columns.begin(), {main.times, main.drift, main.diameters});
        AuditBatch batch = audit_series(full, cfg);
        r.audits = std::move(batch.audits);
        for (auto& [k, v] : batch.skipped) r.skipped["audits." + k] = v;

        if (!separable) {
            r.skipped["audits.diameter_bound"] = "needs a separable topology";
        } else if (check_framework(cfg, sc.initial).all()) {
            r.diameter_bound_held = diameter_bound_monitor(main, cfg);
        } else {
            r.skipped["audits.diameter_bound"] = "sufficient conditions fail at t = 0";
        }
        for (const auto& a : r.audits) detail::require(a.pass, r, "audit " + a.id + " violated");
        if (r.diameter_bound_held) detail::require(*r.diameter_bound_held, r, "diameter reached the admissible bound");
    }

    if (sc.requests(AnalysisKind::Cubic)) r.cubic = cubic_analysis(cfg);

    bool expectation_met = true;
    if (sc.expect_consensus) {
        const ConsensusKind k = r.consensus->kind;
        const std::string& want = *sc.expect_consensus;
        expectation_met = want == "complete" ? k == ConsensusKind::Complete
                          : want == "partial" ? k == ConsensusKind::Partial
                                              : k != ConsensusKind::None;
        detail::require(expectation_met, r,
                        "expected consensus '" + want + "', observed '" + to_string(k) + "'");
    }

    if (!r.audits_pass()) {
        r.exit_code = kExitAuditFailed;
    } else if (!r.failures.empty()) {
        r.exit_code = kExitExpectationUnmet;
    }

    std::error_code ec;
    std::filesystem::create_directories(out_dir, ec);
    if (ec) throw IoError("cannot create output directory " + out_dir.string());
    const auto csv = out_dir / (sc.name + ".csv");
    const auto rep = out_dir / (sc.name + ".report.json");
    emit_series(main, table, csv);
    r.artifacts = {csv.string(), rep.string()};
    std::ofstream out(rep, std::ios::binary | std::ios::trunc);
    out << to_json(r).dump(2) << '\n';
    if (!out) throw IoError("cannot write report " + rep.string());
    return r;
}

inline RunReport run_scenario(const std::filesystem::path& config, const std::filesystem::path& out_dir) {
    return run_scenario(load_scenario(config), out_dir);
}

}  // namespace stsync
