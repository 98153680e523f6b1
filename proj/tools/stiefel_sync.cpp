// stiefel-sync: run, generate and audit scenario files.

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "stsync/parallel.hpp"
#include "stsync/runner.hpp"

namespace {

namespace fs = std::filesystem;
using stsync::json;

struct Outcome {
    int code = stsync::kExitOk;
    std::string message;
};

int cmd_run(const std::vector<std::string>& configs, const std::string& out_dir) {
    std::vector<Outcome> results(configs.size());
    stsync::parallel_for(configs.size(), [&](std::size_t i) {
        try {
            const stsync::RunReport r = stsync::run_scenario(fs::path(configs[i]), fs::path(out_dir));
            std::string msg = configs[i] + ": " + (r.exit_code == 0 ? "ok" : "FAILED");
            for (const auto& f : r.failures) msg += "\n  " + f;
            msg += "\n  report: " + r.artifacts.back();
            results[i] = {r.exit_code, msg};
        } catch (const stsync::DivergenceError& e) {
            char buf[64];
            std::snprintf(buf, sizeof buf, " (last good t = %g)", e.last_good_time());
            results[i] = {stsync::kExitDivergence, configs[i] + ": error: " + e.what() + buf};
        } catch (const std::exception& e) {
            results[i] = {stsync::exit_code_for(e), configs[i] + ": error: " + e.what()};
        }
    });
    int code = stsync::kExitOk;
    for (const auto& r : results) {
        (r.code == 0 ? std::cout : std::cerr) << r.message << '\n';
        if (code == stsync::kExitOk) code = r.code;
    }
    return code;
}

int cmd_gen(const std::string& name, std::uint64_t seed, const std::vector<std::string>& sets,
            const std::string& out_file) {
    const auto tmpl = stsync::parse_template(name);
    if (!tmpl) {
        std::cerr << "error: unknown template '" << name
                  << "' (homogeneous, heterogeneous-framework, stability-pair, kuramoto-circle)\n";
        return stsync::kExitUsage;
    }
    std::map<std::string, std::string> overrides;
    for (const auto& kv : sets) {
        const auto eq = kv.find('=');
        if (eq == std::string::npos || eq == 0) {
            std::cerr << "error: --set expects key=value, got '" << kv << "'\n";
            return stsync::kExitUsage;
        }
        overrides[kv.substr(0, eq)] = kv.substr(eq + 1);
    }
    try {
        const std::string text = stsync::generate_scenario(*tmpl, seed, overrides).dump(2) + "\n";
        if (out_file.empty()) {
            std::cout << text;
        } else {
            std::ofstream out(out_file, std::ios::binary | std::ios::trunc);
            out << text;
            if (!out) throw stsync::IoError("cannot write " + out_file);
        }
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << '\n';
        return stsync::exit_code_for(e);
    }
    return stsync::kExitOk;
}

int cmd_audit(const std::string& csv, const std::string& config) {
    try {
        const stsync::Scenario sc = stsync::load_scenario(config);
        const stsync::SeriesTable table = stsync::read_series(csv);
        const stsync::AuditBatch batch = stsync::audit_series(table, sc.model);
        json j;
        json audits = json::array();
        bool pass = true;
        for (const auto& a : batch.audits) {
            audits.push_back({{"id", a.id}, {"pass", a.pass}, {"max_violation", a.max_violation}, {"tol", a.tol},
                              {"points", a.points}});
            pass = pass && a.pass;
        }
        j["audits"] = audits;
        j["skipped"] = batch.skipped;
        std::cout << j.dump(2) << '\n';
        return pass ? stsync::kExitOk : stsync::kExitAuditFailed;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << '\n';
        return stsync::exit_code_for(e);
    }
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Simulate and audit coupled oscillators on Stiefel manifolds."};
    app.set_version_flag("--version", std::string("stiefel-sync ") + stsync::kVersion);
    app.require_subcommand(1);
    app.footer(
        "Exit codes: 0 ok, 1 usage, 2 parse error, 3 validation error, 4 divergence,\n"
        "5 audit failed, 6 expectation unmet, 7 I/O error, 8 internal error.\n"
        "STIEFEL_SYNC_THREADS caps how many scenarios `run` executes at once.");

    std::vector<std::string> configs;
    std::string out_dir = "out";
    auto* run = app.add_subcommand("run", "Run one or more scenario files");
    run->add_option("config", configs, "Scenario JSON file(s)")->required()->check(CLI::ExistingFile);
    run->add_option("--out", out_dir, "Output directory")->capture_default_str();

    std::string tmpl;
    std::uint64_t seed = 0;
    std::vector<std::string> sets;
    std::string gen_out;
    auto* gen = app.add_subcommand("gen", "Generate a scenario file from a template");
    gen->add_option("template", tmpl, "homogeneous | heterogeneous-framework | stability-pair | kuramoto-circle")
        ->required();
    gen->add_option("--seed", seed, "Random seed")->required();
    gen->add_option("--set", sets, "Override key=value (repeatable)");
    gen->add_option("-o,--output", gen_out, "Write to a file instead of stdout");

    std::string csv;
    std::string audit_cfg;
    auto* audit = app.add_subcommand("audit", "Audit the inequalities on a recorded series CSV");
    audit->add_option("series", csv, "Series CSV written by `run`")->required()->check(CLI::ExistingFile);
    audit->add_option("--config", audit_cfg, "Scenario JSON the series came from")
        ->required()
        ->check(CLI::ExistingFile);

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int rc = app.exit(e);
        return rc == 0 ? stsync::kExitOk : stsync::kExitUsage;
    }

    if (*run) return cmd_run(configs, out_dir);
    if (*gen) return cmd_gen(tmpl, seed, sets, gen_out);
    return cmd_audit(csv, audit_cfg);
}
