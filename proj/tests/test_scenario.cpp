#include <cmath>
#include <filesystem>
#include <fstream>
#include <numbers>
#include <sstream>

#include "stsync/runner.hpp"
#include "support.hpp"

namespace stsync {
namespace {

namespace fs = std::filesystem;

const fs::path kScenarios = STSYNC_SCENARIOS;

fs::path scratch_dir(const std::string& name) {
    const fs::path dir = fs::temp_directory_path() / ("stsync_test_" + name);
    fs::remove_all(dir);
    fs::create_directories(dir);
    return dir;
}

std::string slurp(const fs::path& p) {
    std::ifstream in(p, std::ios::binary);
    std::stringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

json small_config() {
    return json::parse(R"({
        "name": "small",
        "dims": {"n": 3, "p": 2, "N": 4},
        "kappa": 1.0,
        "topology": {"kind": "separable", "xi": [1.0, 1.1, 0.9, 1.0]},
        "frequencies": {"kind": "random", "magnitude": 0.1, "seed": 3},
        "initial": {"kind": "near_consensus", "radius": 0.3, "seed": 4},
        "integrator": {"h": 0.01, "t_end": 2.0},
        "analyses": ["consensus"],
        "consensus": {"window_fraction": 0.5, "tol": 1.0}
    })");
}

std::string parse_error_for(const json& j) {
    try {
        parse_scenario(j);
    } catch (const ParseError& e) {
        return e.what();
    }
    return "";
}

TEST(ParseScenario, SmallConfig) {
    const Scenario sc = parse_scenario(small_config());
    EXPECT_EQ(sc.name, "small");
    EXPECT_EQ(sc.agents, 4u);
    EXPECT_EQ(sc.model.kappa(), 1.0);
    EXPECT_EQ(sc.integrator.steps(), 200u);
    EXPECT_TRUE(sc.requests(AnalysisKind::Consensus));
    EXPECT_FALSE(sc.requests(AnalysisKind::Audits));
}

TEST(ParseScenario, MissingPhysicalFieldsAreNamed) {
    json j = small_config();
    j.erase("kappa");
    EXPECT_NE(parse_error_for(j).find("'kappa'"), std::string::npos);
    j = small_config();
    j["dims"].erase("N");
    EXPECT_NE(parse_error_for(j).find("'dims.N'"), std::string::npos);
    j = small_config();
    j["initial"].erase("radius");
    EXPECT_NE(parse_error_for(j).find("'initial.radius'"), std::string::npos);
    j = small_config();
    j["kappa"] = "one";
    EXPECT_NE(parse_error_for(j).find("'kappa'"), std::string::npos);
    j = small_config();
    j["analyses"] = {"spectrum"};
    EXPECT_NE(parse_error_for(j).find("analyses[0]"), std::string::npos);
}

TEST(ParseScenario, SyntaxErrorsReportPosition) {
    const fs::path dir = scratch_dir("syntax");
    std::ofstream(dir / "bad.json") << "{\n  \"name\": \"x\",\n  \"kappa\": ,\n}\n";
    try {
        load_scenario(dir / "bad.json");
        FAIL();
    } catch (const ParseError& e) {
        EXPECT_NE(std::string(e.what()).find("line 3"), std::string::npos) << e.what();
    }
    EXPECT_THROW(load_scenario(dir / "missing.json"), IoError);
}

TEST(ParseScenario, ValidationErrors) {
    json j = small_config();
    j["topology"] = {{"kind", "general"}, {"weights", {{0, 1, 0, 0}, {1, 0, 0, 0}, {0, 0, 0, 1}, {0, 0, 1, 0}}}};
    EXPECT_THROW(parse_scenario(j), ValidationError);  // disconnected

    j = small_config();
    j["topology"] = {{"kind", "general"}, {"generator", {{"density", 0.5}, {"seed", 1}}}};
    j["analyses"] = {"framework"};
    EXPECT_THROW(parse_scenario(j), ValidationError);  // framework needs separable

    j = small_config();
    j["topology"]["xi"] = {1.0, 1.0};
    EXPECT_THROW(parse_scenario(j), ValidationError);

    j = small_config();
    j["integrator"]["t_end"] = 1.005;
    EXPECT_THROW(parse_scenario(j), ValidationError);

    j = small_config();
    j["initial"] = {{"kind", "explicit"}, {"agents", json::array({{{1, 0}, {0, 2}, {0, 0}}})}};
    EXPECT_THROW(parse_scenario(j), ValidationError);

    j = small_config();
    j["analyses"] = {"decay_fit"};
    EXPECT_THROW(parse_scenario(j), ValidationError);  // no companion
}

TEST(ParseScenario, GeneralTopologyGenerator) {
    json j = small_config();
    j["topology"] = {{"kind", "general"}, {"generator", {{"density", 0.2}, {"seed", 9}}}};
    const Scenario sc = parse_scenario(j);
    EXPECT_FALSE(sc.model.topology().is_separable());
    EXPECT_EQ(sc.model.topology().size(), 4u);
}

TEST(ParseScenario, ExplicitInitialFromFile) {
    const fs::path dir = scratch_dir("explicit");
    Rng rng(5);
    json agents = json::array();
    std::vector<StiefelPoint> pts;
    for (int i = 0; i < 4; ++i) {
        pts.push_back(random_stiefel(3, 2, rng));
        agents.push_back(detail::mat_to_json(pts.back().mat()));
    }
    std::ofstream(dir / "agents.json") << json{{"agents", agents}}.dump();
    json j = small_config();
    j["initial"] = {{"kind", "explicit"}, {"file", "agents.json"}};
    std::ofstream(dir / "cfg.json") << j.dump();
    const Scenario sc = load_scenario(dir / "cfg.json");
    EXPECT_EQ(sc.initial, EnsembleState(pts));
}

// --- templates ---------------------------------------------------------------

TEST(GenerateScenario, HomogeneousIsByteStable) {
    const std::string a = generate_scenario(ScenarioTemplate::Homogeneous, 42, {}).dump(2);
    const std::string b = generate_scenario(ScenarioTemplate::Homogeneous, 42, {}).dump(2);
    EXPECT_EQ(a, b);
    EXPECT_NE(a, generate_scenario(ScenarioTemplate::Homogeneous, 43, {}).dump(2));
}

TEST(GenerateScenario, EveryTemplateParses) {
    for (auto t : {ScenarioTemplate::Homogeneous, ScenarioTemplate::HeterogeneousFramework,
                   ScenarioTemplate::StabilityPair, ScenarioTemplate::KuramotoCircle}) {
        EXPECT_NO_THROW(parse_scenario(generate_scenario(t, 1, {})));
    }
}

TEST(GenerateScenario, FrameworkTemplateMargins) {
    for (std::uint64_t seed = 1; seed <= 5; ++seed) {
        const Scenario sc = parse_scenario(generate_scenario(ScenarioTemplate::HeterogeneousFramework, seed, {}));
        const FrameworkReport fw = check_framework(sc.model, sc.initial);
        ASSERT_TRUE(fw.all());
        EXPECT_NEAR(fw.f3_lhs / fw.f3_rhs, 0.9, 1e-9);
        EXPECT_NEAR(fw.f4_actual / fw.f4_bound, 0.9, 1e-9);
        Rng rng(sc.companion->seed);
        const EnsembleState twin = perturb(sc.initial, sc.companion->radius, rng);
        EXPECT_TRUE(check_framework(sc.model, twin).all());
    }
}

TEST(GenerateScenario, OverridesApply) {
    const json j = generate_scenario(ScenarioTemplate::HeterogeneousFramework, 3,
                                     {{"N", "8"}, {"n", "5"}, {"p", "3"}, {"kappa", "2"}, {"t_end", "5"}});
    const Scenario sc = parse_scenario(j);
    EXPECT_EQ(sc.agents, 8u);
    EXPECT_EQ(sc.n, 5u);
    EXPECT_EQ(sc.p, 3u);
    EXPECT_EQ(sc.model.kappa(), 2.0);
    EXPECT_TRUE(check_framework(sc.model, sc.initial).all());
}

TEST(GenerateScenario, UnsatisfiableOverridesFail) {
    using M = std::map<std::string, std::string>;
    EXPECT_THROW(generate_scenario(ScenarioTemplate::HeterogeneousFramework, 1, M{{"xi_spread", "3"}}), GenerationError);
    EXPECT_THROW(generate_scenario(ScenarioTemplate::HeterogeneousFramework, 1, M{{"freq_fraction", "1.2"}}),
                 GenerationError);
    EXPECT_THROW(generate_scenario(ScenarioTemplate::HeterogeneousFramework, 1, M{{"p", "1"}}), GenerationError);
    EXPECT_THROW(generate_scenario(ScenarioTemplate::StabilityPair, 1, M{{"kappa", "0"}}), GenerationError);
    EXPECT_THROW(generate_scenario(ScenarioTemplate::Homogeneous, 1, M{{"radius", "2"}}), GenerationError);
    EXPECT_THROW(generate_scenario(ScenarioTemplate::KuramotoCircle, 1, M{{"p", "2"}}), GenerationError);
    EXPECT_THROW(generate_scenario(ScenarioTemplate::Homogeneous, 1, M{{"N", "abc"}}), GenerationError);
}

// Scalar RK4 on the phases, same step as the matrix run.
std::vector<double> kuramoto_oracle(std::vector<double> theta, const Topology& topo, double kappa, double h,
                                    std::size_t steps) {
    const std::size_t n = theta.size();
    auto field = [&](const std::vector<double>& th) {
        std::vector<double> d(n, 0.0);
        for (std::size_t i = 0; i < n; ++i) {
            for (std::size_t k = 0; k < n; ++k) d[i] += topo.weight(i, k) * std::sin(th[k] - th[i]);
            d[i] *= kappa / static_cast<double>(n);
        }
        return d;
    };
    auto shift = [&](const std::vector<double>& a, double s, const std::vector<double>& b) {
        std::vector<double> out(n);
        for (std::size_t i = 0; i < n; ++i) out[i] = a[i] + s * b[i];
        return out;
    };
    for (std::size_t s = 0; s < steps; ++s) {
        const auto k1 = field(theta);
        const auto k2 = field(shift(theta, 0.5 * h, k1));
        const auto k3 = field(shift(theta, 0.5 * h, k2));
        const auto k4 = field(shift(theta, h, k3));
        for (std::size_t i = 0; i < n; ++i) theta[i] += h / 6.0 * (k1[i] + 2 * k2[i] + 2 * k3[i] + k4[i]);
    }
    return theta;
}

TEST(GenerateScenario, KuramotoCircleMatchesScalarOracle) {
    const Scenario sc = parse_scenario(generate_scenario(ScenarioTemplate::KuramotoCircle, 7, {}));
    ASSERT_EQ(sc.n, 2u);
    ASSERT_EQ(sc.p, 1u);
    std::vector<double> theta;
    for (const auto& a : sc.initial.agents()) theta.push_back(std::atan2(a.mat()(1, 0), a.mat()(0, 0)));
    const Trajectory tr = integrate(sc.initial, sc.model, sc.integrator);
    const auto want = kuramoto_oracle(theta, sc.model.topology(), sc.model.kappa(), sc.integrator.h, sc.integrator.steps());
    for (std::size_t i = 0; i < theta.size(); ++i) {
        const Mat& m = tr.states.back()[i].mat();
        const double got = std::atan2(m(1, 0), m(0, 0));
        EXPECT_LE(std::abs(std::remainder(got - want[i], 2.0 * std::numbers::pi)), 1e-8);
    }
}

// --- series output -------------------------------------------------------------

TEST(EmitSeries, EmptyTrajectoryLeavesNoFile) {
    const fs::path dir = scratch_dir("empty");
    EXPECT_THROW(emit_series(Trajectory{}, SeriesTable{}, dir / "x.csv"), InsufficientDataError);
    EXPECT_TRUE(fs::is_empty(dir));
}

TEST(EmitSeries, UnwritablePathIsIoError) {
    const fs::path dir = scratch_dir("unwritable");
    Rng rng(8);
    const ModelConfig cfg(1.0, Topology::all_to_all(2), FrequencySet::zero(2, 1), 2, 1);
    IntegratorConfig ic;
    ic.h = 0.1;
    ic.t_end = 0.5;
    const Trajectory tr = integrate(testing::random_ensemble(2, 2, 1, rng), cfg, ic);
    EXPECT_THROW(emit_series(tr, SeriesTable{}, dir / "no" / "such" / "x.csv"), IoError);
    EXPECT_TRUE(fs::is_empty(dir));
}

TEST(EmitSeries, RoundTripIsBitwise) {
    const fs::path dir = scratch_dir("roundtrip");
    Rng rng(9);
    const ModelConfig cfg(1.3, Topology::all_to_all(3), testing::random_frequencies(3, 2, 1.0, rng), 3, 2);
    IntegratorConfig ic;
    ic.h = 0.01;
    ic.t_end = 1.0;
    const Trajectory tr = integrate(testing::random_ensemble(3, 3, 2, rng), cfg, ic);
    SeriesTable extra;
    std::vector<double> v, tiny;
    for (std::size_t k = 0; k < tr.size(); ++k) {
        v.push_back(potential(tr.states[k], cfg.topology()));
        tiny.push_back(std::ldexp(rng.uniform(1.0, 2.0), -1000));
    }
    extra.add("V", v);
    extra.add("tiny", tiny);
    emit_series(tr, extra, dir / "s.csv");
    const SeriesTable back = read_series(dir / "s.csv");
    ASSERT_EQ(back.names, (std::vector<std::string>{"t", "drift", "diam_S", "V", "tiny"}));
    EXPECT_EQ(back.at("t"), tr.times);
    EXPECT_EQ(back.at("drift"), tr.drift);
    EXPECT_EQ(back.at("diam_S"), tr.diameters);
    EXPECT_EQ(back.at("V"), v);
    EXPECT_EQ(back.at("tiny"), tiny);
}

TEST(ReadSeries, MalformedRows) {
    const fs::path dir = scratch_dir("malformed");
    std::ofstream(dir / "a.csv") << "t,x\n0,1\n0.1\n";
    EXPECT_THROW(read_series(dir / "a.csv"), ParseError);
    std::ofstream(dir / "b.csv") << "t,x\n0,1x\n";
    EXPECT_THROW(read_series(dir / "b.csv"), ParseError);
}

std::vector<std::string> header_of(const fs::path& csv) {
    std::ifstream in(csv);
    std::string line;
    std::getline(in, line);
    std::vector<std::string> out;
    std::stringstream ss(line);
    std::string name;
    while (std::getline(ss, name, ',')) out.push_back(name);
    return out;
}

TEST(RunScenario, ColumnsMatchRequestedAnalyses) {
    const fs::path dir = scratch_dir("columns");
    json j = small_config();
    run_scenario(parse_scenario(j), dir);
    EXPECT_EQ(header_of(dir / "small.csv"), (std::vector<std::string>{"t", "drift", "diam_S", "V"}));

    j["name"] = "stab";
    j["analyses"] = {json{{"stability", {{"p_exp", {1, 2}}, {"perturbation", 0.01}}}}};
    run_scenario(parse_scenario(j), dir);
    EXPECT_EQ(header_of(dir / "stab.csv"),
              (std::vector<std::string>{"t", "drift", "diam_S", "diam_A", "V", "dist_l1", "dist_l2"}));

    j["name"] = "aud";
    j["analyses"] = {"audits"};
    j["companion"] = {{"radius", 0.01}, {"seed", 2}};
    run_scenario(parse_scenario(j), dir);
    EXPECT_EQ(header_of(dir / "aud.csv"),
              (std::vector<std::string>{"t", "drift", "diam_S", "diam_A", "V", "diam_S_tilde", "A_diff2", "A_skew2",
                                        "x_0", "x_1", "x_2", "x_3"}));
}

TEST(RunScenario, ReportCoversEveryAnalysis) {
    const fs::path dir = scratch_dir("report");
    json j = small_config();
    j["topology"] = {{"kind", "general"}, {"generator", {{"density", 0.5}, {"seed", 3}}}};
    j["analyses"] = {"consensus", "audits", json{{"stability", {{"p_exp", {1}}, {"perturbation", 0.01}}}}};
    const RunReport r = run_scenario(parse_scenario(j), dir);
    const json rep = json::parse(slurp(dir / "small.report.json"));
    EXPECT_EQ(rep["scenario"], "small");
    EXPECT_FALSE(rep["consensus"].is_null());
    EXPECT_TRUE(rep["gain"].contains("1"));
    EXPECT_TRUE(std::isfinite(r.gain.at("1")));
    // Separable-only audits are skipped with a reason; the pairwise one runs.
    EXPECT_TRUE(rep["skipped"].contains("audits.diameter_growth"));
    EXPECT_TRUE(rep["skipped"].contains("audits.correlation_contraction"));
    ASSERT_EQ(rep["audits"].size(), 1u);
    EXPECT_EQ(rep["audits"][0]["id"], "pair_distance");
    EXPECT_EQ(rep["exit_code"], r.exit_code);
    EXPECT_EQ(r.artifacts.size(), 2u);
}

TEST(RunScenario, DeterministicBytes) {
    const fs::path d1 = scratch_dir("det1"), d2 = scratch_dir("det2");
    json j = small_config();
    j["analyses"] = {"audits", json{{"stability", {{"p_exp", {1, 2}}}}}};
    j["companion"] = {{"radius", 0.05}, {"seed", 11}};
    run_scenario(parse_scenario(j), d1);
    run_scenario(parse_scenario(j), d2);
    EXPECT_EQ(slurp(d1 / "small.csv"), slurp(d2 / "small.csv"));
}

TEST(RunScenario, ExpectationUnmetSetsExitCode) {
    const fs::path dir = scratch_dir("expect");
    json j = small_config();
    j["consensus"] = {{"window_fraction", 0.5}, {"tol", 1e-12}};
    j["expect"] = {{"consensus", "complete"}};
    const RunReport r = run_scenario(parse_scenario(j), dir);
    EXPECT_EQ(r.exit_code, kExitExpectationUnmet);
    EXPECT_FALSE(r.failures.empty());
}

TEST(RunScenario, BundledHomogeneousComplete) {
    const fs::path dir = scratch_dir("bundled_h");
    const RunReport r = run_scenario(kScenarios / "homogeneous_complete.json", dir);
    ASSERT_TRUE(r.consensus.has_value());
    EXPECT_EQ(r.consensus->kind, ConsensusKind::Complete);
    EXPECT_EQ(r.exit_code, kExitOk);
}

TEST(RunScenario, BundledFrameworkHetero) {
    const fs::path dir = scratch_dir("bundled_f");
    const RunReport r = run_scenario(kScenarios / "framework_hetero.json", dir);
    ASSERT_TRUE(r.framework.has_value());
    for (int k = 0; k < 4; ++k) EXPECT_TRUE(r.framework->satisfied[k]) << "condition " << k + 1;
    ASSERT_TRUE(r.decay.has_value());
    EXPECT_GT(r.decay->rate, 0.0);
    for (const auto& a : r.audits) EXPECT_TRUE(a.pass) << a.id << " max violation " << a.max_violation;
    EXPECT_EQ(r.diameter_bound_held, std::optional<bool>(true));
}

TEST(RunScenario, CsvAuditMatchesInProcess) {
    const fs::path dir = scratch_dir("csv_audit");
    json j = small_config();
    j["analyses"] = {"audits"};
    j["companion"] = {{"radius", 0.02}, {"seed", 5}};
    const Scenario sc = parse_scenario(j);
    const RunReport r = run_scenario(sc, dir);
    const AuditBatch batch = audit_series(read_series(dir / "small.csv"), sc.model);
    ASSERT_EQ(batch.audits.size(), r.audits.size());
    for (std::size_t k = 0; k < r.audits.size(); ++k) {
        EXPECT_EQ(batch.audits[k].id, r.audits[k].id);
        EXPECT_EQ(batch.audits[k].max_violation, r.audits[k].max_violation);
        EXPECT_EQ(batch.audits[k].pass, r.audits[k].pass);
    }
}

TEST(RunScenario, FrameworkTemplateEndToEnd) {
    const fs::path dir = scratch_dir("template_run");
    const RunReport r = run_scenario(
        parse_scenario(generate_scenario(ScenarioTemplate::HeterogeneousFramework, 21, {{"t_end", "5"}})), dir);
    ASSERT_TRUE(r.framework.has_value());
    EXPECT_TRUE(r.framework->all());
}

}  // namespace
}  // namespace stsync
