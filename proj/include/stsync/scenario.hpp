#pragma once

// Scenario configuration files (JSON): parsing, validation, and the
// generators behind `stiefel-sync gen`.

#include <cmath>
#include <filesystem>
#include <fstream>
#include <map>
#include <optional>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include "json.hpp"

#include "stsync/diagnostics.hpp"

namespace stsync {

using json = nlohmann::json;

enum class AnalysisKind { Framework, Consensus, DecayFit, Stability, Audits, Cubic };

inline const char* to_string(AnalysisKind k) {
    switch (k) {
        case AnalysisKind::Framework: return "framework";
        case AnalysisKind::Consensus: return "consensus";
        case AnalysisKind::DecayFit: return "decay_fit";
        case AnalysisKind::Stability: return "stability";
        case AnalysisKind::Audits: return "audits";
        default: return "cubic";
    }
}

struct Analysis {
    AnalysisKind kind;
    std::vector<double> p_exp;           ///< stability only
    std::optional<double> perturbation;  ///< stability only: companion radius
};

struct Companion {
    double radius;
    std::uint64_t seed;
};

struct ConsensusSettings {
    double window_fraction = 0.2;
    double tol = 1e-6;
};

struct Scenario {
    std::string name;
    std::size_t n = 0, p = 0, agents = 0;
    ModelConfig model;
    EnsembleState initial;
    IntegratorConfig integrator;
    std::optional<Companion> companion;
    std::vector<Analysis> analyses;
    ConsensusSettings consensus;
    std::optional<std::pair<double, double>> decay_window;
    std::optional<std::string> expect_consensus;  ///< "complete" | "partial" | "any"

    bool requests(AnalysisKind k) const {
        for (const auto& a : analyses)
            if (a.kind == k) return true;
        return false;
    }
    const Analysis* find(AnalysisKind k) const {
        for (const auto& a : analyses)
            if (a.kind == k) return &a;
        return nullptr;
    }
    /// Companion radius, from `companion` or a stability perturbation.
    std::optional<Companion> companion_spec() const {
        if (companion) return companion;
        if (const Analysis* s = find(AnalysisKind::Stability); s && s->perturbation) {
            return Companion{*s->perturbation, 0x5eed};
        }
        return std::nullopt;
    }
};

namespace detail {

inline std::string field_path(const std::string& parent, const std::string& key) {
    return parent.empty() ? key : parent + "." + key;
}

inline const json& require(const json& obj, const std::string& key, const std::string& parent) {
    if (!obj.is_object()) throw ParseError("field '" + (parent.empty() ? std::string("<root>") : parent) + "' must be an object");
    auto it = obj.find(key);
    if (it == obj.end()) throw ParseError("missing required field '" + field_path(parent, key) + "'");
    return *it;
}

template <class T>
T as(const json& v, const std::string& path) {
    try {
        return v.get<T>();
    } catch (const json::exception& e) {
        throw ParseError("field '" + path + "' has the wrong type: " + e.what());
    }
}

template <class T>
T get_or(const json& obj, const std::string& key, const std::string& parent, T fallback) {
    auto it = obj.find(key);
    if (it == obj.end()) return fallback;
    return as<T>(*it, field_path(parent, key));
}

inline double number(const json& obj, const std::string& key, const std::string& parent) {
    const json& v = require(obj, key, parent);
    if (!v.is_number()) throw ParseError("field '" + field_path(parent, key) + "' must be a number");
    return v.get<double>();
}

inline Mat mat_from_json(const json& v, const std::string& path) {
    if (!v.is_array() || v.empty() || !v.front().is_array()) throw ParseError("field '" + path + "' must be a nested array");
    const std::size_t rows = v.size();
    const std::size_t cols = v.front().size();
    std::vector<double> data;
    data.reserve(rows * cols);
    for (const auto& row : v) {
        if (!row.is_array() || row.size() != cols) throw ParseError("field '" + path + "' has ragged rows");
        for (const auto& x : row) {
            if (!x.is_number()) throw ParseError("field '" + path + "' must contain numbers");
            data.push_back(x.get<double>());
        }
    }
    if (cols == 0) throw ParseError("field '" + path + "' has empty rows");
    return Mat(rows, cols, std::move(data));
}

inline json mat_to_json(const Mat& m) {
    json rows = json::array();
    for (std::size_t i = 0; i < m.rows(); ++i) {
        json row = json::array();
        for (std::size_t j = 0; j < m.cols(); ++j) row.push_back(m(i, j));
        rows.push_back(std::move(row));
    }
    return rows;
}

inline Topology parse_topology(const json& t, std::size_t agents) {
    const std::string kind = as<std::string>(require(t, "kind", "topology"), "topology.kind");
    if (kind == "separable") {
        std::vector<double> xi;
        if (t.contains("xi")) {
            xi = as<std::vector<double>>(t.at("xi"), "topology.xi");
        } else if (t.contains("generator")) {
            const json& g = t.at("generator");
            const double lo = number(g, "min", "topology.generator");
            const double hi = number(g, "max", "topology.generator");
            if (!(hi >= lo)) throw ValidationError("topology.generator: max < min");
            Rng rng(get_or<std::uint64_t>(g, "seed", "topology.generator", 0));
            xi.resize(agents);
            for (auto& v : xi) v = hi > lo ? rng.uniform(lo, hi) : lo;
        } else if (t.contains("all_to_all") && t.at("all_to_all").get<bool>()) {
            xi.assign(agents, 1.0);
        } else {
            throw ParseError("topology: separable kind needs 'xi', 'generator' or 'all_to_all'");
        }
        if (xi.size() != agents) throw ValidationError("topology.xi: length differs from dims.N");
        return Topology::separable(std::move(xi));
    }
    if (kind == "general") {
        if (t.contains("weights")) {
            Mat w = mat_from_json(t.at("weights"), "topology.weights");
            if (w.rows() != agents) throw ValidationError("topology.weights: size differs from dims.N");
            return Topology::general(std::move(w));
        }
        const json& g = require(t, "generator", "topology");
        const double density = number(g, "density", "topology.generator");
        const double lo = get_or<double>(g, "min", "topology.generator", 0.5);
        const double hi = get_or<double>(g, "max", "topology.generator", 1.5);
        Rng rng(get_or<std::uint64_t>(g, "seed", "topology.generator", 0));
        Mat w(agents, agents);
        for (std::size_t i = 0; i < agents; ++i) {
            for (std::size_t k = i + 1; k < agents; ++k) {
                if (rng.uniform(0.0, 1.0) < density) w(i, k) = w(k, i) = rng.uniform(lo, hi);
            }
        }
        // A ring keeps the generated graph connected.
        for (std::size_t i = 0; i + 1 < agents; ++i) {
            if (w(i, i + 1) == 0.0) w(i, i + 1) = w(i + 1, i) = rng.uniform(lo, hi);
        }
        return Topology::general(std::move(w));
    }
    throw ParseError("topology.kind must be 'separable' or 'general', got '" + kind + "'");
}

inline FrequencySet parse_frequencies(const json& f, std::size_t agents, std::size_t p) {
    const std::string kind = as<std::string>(require(f, "kind", "frequencies"), "frequencies.kind");
    if (kind == "zero") return FrequencySet::zero(agents, p);
    if (kind == "common") {
        if (f.contains("matrix")) return FrequencySet::common(agents, SkewMat(mat_from_json(f.at("matrix"), "frequencies.matrix")));
        const double mag = number(f, "magnitude", "frequencies");
        Rng rng(get_or<std::uint64_t>(f, "seed", "frequencies", 0));
        return FrequencySet::common(agents, mag * rng.skew(p));
    }
    if (kind == "random") {
        const double mag = number(f, "magnitude", "frequencies");
        Rng rng(get_or<std::uint64_t>(f, "seed", "frequencies", 0));
        std::vector<SkewMat> out;
        for (std::size_t i = 0; i < agents; ++i) out.push_back(mag * rng.skew(p));
        return FrequencySet(std::move(out));
    }
    if (kind == "explicit") {
        const json& ms = require(f, "matrices", "frequencies");
        if (!ms.is_array() || ms.size() != agents) throw ValidationError("frequencies.matrices: need one matrix per agent");
        std::vector<SkewMat> out;
        for (std::size_t i = 0; i < ms.size(); ++i) {
            out.emplace_back(mat_from_json(ms[i], "frequencies.matrices[" + std::to_string(i) + "]"));
        }
        return FrequencySet(std::move(out));
    }
    throw ParseError("frequencies.kind must be zero|common|random|explicit, got '" + kind + "'");
}

inline EnsembleState agents_from_json(const json& arr, const std::string& path) {
    if (!arr.is_array() || arr.empty()) throw ParseError("field '" + path + "' must be a non-empty array of matrices");
    std::vector<StiefelPoint> agents;
    for (std::size_t i = 0; i < arr.size(); ++i) {
        agents.emplace_back(mat_from_json(arr[i], path + "[" + std::to_string(i) + "]"));
    }
    return EnsembleState(std::move(agents));
}

inline json agents_to_json(const EnsembleState& e) {
    json arr = json::array();
    for (const auto& a : e.agents()) arr.push_back(mat_to_json(a.mat()));
    return arr;
}

inline EnsembleState parse_initial(const json& s, std::size_t n, std::size_t p, std::size_t agents,
                                   const std::filesystem::path& base_dir) {
    const std::string kind = as<std::string>(require(s, "kind", "initial"), "initial.kind");
    if (kind == "random") {
        Rng rng(get_or<std::uint64_t>(s, "seed", "initial", 0));
        std::vector<StiefelPoint> out;
        for (std::size_t i = 0; i < agents; ++i) out.push_back(random_stiefel(n, p, rng));
        return EnsembleState(std::move(out));
    }
    if (kind == "near_consensus") {
        const double radius = number(s, "radius", "initial");
        Rng rng(get_or<std::uint64_t>(s, "seed", "initial", 0));
        const StiefelPoint base = random_stiefel(n, p, rng);
        return near_consensus(base, agents, radius, rng);
    }
    if (kind == "explicit") {
        EnsembleState e = [&] {
            if (s.contains("agents")) return agents_from_json(s.at("agents"), "initial.agents");
            const std::string file = as<std::string>(require(s, "file", "initial"), "initial.file");
            std::filesystem::path path(file);
            if (path.is_relative()) path = base_dir / path;
            std::ifstream in(path);
            if (!in) throw IoError("initial.file: cannot open " + path.string());
            json doc;
            try {
                doc = json::parse(in);
            } catch (const json::parse_error& e) {
                throw ParseError(path.string() + ": " + e.what());
            }
            return agents_from_json(doc.is_object() ? require(doc, "agents", "") : doc, "initial.file");
        }();
        if (e.size() != agents || e.n() != n || e.p() != p) throw ValidationError("initial: explicit agents do not match dims");
        return e;
    }
    throw ParseError("initial.kind must be random|near_consensus|explicit, got '" + kind + "'");
}

inline IntegratorConfig parse_integrator(const json& root) {
    IntegratorConfig ic;
    if (!root.contains("integrator")) return ic;
    const json& j = root.at("integrator");
    ic.h = get_or<double>(j, "h", "integrator", ic.h);
    ic.t_end = get_or<double>(j, "t_end", "integrator", ic.t_end);
    ic.record_stride = get_or<std::size_t>(j, "record_stride", "integrator", ic.record_stride);
    if (j.contains("retraction")) {
        const json& r = j.at("retraction");
        if (r.is_string()) {
            const auto s = r.get<std::string>();
            if (s == "every_step") ic.retraction = RetractionPolicy::every_step();
            else if (s == "never") ic.retraction = RetractionPolicy::never();
            else throw ParseError("integrator.retraction: unknown policy '" + s + "'");
        } else {
            ic.retraction = RetractionPolicy::on_drift(number(r, "on_drift", "integrator.retraction"));
        }
    }
    ic.validate();
    return ic;
}

inline Analysis parse_analysis(const json& a, std::size_t idx) {
    const std::string path = "analyses[" + std::to_string(idx) + "]";
    std::string name;
    const json* body = nullptr;
    if (a.is_string()) {
        name = a.get<std::string>();
    } else if (a.is_object() && a.size() == 1) {
        name = a.begin().key();
        body = &a.begin().value();
    } else {
        throw ParseError("field '" + path + "' must be a name or a single-key object");
    }
    static const std::map<std::string, AnalysisKind> kinds = {
        {"framework", AnalysisKind::Framework}, {"consensus", AnalysisKind::Consensus},
        {"decay_fit", AnalysisKind::DecayFit},   {"stability", AnalysisKind::Stability},
        {"audits", AnalysisKind::Audits},        {"cubic", AnalysisKind::Cubic}};
    auto it = kinds.find(name);
    if (it == kinds.end()) throw ParseError("field '" + path + "': unknown analysis '" + name + "'");
    Analysis out{it->second, {}, std::nullopt};
    if (out.kind == AnalysisKind::Stability) {
        out.p_exp = {1.0, 2.0};
        if (body) {
            out.p_exp = get_or<std::vector<double>>(*body, "p_exp", path, out.p_exp);
            if (body->contains("perturbation")) out.perturbation = number(*body, "perturbation", path);
        }
        for (double q : out.p_exp)
            if (!(q >= 1.0)) throw ValidationError(path + ".p_exp: exponents must be >= 1");
    }
    return out;
}

}  // namespace detail

/// Builds a validated scenario from its JSON form; relative file references
/// resolve against `base_dir`.
inline Scenario parse_scenario(const json& root, const std::filesystem::path& base_dir = ".") {
    using namespace detail;
    const std::string name = get_or<std::string>(root, "name", "", "scenario");
    const json& dims = require(root, "dims", "");
    const auto n = as<std::size_t>(require(dims, "n", "dims"), "dims.n");
    const auto p = as<std::size_t>(require(dims, "p", "dims"), "dims.p");
    const auto agents = as<std::size_t>(require(dims, "N", "dims"), "dims.N");
    if (p == 0 || p > n || agents == 0) throw ValidationError("dims: need 1 <= p <= n and N >= 1");
    const double kappa = number(root, "kappa", "");

    Topology topo = parse_topology(require(root, "topology", ""), agents);
    FrequencySet freqs = parse_frequencies(require(root, "frequencies", ""), agents, p);
    EnsembleState initial = parse_initial(require(root, "initial", ""), n, p, agents, base_dir);

    Scenario sc{name, n, p, agents, ModelConfig(kappa, std::move(topo), std::move(freqs), n, p),
                std::move(initial), parse_integrator(root), std::nullopt, {}, {}, std::nullopt, std::nullopt};

    if (root.contains("companion")) {
        const json& c = root.at("companion");
        sc.companion = Companion{number(c, "radius", "companion"), get_or<std::uint64_t>(c, "seed", "companion", 1)};
        if (!(sc.companion->radius > 0.0)) throw ValidationError("companion.radius must be positive");
    }
    if (root.contains("analyses")) {
        const json& list = root.at("analyses");
        if (!list.is_array()) throw ParseError("field 'analyses' must be an array");
        for (std::size_t i = 0; i < list.size(); ++i) sc.analyses.push_back(parse_analysis(list[i], i));
    }
    if (root.contains("consensus")) {
        const json& c = root.at("consensus");
        sc.consensus.window_fraction = get_or<double>(c, "window_fraction", "consensus", sc.consensus.window_fraction);
        sc.consensus.tol = get_or<double>(c, "tol", "consensus", sc.consensus.tol);
        if (!(sc.consensus.window_fraction > 0.0 && sc.consensus.window_fraction <= 1.0)) {
            throw ValidationError("consensus.window_fraction must lie in (0, 1]");
        }
    }
    if (root.contains("decay_fit")) {
        const auto w = as<std::vector<double>>(require(root.at("decay_fit"), "window", "decay_fit"), "decay_fit.window");
        if (w.size() != 2 || !(w[1] > w[0])) throw ValidationError("decay_fit.window must be [t0, t1] with t1 > t0");
        sc.decay_window = std::make_pair(w[0], w[1]);
    }
    if (root.contains("expect")) {
        const json& e = root.at("expect");
        if (e.contains("consensus")) {
            const auto v = as<std::string>(e.at("consensus"), "expect.consensus");
            if (v != "complete" && v != "partial" && v != "any") {
                throw ValidationError("expect.consensus must be complete|partial|any");
            }
            sc.expect_consensus = v;
        }
    }

    const bool separable = sc.model.topology().is_separable();
    if (!separable && (sc.requests(AnalysisKind::Framework) || sc.requests(AnalysisKind::Cubic) ||
                       sc.requests(AnalysisKind::DecayFit))) {
        throw ValidationError("analyses framework, cubic and decay_fit need a separable topology");
    }
    if ((sc.requests(AnalysisKind::Framework) || sc.requests(AnalysisKind::Cubic)) && !(kappa > 0.0)) {
        throw ValidationError("analyses framework and cubic need kappa > 0");
    }
    if ((sc.requests(AnalysisKind::DecayFit) || sc.requests(AnalysisKind::Stability)) && !sc.companion_spec()) {
        throw ValidationError("analyses decay_fit and stability need a 'companion' (or a stability perturbation)");
    }
    return sc;
}

inline Scenario load_scenario(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw IoError("cannot open scenario file " + path.string());
    json root;
    try {
        root = json::parse(in);
    } catch (const json::parse_error& e) {
        throw ParseError(path.string() + ": " + e.what());
    }
    return parse_scenario(root, path.parent_path().empty() ? std::filesystem::path(".") : path.parent_path());
}

// --- templates ---------------------------------------------------------------

enum class ScenarioTemplate { Homogeneous, HeterogeneousFramework, StabilityPair, KuramotoCircle };

inline std::optional<ScenarioTemplate> parse_template(const std::string& s) {
    if (s == "homogeneous") return ScenarioTemplate::Homogeneous;
    if (s == "heterogeneous-framework") return ScenarioTemplate::HeterogeneousFramework;
    if (s == "stability-pair") return ScenarioTemplate::StabilityPair;
    if (s == "kuramoto-circle") return ScenarioTemplate::KuramotoCircle;
    return std::nullopt;
}

namespace detail {

class Overrides {
public:
    explicit Overrides(const std::map<std::string, std::string>& kv) : kv_(kv) {}

    double num(const std::string& key, double fallback) {
        used_.insert(key);
        auto it = kv_.find(key);
        if (it == kv_.end()) return fallback;
        try {
            std::size_t pos = 0;
            const double v = std::stod(it->second, &pos);
            if (pos != it->second.size()) throw std::invalid_argument("trailing characters");
            return v;
        } catch (const std::exception&) {
            throw GenerationError("override '" + key + "' is not a number: " + it->second);
        }
    }
    std::size_t count(const std::string& key, std::size_t fallback) {
        const double v = num(key, static_cast<double>(fallback));
        if (!(v >= 1.0) || v != std::floor(v)) throw GenerationError("override '" + key + "' must be a positive integer");
        return static_cast<std::size_t>(v);
    }
    std::string str(const std::string& key, const std::string& fallback) {
        used_.insert(key);
        auto it = kv_.find(key);
        return it == kv_.end() ? fallback : it->second;
    }
    void require_all_used() const {
        for (const auto& [k, v] : kv_) {
            if (!used_.count(k)) throw GenerationError("override '" + k + "' does not apply to this template");
        }
    }

private:
    std::map<std::string, std::string> kv_;
    std::set<std::string> used_;
};

/// Tangent directions fixed once, radius scaled so the retracted ensemble
/// has diameter `target` (bisection; the diameter grows with the radius here).
inline EnsembleState ensemble_with_diameter(const StiefelPoint& base, std::size_t count, double target, Rng& rng) {
    std::vector<Mat> dirs;
    for (std::size_t i = 0; i < count; ++i) {
        Mat t = tangent_project(base.mat(), rng.gaussian(base.n(), base.p()));
        t *= 1.0 / frobenius(t);
        dirs.push_back(std::move(t));
    }
    auto build = [&](double r) {
        std::vector<StiefelPoint> agents;
        for (const auto& d : dirs) {
            Mat x = base.mat();
            x.add_scaled(r, d);
            agents.push_back(retract(x));
        }
        return EnsembleState(std::move(agents));
    };
    if (count < 2 || target <= 0.0) return build(0.0);
    double lo = 0.0;
    double hi = target;
    while (ensemble_diameter(build(hi)) < target) hi *= 2.0;
    for (int it = 0; it < 200 && hi - lo > 1e-15 * hi; ++it) {
        const double mid = 0.5 * (lo + hi);
        if (ensemble_diameter(build(mid)) < target) lo = mid; else hi = mid;
    }
    return build(lo);
}

}  // namespace detail

/// Writes a complete, explicit scenario description for a template.
inline json generate_scenario(ScenarioTemplate tmpl, std::uint64_t seed, const std::map<std::string, std::string>& overrides) {
    detail::Overrides ov(overrides);
    Rng rng(seed);
    json out;
    json integrator;

    auto framework_parts = [&](double t_end, std::size_t stride) {
        const std::size_t n = ov.count("n", 4);
        const std::size_t p = ov.count("p", 2);
        const std::size_t agents = ov.count("N", 6);
        const double kappa = ov.num("kappa", 1.0);
        const double spread = ov.num("xi_spread", 0.02);
        const double freq_fraction = ov.num("freq_fraction", 0.9);
        const double init_fraction = ov.num("init_fraction", 0.9);
        const double companion_fraction = ov.num("companion_fraction", 0.02);
        if (p < 2) throw GenerationError("framework templates need p >= 2 (p = 1 admits no nonzero skew frequency)");
        if (p > n) throw GenerationError("need p <= n");
        if (!(kappa > 0.0)) throw GenerationError("framework templates need kappa > 0");
        if (!(spread >= 0.0)) throw GenerationError("xi_spread must be >= 0");
        if (!(freq_fraction > 0.0 && freq_fraction < 1.0)) {
            throw GenerationError("freq_fraction must lie in (0, 1) for the coupling condition to hold");
        }
        if (!(init_fraction > 0.0 && init_fraction < 1.0)) {
            throw GenerationError("init_fraction must lie in (0, 1) for the initial-diameter condition to hold");
        }

        std::vector<double> xi(agents);
        for (auto& v : xi) v = spread > 0.0 ? rng.uniform(1.0, 1.0 + spread) : 1.0;
        const Topology topo = Topology::separable(xi);
        const XiStats st = xi_stats(topo);
        if (!(st.xi_M * st.xi_M < 4.0 * st.xi_m * st.xi_c) || !(st.d_xi < st.xi_m * st.xi_c / (3.0 * st.xi_M))) {
            throw GenerationError("xi_spread too large: the topology conditions fail");
        }

        // Frequencies: random skew directions scaled to a fixed fraction of the admissible D(Xi).
        std::vector<SkewMat> raw;
        for (std::size_t i = 0; i < agents; ++i) raw.push_back(rng.skew(p));
        const double raw_d = frequency_heterogeneity(raw);
        const StiefelPoint base = random_stiefel(n, p, rng);
        const EnsembleState probe(std::vector<StiefelPoint>(agents, base));
        const FrameworkReport zero_fw = check_framework(ModelConfig(kappa, topo, FrequencySet::zero(agents, p), n, p), probe);
        const double target_d = freq_fraction * zero_fw.f3_rhs * kappa;
        std::vector<SkewMat> freqs;
        for (const auto& r : raw) freqs.push_back((raw_d > 0.0 ? target_d / raw_d : 0.0) * r);
        const ModelConfig cfg(kappa, topo, FrequencySet(freqs), n, p);

        const double bound = diameter_threshold(cfg);
        const EnsembleState initial = detail::ensemble_with_diameter(base, agents, init_fraction * bound, rng);
        const FrameworkReport fw = check_framework(cfg, initial);
        if (!fw.all()) throw GenerationError("generated data violate the sufficient conditions");

        const std::uint64_t companion_seed = rng.next_u64() >> 12;
        double companion_radius = companion_fraction * bound;
        for (int it = 0; it < 60; ++it) {
            Rng crng(companion_seed);
            if (ensemble_diameter(perturb(initial, companion_radius, crng)) < bound) break;
            companion_radius *= 0.5;
        }

        out["dims"] = {{"n", n}, {"p", p}, {"N", agents}};
        out["kappa"] = kappa;
        out["topology"] = {{"kind", "separable"}, {"xi", xi}};
        json mats = json::array();
        for (const auto& f : freqs) mats.push_back(detail::mat_to_json(f.mat()));
        out["frequencies"] = {{"kind", "explicit"}, {"matrices", mats}};
        out["initial"] = {{"kind", "explicit"}, {"agents", detail::agents_to_json(initial)}};
        out["companion"] = {{"radius", companion_radius}, {"seed", companion_seed}};
        integrator = {{"h", ov.num("h", 1e-3)}, {"t_end", ov.num("t_end", t_end)},
                      {"retraction", "every_step"}, {"record_stride", ov.count("record_stride", stride)}};
    };

    switch (tmpl) {
        case ScenarioTemplate::Homogeneous: {
            const std::size_t n = ov.count("n", 4);
            const std::size_t p = ov.count("p", 2);
            const std::size_t agents = ov.count("N", 6);
            const double kappa = ov.num("kappa", 1.0);
            const double radius = ov.num("radius", 0.5);
            if (p > n) throw GenerationError("need p <= n");
            if (!(radius > 0.0 && radius < std::sqrt(2.0) / 2.0)) {
                throw GenerationError("radius must lie in (0, sqrt(2)/2) so the initial diameter stays below sqrt 2");
            }
            out["name"] = ov.str("name", "homogeneous_complete");
            out["dims"] = {{"n", n}, {"p", p}, {"N", agents}};
            out["kappa"] = kappa;
            out["topology"] = {{"kind", "separable"}, {"xi", std::vector<double>(agents, 1.0)}};
            out["frequencies"] = {{"kind", "zero"}};
            out["initial"] = {{"kind", "near_consensus"}, {"radius", radius}, {"seed", rng.next_u64() >> 12}};
            integrator = {{"h", ov.num("h", 1e-3)}, {"t_end", ov.num("t_end", 50.0)},
                          {"retraction", "every_step"}, {"record_stride", ov.count("record_stride", 10)}};
            out["analyses"] = {"consensus"};
            out["expect"] = {{"consensus", "complete"}};
            break;
        }
        case ScenarioTemplate::HeterogeneousFramework:
            out["name"] = ov.str("name", "framework_hetero");
            framework_parts(20.0, 1);
            out["analyses"] = {"framework", "consensus", "decay_fit", "audits", "cubic"};
            out["expect"] = {{"consensus", "any"}};
            break;
        case ScenarioTemplate::StabilityPair:
            out["name"] = ov.str("name", "stability_pair");
            framework_parts(50.0, 10);
            out["analyses"] = {"framework", "consensus", json{{"stability", {{"p_exp", {1, 2, 4}}}}}};
            out["expect"] = {{"consensus", "any"}};
            break;
        case ScenarioTemplate::KuramotoCircle: {
            const std::size_t agents = ov.count("N", 3);
            const double kappa = ov.num("kappa", 1.0);
            const double spread = ov.num("phase_spread", 1.0);
            out["name"] = ov.str("name", "kuramoto_circle");
            json arr = json::array();
            for (std::size_t i = 0; i < agents; ++i) {
                const double theta = rng.uniform(-spread, spread);
                arr.push_back(json::array({json::array({std::cos(theta)}), json::array({std::sin(theta)})}));
            }
            out["dims"] = {{"n", 2}, {"p", 1}, {"N", agents}};
            out["kappa"] = kappa;
            out["topology"] = {{"kind", "separable"}, {"xi", std::vector<double>(agents, 1.0)}};
            out["frequencies"] = {{"kind", "zero"}};
            out["initial"] = {{"kind", "explicit"}, {"agents", arr}};
            integrator = {{"h", ov.num("h", 1e-4)}, {"t_end", ov.num("t_end", 10.0)},
                          {"retraction", "every_step"}, {"record_stride", ov.count("record_stride", 100)}};
            out["analyses"] = {"consensus"};
            break;
        }
    }
    out["integrator"] = integrator;
    ov.require_all_used();
    // Round-trip through the parser so a generated file is always valid.
    (void)parse_scenario(out);
    return out;
}

}  // namespace stsync
