#pragma once

#include <cmath>
#include <limits>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "stsync/model.hpp"

namespace stsync {

enum class RetractionKind { EveryStep, OnDrift, Never };

struct RetractionPolicy {
    RetractionKind kind = RetractionKind::EveryStep;
    double threshold = kTol.orth_runtime;  ///< used by OnDrift

    static RetractionPolicy every_step() { return {RetractionKind::EveryStep, kTol.orth_runtime}; }
    static RetractionPolicy on_drift(double threshold) { return {RetractionKind::OnDrift, threshold}; }
    static RetractionPolicy never() { return {RetractionKind::Never, std::numeric_limits<double>::infinity()}; }
};

struct IntegratorConfig {
    double h = 1e-3;
    double t_end = 50.0;
    RetractionPolicy retraction = RetractionPolicy::every_step();
    std::size_t record_stride = 1;

    void validate() const {
        if (!(h > 0.0) || !std::isfinite(h)) throw ValidationError("IntegratorConfig: h must be positive");
        if (!(t_end >= 0.0) || !std::isfinite(t_end)) throw ValidationError("IntegratorConfig: t_end must be >= 0");
        if (record_stride == 0) throw ValidationError("IntegratorConfig: record_stride must be positive");
        if (retraction.kind == RetractionKind::OnDrift && !(retraction.threshold > 0.0)) {
            throw ValidationError("IntegratorConfig: drift threshold must be positive");
        }
        (void)steps();
    }

    /// Number of steps; t_end must be an integer multiple of h.
    std::size_t steps() const {
        const double ratio = t_end / h;
        const double rounded = std::round(ratio);
        if (std::abs(ratio - rounded) > 1e-9 * std::max(1.0, ratio)) {
            throw ValidationError("IntegratorConfig: t_end must be an integer multiple of h");
        }
        return static_cast<std::size_t>(rounded);
    }

    /// Spacing between recorded snapshots.
    double spacing() const noexcept { return h * static_cast<double>(record_stride); }
};

/// Recorded snapshots of one solution on a uniform grid.
struct Trajectory {
    std::vector<double> times;
    std::vector<EnsembleState> states;
    std::vector<double> drift;      ///< max_i ||S_iᵀS_i - I||
    std::vector<double> diameters;  ///< D(S)

    std::size_t size() const noexcept { return times.size(); }
    bool empty() const noexcept { return times.empty(); }
};

inline double max_drift(const std::vector<Mat>& agents) {
    double d = 0.0;
    for (const auto& a : agents) d = std::max(d, orthonormality_defect(a));
    return d;
}

namespace detail {

inline std::vector<Mat> offset(const std::vector<Mat>& y, double s, const std::vector<Mat>& k) {
    std::vector<Mat> out = y;
    for (std::size_t i = 0; i < out.size(); ++i) out[i].add_scaled(s, k[i]);
    return out;
}

/// One classical RK4 step in the ambient matrix space.
inline std::vector<Mat> rk4_step(const std::vector<Mat>& y, const ModelConfig& cfg, double h) {
    const auto k1 = rhs(y, cfg);
    const auto k2 = rhs(offset(y, 0.5 * h, k1), cfg);
    const auto k3 = rhs(offset(y, 0.5 * h, k2), cfg);
    const auto k4 = rhs(offset(y, h, k3), cfg);
    std::vector<Mat> out = y;
    for (std::size_t i = 0; i < out.size(); ++i) {
        out[i].add_scaled(h / 6.0, k1[i]);
        out[i].add_scaled(h / 3.0, k2[i]);
        out[i].add_scaled(h / 3.0, k3[i]);
        out[i].add_scaled(h / 6.0, k4[i]);
    }
    return out;
}

inline EnsembleState snapshot(const std::vector<Mat>& y, const RetractionPolicy& policy) {
    double tol = kTol.orth_construct;
    if (policy.kind == RetractionKind::Never) tol = std::numeric_limits<double>::infinity();
    if (policy.kind == RetractionKind::OnDrift) tol = std::max(tol, policy.threshold);
    std::vector<StiefelPoint> agents;
    agents.reserve(y.size());
    for (const auto& m : y) agents.emplace_back(m, tol);
    return EnsembleState(std::move(agents));
}

}  // namespace detail

/// Fixed-step RK4 with post-step polar retraction per policy.
inline Trajectory integrate(const EnsembleState& initial, const ModelConfig& cfg, const IntegratorConfig& icfg) {
    icfg.validate();
    cfg.require_compatible(initial);
    const std::size_t steps = icfg.steps();

    Trajectory traj;
    const std::size_t records = steps / icfg.record_stride + 1;
    traj.times.reserve(records);
    traj.states.reserve(records);
    traj.drift.reserve(records);
    traj.diameters.reserve(records);

    std::vector<Mat> y = initial.mats();
    auto record = [&](std::size_t k, double drift) {
        traj.times.push_back(static_cast<double>(k) * icfg.h);
        traj.states.push_back(detail::snapshot(y, icfg.retraction));
        traj.drift.push_back(drift);
        traj.diameters.push_back(ensemble_diameter(y));
    };
    record(0, max_drift(y));

    for (std::size_t k = 1; k <= steps; ++k) {
        std::vector<Mat> next = detail::rk4_step(y, cfg, icfg.h);
        for (const auto& m : next) {
            if (!m.all_finite()) {
                throw DivergenceError("integrate: non-finite state at step " + std::to_string(k),
                                      static_cast<double>(k - 1) * icfg.h);
            }
        }
        double drift = max_drift(next);
        const auto& pol = icfg.retraction;
        if (pol.kind == RetractionKind::EveryStep || (pol.kind == RetractionKind::OnDrift && drift > pol.threshold)) {
            for (auto& m : next) m = polar_factor(m);
            drift = max_drift(next);
        }
        y = std::move(next);
        if (k % icfg.record_stride == 0) record(k, drift);
    }
    return traj;
}

/// Two solutions on the identical time grid.
inline std::pair<Trajectory, Trajectory> integrate_pair(const EnsembleState& a, const EnsembleState& b,
                                                        const ModelConfig& cfg, const IntegratorConfig& icfg) {
    if (!a.same_shape(b)) throw DimensionError("integrate_pair: initial ensembles differ in shape");
    return {integrate(a, cfg, icfg), integrate(b, cfg, icfg)};
}

/// Finite-difference derivative of a uniformly sampled series: central in the
/// interior, one-sided at the two ends.
inline double dini_derivative(std::span<const double> t, std::span<const double> y, std::size_t index) {
    if (t.size() != y.size()) throw DimensionError("dini_derivative: series lengths differ");
    if (t.size() < 2 || index >= t.size()) throw InsufficientDataError("dini_derivative: index out of range");
    if (index == 0) return (y[1] - y[0]) / (t[1] - t[0]);
    if (index == t.size() - 1) return (y[index] - y[index - 1]) / (t[index] - t[index - 1]);
    return (y[index + 1] - y[index - 1]) / (t[index + 1] - t[index - 1]);
}

}  // namespace stsync
