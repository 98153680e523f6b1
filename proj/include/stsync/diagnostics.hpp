#pragma once

// Measurements of what the theory predicts along computed trajectories:
// relative correlations A_ji = S_jᵀS_i, consensus detection, exponential
// decay fits, uniform-in-time stability gains, and audits of the three
// differential inequalities that drive the convergence argument.

#include <algorithm>
#include <cmath>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "stsync/integrate.hpp"

namespace stsync {

/// All pairwise A_ji = S_jᵀ S_i. Stored row-major by (j, i).
class CorrelationSet {
public:
    explicit CorrelationSet(const std::vector<Mat>& agents) : n_(agents.size()), mats_(n_ * n_) {
        for (std::size_t j = 0; j < n_; ++j) {
            for (std::size_t i = j; i < n_; ++i) {
                mats_[j * n_ + i] = matmul_tn(agents[j], agents[i]);
                if (i != j) mats_[i * n_ + j] = transpose(mats_[j * n_ + i]);
            }
        }
    }
    explicit CorrelationSet(const EnsembleState& s) : CorrelationSet(s.mats()) {}

    std::size_t size() const noexcept { return n_; }
    /// A_ji = S_jᵀ S_i
    const Mat& at(std::size_t j, std::size_t i) const { return mats_[j * n_ + i]; }

private:
    std::size_t n_;
    std::vector<Mat> mats_;
};

inline CorrelationSet correlations(const EnsembleState& s) { return CorrelationSet(s); }

/// The two squared l2 ensemble norms that make up D(A).
struct CorrelationGap {
    double sym_sq = 0.0;   ///< sum ||A_ji - A~_ji||^2 (the full difference, despite the name)
    double skew_sq = 0.0;  ///< sum ||(A_ji - A_jiᵀ) - (A~_ji - A~_jiᵀ)||^2
    double total() const noexcept { return sym_sq + skew_sq; }
};

inline CorrelationGap correlation_gap(const EnsembleState& s1, const EnsembleState& s2) {
    if (!s1.same_shape(s2)) throw DimensionError("correlation_gap: ensembles differ in shape");
    const CorrelationSet a(s1);
    const CorrelationSet b(s2);
    const std::size_t n = a.size();
    const std::size_t p = s1.p();
    CorrelationGap g;
    // Diagonal blocks are I_p for both ensembles, so they contribute nothing.
    for (std::size_t j = 0; j < n; ++j) {
        for (std::size_t i = 0; i < n; ++i) {
            if (i == j) continue;
            const Mat& x = a.at(j, i);
            const Mat& y = b.at(j, i);
            for (std::size_t r = 0; r < p; ++r) {
                for (std::size_t c = 0; c < p; ++c) {
                    const double d = x(r, c) - y(r, c);
                    const double dk = (x(r, c) - x(c, r)) - (y(r, c) - y(c, r));
                    g.sym_sq += d * d;
                    g.skew_sq += dk * dk;
                }
            }
        }
    }
    return g;
}

/// D(A): note this is already a squared quantity.
inline double correlation_diameter(const EnsembleState& s1, const EnsembleState& s2) {
    return correlation_gap(s1, s2).total();
}

enum class ConsensusKind { Complete, Partial, None };

inline const char* to_string(ConsensusKind k) {
    switch (k) {
        case ConsensusKind::Complete: return "complete";
        case ConsensusKind::Partial: return "partial";
        default: return "none";
    }
}

struct ConsensusResult {
    ConsensusKind kind = ConsensusKind::None;
    double max_identity_gap = 0.0;  ///< max over window and pairs of ||A_ij - I||
    double max_variation = 0.0;     ///< max over window and pairs of ||A_ij(t) - A_ij(t_end)||
    std::optional<std::vector<Mat>> limits;  ///< trailing averages A_ji, row-major (j, i); set when partial
};

/// Classifies the trailing `window` (time units) of a trajectory.
inline ConsensusResult consensus_status(const Trajectory& traj, double window, double tol) {
    if (traj.size() < 2) throw InsufficientDataError("consensus_status: trajectory too short");
    const double t_last = traj.times.back();
    if (!(window > 0.0) || window > t_last - traj.times.front()) {
        throw InsufficientDataError("consensus_status: window exceeds trajectory");
    }
    std::size_t first = traj.size() - 1;
    while (first > 0 && traj.times[first - 1] >= t_last - window - 1e-12 * std::max(1.0, t_last)) --first;
    if (traj.size() - first < 2) throw InsufficientDataError("consensus_status: fewer than two snapshots in window");

    const CorrelationSet last(traj.states.back());
    const std::size_t n = last.size();
    const std::size_t p = traj.states.back().p();
    const Mat eye = Mat::identity(p);
    ConsensusResult out;
    std::vector<Mat> sums(n * n, Mat(p, p));
    for (std::size_t k = first; k < traj.size(); ++k) {
        const CorrelationSet cs(traj.states[k]);
        for (std::size_t j = 0; j < n; ++j) {
            for (std::size_t i = 0; i < n; ++i) {
                const Mat& a = cs.at(j, i);
                out.max_identity_gap = std::max(out.max_identity_gap, frobenius_dist(a, eye));
                out.max_variation = std::max(out.max_variation, frobenius_dist(a, last.at(j, i)));
                sums[j * n + i] += a;
            }
        }
    }
    if (out.max_identity_gap <= tol) {
        out.kind = ConsensusKind::Complete;
    } else if (out.max_variation <= tol) {
        out.kind = ConsensusKind::Partial;
        const double count = static_cast<double>(traj.size() - first);
        for (auto& m : sums) m *= 1.0 / count;
        out.limits = std::move(sums);
    }
    return out;
}

struct DecayFit {
    double rate;       ///< negated least-squares slope of log(values)
    double r_squared;  ///< 1 for an exact exponential (or a constant series)
};

/// Log-linear least squares over times in [t0, t1].
inline DecayFit fit_decay_rate(std::span<const double> times, std::span<const double> values, double t0, double t1) {
    if (times.size() != values.size()) throw DimensionError("fit_decay_rate: series lengths differ");
    std::vector<double> xs;
    std::vector<double> ys;
    for (std::size_t k = 0; k < times.size(); ++k) {
        if (times[k] < t0 || times[k] > t1) continue;
        xs.push_back(times[k]);
        ys.push_back(std::log(std::max(values[k], kTol.log_floor)));
    }
    if (ys.empty()) throw InsufficientDataError("fit_decay_rate: fewer than 3 points in window");
    // Shifting by the first value keeps a constant series exactly flat.
    const double y0 = ys.front();
    for (auto& y : ys) y -= y0;
    if (xs.size() < 3) throw InsufficientDataError("fit_decay_rate: fewer than 3 points in window");
    const double m = static_cast<double>(xs.size());
    double mx = 0.0;
    double my = 0.0;
    for (std::size_t k = 0; k < xs.size(); ++k) {
        mx += xs[k];
        my += ys[k];
    }
    mx /= m;
    my /= m;
    double sxx = 0.0;
    double sxy = 0.0;
    double syy = 0.0;
    for (std::size_t k = 0; k < xs.size(); ++k) {
        sxx += (xs[k] - mx) * (xs[k] - mx);
        sxy += (xs[k] - mx) * (ys[k] - my);
        syy += (ys[k] - my) * (ys[k] - my);
    }
    const double slope = sxy / sxx;
    double ss_res = 0.0;
    for (std::size_t k = 0; k < xs.size(); ++k) {
        const double e = ys[k] - (my + slope * (xs[k] - mx));
        ss_res += e * e;
    }
    const double r2 = syy > 0.0 ? 1.0 - ss_res / syy : 1.0;
    return {-slope, r2};
}

inline void require_aligned(const Trajectory& a, const Trajectory& b, const char* who) {
    if (a.times != b.times) throw DimensionError(std::string(who) + ": trajectories are on different grids");
    if (a.empty()) throw InsufficientDataError(std::string(who) + ": empty trajectory");
}

/// sup_t ||S(t) - S~(t)||_q / ||S(0) - S~(0)||_q over the recorded grid.
inline double stability_gain(const Trajectory& a, const Trajectory& b, double q) {
    require_aligned(a, b, "stability_gain");
    const double d0 = ensemble_lp_distance(a.states.front(), b.states.front(), q);
    if (!(d0 > 0.0)) throw UndefinedGainError("stability_gain: identical initial data");
    double sup = d0;
    for (std::size_t k = 1; k < a.size(); ++k) sup = std::max(sup, ensemble_lp_distance(a.states[k], b.states[k], q));
    return sup / d0;
}

// --- inequality audits -----------------------------------------------------

enum class AuditKind { CorrelationContraction, DiameterGrowth, PairDistance };

inline const char* to_string(AuditKind k) {
    switch (k) {
        case AuditKind::CorrelationContraction: return "correlation_contraction";
        case AuditKind::DiameterGrowth: return "diameter_growth";
        default: return "pair_distance";
    }
}

/// Deliberate corruptions of the bounds, used to show each audit can fail.
enum class AuditMutation {
    None,
    EpsilonFactorOne,  ///< 5 -> 1 in the epsilon diameter coefficient
    DropCubic,         ///< remove the D(S)^3 term of the diameter bound
    DropSpreadTerm,    ///< remove the Z(t) term of the pairwise bound
};

struct InequalityAudit {
    AuditKind kind;
    std::vector<double> times;  ///< interior grid points checked
    std::vector<double> lhs;    ///< finite-difference derivative
    std::vector<double> rhs;    ///< bound
    double max_violation = 0.0;
    double tol = 0.0;
    bool pass = true;
};

/// Tolerance for a finite-difference audit on a grid of spacing h.
inline double audit_tolerance(double h) { return 1e-6 + 10.0 * h * h; }

namespace detail {

inline void finish(InequalityAudit& a, double spacing) {
    a.tol = audit_tolerance(spacing);
    a.max_violation = 0.0;
    for (std::size_t k = 0; k < a.lhs.size(); ++k) a.max_violation = std::max(a.max_violation, a.lhs[k] - a.rhs[k]);
    a.pass = a.max_violation <= a.tol;
}

inline double grid_spacing(std::span<const double> t) {
    if (t.size() < 3) throw InsufficientDataError("audit: need at least three snapshots");
    return t[1] - t[0];
}

inline void require_separable(const ModelConfig& cfg, const char* who) {
    if (!cfg.topology().is_separable()) throw UnsupportedError(std::string(who) + ": needs a separable topology");
}

}  // namespace detail

/// dD/dt <= -(kappa xi_m^2/2) D + (kappa xi_m^2/4) D^3 + 2 sqrt(p) D(Xi)
inline InequalityAudit audit_diameter_growth(std::span<const double> t, std::span<const double> diam,
                                             const ModelConfig& cfg, AuditMutation mut = AuditMutation::None) {
    detail::require_separable(cfg, "audit_diameter_growth");
    if (t.size() != diam.size()) throw DimensionError("audit_diameter_growth: series lengths differ");
    const double h = detail::grid_spacing(t);
    const XiStats st = xi_stats(cfg.topology());
    const double k = cfg.kappa() * st.xi_m * st.xi_m;
    const double forcing = 2.0 * std::sqrt(static_cast<double>(cfg.p())) * cfg.frequencies().heterogeneity();
    InequalityAudit a{AuditKind::DiameterGrowth, {}, {}, {}};
    for (std::size_t i = 1; i + 1 < t.size(); ++i) {
        const double d = diam[i];
        double bound = -0.5 * k * d + forcing;
        if (mut != AuditMutation::DropCubic) bound += 0.25 * k * d * d * d;
        a.times.push_back(t[i]);
        a.lhs.push_back(dini_derivative(t, diam, i));
        a.rhs.push_back(bound);
    }
    detail::finish(a, h);
    return a;
}

inline InequalityAudit audit_diameter_growth(const Trajectory& traj, const ModelConfig& cfg,
                                             AuditMutation mut = AuditMutation::None) {
    return audit_diameter_growth(traj.times, traj.diameters, cfg, mut);
}

/// Per-time correlation gap series of two aligned trajectories.
inline std::vector<CorrelationGap> correlation_gap_series(const Trajectory& a, const Trajectory& b) {
    require_aligned(a, b, "correlation_gap_series");
    std::vector<CorrelationGap> out;
    out.reserve(a.size());
    for (std::size_t k = 0; k < a.size(); ++k) out.push_back(correlation_gap(a.states[k], b.states[k]));
    return out;
}

/// dD(A)/dt <= -4 (kappa xi_m xi_c - eps) ||A - A~||^2 - kappa (4 xi_m xi_c - xi_M^2) ||skew gap||^2
inline InequalityAudit audit_correlation_contraction(std::span<const double> t, std::span<const double> sym_sq,
                                                     std::span<const double> skew_sq, std::span<const double> diam1,
                                                     std::span<const double> diam2, const ModelConfig& cfg,
                                                     AuditMutation mut = AuditMutation::None) {
    detail::require_separable(cfg, "audit_correlation_contraction");
    const std::size_t len = t.size();
    if (sym_sq.size() != len || skew_sq.size() != len || diam1.size() != len || diam2.size() != len) {
        throw DimensionError("audit_correlation_contraction: series lengths differ");
    }
    const double h = detail::grid_spacing(t);
    const XiStats st = xi_stats(cfg.topology());
    const double kappa = cfg.kappa();
    const double xmc = st.xi_m * st.xi_c;
    std::vector<double> total(len);
    for (std::size_t k = 0; k < len; ++k) total[k] = sym_sq[k] + skew_sq[k];

    InequalityAudit a{AuditKind::CorrelationContraction, {}, {}, {}};
    for (std::size_t i = 1; i + 1 < len; ++i) {
        double eps = epsilon_of_t(cfg, diam1[i], diam2[i]);
        if (mut == AuditMutation::EpsilonFactorOne) {
            eps -= 4.0 * kappa * st.xi_M * st.xi_M * std::sqrt(static_cast<double>(cfg.p())) * (diam1[i] + diam2[i]);
        }
        const double bound = -4.0 * (kappa * xmc - eps) * sym_sq[i] -
                             kappa * (4.0 * xmc - st.xi_M * st.xi_M) * skew_sq[i];
        a.times.push_back(t[i]);
        a.lhs.push_back(dini_derivative(t, total, i));
        a.rhs.push_back(bound);
    }
    detail::finish(a, h);
    return a;
}

inline InequalityAudit audit_correlation_contraction(const Trajectory& a, const Trajectory& b, const ModelConfig& cfg,
                                                     AuditMutation mut = AuditMutation::None) {
    const auto gaps = correlation_gap_series(a, b);
    std::vector<double> sym(gaps.size());
    std::vector<double> skew(gaps.size());
    for (std::size_t k = 0; k < gaps.size(); ++k) {
        sym[k] = gaps[k].sym_sq;
        skew[k] = gaps[k].skew_sq;
    }
    return audit_correlation_contraction(a.times, sym, skew, a.diameters, b.diameters, cfg, mut);
}

/// Per-agent distance series x_i(t) = ||S_i(t) - S~_i(t)||, indexed [agent][time].
inline std::vector<std::vector<double>> agent_distance_series(const Trajectory& a, const Trajectory& b) {
    require_aligned(a, b, "agent_distance_series");
    const std::size_t n = a.states.front().size();
    std::vector<std::vector<double>> x(n, std::vector<double>(a.size()));
    for (std::size_t k = 0; k < a.size(); ++k)
        for (std::size_t i = 0; i < n; ++i) x[i][k] = frobenius_dist(a.states[k][i].mat(), b.states[k][i].mat());
    return x;
}

/// d/dt x_i <= (kappa/N) sum_k a_ik x_k - (kappa/N) sum_k a_ik x_i + (kappa Z/N) sum_k a_ik x_i,
/// Z = max(D(S), D(S~)). Points with x_i < 1e-12 are skipped. Recorded lhs/rhs
/// are those of the agent with the largest excess at each time.
inline InequalityAudit audit_pair_distance(std::span<const double> t, const std::vector<std::vector<double>>& x,
                                           std::span<const double> diam1, std::span<const double> diam2,
                                           const Topology& topo, double kappa,
                                           AuditMutation mut = AuditMutation::None) {
    const std::size_t n = topo.size();
    const std::size_t len = t.size();
    if (x.size() != n) throw DimensionError("audit_pair_distance: agent count mismatch");
    for (const auto& xi : x)
        if (xi.size() != len) throw DimensionError("audit_pair_distance: series lengths differ");
    if (diam1.size() != len || diam2.size() != len) throw DimensionError("audit_pair_distance: series lengths differ");
    const double h = detail::grid_spacing(t);
    const double scale = kappa / static_cast<double>(n);

    InequalityAudit a{AuditKind::PairDistance, {}, {}, {}};
    for (std::size_t k = 1; k + 1 < len; ++k) {
        const double z = std::max(diam1[k], diam2[k]);
        bool any = false;
        double worst_l = 0.0;
        double worst_r = 0.0;
        for (std::size_t i = 0; i < n; ++i) {
            if (x[i][k] < 1e-12) continue;
            double coupled = 0.0;
            double degree = 0.0;
            for (std::size_t m = 0; m < n; ++m) {
                coupled += topo.weight(i, m) * x[m][k];
                degree += topo.weight(i, m);
            }
            double bound = scale * coupled - scale * degree * x[i][k];
            if (mut != AuditMutation::DropSpreadTerm) bound += scale * z * degree * x[i][k];
            const double lhs = dini_derivative(t, x[i], k);
            if (!any || lhs - bound > worst_l - worst_r) {
                worst_l = lhs;
                worst_r = bound;
                any = true;
            }
        }
        if (!any) continue;
        a.times.push_back(t[k]);
        a.lhs.push_back(worst_l);
        a.rhs.push_back(worst_r);
    }
    detail::finish(a, h);
    return a;
}

inline InequalityAudit audit_pair_distance(const Trajectory& a, const Trajectory& b, const ModelConfig& cfg,
                                           AuditMutation mut = AuditMutation::None) {
    return audit_pair_distance(a.times, agent_distance_series(a, b), a.diameters, b.diameters, cfg.topology(),
                               cfg.kappa(), mut);
}

// --- diameter invariance -----------------------------------------------------

struct CubicReport {
    double c;                          ///< 8 sqrt(p) D(Xi) / (kappa xi_m^2)
    std::vector<double> roots_in_range;  ///< roots of r^3 - 2r + c in (0, sqrt 2)
    double threshold;                  ///< admissible diameter
    double f_at_bound;
    bool invariant_region_ok;          ///< f(threshold) < 0
};

inline CubicReport cubic_analysis(const ModelConfig& cfg) {
    detail::require_separable(cfg, "cubic_analysis");
    CubicReport r{};
    r.c = cubic_offset(cfg);
    r.roots_in_range = invariant_cubic_roots(r.c);
    r.threshold = diameter_threshold(cfg);
    r.f_at_bound = invariant_cubic(r.threshold, r.c);
    r.invariant_region_ok = r.threshold > 0.0 && r.f_at_bound < 0.0;
    return r;
}

/// True iff every recorded diameter stays strictly below the admissible threshold.
inline bool diameter_bound_monitor(const Trajectory& traj, const ModelConfig& cfg) {
    if (traj.empty()) throw InsufficientDataError("diameter_bound_monitor: empty trajectory");
    const FrameworkReport fw = check_framework(cfg, traj.states.front());
    if (!fw.all()) throw PreconditionError("diameter_bound_monitor: sufficient conditions fail at t = 0");
    const double threshold = diameter_threshold(cfg);
    return std::all_of(traj.diameters.begin(), traj.diameters.end(), [&](double d) { return d < threshold; });
}

// --- separable-weight Hoelder step -------------------------------------------

/// sum_{i,k} xi_i xi_k x_k x_i^{q-1} - sum_{i,k} xi_i xi_k x_i^q (always <= 0).
/// The second sum is relabeled (i <-> k) so both run over identical (i, k)
/// products; x^q is formed as x * x^{q-1}. Equality cases are then exact.
inline double holder_step_check(std::span<const double> xi, std::span<const double> x, double q) {
    if (xi.size() != x.size()) throw DimensionError("holder_step_check: lengths differ");
    if (!(q >= 1.0)) throw ValidationError("holder_step_check: exponent must be >= 1");
    const std::size_t n = x.size();
    std::vector<double> pw(n);
    for (std::size_t i = 0; i < n; ++i) pw[i] = std::pow(x[i], q - 1.0);
    double mixed = 0.0;
    double pure = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        for (std::size_t k = 0; k < n; ++k) {
            const double w = xi[i] * xi[k];
            mixed += w * (x[k] * pw[i]);
            pure += w * (x[k] * pw[k]);
        }
    }
    return mixed - pure;
}

/// Magnitude against which holder_step_check is compared.
inline double holder_step_scale(std::span<const double> xi, std::span<const double> x, double q) {
    double s = 0.0;
    double w = 0.0;
    for (std::size_t i = 0; i < x.size(); ++i) {
        s += xi[i] * std::pow(x[i], q);
        w += xi[i];
    }
    return std::max(s * w, 1e-300);
}

}  // namespace stsync
