#pragma once

// The consensus dynamics on St(p,n):
//
//   dS_i/dt = S_i Xi_i + kappa (S_ic - (S_i S_iᵀ S_ic + S_i S_icᵀ S_i) / 2),
//   S_ic    = (1/N) sum_k a_ik S_k,
//
// together with its network topology, natural frequencies, potential, the
// rotating-frame transform and the sufficient-condition check for consensus.

#include <algorithm>
#include <cmath>
#include <numeric>
#include <optional>
#include <vector>

#include "stsync/cubic.hpp"
#include "stsync/matrix.hpp"
#include "stsync/stiefel.hpp"

namespace stsync {

enum class TopologyKind { Separable, General };

/// Symmetric nonnegative coupling weights a_ik over a connected graph.
/// The separable kind stores the factors xi with a_ik = xi_i xi_k.
class Topology {
public:
    static Topology separable(std::vector<double> xi) {
        if (xi.empty()) throw ValidationError("Topology: no agents");
        for (double v : xi) {
            if (!(v > 0.0) || !std::isfinite(v)) throw ValidationError("Topology: xi entries must be positive");
        }
        const std::size_t n = xi.size();
        Mat w(n, n);
        for (std::size_t i = 0; i < n; ++i)
            for (std::size_t k = 0; k < n; ++k) w(i, k) = xi[i] * xi[k];
        return Topology(TopologyKind::Separable, std::move(w), std::move(xi));
    }

    static Topology general(Mat weights) {
        if (weights.rows() != weights.cols()) throw DimensionError("Topology: weight matrix not square");
        const std::size_t n = weights.rows();
        for (std::size_t i = 0; i < n; ++i) {
            for (std::size_t k = 0; k < n; ++k) {
                if (weights(i, k) < 0.0) throw ValidationError("Topology: negative weight");
                if (std::abs(weights(i, k) - weights(k, i)) >
                    kTol.weights * std::max(1.0, std::abs(weights(i, k)))) {
                    throw ValidationError("Topology: weights not symmetric");
                }
            }
        }
        return Topology(TopologyKind::General, std::move(weights), {});
    }

    /// All-to-all unit weights (separable with xi = 1).
    static Topology all_to_all(std::size_t n) { return separable(std::vector<double>(n, 1.0)); }

    TopologyKind kind() const noexcept { return kind_; }
    bool is_separable() const noexcept { return kind_ == TopologyKind::Separable; }
    std::size_t size() const noexcept { return weights_.rows(); }
    double weight(std::size_t i, std::size_t k) const noexcept { return weights_(i, k); }
    const Mat& weights() const noexcept { return weights_; }
    double max_weight() const noexcept {
        double m = 0.0;
        for (double v : weights_.values()) m = std::max(m, v);
        return m;
    }

    const std::vector<double>& xi() const {
        if (!is_separable()) throw UnsupportedError("Topology: xi requested for a general topology");
        return xi_;
    }

private:
    Topology(TopologyKind kind, Mat w, std::vector<double> xi)
        : kind_(kind), weights_(std::move(w)), xi_(std::move(xi)) {
        require_connected();
    }

    void require_connected() const {
        const std::size_t n = size();
        std::vector<std::size_t> parent(n);
        std::iota(parent.begin(), parent.end(), 0);
        auto find = [&](std::size_t x) {
            while (parent[x] != x) x = parent[x] = parent[parent[x]];
            return x;
        };
        std::size_t components = n;
        for (std::size_t i = 0; i < n; ++i) {
            for (std::size_t k = i + 1; k < n; ++k) {
                if (weights_(i, k) <= 0.0) continue;
                const std::size_t a = find(i);
                const std::size_t b = find(k);
                if (a != b) {
                    parent[a] = b;
                    --components;
                }
            }
        }
        if (components != 1) throw ValidationError("Topology: graph is not connected");
    }

    TopologyKind kind_;
    Mat weights_;
    std::vector<double> xi_;
};

struct XiStats {
    double xi_m;  ///< min
    double xi_M;  ///< max
    double xi_c;  ///< mean
    double d_xi;  ///< max - min
};

inline XiStats xi_stats(const Topology& topo) {
    const auto& xi = topo.xi();
    const auto [lo, hi] = std::minmax_element(xi.begin(), xi.end());
    double sum = 0.0;
    for (double v : xi) sum += v;
    return {*lo, *hi, sum / static_cast<double>(xi.size()), *hi - *lo};
}

/// max_{i,j} ||Xi_i - Xi_j||
inline double frequency_heterogeneity(const std::vector<SkewMat>& freqs) {
    double d = 0.0;
    for (std::size_t i = 0; i < freqs.size(); ++i)
        for (std::size_t j = i + 1; j < freqs.size(); ++j)
            d = std::max(d, frobenius_dist(freqs[i].mat(), freqs[j].mat()));
    return d;
}

class FrequencySet {
public:
    explicit FrequencySet(std::vector<SkewMat> freqs) : freqs_(std::move(freqs)) {
        if (freqs_.empty()) throw ValidationError("FrequencySet: empty");
        for (const auto& f : freqs_) {
            if (f.dim() != freqs_.front().dim()) throw DimensionError("FrequencySet: mixed dimensions");
        }
        d_xi_ = frequency_heterogeneity(freqs_);
    }

    static FrequencySet zero(std::size_t count, std::size_t p) {
        return FrequencySet(std::vector<SkewMat>(count, SkewMat::zero(p)));
    }
    static FrequencySet common(std::size_t count, const SkewMat& xi) {
        return FrequencySet(std::vector<SkewMat>(count, xi));
    }

    std::size_t size() const noexcept { return freqs_.size(); }
    std::size_t dim() const noexcept { return freqs_.front().dim(); }
    const SkewMat& operator[](std::size_t i) const { return freqs_[i]; }
    const std::vector<SkewMat>& all() const noexcept { return freqs_; }
    double heterogeneity() const noexcept { return d_xi_; }

private:
    std::vector<SkewMat> freqs_;
    double d_xi_ = 0.0;
};

class ModelConfig {
public:
    ModelConfig(double kappa, Topology topology, FrequencySet frequencies, std::size_t n, std::size_t p)
        : kappa_(kappa), topology_(std::move(topology)), frequencies_(std::move(frequencies)), n_(n), p_(p) {
        if (!(kappa_ >= 0.0) || !std::isfinite(kappa_)) throw ValidationError("ModelConfig: kappa must be >= 0");
        if (p_ == 0 || p_ > n_) throw DimensionError("ModelConfig: need 1 <= p <= n");
        if (frequencies_.size() != topology_.size()) {
            throw DimensionError("ModelConfig: frequency count differs from agent count");
        }
        if (frequencies_.dim() != p_) throw DimensionError("ModelConfig: frequencies must be p x p");
    }

    double kappa() const noexcept { return kappa_; }
    const Topology& topology() const noexcept { return topology_; }
    const FrequencySet& frequencies() const noexcept { return frequencies_; }
    std::size_t n() const noexcept { return n_; }
    std::size_t p() const noexcept { return p_; }
    std::size_t agents() const noexcept { return topology_.size(); }

    void require_compatible(const EnsembleState& s) const {
        if (s.size() != agents() || s.n() != n_ || s.p() != p_) {
            throw DimensionError("state shape does not match the model configuration");
        }
    }

private:
    double kappa_;
    Topology topology_;
    FrequencySet frequencies_;
    std::size_t n_;
    std::size_t p_;
};

/// Vector field on raw matrices (integrator stages are slightly off-manifold).
inline std::vector<Mat> rhs(const std::vector<Mat>& agents, const ModelConfig& cfg) {
    const std::size_t count = agents.size();
    if (count != cfg.agents()) throw DimensionError("rhs: agent count mismatch");
    const auto& topo = cfg.topology();
    const double inv_n = 1.0 / static_cast<double>(count);
    std::vector<Mat> out;
    out.reserve(count);
    for (std::size_t i = 0; i < count; ++i) {
        const Mat& si = agents[i];
        if (si.rows() != cfg.n() || si.cols() != cfg.p()) throw DimensionError("rhs: agent shape mismatch");
        Mat v = matmul(si, cfg.frequencies()[i].mat());
        if (cfg.kappa() != 0.0) {
            Mat centroid(cfg.n(), cfg.p());
            for (std::size_t k = 0; k < count; ++k) {
                const double w = topo.weight(i, k);
                if (w != 0.0) centroid.add_scaled(w * inv_n, agents[k]);
            }
            // S_i S_iᵀ S_ic + S_i S_icᵀ S_i = 2 S_i sym(S_iᵀ S_ic)
            Mat m = matmul_tn(si, centroid);
            Mat sym = m + transpose(m);
            sym *= 0.5;
            Mat coupling = centroid - matmul(si, sym);
            v.add_scaled(cfg.kappa(), coupling);
        }
        out.push_back(std::move(v));
    }
    return out;
}

inline std::vector<Mat> rhs(const EnsembleState& state, const ModelConfig& cfg) {
    cfg.require_compatible(state);
    return rhs(state.mats(), cfg);
}

/// V(S) = (1/N) sum_{i,k} a_ik ||S_i - S_k||^2
inline double potential(const std::vector<Mat>& agents, const Topology& topo) {
    if (agents.size() != topo.size()) throw DimensionError("potential: agent count mismatch");
    double s = 0.0;
    for (std::size_t i = 0; i < agents.size(); ++i) {
        for (std::size_t k = 0; k < agents.size(); ++k) {
            if (i == k) continue;
            const double d = frobenius_dist(agents[i], agents[k]);
            s += topo.weight(i, k) * d * d;
        }
    }
    return s / static_cast<double>(agents.size());
}

inline double potential(const EnsembleState& state, const Topology& topo) { return potential(state.mats(), topo); }

/// Right-multiplies every agent by exp(-t Xi).
inline EnsembleState moving_frame(const EnsembleState& state, const SkewMat& common, double t) {
    if (common.dim() != state.p()) throw DimensionError("moving_frame: frequency must be p x p");
    const Mat rot = expm_skew((-t) * common);
    std::vector<StiefelPoint> out;
    out.reserve(state.size());
    for (const auto& a : state.agents()) out.emplace_back(matmul(a.mat(), rot));
    return EnsembleState(std::move(out));
}

/// epsilon = 5 kappa xi_M^2 sqrt(p) (D(S) + D(S~)) + 3 kappa xi_M D(xi) + D(Xi)
inline double epsilon_of_t(const ModelConfig& cfg, double d_s, double d_s_tilde) {
    const XiStats st = xi_stats(cfg.topology());
    const double k = cfg.kappa();
    return 5.0 * k * st.xi_M * st.xi_M * std::sqrt(static_cast<double>(cfg.p())) * (d_s + d_s_tilde) +
           3.0 * k * st.xi_M * st.d_xi + cfg.frequencies().heterogeneity();
}

/// min{ 4 (kappa xi_m xi_c - eps_sup), kappa (4 xi_m xi_c - xi_M^2) }
inline double delta_rate(const ModelConfig& cfg, double eps_sup) {
    const XiStats st = xi_stats(cfg.topology());
    const double k = cfg.kappa();
    return std::min(4.0 * (k * st.xi_m * st.xi_c - eps_sup), k * (4.0 * st.xi_m * st.xi_c - st.xi_M * st.xi_M));
}

/// (xi_m xi_c - 3 xi_M D(xi) - D(Xi)/kappa) / (10 xi_M^2 sqrt p): the admissible
/// initial diameter, which also bounds the diameter for all later times.
inline double diameter_threshold(const ModelConfig& cfg) {
    if (!(cfg.kappa() > 0.0)) throw PreconditionError("diameter_threshold: kappa must be positive");
    const XiStats st = xi_stats(cfg.topology());
    return (st.xi_m * st.xi_c - 3.0 * st.xi_M * st.d_xi - cfg.frequencies().heterogeneity() / cfg.kappa()) /
           (10.0 * st.xi_M * st.xi_M * std::sqrt(static_cast<double>(cfg.p())));
}

/// c = 8 sqrt(p) D(Xi) / (kappa xi_m^2)
inline double cubic_offset(const ModelConfig& cfg) {
    if (!(cfg.kappa() > 0.0)) throw PreconditionError("cubic_offset: kappa must be positive");
    const XiStats st = xi_stats(cfg.topology());
    return 8.0 * std::sqrt(static_cast<double>(cfg.p())) * cfg.frequencies().heterogeneity() /
           (cfg.kappa() * st.xi_m * st.xi_m);
}

/// Upper bound on sup_t epsilon for two solutions started with diameter
/// <= d_initial: the diameter never exceeds max(d_initial, r1), with r1 the
/// lower root of the diameter cubic.
inline double eps_sup_estimate(const ModelConfig& cfg, double d_initial) {
    const auto roots = invariant_cubic_roots(cubic_offset(cfg));
    const double r1 = roots.empty() ? 0.0 : roots.front();
    const double d = std::max(d_initial, r1);
    return epsilon_of_t(cfg, d, d);
}

struct FrameworkReport {
    double f1_lhs, f1_rhs;  ///< xi_M^2 < 4 xi_m xi_c
    double f2_lhs, f2_rhs;  ///< D(xi) < xi_m xi_c / (3 xi_M)
    double f3_lhs, f3_rhs;  ///< D(Xi)/kappa < (coupling margin)
    double f4_bound;        ///< admissible initial diameter
    double f4_actual;       ///< D(S_in)
    bool satisfied[4];
    double eps_sup;  ///< eps_sup_estimate at D(S_in)
    std::optional<double> delta_lower;

    double margin(int k) const {
        switch (k) {
            case 0: return f1_rhs - f1_lhs;
            case 1: return f2_rhs - f2_lhs;
            case 2: return f3_rhs - f3_lhs;
            default: return f4_bound - f4_actual;
        }
    }
    bool all() const noexcept { return satisfied[0] && satisfied[1] && satisfied[2] && satisfied[3]; }
};

inline FrameworkReport check_framework(const ModelConfig& cfg, const EnsembleState& initial) {
    if (!cfg.topology().is_separable()) {
        throw UnsupportedError("check_framework: the sufficient conditions need a separable topology");
    }
    if (!(cfg.kappa() > 0.0)) throw PreconditionError("check_framework: kappa must be positive");
    cfg.require_compatible(initial);

    const XiStats st = xi_stats(cfg.topology());
    const double p = static_cast<double>(cfg.p());
    const double d_freq = cfg.frequencies().heterogeneity();
    const double xmc = st.xi_m * st.xi_c;

    FrameworkReport r{};
    r.f1_lhs = st.xi_M * st.xi_M;
    r.f1_rhs = 4.0 * xmc;
    r.f2_lhs = st.d_xi;
    r.f2_rhs = xmc / (3.0 * st.xi_M);
    const double q = 2.0 - 1.0 / (100.0 * p);
    r.f3_lhs = d_freq / cfg.kappa();
    r.f3_rhs = (xmc - 3.0 * st.xi_M * st.d_xi) * q / (80.0 * st.xi_M * st.xi_M * p / (st.xi_m * st.xi_m) + q);
    r.f4_bound = diameter_threshold(cfg);
    r.f4_actual = ensemble_diameter(initial);
    r.satisfied[0] = r.f1_lhs < r.f1_rhs;
    r.satisfied[1] = r.f2_lhs < r.f2_rhs;
    r.satisfied[2] = r.f3_lhs < r.f3_rhs;
    r.satisfied[3] = r.f4_actual < r.f4_bound;
    r.eps_sup = eps_sup_estimate(cfg, r.f4_actual);
    if (r.all() && cfg.kappa() * xmc - r.eps_sup > 0.0) {
        const double delta = delta_rate(cfg, r.eps_sup);
        if (delta > 0.0) r.delta_lower = delta;
    }
    return r;
}

}  // namespace stsync
