#pragma once

// Points of the Stiefel manifold St(p,n) = {X in R^{n x p} : XᵀX = I_p},
// ensembles of them, and the distance functionals used throughout.

#include <cmath>
#include <limits>
#include <vector>

#include "stsync/matrix.hpp"
#include "stsync/rng.hpp"

namespace stsync {

class StiefelPoint {
public:
    /// Validates orthonormal columns to within `tol`. Pass +inf to skip the check.
    explicit StiefelPoint(Mat m, double tol = kTol.orth_construct) : mat_(std::move(m)) {
        if (mat_.empty()) throw DimensionError("StiefelPoint: empty matrix");
        if (mat_.cols() > mat_.rows()) throw DimensionError("StiefelPoint: p > n");
        if (!mat_.all_finite()) throw ValidationError("StiefelPoint: non-finite entry");
        if (std::isfinite(tol)) {
            const double defect = orthonormality_defect(mat_);
            if (defect > tol) {
                throw ValidationError("StiefelPoint: ||XᵀX - I|| = " + std::to_string(defect) +
                                      " exceeds " + std::to_string(tol));
            }
            const double norm_gap = std::abs(frobenius(mat_) - std::sqrt(static_cast<double>(p())));
            if (norm_gap > tol) throw ValidationError("StiefelPoint: ||X|| differs from sqrt(p)");
        }
    }

    std::size_t n() const noexcept { return mat_.rows(); }
    std::size_t p() const noexcept { return mat_.cols(); }
    const Mat& mat() const noexcept { return mat_; }

    friend bool operator==(const StiefelPoint& a, const StiefelPoint& b) { return a.mat_ == b.mat_; }

private:
    Mat mat_;
};

/// Haar-distributed point: Q factor of an n x p standard Gaussian matrix.
inline StiefelPoint random_stiefel(std::size_t n, std::size_t p, Rng& rng) {
    if (p == 0 || p > n) throw DimensionError("random_stiefel: need 1 <= p <= n");
    return StiefelPoint(qr_thin(rng.gaussian(n, p)).q);
}

/// Polar retraction onto St(p,n).
inline StiefelPoint retract(const Mat& x) { return StiefelPoint(polar_factor(x)); }

/// ||sᵀv + vᵀs||; zero iff v is tangent to the manifold at s.
inline double tangent_residual(const StiefelPoint& s, const Mat& v) {
    if (!s.mat().same_shape(v)) throw DimensionError("tangent_residual: shape mismatch");
    Mat g = matmul_tn(s.mat(), v);
    return frobenius(g + transpose(g));
}

/// Orthogonal projection of v onto the tangent space at x: v - x·sym(xᵀv).
inline Mat tangent_project(const Mat& x, const Mat& v) {
    Mat g = matmul_tn(x, v);
    Mat sym = g + transpose(g);
    sym *= 0.5;
    return v - matmul(x, sym);
}

class EnsembleState {
public:
    explicit EnsembleState(std::vector<StiefelPoint> agents) : agents_(std::move(agents)) {
        if (agents_.empty()) throw ValidationError("EnsembleState: needs at least one agent");
        for (const auto& a : agents_) {
            if (a.n() != agents_.front().n() || a.p() != agents_.front().p()) {
                throw DimensionError("EnsembleState: agents disagree on (n, p)");
            }
        }
    }

    std::size_t size() const noexcept { return agents_.size(); }
    std::size_t n() const noexcept { return agents_.front().n(); }
    std::size_t p() const noexcept { return agents_.front().p(); }
    const StiefelPoint& operator[](std::size_t i) const { return agents_[i]; }
    const std::vector<StiefelPoint>& agents() const noexcept { return agents_; }

    std::vector<Mat> mats() const {
        std::vector<Mat> out;
        out.reserve(agents_.size());
        for (const auto& a : agents_) out.push_back(a.mat());
        return out;
    }

    bool same_shape(const EnsembleState& o) const noexcept {
        return size() == o.size() && n() == o.n() && p() == o.p();
    }

    friend bool operator==(const EnsembleState& a, const EnsembleState& b) { return a.agents_ == b.agents_; }

private:
    std::vector<StiefelPoint> agents_;
};

inline double ensemble_diameter(const std::vector<Mat>& agents) {
    double best = 0.0;
    for (std::size_t i = 0; i < agents.size(); ++i)
        for (std::size_t j = i + 1; j < agents.size(); ++j)
            best = std::max(best, frobenius_dist(agents[i], agents[j]));
    return best;
}

/// Maximal pairwise Frobenius distance.
inline double ensemble_diameter(const EnsembleState& e) { return ensemble_diameter(e.mats()); }

/// (sum_i ||S_i - T_i||^q)^{1/q}
inline double ensemble_lp_distance(const EnsembleState& a, const EnsembleState& b, double q) {
    if (!a.same_shape(b)) throw DimensionError("ensemble_lp_distance: ensembles differ in shape");
    if (!(q >= 1.0)) throw ValidationError("ensemble_lp_distance: exponent must be >= 1");
    double s = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) s += std::pow(frobenius_dist(a[i].mat(), b[i].mat()), q);
    return std::pow(s, 1.0 / q);
}

/// Each agent is retract(base + radius * T_i / ||T_i||) with T_i a projected
/// tangent Gaussian at base.
inline EnsembleState near_consensus(const StiefelPoint& base, std::size_t count, double radius, Rng& rng) {
    std::vector<StiefelPoint> agents;
    agents.reserve(count);
    for (std::size_t i = 0; i < count; ++i) {
        Mat t = tangent_project(base.mat(), rng.gaussian(base.n(), base.p()));
        const double norm = frobenius(t);
        Mat x = base.mat();
        if (norm > 0.0) x.add_scaled(radius / norm, t);
        agents.push_back(retract(x));
    }
    return EnsembleState(std::move(agents));
}

/// Same construction but around each agent of `e` (a perturbed companion).
inline EnsembleState perturb(const EnsembleState& e, double radius, Rng& rng) {
    std::vector<StiefelPoint> agents;
    agents.reserve(e.size());
    for (const auto& a : e.agents()) {
        Mat t = tangent_project(a.mat(), rng.gaussian(a.n(), a.p()));
        const double norm = frobenius(t);
        Mat x = a.mat();
        if (norm > 0.0) x.add_scaled(radius / norm, t);
        agents.push_back(retract(x));
    }
    return EnsembleState(std::move(agents));
}

}  // namespace stsync
