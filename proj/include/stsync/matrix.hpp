#pragma once

// Dense row-major real matrices and the handful of factorizations the
// simulator needs: thin QR, polar factor, exponential of a skew matrix.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "stsync/error.hpp"
#include "stsync/tolerances.hpp"

namespace stsync {

class Mat {
public:
    /// Empty placeholder (0x0); every other constructor requires positive extents.
    Mat() = default;

    Mat(std::size_t rows, std::size_t cols) : rows_(rows), cols_(cols), data_(rows * cols, 0.0) {
        check_extents();
    }

    Mat(std::size_t rows, std::size_t cols, std::vector<double> data)
        : rows_(rows), cols_(cols), data_(std::move(data)) {
        check_extents();
        if (data_.size() != rows_ * cols_) {
            throw DimensionError("Mat: entry count " + std::to_string(data_.size()) + " != " +
                                 std::to_string(rows_) + "x" + std::to_string(cols_));
        }
        for (double v : data_) {
            if (!std::isfinite(v)) throw ValidationError("Mat: non-finite entry");
        }
    }

    static Mat identity(std::size_t n) {
        Mat m(n, n);
        for (std::size_t i = 0; i < n; ++i) m(i, i) = 1.0;
        return m;
    }

    std::size_t rows() const noexcept { return rows_; }
    std::size_t cols() const noexcept { return cols_; }
    std::size_t size() const noexcept { return data_.size(); }
    bool empty() const noexcept { return data_.empty(); }

    double& operator()(std::size_t i, std::size_t j) noexcept { return data_[i * cols_ + j]; }
    double operator()(std::size_t i, std::size_t j) const noexcept { return data_[i * cols_ + j]; }

    std::span<double> values() noexcept { return data_; }
    std::span<const double> values() const noexcept { return data_; }

    bool same_shape(const Mat& o) const noexcept { return rows_ == o.rows_ && cols_ == o.cols_; }

    bool all_finite() const noexcept {
        return std::all_of(data_.begin(), data_.end(), [](double v) { return std::isfinite(v); });
    }

    Mat& operator+=(const Mat& o) {
        require_same(o, "+=");
        for (std::size_t k = 0; k < data_.size(); ++k) data_[k] += o.data_[k];
        return *this;
    }
    Mat& operator-=(const Mat& o) {
        require_same(o, "-=");
        for (std::size_t k = 0; k < data_.size(); ++k) data_[k] -= o.data_[k];
        return *this;
    }
    Mat& operator*=(double s) noexcept {
        for (double& v : data_) v *= s;
        return *this;
    }

    /// this += s * o
    Mat& add_scaled(double s, const Mat& o) {
        require_same(o, "add_scaled");
        for (std::size_t k = 0; k < data_.size(); ++k) data_[k] += s * o.data_[k];
        return *this;
    }

    friend Mat operator+(Mat a, const Mat& b) { return a += b; }
    friend Mat operator-(Mat a, const Mat& b) { return a -= b; }
    friend Mat operator*(Mat a, double s) { return a *= s; }
    friend Mat operator*(double s, Mat a) { return a *= s; }
    friend Mat operator-(Mat a) { return a *= -1.0; }

    friend bool operator==(const Mat& a, const Mat& b) {
        return a.rows_ == b.rows_ && a.cols_ == b.cols_ && a.data_ == b.data_;
    }

private:
    void check_extents() const {
        if (rows_ == 0 || cols_ == 0) throw DimensionError("Mat: extents must be positive");
    }
    void require_same(const Mat& o, const char* op) const {
        if (!same_shape(o)) {
            throw DimensionError(std::string("Mat ") + op + ": shape mismatch " +
                                 std::to_string(rows_) + "x" + std::to_string(cols_) + " vs " +
                                 std::to_string(o.rows_) + "x" + std::to_string(o.cols_));
        }
    }

    std::size_t rows_ = 0;
    std::size_t cols_ = 0;
    std::vector<double> data_;
};

inline Mat transpose(const Mat& a) {
    Mat t(a.cols(), a.rows());
    for (std::size_t i = 0; i < a.rows(); ++i)
        for (std::size_t j = 0; j < a.cols(); ++j) t(j, i) = a(i, j);
    return t;
}

inline Mat matmul(const Mat& a, const Mat& b) {
    if (a.cols() != b.rows()) {
        throw DimensionError("matmul: inner dimensions " + std::to_string(a.cols()) + " and " +
                             std::to_string(b.rows()) + " differ");
    }
    Mat c(a.rows(), b.cols());
    for (std::size_t i = 0; i < a.rows(); ++i) {
        for (std::size_t k = 0; k < a.cols(); ++k) {
            const double aik = a(i, k);
            for (std::size_t j = 0; j < b.cols(); ++j) c(i, j) += aik * b(k, j);
        }
    }
    return c;
}

/// aᵀ·b without forming the transpose.
inline Mat matmul_tn(const Mat& a, const Mat& b) {
    if (a.rows() != b.rows()) throw DimensionError("matmul_tn: row counts differ");
    Mat c(a.cols(), b.cols());
    for (std::size_t k = 0; k < a.rows(); ++k) {
        for (std::size_t i = 0; i < a.cols(); ++i) {
            const double aki = a(k, i);
            for (std::size_t j = 0; j < b.cols(); ++j) c(i, j) += aki * b(k, j);
        }
    }
    return c;
}

inline double frobenius_sq(const Mat& a) noexcept {
    double s = 0.0;
    for (double v : a.values()) s += v * v;
    return s;
}

inline double frobenius(const Mat& a) noexcept { return std::sqrt(frobenius_sq(a)); }

/// ||a - b|| without a temporary.
inline double frobenius_dist(const Mat& a, const Mat& b) {
    if (!a.same_shape(b)) throw DimensionError("frobenius_dist: shape mismatch");
    double s = 0.0;
    auto av = a.values();
    auto bv = b.values();
    for (std::size_t k = 0; k < av.size(); ++k) {
        const double d = av[k] - bv[k];
        s += d * d;
    }
    return std::sqrt(s);
}

inline double trace(const Mat& a) {
    if (a.rows() != a.cols()) throw DimensionError("trace: matrix not square");
    double s = 0.0;
    for (std::size_t i = 0; i < a.rows(); ++i) s += a(i, i);
    return s;
}

/// ||aᵀa - I||, the orthonormality defect of the columns of a.
inline double orthonormality_defect(const Mat& a) {
    Mat g = matmul_tn(a, a);
    for (std::size_t i = 0; i < g.rows(); ++i) g(i, i) -= 1.0;
    return frobenius(g);
}

class SkewMat {
public:
    explicit SkewMat(Mat m, double tol = kTol.skew) : mat_(std::move(m)) {
        if (mat_.rows() != mat_.cols()) throw DimensionError("SkewMat: matrix not square");
        const double asym = frobenius(mat_ + transpose(mat_));
        if (asym > tol * std::max(1.0, frobenius(mat_))) {
            throw ValidationError("SkewMat: ||X + Xᵀ|| = " + std::to_string(asym) +
                                  " exceeds skew tolerance");
        }
    }

    static SkewMat zero(std::size_t p) { return SkewMat(Mat(p, p)); }

    /// Skew part (X - Xᵀ)/2 of an arbitrary square matrix.
    static SkewMat skew_part(const Mat& x) {
        Mat s = x - transpose(x);
        s *= 0.5;
        return SkewMat(std::move(s));
    }

    std::size_t dim() const noexcept { return mat_.rows(); }
    const Mat& mat() const noexcept { return mat_; }

    friend SkewMat operator*(double s, const SkewMat& x) { return SkewMat(x.mat_ * s); }
    friend SkewMat operator-(const SkewMat& a, const SkewMat& b) { return SkewMat(a.mat_ - b.mat_); }

private:
    Mat mat_;
};

struct QrResult {
    Mat q;  ///< m x k, orthonormal columns
    Mat r;  ///< k x k, upper triangular, nonnegative diagonal
};

/// Thin Householder QR of a tall matrix.
inline QrResult qr_thin(const Mat& a, double rank_tol = kTol.rank) {
    const std::size_t m = a.rows();
    const std::size_t k = a.cols();
    if (m < k) throw DimensionError("qr_thin: needs rows >= cols");

    Mat work = a;
    std::vector<std::vector<double>> reflectors(k);
    for (std::size_t j = 0; j < k; ++j) {
        double norm = 0.0;
        for (std::size_t i = j; i < m; ++i) norm += work(i, j) * work(i, j);
        norm = std::sqrt(norm);
        std::vector<double> v(m - j, 0.0);
        if (norm > 0.0) {
            const double alpha = work(j, j) >= 0.0 ? -norm : norm;
            for (std::size_t i = j; i < m; ++i) v[i - j] = work(i, j);
            v[0] -= alpha;
            double vnorm = 0.0;
            for (double x : v) vnorm += x * x;
            vnorm = std::sqrt(vnorm);
            if (vnorm > 0.0) {
                for (double& x : v) x /= vnorm;
                for (std::size_t c = j; c < k; ++c) {
                    double dot = 0.0;
                    for (std::size_t i = j; i < m; ++i) dot += v[i - j] * work(i, c);
                    for (std::size_t i = j; i < m; ++i) work(i, c) -= 2.0 * v[i - j] * dot;
                }
            }
        }
        reflectors[j] = std::move(v);
    }

    const double scale = frobenius(a);
    Mat r(k, k);
    for (std::size_t i = 0; i < k; ++i)
        for (std::size_t j = i; j < k; ++j) r(i, j) = work(i, j);
    for (std::size_t i = 0; i < k; ++i) {
        if (std::abs(r(i, i)) <= rank_tol * scale) {
            throw RankError("qr_thin: column " + std::to_string(i) + " is numerically dependent");
        }
    }

    // Q = H_0 H_1 ... H_{k-1} applied to the first k columns of the identity.
    Mat q(m, k);
    for (std::size_t j = 0; j < k; ++j) q(j, j) = 1.0;
    for (std::size_t jj = k; jj-- > 0;) {
        const auto& v = reflectors[jj];
        for (std::size_t c = 0; c < k; ++c) {
            double dot = 0.0;
            for (std::size_t i = jj; i < m; ++i) dot += v[i - jj] * q(i, c);
            for (std::size_t i = jj; i < m; ++i) q(i, c) -= 2.0 * v[i - jj] * dot;
        }
    }

    for (std::size_t i = 0; i < k; ++i) {
        if (r(i, i) < 0.0) {
            for (std::size_t j = i; j < k; ++j) r(i, j) = -r(i, j);
            for (std::size_t row = 0; row < m; ++row) q(row, i) = -q(row, i);
        }
    }
    return {std::move(q), std::move(r)};
}

struct SymEig {
    std::vector<double> values;  ///< ascending
    Mat vectors;                 ///< columns are eigenvectors
};

/// Cyclic Jacobi eigensolver for small symmetric matrices.
inline SymEig sym_eig(const Mat& s) {
    const std::size_t n = s.rows();
    if (n != s.cols()) throw DimensionError("sym_eig: matrix not square");
    Mat a = s;
    Mat v = Mat::identity(n);
    const double total = std::max(frobenius(a), 1e-300);
    for (int sweep = 0; sweep < 100; ++sweep) {
        double off = 0.0;
        for (std::size_t i = 0; i < n; ++i)
            for (std::size_t j = i + 1; j < n; ++j) off += a(i, j) * a(i, j);
        if (std::sqrt(off) <= 1e-17 * total) break;
        for (std::size_t p = 0; p < n; ++p) {
            for (std::size_t q = p + 1; q < n; ++q) {
                const double apq = a(p, q);
                if (apq == 0.0) continue;
                const double theta = (a(q, q) - a(p, p)) / (2.0 * apq);
                const double t = (theta >= 0.0 ? 1.0 : -1.0) /
                                 (std::abs(theta) + std::sqrt(theta * theta + 1.0));
                const double c = 1.0 / std::sqrt(t * t + 1.0);
                const double sn = t * c;
                for (std::size_t k = 0; k < n; ++k) {
                    const double akp = a(k, p);
                    const double akq = a(k, q);
                    a(k, p) = c * akp - sn * akq;
                    a(k, q) = sn * akp + c * akq;
                }
                for (std::size_t k = 0; k < n; ++k) {
                    const double apk = a(p, k);
                    const double aqk = a(q, k);
                    a(p, k) = c * apk - sn * aqk;
                    a(q, k) = sn * apk + c * aqk;
                }
                for (std::size_t k = 0; k < n; ++k) {
                    const double vkp = v(k, p);
                    const double vkq = v(k, q);
                    v(k, p) = c * vkp - sn * vkq;
                    v(k, q) = sn * vkp + c * vkq;
                }
            }
        }
    }
    std::vector<std::size_t> order(n);
    for (std::size_t i = 0; i < n; ++i) order[i] = i;
    std::sort(order.begin(), order.end(), [&](std::size_t x, std::size_t y) { return a(x, x) < a(y, y); });
    SymEig out{std::vector<double>(n), Mat(n, n)};
    for (std::size_t c = 0; c < n; ++c) {
        out.values[c] = a(order[c], order[c]);
        for (std::size_t r = 0; r < n; ++r) out.vectors(r, c) = v(r, order[c]);
    }
    return out;
}

/// Orthonormal polar factor a·(aᵀa)^{-1/2}: the closest point of St(p,n) to a.
inline Mat polar_factor(const Mat& a) {
    if (a.rows() < a.cols()) throw DimensionError("polar_factor: needs rows >= cols");
    const std::size_t p = a.cols();
    const SymEig eig = sym_eig(matmul_tn(a, a));
    const double top = std::max(eig.values.back(), 0.0);
    if (!(eig.values.front() > kTol.gram_singular * std::max(1.0, top))) {
        throw ProjectionError("polar_factor: aᵀa is singular");
    }
    Mat inv_sqrt(p, p);
    for (std::size_t i = 0; i < p; ++i) {
        for (std::size_t j = 0; j < p; ++j) {
            double s = 0.0;
            for (std::size_t k = 0; k < p; ++k) {
                s += eig.vectors(i, k) * eig.vectors(j, k) / std::sqrt(eig.values[k]);
            }
            inv_sqrt(i, j) = s;
        }
    }
    Mat u = matmul(a, inv_sqrt);
    // One Newton-Schulz sweep, U <- U (3I - UᵀU) / 2, removes the rounding
    // left by the eigen route; the polar factor is its fixed point.
    Mat g = matmul_tn(u, u);
    g *= -0.5;
    for (std::size_t i = 0; i < p; ++i) g(i, i) += 1.5;
    return matmul(u, g);
}

/// exp(x) for skew x: scaling and squaring around a degree-13 Taylor polynomial.
inline Mat expm_skew(const SkewMat& x) {
    const std::size_t p = x.dim();
    const double norm = frobenius(x.mat());
    int squarings = 0;
    if (norm > 0.0) squarings = std::max(0, static_cast<int>(std::ceil(std::log2(norm))) + 1);
    Mat scaled = x.mat() * std::ldexp(1.0, -squarings);

    // Horner: I + X(I + X/2(I + X/3(... (I + X/13))))
    constexpr int kDegree = 13;
    Mat acc = Mat::identity(p);
    for (int k = kDegree; k >= 1; --k) {
        Mat next = matmul(scaled, acc);
        next *= 1.0 / k;
        for (std::size_t i = 0; i < p; ++i) next(i, i) += 1.0;
        acc = std::move(next);
    }
    for (int s = 0; s < squarings; ++s) acc = matmul(acc, acc);
    return acc;
}

inline double determinant(Mat a) {
    const std::size_t n = a.rows();
    if (n != a.cols()) throw DimensionError("determinant: matrix not square");
    double det = 1.0;
    for (std::size_t c = 0; c < n; ++c) {
        std::size_t piv = c;
        for (std::size_t r = c + 1; r < n; ++r)
            if (std::abs(a(r, c)) > std::abs(a(piv, c))) piv = r;
        if (a(piv, c) == 0.0) return 0.0;
        if (piv != c) {
            for (std::size_t j = 0; j < n; ++j) std::swap(a(piv, j), a(c, j));
            det = -det;
        }
        det *= a(c, c);
        for (std::size_t r = c + 1; r < n; ++r) {
            const double f = a(r, c) / a(c, c);
            for (std::size_t j = c; j < n; ++j) a(r, j) -= f * a(c, j);
        }
    }
    return det;
}

}  // namespace stsync
