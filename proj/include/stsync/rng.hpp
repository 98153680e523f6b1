#pragma once

#include <cstdint>
#include <random>

#include "stsync/matrix.hpp"

namespace stsync {

/// Seeded generator; all randomness in the library flows through one of these.
class Rng {
public:
    explicit Rng(std::uint64_t seed) : engine_(seed) {}

    double normal() { return normal_(engine_); }
    double uniform(double lo, double hi) { return std::uniform_real_distribution<double>(lo, hi)(engine_); }
    std::uint64_t next_u64() { return engine_(); }

    Mat gaussian(std::size_t rows, std::size_t cols) {
        Mat m(rows, cols);
        for (double& v : m.values()) v = normal();
        return m;
    }

    /// Skew matrix with independent standard normal upper-triangle entries.
    SkewMat skew(std::size_t p) {
        Mat m(p, p);
        for (std::size_t i = 0; i < p; ++i) {
            for (std::size_t j = i + 1; j < p; ++j) {
                const double v = normal();
                m(i, j) = v;
                m(j, i) = -v;
            }
        }
        return SkewMat(std::move(m));
    }

private:
    std::mt19937_64 engine_;
    std::normal_distribution<double> normal_{0.0, 1.0};
};

}  // namespace stsync
