#pragma once

#include <gtest/gtest.h>

#include "stsync/diagnostics.hpp"

namespace stsync::testing {

inline EnsembleState random_ensemble(std::size_t agents, std::size_t n, std::size_t p, Rng& rng) {
    std::vector<StiefelPoint> out;
    for (std::size_t i = 0; i < agents; ++i) out.push_back(random_stiefel(n, p, rng));
    return EnsembleState(std::move(out));
}

inline std::vector<double> uniform_xi(std::size_t agents, double lo, double hi, Rng& rng) {
    std::vector<double> xi(agents);
    for (auto& v : xi) v = rng.uniform(lo, hi);
    return xi;
}

inline FrequencySet random_frequencies(std::size_t agents, std::size_t p, double mag, Rng& rng) {
    std::vector<SkewMat> f;
    for (std::size_t i = 0; i < agents; ++i) f.push_back(mag * rng.skew(p));
    return FrequencySet(std::move(f));
}

inline double max_abs_diff(const Mat& a, const Mat& b) {
    double m = 0.0;
    for (std::size_t i = 0; i < a.rows(); ++i)
        for (std::size_t j = 0; j < a.cols(); ++j) m = std::max(m, std::abs(a(i, j) - b(i, j)));
    return m;
}

}  // namespace stsync::testing
