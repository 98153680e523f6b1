#pragma once

#include <cmath>
#include <vector>

#include "stsync/error.hpp"

namespace stsync {

/// f(r) = r^3 - 2r + c
inline double invariant_cubic(double r, double c) noexcept { return r * r * r - 2.0 * r + c; }

/// Value of c at which the two interior roots of f merge (f(sqrt(2/3)) = 0).
inline double cubic_critical_offset() noexcept { return 4.0 * std::sqrt(2.0) / (3.0 * std::sqrt(3.0)); }

/// Roots of f in the open interval (0, sqrt 2), ascending. Bisection to
/// width 1e-8 on each monotone branch, then Newton polish.
inline std::vector<double> invariant_cubic_roots(double c) {
    if (!(c >= 0.0)) throw ValidationError("invariant_cubic_roots: offset must be nonnegative");
    if (c == 0.0 || c >= cubic_critical_offset()) return {};

    const double turning = std::sqrt(2.0 / 3.0);
    auto solve = [c](double lo, double hi) {
        // f(lo) and f(hi) have opposite signs.
        const bool rising = invariant_cubic(hi, c) > invariant_cubic(lo, c);
        while (hi - lo > 1e-8) {
            const double mid = 0.5 * (lo + hi);
            const double fm = invariant_cubic(mid, c);
            if ((fm > 0.0) == rising) hi = mid; else lo = mid;
        }
        double r = 0.5 * (lo + hi);
        for (int it = 0; it < 8; ++it) {
            const double d = 3.0 * r * r - 2.0;
            if (d == 0.0) break;
            const double next = r - invariant_cubic(r, c) / d;
            if (!(next > lo - 1e-8 && next < hi + 1e-8)) break;
            r = next;
        }
        return r;
    };
    return {solve(0.0, turning), solve(turning, std::sqrt(2.0))};
}

}  // namespace stsync
