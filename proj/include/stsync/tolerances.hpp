#pragma once

namespace stsync {

/// Every numerical threshold used by the library, in one place.
struct Tolerances {
    /// Algebraic identities (orthogonality of exp, QR, polar, tangency).
    double algebraic = 1e-12;
    /// Skew-symmetry check, relative to max(1, ||X||).
    double skew = 1e-12;
    /// Orthonormality required when a StiefelPoint is constructed.
    double orth_construct = 1e-10;
    /// Orthonormality drift tolerated during integration before re-retraction.
    double orth_runtime = 1e-8;
    /// Relative pivot threshold for QR rank detection.
    double rank = 1e-12;
    /// Eigenvalue floor (relative) below which a Gram matrix counts as singular.
    double gram_singular = 1e-24;
    /// Weight symmetry / outer-product consistency for topologies.
    double weights = 1e-14;
    /// Floor applied before taking logarithms in decay fits.
    double log_floor = 1e-300;
};

inline constexpr Tolerances kTol{};

}  // namespace stsync
