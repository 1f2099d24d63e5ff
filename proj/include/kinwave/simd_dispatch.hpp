/**
 * Runtime-dispatched kernels for the one hot inner loop of the collision
 * kernel quadrature: sums of exp(base - t * c_k) over a table of cosines.
 *
 * Two implementations exist:
 *   - a scalar reference path using std::exp, and
 *   - an AVX2+FMA path using a polynomial exponential on 4 lanes,
 * selected once at startup from CPU capabilities.  The paths are equivalence-
 * tested against each other (per-value and through whole assembled kernel
 * matrices); forcing a specific path is exposed for those tests and for
 * reproducing results across machines.
 *
 * Both paths require x <= 709 and flush exp(x) to zero for x < -708 (the
 * quadrature only ever passes non-positive arguments).
 */
#ifndef KINWAVE_SIMD_DISPATCH_HPP
#define KINWAVE_SIMD_DISPATCH_HPP

#include <cstddef>

namespace kinwave::simd {

enum class Path {
    Auto,   ///< pick the best supported path (default)
    Scalar, ///< std::exp reference loop
    Avx2,   ///< AVX2+FMA polynomial exponential
};

/// Force a path (tests); Path::Auto restores capability-based selection.
/// Forcing Avx2 on a host without AVX2+FMA throws std::runtime_error.
void force_path(Path p);

/// Currently active path (never Auto).
Path active_path();
const char *active_path_name();

/// True if this host supports the AVX2+FMA path.
bool host_supports_avx2();

/**
 * sum_k exp(base - t * c[k]) for k in [0, m).  m must be a multiple of 4.
 * Deterministic for a fixed path (fixed summation order within lanes).
 */
double angular_exp_sum(double base, double t, const double *c, std::size_t m);

/// Elementwise exp of 4 doubles through the active path (accuracy tests).
void exp4(const double *x, double *out);

} // namespace kinwave::simd

#endif // KINWAVE_SIMD_DISPATCH_HPP
