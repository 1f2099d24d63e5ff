/**
 * Quadrature building blocks:
 *
 *   - Gauss-Legendre rules on [-1,1] (cached) and affine remaps,
 *   - adaptive Simpson integration with optional interior breakpoints,
 *   - a product rule on the unit sphere (Gauss-Legendre in cos(theta) x
 *     uniform azimuth) with a declared polynomial exactness degree and
 *     antipodal symmetry.
 *
 * Everything is deterministic: node tables depend only on the requested
 * sizes, never on timing or thread count.
 */
#ifndef KINWAVE_QUADRATURE_HPP
#define KINWAVE_QUADRATURE_HPP

#include <array>
#include <cstddef>
#include <functional>
#include <vector>

namespace kinwave {

struct Quadrature1D {
    std::vector<double> nodes;
    std::vector<double> weights;
    std::size_t size() const { return nodes.size(); }
};

/// Gauss-Legendre rule with m nodes on [-1,1].  Cached; thread-safe.
const Quadrature1D &gauss_legendre(int m);

/// Gauss-Legendre rule remapped to [a,b].
Quadrature1D gauss_legendre_on(int m, double a, double b);

/**
 * Adaptive Simpson integration of f over [a,b] to the given relative
 * tolerance (with an absolute floor for integrals near zero).  breakpoints
 * lists interior abscissas where the integrand loses smoothness (e.g. |r-rho|
 * kinks); the interval is pre-split there so the recursion converges at the
 * design order.  Throws std::runtime_error if max_depth is exhausted.
 */
double adaptive_simpson(const std::function<double(double)> &f, double a, double b,
                        double rel_tol, double abs_floor = 1e-300,
                        const std::vector<double> &breakpoints = {},
                        int max_depth = 48);

// ============================================================================
// Unit-sphere product rule
// ============================================================================

struct SphereRule {
    /// Unit direction components, one entry per node.
    std::vector<std::array<double, 3>> dirs;
    /// Weights summing to 4*pi.
    std::vector<double> weights;
    /// Spherical-harmonic degree through which the rule is exact.
    int exact_degree = 0;
    std::size_t size() const { return dirs.size(); }
};

/**
 * Product rule: n_polar Gauss-Legendre nodes in cos(theta) x n_azimuth
 * uniformly spaced azimuths.  Exact through spherical-harmonic degree
 * min(2*n_polar - 1, n_azimuth - 1).  For even n_azimuth the node set is
 * closed under the antipodal map, which downstream collision sums exploit.
 */
SphereRule sphere_product_rule(int n_polar, int n_azimuth);

} // namespace kinwave

#endif // KINWAVE_QUADRATURE_HPP
