/**
 * Point evaluators for the linearized collision operator's scalar pieces:
 *
 *   - collision_frequency: the multiplicative part nu(|xi|), via an exact
 *     angular reduction to a 1D radial integral solved adaptively;
 *   - kernel_k1: the Gaussian loss kernel (closed form);
 *   - kernel_k2: the gain kernel, reduced to a 2D polar quadrature over the
 *     plane orthogonal to V = eta - xi, with resolution doubling until the
 *     value is stable to a relative tolerance.
 *
 * Reduction used by kernel_k2 (worth recording, since everything downstream
 * leans on it): writing xi = xi_par V^ + xi_perp with s = |xi_perp| and
 * v = |V|, the integrand's exponent over the plane collapses to
 *
 *   C0 - rho^2/2 - s rho cos(phi),   C0 = -|xi|^2/2 - xi_par v/2 - v^2/4,
 *
 * where (rho, phi) are polar coordinates of the in-plane integration
 * variable with phi measured from xi_perp, so the planar integrand is
 * rho * Theta(rho/v) * exp(C0 - rho^2/2 - s rho cos phi).  The total
 * exponent is bounded above by -(v^2 + (|eta|^2-|xi|^2)^2/v^2)/8 <= 0,
 * hence never overflows, and pairs whose bound underflows double precision
 * are short-circuited to zero.
 */
#ifndef KINWAVE_COLLISION_KERNELS_HPP
#define KINWAVE_COLLISION_KERNELS_HPP

#include "kinwave/potential.hpp"

#include <array>
#include <cstdint>

namespace kinwave {

using Vec3 = std::array<double, 3>;

/// Planar quadrature controls for kernel_k2.
struct PlanarQuadSpec {
    int n_radial = 64;      ///< Gauss-Legendre nodes on [0, 8 + |xi_perp|]
    int n_angle = 32;       ///< uniform azimuth nodes (halved internally by symmetry)
    double rel_tol = 1e-6;  ///< doubling stops when the value moves less than this
    int max_doublings = 5;  ///< hard cap; exceeding it marks the pair unconverged
};

/// Resolution actually used for one kernel_k2 evaluation.
struct PlanarQuadUsed {
    int n_radial = 0;
    int n_angle = 0;
    int doublings = 0;
    bool converged = true;
};

/**
 * Collision frequency nu(r) at speed r = |xi|, computed to rel_tol by
 * adaptive quadrature of the radially reduced integral (the angular average
 * of |xi - xi_*|^gamma has the closed form
 * [(r+rho)^{gamma+2} - |r-rho|^{gamma+2}] / ((gamma+2) r rho) ).
 */
double collision_frequency(double r, const KernelParams &params, double rel_tol = 1e-8);

/// Loss kernel k1(xi, eta); finite everywhere (vanishes at xi = eta for gamma > 0).
double kernel_k1(const Vec3 &xi, const Vec3 &eta, const KernelParams &params);

/**
 * Gain kernel k2(xi, eta).  Throws std::domain_error for xi = eta (the
 * kernel has a |eta - xi|^{gamma-2} singularity; the matrix assembly handles
 * the diagonal by sub-cell averaging instead).
 */
double kernel_k2(const Vec3 &xi, const Vec3 &eta, const KernelParams &params,
                 const PlanarQuadSpec &spec = {}, PlanarQuadUsed *used = nullptr);

/// Full off-diagonal kernel k = -k1 + k2 (same singular-argument contract).
double kernel_point(const Vec3 &xi, const Vec3 &eta, const KernelParams &params,
                    const PlanarQuadSpec &spec = {}, PlanarQuadUsed *used = nullptr);

} // namespace kinwave

#endif // KINWAVE_COLLISION_KERNELS_HPP
