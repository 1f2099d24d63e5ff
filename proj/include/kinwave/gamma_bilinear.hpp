/**
 * Bilinear collision form of the perturbation equation.
 *
 * The quadratic source in the perturbation equation is
 *
 *     Gamma(f, g) = M^{-1/2} Q(M^{1/2} f, M^{1/2} g),
 *
 * with Q the (symmetrized) bilinear collision integral and M the global
 * Maxwellian.  This module evaluates Gamma on the velocity box by direct
 * summation over node pairs and a collision-sphere rule:
 *
 *   - For each unordered node pair {a, b} and sphere direction, the
 *     pre-collision mass  w * B(|u|, theta) * (F_a G_b + G_a F_b)/2 * h^6
 *     (F = M^{1/2} f, G = M^{1/2} g, u = xi_a - xi_b) is removed from a and b
 *     and deposited at the two post-collision velocities.
 *
 *   - The sphere rule is built per pair in the frame of u: Gauss-Legendre
 *     nodes in |cos theta| per hemisphere times a uniform azimuth.  Aligning
 *     the polar axis with u makes the angular cutoff factor beta(theta) a
 *     per-node constant, so the collision-frequency integral implicit in the
 *     loss term is reproduced to Gauss-Legendre exactness, and the antipodal
 *     symmetry of the integrand halves the work.
 *
 *   - Post-collision velocities land between nodes and are deposited by
 *     trilinear weights plus a three-point axial correction that cancels the
 *     O(h^2) second-moment excess of the trilinear stencil.  Each deposit
 *     then carries exactly the mass, momentum and energy of its event, so the
 *     five collision invariants are conserved up to (i) roundoff and (ii)
 *     deposits whose stencil leaves the node hull and is dropped (zero
 *     extension).  The dropped mass is reported, not hidden: it is the one
 *     honest conservation defect of the scheme, and it shrinks exponentially
 *     as the box grows.
 *
 * The evaluation is serial (every runtime budget in this project is a
 * single-core budget) and dispatches between a scalar reference loop and an
 * AVX2+FMA loop via the global simd path selection, equivalence-tested in
 * the unit suite.
 */
#ifndef KINWAVE_GAMMA_BILINEAR_HPP
#define KINWAVE_GAMMA_BILINEAR_HPP

#include "kinwave/potential.hpp"
#include "kinwave/velocity_grid.hpp"

#include <Eigen/Dense>

#include <cstdint>
#include <vector>

namespace kinwave {

/**
 * Collision-sphere rule: Gauss-Legendre in mu = |cos theta| on (0, 1) per
 * hemisphere, uniform azimuth.  Stored are the upper-hemisphere polar nodes;
 * the full rule is both hemispheres and its weights sum to 4 pi.  Aligned
 * with the relative velocity of a pair, it integrates spherical polynomials
 * of degree <= exact_degree() exactly against the angular cutoff factor.
 */
struct BilinearQuadrature {
    int polar = 0;   ///< Gauss-Legendre nodes per hemisphere
    int azimuth = 0; ///< uniform azimuthal nodes, multiple of 4

    std::vector<double> mu;      ///< polar nodes in (0, 1), ascending
    std::vector<double> w_mu;    ///< Gauss-Legendre weights on (0, 1), sum 1
    std::vector<double> cos_phi; ///< azimuth cosines
    std::vector<double> sin_phi; ///< azimuth sines

    /// Nodes of the full (two-hemisphere) rule.
    int node_count() const { return 2 * polar * azimuth; }
    /// Total solid-angle weight of the full rule; equals 4 pi up to roundoff.
    double weight_sum() const;
    /// Polynomial degree integrated exactly: min(2 polar - 2, azimuth - 1).
    int exact_degree() const;

    /**
     * Build a rule.  Throws std::invalid_argument for polar < 2 or azimuth
     * not a positive multiple of 4 (the vector path consumes azimuth nodes
     * four at a time).  The default production rule is make(4, 12), a
     * 96-direction rule.
     */
    static BilinearQuadrature make(int polar, int azimuth);
};

struct GammaOptions {
    /**
     * Pair screening threshold, relative to max|F| * max|G|: node pairs with
     * |F_a G_b + G_a F_b|/2 below cutoff * scale are skipped.  0 disables
     * screening (every pair is summed).  Screening is a quadrature
     * sparsification for Maxwellian-damped inputs; the skipped mass is
     * reported so callers can verify it is negligible for their tolerance.
     */
    double pair_cutoff = 0.0;
};

struct GammaResult {
    Eigen::VectorXd value; ///< Gamma(f, g) nodal values

    double total_mass = 0.0;   ///< sum of |event mass| over retained events
    double clipped_mass = 0.0; ///< |event mass| of deposits dropped at the hull
    double skipped_mass = 0.0; ///< sum of |screened pair weight| (diagnostic)
    std::int64_t pair_count = 0;    ///< pairs past the screen
    std::int64_t repair_misses = 0; ///< deposits whose moment repair had no room

    /// Dropped-deposit mass as a fraction of all event mass (0 when nothing
    /// reached the hull); the scale of the conservation defect.
    double clipped_fraction() const {
        return total_mass > 0.0 ? clipped_mass / total_mass : 0.0;
    }
};

/**
 * Evaluate the symmetrized bilinear form Gamma(f, g) = Gamma(g, f) on the
 * grid.  f and g are perturbation-picture nodal vectors (the M^{1/2}
 * weighting happens internally).  Throws std::invalid_argument on size
 * mismatch or an empty rule.
 */
GammaResult gamma_bilinear(const VelocityGrid &grid, const KernelParams &params,
                           const Eigen::VectorXd &f, const Eigen::VectorXd &g,
                           const BilinearQuadrature &quad,
                           const GammaOptions &opts = {});

} // namespace kinwave

#endif // KINWAVE_GAMMA_BILINEAR_HPP
