/**
 * Interaction-law parameters for the cutoff hard-potential collision model.
 *
 * The collision kernel is B(|V|, theta) = |V|^gamma * beta(theta) with
 * 0 <= gamma <= 1 and an angular factor beta satisfying the cutoff bound
 * 0 < beta(theta) <= C |cos theta|.  The shipped angular law is
 * beta(theta) = |cos theta| (gamma = 1 then being the hard-sphere case);
 * gamma_0 denotes the angular mass integral of beta over the unit sphere.
 */
#ifndef KINWAVE_POTENTIAL_HPP
#define KINWAVE_POTENTIAL_HPP

#include <cstdint>

namespace kinwave {

enum class AngularLaw : std::uint32_t {
    AbsCos = 1, ///< beta(theta) = |cos theta|
};

struct KernelParams {
    double gamma = 0.5;          ///< velocity exponent, [0,1]
    AngularLaw beta = AngularLaw::AbsCos;
    double kappa = 0.5;          ///< exponent split for the Gaussian-form bound
    double q_prime = 0.75;       ///< envelope exponent factor, (0,1)

    /// Angular mass integral of beta over S^2 (2 pi for |cos theta|).
    double gamma0() const;

    /// Angular factor beta(theta) itself.
    double beta_of(double theta) const;

    /// Stable id of the angular law for cache headers.
    std::uint32_t beta_id() const { return static_cast<std::uint32_t>(beta); }

    /// Throws std::invalid_argument (field named) on out-of-range values.
    void validate() const;
};

/**
 * In-plane angular weight of the reduced off-diagonal kernel,
 *
 *   Theta(r) = (1+r^2)^{(gamma-1)/2} sqrt(1+r^2)
 *              * [ beta(arctan r) + beta(pi/2 - arctan r) / r ],
 *
 * where r = |V_perp| / |V_par|.  For beta = |cos theta| this collapses to
 * 2 (1+r^2)^{(gamma-1)/2}; in particular it is constant in r at gamma = 1,
 * which is what makes the hard-sphere planar integral a pure Gaussian one.
 * The r -> 0 limit is finite (= 2) and handled explicitly.
 */
double in_plane_weight(double r, const KernelParams &params);

} // namespace kinwave

#endif // KINWAVE_POTENTIAL_HPP
