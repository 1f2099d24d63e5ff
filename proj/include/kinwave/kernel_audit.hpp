/**
 * Numerical audits of the pointwise kernel bounds.
 *
 * The reduced kernel k(xi, eta) of the smoothing part is controlled by two
 * explicit envelopes built from the same Gaussian factor
 *
 *   G(xi, eta) = exp( -(q'/8) [ (|eta|^2 - |xi|^2)^2 / |eta - xi|^2
 *                               + |eta - xi|^2 ] ),     0 < q' < 1,
 *
 * namely a value envelope
 *
 *   h0 = G / ( |eta - xi| (1 + |xi| + |eta|)^{1 - gamma} ),
 *
 * with |k| <= C h0, and a slope envelope h1 = h0 (1 + |xi_perp|) / |eta - xi|
 * (xi_perp the component of xi orthogonal to eta - xi) dominating every first
 * derivative of k.  Neither constant is available in closed form, so the
 * audits fit them: draw a large sample of pairs, take the sup of the ratio,
 * and report where it was attained.  Derivatives are sampled by central
 * differences away from the ridge eta = xi (the FD step cannot straddle the
 * singularity; the ridge scaling itself is exercised by the value audit,
 * whose sample deliberately includes near-coincident pairs).
 *
 * Two integral audits complete the picture: the weighted row integral
 * \int |k(xi,eta)| <eta>^tau d eta, whose large-|xi| decay exponent must come
 * out near tau + gamma - 2, and the convolution bound
 *
 *   \int |xi-eta|^s exp(-a|xi-eta|^2 - b (|eta|^2-|xi|^2)^2/|eta-xi|^2) d eta
 *     <= c (1 + |xi|)^{-1},
 *
 * which the mixture estimates lean on.  The latter reduces exactly to a 1D
 * radial integral (the angular part is an erf difference), so it doubles as
 * an oracle: at xi = 0 and s = -1 the whole integral is 2 pi / (a + b).
 */
#ifndef KINWAVE_KERNEL_AUDIT_HPP
#define KINWAVE_KERNEL_AUDIT_HPP

#include "kinwave/collision_kernels.hpp"
#include "kinwave/potential.hpp"

#include <cstddef>
#include <cstdint>

namespace kinwave {

double grad_envelope_h0(const Vec3 &xi, const Vec3 &eta, const KernelParams &params);
double grad_envelope_h1(const Vec3 &xi, const Vec3 &eta, const KernelParams &params);

/// Sup-ratio study of one quantity against its envelope.
struct EnvelopeAudit {
    double sup_ratio = 0.0;   ///< fitted constant: max |quantity| / envelope
    double mean_ratio = 0.0;
    std::size_t samples = 0;  ///< pairs actually evaluated
    std::size_t skipped = 0;  ///< pairs excluded (underflowed envelope / ridge)
    Vec3 arg_xi{}, arg_eta{}; ///< where the sup was attained
};

struct RowIntegralAudit {
    double tau = 0.0;
    double fitted_exponent = 0.0;   ///< slope of log integral vs log <xi>
    double expected_exponent = 0.0; ///< tau + gamma - 2
    double fit_rms = 0.0;
};

struct CaflischAudit {
    double varsigma = 0.0, a = 0.0, b = 0.0;
    double sup_weighted = 0.0;  ///< max of integral * (1 + |xi|) over the ladder
    double fitted_slope = 0.0;  ///< log-log slope vs (1 + |xi|), ideally -1
};

struct KernelBoundsReport {
    EnvelopeAudit value;     ///< |k| against h0
    EnvelopeAudit slope_xi;  ///< FD gradient in xi against h1
    EnvelopeAudit slope_eta; ///< FD gradient in eta against h1
    RowIntegralAudit row;
    CaflischAudit caflisch;
};

/// Weighted absolute row integral \int |k(xi,eta)| <eta>^tau d eta.  The
/// kernel depends on the direction of eta - xi only through its polar angle
/// against xi, so the integral is 2D; radially symmetric in xi.
double row_integral(double xi_mag, double tau, const KernelParams &params);

/// Fit the large-|xi| decay exponent of the row integral at the given tau.
RowIntegralAudit fit_row_exponent(const KernelParams &params, double tau);

/// The convolution integral above for |xi| = xi_mag (radially symmetric).
double caflisch_integral(double xi_mag, double varsigma, double a, double b);

/// Ladder study of caflisch_integral over |xi| <= 15.
CaflischAudit audit_caflisch(double varsigma, double a, double b);

/// Full audit: value + slope envelopes over `sample_size` random pairs, the
/// tau = 0 row-integral fit, and the Caflisch ladder at s = -1,
/// a = b = q'/8.  Deterministic for a fixed seed.
KernelBoundsReport audit_kernel_bounds(const KernelParams &params, std::size_t sample_size,
                                       std::uint64_t seed = 9176);

} // namespace kinwave

#endif // KINWAVE_KERNEL_AUDIT_HPP
