/**
 * Numerical auditor for space-time convolution estimates between closed-form
 * envelopes (envelopes.hpp).  The object computed everywhere is
 *
 *   conv(E1, E2)(x, t) = int_0^t int_{R^3} E1(|x-y|, t-tau) E2(|y|, tau) dy dtau,
 *
 * i.e. E1 plays the propagator role (evaluated at the elapsed time) and E2 the
 * source role.  Both factors are radial in space, so the inner integral
 * reduces exactly to one dimension: with r = |x| and
 * H(w) = int_0^w u E1(u, T) du,
 *
 *   int_{R^3} E1(|x-y|, T) E2(|y|, tau) dy
 *     = (2 pi / r) int_0^inf s E2(s, tau) [H(r+s) - H(|r-s|)] ds,
 *
 * which the implementation evaluates from a cumulative table of H per time
 * node (graded against ridges and cone gates, cubic-Hermite interpolated),
 * composite Gauss-Legendre panels in s aligned to the factors' ridge/gate
 * radii, and composite panels in tau.  The radial domain is truncated at a
 * generous multiple of the fastest ridge radius plus many profile widths; a
 * domain-extension probe measures the sensitivity and raises a warning when
 * it exceeds 1%.
 *
 * Audits compare conv(E1,E2) against a claimed bounding sum of envelopes on a
 * lattice of (x, t) chosen to straddle every qualitative region (interior,
 * sound ridge +- one width, far field) and report the sup of value/bound.
 * Acceptance is property-based: ratios must be finite and their growth must
 * have stopped or be measurably decelerating over the last decade of t.  No
 * external constant is assumed for the bounds; the empirical sup-ratio is
 * the deliverable.
 */
#ifndef KINWAVE_CONVOLVE_HPP
#define KINWAVE_CONVOLVE_HPP

#include <string>
#include <vector>

#include "kinwave/envelopes.hpp"

namespace kinwave {

/**
 * Quadrature/truncation densities for the convolution engine.  The defaults
 * are the audited baseline; doubled() doubles every panel count (the
 * refinement-stability checks require value changes <= 1% under doubling).
 */
struct ConvQuadrature {
    int time_panels = 24;        ///< composite panels on [0, t]
    int time_gl = 6;             ///< Gauss-Legendre nodes per time panel
    int radial_subdiv = 40;      ///< max s-panel width = R_max / radial_subdiv
    int radial_gl = 6;           ///< nodes per s-panel
    int table_base_cells = 1500; ///< uniform H-table resolution over [0, U_max]
    int table_per_sigma = 8;     ///< extra H-table cells per profile width near ridges
    int table_gl = 5;            ///< nodes per H-table cell (cumulative rule)
    /// Truncation: R_max = range_scale * (r + v_ridge t + range_pad sqrt(1+t) + range_extra).
    double range_pad = 30.0;
    double range_extra = 10.0;
    double range_scale = 1.0; ///< domain-extension probes raise this (with matched densities)

    ConvQuadrature doubled() const;
};

/// conv(E1, E2)(x_mag, t) as defined above.  t <= 0 returns 0 (empty time
/// interval).  Pure and deterministic for fixed quadrature parameters.
double conv_envelope(const Envelope &e1, const Envelope &e2, double x_mag, double t,
                     const ConvQuadrature &quad = {});

struct ConvPoint {
    double x_mag = 0.0;
    double t = 0.0;
    double value = 0.0; ///< conv(E1,E2)(x,t)
    double bound = 0.0; ///< claimed envelope sum at (x,t)
    double ratio = 0.0; ///< value / bound
};

struct ConvolutionReport {
    std::string name;
    std::string lhs_legend; ///< "E1 * E2" in closed form
    std::string rhs_legend; ///< claimed bound in closed form
    std::vector<ConvPoint> points;
    double sup_ratio = 0.0;
    /// The per-t sup of ratio is still accelerating over the last decade of
    /// t: across the decade split at its geometric midpoint, the second-half
    /// growth factor neither dropped below 1.05 nor fell 5% under the
    /// first-half factor.  Saturating ratios decelerate measurably on this
    /// split; a power-law divergence keeps both factors equal and trips it.
    /// Flagged reports need human review rather than a pass stamp.
    bool trend_flagged = false;
    /// Extending the radial truncation by 1.5x (at matched node density)
    /// moved a probed value by more than 1%.
    bool accuracy_warning = false;
    double tail_fraction = 0.0; ///< measured extension sensitivity behind the warning
    bool values_finite = true;  ///< every value/bound/ratio finite and bound > 0
};

/// t = 10^{k/6}, k = 0..12: thirteen log-spaced times on [1, 100].
std::vector<double> audit_time_lattice();

/**
 * Radii probing every proof region at time t: interior (0, 0.5t, fixed radii
 * 1/5/20), the unit-speed ladder {t - sqrt(1+t), t, t + sqrt(1+t), 2t}, and
 * the same ladder around the sound radius c t, c = sqrt(5/3).  Negative
 * entries clamp to 0; the list returns sorted and deduplicated.
 */
std::vector<double> audit_radius_lattice(double t);

/**
 * Evaluate conv(E1,E2) over the audit lattice and compare with the claimed
 * bound (a sum of envelopes, evaluated at the same (x,t)).  threads = 0 uses
 * hardware concurrency; results do not depend on the thread count.  Throws
 * std::invalid_argument for an empty bound or a non-ascending/non-positive
 * time lattice.
 */
ConvolutionReport convolution_audit(const std::string &name, const Envelope &e1,
                                    const Envelope &e2, const std::vector<Envelope> &bound,
                                    const std::vector<double> &t_lattice,
                                    const ConvQuadrature &quad = {}, int threads = 0);

/**
 * The seven bilinear wave-interaction estimates behind the nonlinear
 * iteration, at the default exponents (interior/ridge profile order m = 3,
 * velocity-decay ladder k = 3, soft-potential exponent gamma = 0.5, hence
 * exponential-tail spatial order theta1/(1-gamma) = 5.25, and unit rate for
 * exponential-in-time factors).  Five couple interior humps and sound-speed
 * ridges pairwise (the mixed ones bounded by an interior + weaker-ridge sum);
 * two convolve an exponentially-decaying spatial tail against each fluid
 * shape and must preserve it.
 */
std::vector<ConvolutionReport> interaction_suite(const ConvQuadrature &quad = {},
                                                 int threads = 0);

/**
 * Two source-preservation estimates: a diffusion profile (time power 3,
 * order 3) and a sound-speed ridge (time power 2, order 2) each convolved
 * against an exponentially-decaying-in-time, algebraically-localized source
 * (spatial orders 6 and 5 respectively) reproduce their own shape.
 */
std::vector<ConvolutionReport> source_preservation_suite(const ConvQuadrature &quad = {},
                                                         int threads = 0);

} // namespace kinwave

#endif // KINWAVE_CONVOLVE_HPP
