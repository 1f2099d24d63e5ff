/**
 * Closed-form space-time decay profiles.
 *
 * Everything here is exact arithmetic on a handful of shapes that recur in
 * pointwise decay estimates for dispersive fluid fields:
 *
 *   - the algebraic bump  B_m(z,t) = (1 + z^2/(1+t))^{-m}, a wave packet of
 *     width sqrt(1+t) centered at z = 0;
 *   - diffusion profiles       (1+t)^{-a} B_b(|x|, t)      (hump at the origin),
 *   - Huygens profiles         (1+t)^{-a} B_b(|x|-c t, t)  (ridge on |x| = c t),
 *   - static-in-shape kernels  e^{-a t}(1+|x|)^{-b}  and  (1+t)^{-a}(1+|x|)^{-b},
 *
 * optionally cut off outside a cone |x| <= gate_speed * t.  phi_structure()
 * combines three of these into the reference envelope carried by the fluid
 * part of the linearized evolution: an interior sound-cone hump of order 3/2,
 * a free hump of order m, and a ridge of order m moving at the sound speed
 * sqrt(5/3), with the ridge term one half-power of t smaller.
 *
 * These are evaluation-only types: no quadrature, no state.  The convolution
 * auditor (convolve.hpp) integrates products of them.
 */
#ifndef KINWAVE_ENVELOPES_HPP
#define KINWAVE_ENVELOPES_HPP

#include <string>

namespace kinwave {

/**
 * B_m(z,t) = (1 + z^2/(1+t))^{-m}.
 *
 * Pre: t >= 0 and m > 0 (not checked; this sits in quadrature inner loops).
 * Useful anchors: B_m(0,t) = 1, B_m(sqrt(1+t), t) = 2^{-m}.
 */
double b_profile(double z, double t, double m);

/**
 * Three-term fluid envelope at radius x_mag >= 0, time t >= 0:
 *
 *   1_{x <= c t} (1+t)^{-3/2} B_{3/2}(x, t)
 *               + (1+t)^{-3/2} B_m(x, t)
 *               + (1+t)^{-2}   B_m(x - c t, t),     c = sqrt(5/3).
 *
 * m is the caller's profile order for the sharp terms ("any large m"; the
 * audits default to m = 3).  Strictly positive for all admissible inputs.
 */
double phi_structure(double t, double x_mag, double m);

/**
 * One closed-form profile on (x_mag, t), radial in space.
 *
 * kind selects the shape (a = time_power, b = profile_order, c = speed):
 *
 *   Diffusion   (1+t)^{-a} B_b(x, t)
 *   Huygens     (1+t)^{-a} B_b(x - c t, t)
 *   StaticExp   e^{-a t} (1 + x)^{-b}
 *   StaticAlg   (1+t)^{-a} (1 + x)^{-b}
 *
 * With cone_gated set, the value is multiplied by 1_{x <= gate_speed * t}.
 * Envelopes are positive wherever the gate is open, and evaluable at every
 * x_mag >= 0, t >= 0.
 */
struct Envelope {
    enum class Kind { Diffusion, Huygens, StaticExp, StaticAlg };

    Kind kind = Kind::Diffusion;
    double time_power = 0.0;    ///< a above
    double profile_order = 0.0; ///< b above
    double speed = 0.0;         ///< c above; meaningful for Huygens only
    bool cone_gated = false;
    double gate_speed = 0.0;

    double eval(double x_mag, double t) const;

    /// Copy of this envelope with the cone indicator switched on.
    Envelope gated(double cone_speed) const;

    static Envelope diffusion(double a, double b);
    static Envelope huygens(double a, double b, double c);
    static Envelope static_exp(double a, double b);
    static Envelope static_alg(double a, double b);

    /// Compact human-readable form, e.g. "(1+t)^-2 B_3(|x|-1.291t)".
    std::string describe() const;
};

} // namespace kinwave

#endif // KINWAVE_ENVELOPES_HPP
