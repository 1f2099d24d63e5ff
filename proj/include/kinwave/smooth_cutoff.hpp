/**
 * C^2 polynomial cutoff profiles shared by the frequency-space splitting and
 * the space-time weight construction.
 *
 * Both are built from the quintic smoothstep S(u) = u^3 (10 - 15 u + 6 u^2),
 * which has S(0)=0, S(1)=1 and vanishing first and second derivatives at both
 * ends, so every profile below is C^2 and monotone on its transition band.
 */
#ifndef KINWAVE_SMOOTH_CUTOFF_HPP
#define KINWAVE_SMOOTH_CUTOFF_HPP

namespace kinwave {

/// Quintic smoothstep on [0,1]; clamped outside.
double smoothstep_c2(double u);

/**
 * Low-frequency window chi_delta(s): identically 1 for s <= delta/2, 0 for
 * s >= delta, C^2 monotone in between.  Used to isolate the small-frequency
 * fluid block of the mode operator.
 */
double low_frequency_window(double s, double delta);

/**
 * Non-increasing unit window chi(s): 1 for s <= 1, 0 for s >= 2.  The
 * space-time weight uses it with stretched arguments.
 */
double unit_window(double s);

} // namespace kinwave

#endif // KINWAVE_SMOOTH_CUTOFF_HPP
