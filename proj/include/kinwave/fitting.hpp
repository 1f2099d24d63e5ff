/**
 * Small least-squares fits shared by the decay and scaling audits.
 *
 * Everything here is one-dimensional ordinary least squares.  The audits fit
 * at most a dozen points, so there is no weighting, no outlier handling, and
 * no covariance output — just slope, intercept, and the rms misfit, which the
 * reports carry alongside every fitted exponent so a bad window is visible in
 * the numbers rather than silently absorbed.
 */
#ifndef KINWAVE_FITTING_HPP
#define KINWAVE_FITTING_HPP

#include <vector>

namespace kinwave {

struct LineFit {
    double slope = 0.0;
    double intercept = 0.0;
    double rms = 0.0; ///< root-mean-square residual of the fit
    int points = 0;
};

/// Ordinary least squares y ~ slope * x + intercept.  Throws
/// std::invalid_argument for fewer than two points, mismatched lengths, or a
/// degenerate abscissa (all x equal).
LineFit fit_line(const std::vector<double> &x, const std::vector<double> &y);

/// Log-log power-law fit y ~ C * x^slope.  Requires strictly positive x and
/// y (throws std::invalid_argument otherwise); the returned slope is the
/// exponent and rms is measured in log space.
LineFit fit_power_law(const std::vector<double> &x, const std::vector<double> &y);

} // namespace kinwave

#endif // KINWAVE_FITTING_HPP
