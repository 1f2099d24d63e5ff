#include "kinwave/fitting.hpp"

#include "kinwave/common.hpp"

#include <cmath>
#include <stdexcept>

namespace kinwave {

LineFit fit_line(const std::vector<double> &x, const std::vector<double> &y) {
    if (x.size() != y.size())
        throw std::invalid_argument("fit_line: abscissa and ordinate lengths differ");
    if (x.size() < 2)
        throw std::invalid_argument("fit_line: need at least two points");
    const double n = double(x.size());
    double sx = 0.0, sy = 0.0, sxx = 0.0, sxy = 0.0;
    for (std::size_t i = 0; i < x.size(); ++i) {
        sx += x[i];
        sy += y[i];
        sxx += x[i] * x[i];
        sxy += x[i] * y[i];
    }
    const double det = n * sxx - sx * sx;
    // Degeneracy scale: det is n^2 var(x), compare against n^2 mean(x^2).
    if (!(det > 1e-14 * n * sxx) || !std::isfinite(det))
        throw std::invalid_argument("fit_line: degenerate abscissa (no spread in x)");
    LineFit fit;
    fit.slope = (n * sxy - sx * sy) / det;
    fit.intercept = (sy - fit.slope * sx) / n;
    double rss = 0.0;
    for (std::size_t i = 0; i < x.size(); ++i) rss += sq(y[i] - (fit.intercept + fit.slope * x[i]));
    fit.rms = std::sqrt(rss / n);
    fit.points = int(x.size());
    return fit;
}

LineFit fit_power_law(const std::vector<double> &x, const std::vector<double> &y) {
    if (x.size() != y.size())
        throw std::invalid_argument("fit_power_law: abscissa and ordinate lengths differ");
    std::vector<double> lx(x.size()), ly(y.size());
    for (std::size_t i = 0; i < x.size(); ++i) {
        if (!(x[i] > 0.0) || !(y[i] > 0.0))
            throw std::invalid_argument("fit_power_law: requires strictly positive data");
        lx[i] = std::log(x[i]);
        ly[i] = std::log(y[i]);
    }
    return fit_line(lx, ly);
}

} // namespace kinwave
