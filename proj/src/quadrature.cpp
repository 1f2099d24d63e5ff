/**
 * Implementation of the quadrature building blocks.
 *
 * Gauss-Legendre nodes are found by Newton iteration on the Legendre
 * recurrence with the usual Chebyshev-like initial guesses; double-precision
 * convergence takes 3-4 iterations.
 */
#include "kinwave/quadrature.hpp"

#include <cmath>
#include <map>
#include <mutex>
#include <stdexcept>

namespace kinwave {

namespace {

Quadrature1D build_gauss_legendre(int m) {
    if (m < 1) throw std::invalid_argument("gauss_legendre: need at least one node");
    Quadrature1D q;
    q.nodes.resize(m);
    q.weights.resize(m);
    const double pi = std::acos(-1.0);
    // Nodes come in +/- pairs; solve for the first half.
    for (int i = 0; i < (m + 1) / 2; ++i) {
        double x = std::cos(pi * (i + 0.75) / (m + 0.5));
        double pp = 0.0;
        for (int it = 0; it < 64; ++it) {
            // Legendre recurrence: p2 = P_m(x), pp = P_m'(x).
            double p0 = 1.0, p1 = x;
            for (int k = 2; k <= m; ++k) {
                double p2 = ((2.0 * k - 1.0) * x * p1 - (k - 1.0) * p0) / k;
                p0 = p1;
                p1 = p2;
            }
            pp = m * (x * p1 - p0) / (x * x - 1.0);
            double dx = p1 / pp;
            x -= dx;
            if (std::abs(dx) < 1e-15) break;
        }
        double w = 2.0 / ((1.0 - x * x) * pp * pp);
        q.nodes[i] = -x;
        q.nodes[m - 1 - i] = x;
        q.weights[i] = w;
        q.weights[m - 1 - i] = w;
    }
    if (m % 2 == 1) q.nodes[m / 2] = 0.0; // kill the -0.0 artifact
    return q;
}

std::mutex gl_cache_mutex;
std::map<int, Quadrature1D> gl_cache;

} // namespace

const Quadrature1D &gauss_legendre(int m) {
    std::lock_guard<std::mutex> lock(gl_cache_mutex);
    auto it = gl_cache.find(m);
    if (it == gl_cache.end()) it = gl_cache.emplace(m, build_gauss_legendre(m)).first;
    return it->second;
}

Quadrature1D gauss_legendre_on(int m, double a, double b) {
    const Quadrature1D &ref = gauss_legendre(m);
    Quadrature1D q = ref;
    const double mid = 0.5 * (a + b), half = 0.5 * (b - a);
    for (std::size_t i = 0; i < q.size(); ++i) {
        q.nodes[i] = mid + half * ref.nodes[i];
        q.weights[i] = half * ref.weights[i];
    }
    return q;
}

// ============================================================================
// Adaptive Simpson
// ============================================================================

namespace {

double simpson_step(const std::function<double(double)> &f, double a, double fa,
                    double b, double fb, double m, double fm, double whole,
                    double tol, int depth, int max_depth) {
    double lm = 0.5 * (a + m), rm = 0.5 * (m + b);
    double flm = f(lm), frm = f(rm);
    double left = (m - a) / 6.0 * (fa + 4.0 * flm + fm);
    double right = (b - m) / 6.0 * (fm + 4.0 * frm + fb);
    double err = left + right - whole;
    if (std::abs(err) <= 15.0 * tol || depth >= max_depth) {
        if (depth >= max_depth && std::abs(err) > 15.0 * tol)
            throw std::runtime_error("adaptive_simpson: max recursion depth exhausted");
        return left + right + err / 15.0;
    }
    return simpson_step(f, a, fa, m, fm, lm, flm, left, 0.5 * tol, depth + 1, max_depth) +
           simpson_step(f, m, fm, b, fb, rm, frm, right, 0.5 * tol, depth + 1, max_depth);
}

// Refinement starts from the same 32-panel partition the crude pass used, so
// any feature wide enough to register in the tolerance is also probed here; a
// bump occupying a small fraction of the interval would be invisible to a
// single whole-interval Simpson triple and accepted as zero.
double simpson_interval(const std::function<double(double)> &f, double a, double b,
                        double tol, int max_depth) {
    constexpr int panels = 32;
    const double step = (b - a) / panels;
    double total = 0.0;
    for (int p = 0; p < panels; ++p) {
        double lo = a + p * step, hi = lo + step, m = lo + 0.5 * step;
        double flo = f(lo), fhi = f(hi), fm = f(m);
        double whole = step / 6.0 * (flo + 4.0 * fm + fhi);
        total += simpson_step(f, lo, flo, hi, fhi, m, fm, whole, tol / panels, 0, max_depth);
    }
    return total;
}

} // namespace

double adaptive_simpson(const std::function<double(double)> &f, double a, double b,
                        double rel_tol, double abs_floor,
                        const std::vector<double> &breakpoints, int max_depth) {
    if (!(b > a)) return 0.0;
    // Two passes: a crude whole-interval estimate sets the absolute tolerance,
    // then each smooth piece is refined against it.
    std::vector<double> cuts;
    cuts.push_back(a);
    for (double c : breakpoints)
        if (c > a && c < b) cuts.push_back(c);
    cuts.push_back(b);

    // The crude pass must see the integrand's mass even when it occupies a
    // small fraction of a wide interval (collision-frequency integrands at
    // large radius are exactly that), so use a 32-panel composite rule per
    // piece rather than a single Simpson triple.
    double crude = 0.0;
    for (std::size_t i = 0; i + 1 < cuts.size(); ++i) {
        const double lo = cuts[i], hi = cuts[i + 1], step = (hi - lo) / 32.0;
        for (int p = 0; p < 32; ++p) {
            double a0 = lo + p * step, m = a0 + 0.5 * step;
            crude += step / 6.0 * (f(a0) + 4.0 * f(m) + f(a0 + step));
        }
    }
    double tol = std::max(std::abs(crude) * rel_tol, abs_floor);

    double total = 0.0;
    for (std::size_t i = 0; i + 1 < cuts.size(); ++i) {
        double frac = (cuts[i + 1] - cuts[i]) / (b - a);
        total += simpson_interval(f, cuts[i], cuts[i + 1],
                                  std::max(tol * frac, abs_floor), max_depth);
    }
    return total;
}

// ============================================================================
// Sphere product rule
// ============================================================================

SphereRule sphere_product_rule(int n_polar, int n_azimuth) {
    if (n_polar < 1 || n_azimuth < 1)
        throw std::invalid_argument("sphere_product_rule: node counts must be positive");
    const double pi = std::acos(-1.0);
    const Quadrature1D &gl = gauss_legendre(n_polar);
    SphereRule rule;
    rule.dirs.reserve(static_cast<std::size_t>(n_polar) * n_azimuth);
    rule.weights.reserve(rule.dirs.capacity());
    const double wphi = 2.0 * pi / n_azimuth;
    for (int ip = 0; ip < n_polar; ++ip) {
        double mu = gl.nodes[ip]; // cos(theta)
        double st = std::sqrt(std::max(0.0, 1.0 - mu * mu));
        for (int ia = 0; ia < n_azimuth; ++ia) {
            double phi = wphi * (ia + 0.5);
            rule.dirs.push_back({st * std::cos(phi), st * std::sin(phi), mu});
            rule.weights.push_back(gl.weights[ip] * wphi);
        }
    }
    rule.exact_degree = std::min(2 * n_polar - 1, n_azimuth - 1);
    return rule;
}

} // namespace kinwave
