#include "kinwave/kernel_audit.hpp"

#include "kinwave/collision_kernels.hpp"
#include "kinwave/quadrature.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <random>
#include <stdexcept>
#include <vector>

namespace kinwave {

namespace {

double norm3(const Vec3 &v) {
    return std::sqrt(v[0] * v[0] + v[1] * v[1] + v[2] * v[2]);
}

/// Shared Gaussian factor of both envelopes; +inf at eta == xi so ratios
/// against it collapse to zero rather than dividing by zero.
double envelope_core(const Vec3 &xi, const Vec3 &eta, const KernelParams &params,
                     double &d_out, double &alg_out) {
    const double dx = eta[0] - xi[0], dy = eta[1] - xi[1], dz = eta[2] - xi[2];
    const double d2 = dx * dx + dy * dy + dz * dz;
    const double d = std::sqrt(d2);
    d_out = d;
    if (d == 0.0) {
        alg_out = 1.0;
        return std::numeric_limits<double>::infinity();
    }
    const double nxi = norm3(xi), neta = norm3(eta);
    // Factored difference of squares: exactly antisymmetric under argument
    // swap even with FMA contraction, and better conditioned near |xi|=|eta|.
    const double diff2 = (nxi - neta) * (nxi + neta);
    const double expo = (params.q_prime / 8.0) * (diff2 * diff2 / d2 + d2);
    // Group the sum so evaluation is bitwise symmetric under argument swap.
    alg_out = std::pow(1.0 + (nxi + neta), 1.0 - params.gamma);
    return std::exp(-expo);
}

} // namespace

double grad_envelope_h0(const Vec3 &xi, const Vec3 &eta, const KernelParams &params) {
    double d = 0.0, alg = 1.0;
    const double core = envelope_core(xi, eta, params, d, alg);
    if (!std::isfinite(core)) return core;
    return core / (d * alg);
}

double grad_envelope_h1(const Vec3 &xi, const Vec3 &eta, const KernelParams &params) {
    double d = 0.0, alg = 1.0;
    const double core = envelope_core(xi, eta, params, d, alg);
    if (!std::isfinite(core)) return core;
    // |xi_perp| = |xi x (eta - xi)| / |eta - xi|
    const double dx = eta[0] - xi[0], dy = eta[1] - xi[1], dz = eta[2] - xi[2];
    const double cx = xi[1] * dz - xi[2] * dy;
    const double cy = xi[2] * dx - xi[0] * dz;
    const double cz = xi[0] * dy - xi[1] * dx;
    const double perp = std::sqrt(cx * cx + cy * cy + cz * cz) / d;
    return (1.0 + perp) / (d * d) * core / alg;
}

// ============================================================================
// Row integrals
// ============================================================================

double row_integral(double xi_mag, double tau, const KernelParams &params) {
    // Centered spherical coordinates absorb the 1/|eta - xi| singularity into
    // the v^2 Jacobian, and the azimuth integrates to 2 pi outright.  The
    // polar integral needs care: at large |xi| the Gaussian factor pins
    // cos(theta) to a ridge of width ~ 1/|xi|, so substitute
    // u = 2 |xi| mu + v (the Gaussian argument itself); the ridge then has
    // fixed width and a moderate Gauss-Legendre rule resolves it.
    const double PI = std::acos(-1.0);
    const Vec3 xi{0.0, 0.0, xi_mag};
    const Quadrature1D radial = gauss_legendre_on(56, 0.0, 14.0);
    double total = 0.0;
    for (std::size_t ir = 0; ir < radial.size(); ++ir) {
        const double v = radial.nodes[ir];
        double polar = 0.0;
        if (xi_mag < 0.5) {
            // Ridge is wide here; integrate mu directly.
            const Quadrature1D mu_rule = gauss_legendre_on(32, -1.0, 1.0);
            for (std::size_t im = 0; im < mu_rule.size(); ++im) {
                const double mu = mu_rule.nodes[im];
                const double st = std::sqrt(std::max(0.0, 1.0 - mu * mu));
                const Vec3 eta{v * st, 0.0, xi_mag + v * mu};
                const double neta2 = eta[0] * eta[0] + eta[2] * eta[2];
                polar += mu_rule.weights[im] * std::abs(kernel_point(xi, eta, params)) *
                         std::pow(1.0 + neta2, 0.5 * tau);
            }
        } else {
            const double lo = std::max(v - 2.0 * xi_mag, -23.0);
            const double hi = std::min(v + 2.0 * xi_mag, 23.0);
            if (hi <= lo) continue; // whole Gaussian band out of range
            const Quadrature1D u_rule = gauss_legendre_on(48, lo, hi);
            for (std::size_t iu = 0; iu < u_rule.size(); ++iu) {
                const double u = u_rule.nodes[iu];
                const double mu = std::clamp((u - v) / (2.0 * xi_mag), -1.0, 1.0);
                const double st = std::sqrt(std::max(0.0, 1.0 - mu * mu));
                const Vec3 eta{v * st, 0.0, xi_mag + v * mu};
                const double neta2 = eta[0] * eta[0] + eta[2] * eta[2];
                polar += u_rule.weights[iu] / (2.0 * xi_mag) *
                         std::abs(kernel_point(xi, eta, params)) *
                         std::pow(1.0 + neta2, 0.5 * tau);
            }
        }
        total += radial.weights[ir] * v * v * polar;
    }
    return 2.0 * PI * total;
}

RowIntegralAudit fit_row_exponent(const KernelParams &params, double tau) {
    // Large-|xi| ladder: the advertised decay is asymptotic, so the fit
    // window starts past the thermal core.
    const std::vector<double> ladder{4.0, 6.0, 8.0, 11.0, 14.0, 18.0};
    std::vector<double> lx, ly;
    for (double r : ladder) {
        const double val = row_integral(r, tau, params);
        lx.push_back(0.5 * std::log(1.0 + r * r));
        ly.push_back(std::log(val));
    }
    const std::size_t m = lx.size();
    double sx = 0.0, sy = 0.0, sxx = 0.0, sxy = 0.0;
    for (std::size_t i = 0; i < m; ++i) {
        sx += lx[i];
        sy += ly[i];
        sxx += lx[i] * lx[i];
        sxy += lx[i] * ly[i];
    }
    const double slope = (double(m) * sxy - sx * sy) / (double(m) * sxx - sx * sx);
    const double icept = (sy - slope * sx) / double(m);
    double rss = 0.0;
    for (std::size_t i = 0; i < m; ++i) {
        const double e = ly[i] - (icept + slope * lx[i]);
        rss += e * e;
    }
    RowIntegralAudit out;
    out.tau = tau;
    out.fitted_exponent = slope;
    out.expected_exponent = tau + params.gamma - 2.0;
    out.fit_rms = std::sqrt(rss / double(m));
    return out;
}

// ============================================================================
// Caflisch-type convolution integral
// ============================================================================

double caflisch_integral(double xi_mag, double varsigma, double a, double b) {
    if (varsigma <= -3.0)
        throw std::invalid_argument("caflisch_integral: varsigma must exceed -3");
    if (a <= 0.0 || b <= 0.0)
        throw std::invalid_argument("caflisch_integral: a, b must be positive");
    const double PI = std::acos(-1.0);
    const double vmax = std::sqrt(60.0 / a);
    if (xi_mag < 1e-12) {
        // |eta|^2 - |xi|^2 degenerates to v^2: pure radial Gaussian.
        auto f = [&](double v) {
            return 4.0 * PI * std::pow(v, varsigma + 2.0) *
                   std::exp(-(a + b) * v * v);
        };
        return adaptive_simpson(f, 0.0, vmax, 1e-9);
    }
    // With eta = xi + v w, (|eta|^2 - |xi|^2)/v = 2 xi.w + v, so the angular
    // integral is a 1D Gaussian over u = 2|xi| mu + v: an erf difference.
    const double sb = std::sqrt(b);
    const double pref = PI / xi_mag * std::sqrt(PI) / (2.0 * sb);
    auto f = [&](double v) {
        const double ang = pref * (std::erf(sb * (v + 2.0 * xi_mag)) -
                                   std::erf(sb * (v - 2.0 * xi_mag)));
        return std::pow(v, varsigma + 2.0) * std::exp(-a * v * v) * ang;
    };
    return adaptive_simpson(f, 0.0, vmax, 1e-9);
}

CaflischAudit audit_caflisch(double varsigma, double a, double b) {
    CaflischAudit out;
    out.varsigma = varsigma;
    out.a = a;
    out.b = b;
    const std::vector<double> ladder{0.0, 0.5, 1.0, 1.5, 2.0,  3.0,  4.0, 5.0,
                                     6.0, 7.0, 8.0, 9.0, 10.0, 11.5, 13.0, 15.0};
    std::vector<double> lx, ly;
    for (double r : ladder) {
        const double val = caflisch_integral(r, varsigma, a, b);
        out.sup_weighted = std::max(out.sup_weighted, val * (1.0 + r));
        if (r >= 3.0) {
            lx.push_back(std::log(1.0 + r));
            ly.push_back(std::log(val));
        }
    }
    const std::size_t m = lx.size();
    double sx = 0.0, sy = 0.0, sxx = 0.0, sxy = 0.0;
    for (std::size_t i = 0; i < m; ++i) {
        sx += lx[i];
        sy += ly[i];
        sxx += lx[i] * lx[i];
        sxy += lx[i] * ly[i];
    }
    out.fitted_slope = (double(m) * sxy - sx * sy) / (double(m) * sxx - sx * sx);
    return out;
}

// ============================================================================
// Full audit
// ============================================================================

KernelBoundsReport audit_kernel_bounds(const KernelParams &params, std::size_t sample_size,
                                       std::uint64_t seed) {
    params.validate();
    KernelBoundsReport report;
    std::mt19937_64 rng(seed);
    std::normal_distribution<double> gauss(0.0, 2.2);
    std::uniform_real_distribution<double> unit(0.0, 1.0);

    auto track = [](EnvelopeAudit &audit, double ratio, const Vec3 &xi, const Vec3 &eta) {
        audit.mean_ratio += ratio;
        ++audit.samples;
        if (ratio > audit.sup_ratio) {
            audit.sup_ratio = ratio;
            audit.arg_xi = xi;
            audit.arg_eta = eta;
        }
    };

    for (std::size_t s = 0; s < sample_size; ++s) {
        Vec3 xi{gauss(rng), gauss(rng), gauss(rng)};
        Vec3 eta;
        if (unit(rng) < 0.25) {
            // Stress the ridge: eta close to xi at log-uniform distances.
            const double r = std::pow(10.0, -3.0 * unit(rng));
            const double mu = 2.0 * unit(rng) - 1.0, ph = 2.0 * std::acos(-1.0) * unit(rng);
            const double st = std::sqrt(std::max(0.0, 1.0 - mu * mu));
            eta = Vec3{xi[0] + r * st * std::cos(ph), xi[1] + r * st * std::sin(ph),
                       xi[2] + r * mu};
        } else {
            eta = Vec3{gauss(rng), gauss(rng), gauss(rng)};
        }
        const double h0 = grad_envelope_h0(xi, eta, params);
        if (!std::isfinite(h0) || h0 < 1e-280) {
            ++report.value.skipped;
            continue;
        }
        const double k = kernel_point(xi, eta, params);
        track(report.value, std::abs(k) / h0, xi, eta);

        // Slope audit on a quarter of the pairs, away from the ridge (the
        // difference stencil must not straddle the singularity).
        if (s % 4 != 0) continue;
        const double d = std::sqrt((eta[0] - xi[0]) * (eta[0] - xi[0]) +
                                   (eta[1] - xi[1]) * (eta[1] - xi[1]) +
                                   (eta[2] - xi[2]) * (eta[2] - xi[2]));
        if (d < 1e-2) {
            ++report.slope_xi.skipped;
            ++report.slope_eta.skipped;
            continue;
        }
        const double h1 = grad_envelope_h1(xi, eta, params);
        const double hfd = std::min(1e-3, d / 20.0);
        double grad2_xi = 0.0, grad2_eta = 0.0;
        for (int c = 0; c < 3; ++c) {
            Vec3 xp = xi, xm = xi, ep = eta, em = eta;
            xp[std::size_t(c)] += hfd;
            xm[std::size_t(c)] -= hfd;
            ep[std::size_t(c)] += hfd;
            em[std::size_t(c)] -= hfd;
            const double gx =
                (kernel_point(xp, eta, params) - kernel_point(xm, eta, params)) / (2.0 * hfd);
            const double ge =
                (kernel_point(xi, ep, params) - kernel_point(xi, em, params)) / (2.0 * hfd);
            grad2_xi += gx * gx;
            grad2_eta += ge * ge;
        }
        track(report.slope_xi, std::sqrt(grad2_xi) / h1, xi, eta);
        track(report.slope_eta, std::sqrt(grad2_eta) / h1, xi, eta);
    }
    if (report.value.samples > 0) report.value.mean_ratio /= double(report.value.samples);
    if (report.slope_xi.samples > 0) report.slope_xi.mean_ratio /= double(report.slope_xi.samples);
    if (report.slope_eta.samples > 0)
        report.slope_eta.mean_ratio /= double(report.slope_eta.samples);

    report.row = fit_row_exponent(params, 0.0);
    report.caflisch = audit_caflisch(-1.0, params.q_prime / 8.0, params.q_prime / 8.0);
    return report;
}

} // namespace kinwave
