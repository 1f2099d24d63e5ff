#include "kinwave/collision_kernels.hpp"

#include "kinwave/quadrature.hpp"
#include "kinwave/simd_dispatch.hpp"

#include <cmath>
#include <map>
#include <mutex>
#include <stdexcept>
#include <vector>

namespace kinwave {

namespace {

const double PI = std::acos(-1.0);
const double TWO_PI = 2.0 * PI;

// exp() of anything below this underflows double precision; pairs whose
// best-case planar exponent is smaller contribute exact zeros.
constexpr double UNDERFLOW_EXPONENT = -746.0;

// ----------------------------------------------------------------------------
// Cosine half-tables for the azimuthal sum.
//
// The azimuth nodes phi_k = 2 pi (k + 1/2) / m come in pairs with equal
// cosine (phi and 2 pi - phi), so only m/2 exponentials are needed; the sum
// over the half-table is doubled.  Tables are cached per resolution.
// ----------------------------------------------------------------------------

const std::vector<double> &cos_half_table(int m) {
    static std::mutex mtx;
    static std::map<int, std::vector<double>> cache;
    std::lock_guard<std::mutex> lock(mtx);
    auto it = cache.find(m);
    if (it == cache.end()) {
        std::vector<double> tab(m / 2);
        for (int k = 0; k < m / 2; ++k) tab[k] = std::cos(TWO_PI * (k + 0.5) / m);
        it = cache.emplace(m, std::move(tab)).first;
    }
    return it->second;
}

double sub(const Vec3 &a, const Vec3 &b, int i) { return a[i] - b[i]; }

double planar_integral(double s, double v, double C0, int n_radial, int n_angle,
                       const KernelParams &params) {
    const double r_max = 8.0 + s;
    Quadrature1D radial = gauss_legendre_on(n_radial, 0.0, r_max);
    const bool axial = s * r_max < 1e-12; // xi parallel to V: azimuth integrates to 2 pi
    const std::vector<double> *chalf = axial ? nullptr : &cos_half_table(n_angle);
    const double w_phi = axial ? TWO_PI : 2.0 * TWO_PI / n_angle; // doubled half-table weight

    double total = 0.0;
    for (int q = 0; q < n_radial; ++q) {
        const double rho = radial.nodes[q];
        const double base = C0 - 0.5 * rho * rho;
        double ang;
        if (axial) {
            ang = (base < UNDERFLOW_EXPONENT) ? 0.0 : std::exp(base);
        } else {
            ang = simd::angular_exp_sum(base, s * rho, chalf->data(), chalf->size());
        }
        total += radial.weights[q] * rho * in_plane_weight(rho / v, params) * w_phi * ang;
    }
    return total;
}

} // namespace

// ============================================================================
// Collision frequency
// ============================================================================

double collision_frequency(double r, const KernelParams &params, double rel_tol) {
    params.validate();
    const double g = params.gamma;
    // Angular average of |xi - xi_*|^gamma over directions of xi_*:
    //   A(r, rho) = [(r+rho)^{g+2} - |r-rho|^{g+2}] / ((g+2) r rho),
    // with the r -> 0 limit 2 rho^{g}. The radial integral then is
    //   nu(r) = gamma0/sqrt(2 pi) * int_0^inf rho e^{-rho^2/2} rho A drho.
    auto integrand = [&](double rho) {
        if (rho <= 0.0) return 0.0;
        double core;
        if (r < 1e-10) {
            core = 2.0 * std::pow(rho, g + 1.0);
        } else {
            core = (std::pow(r + rho, g + 2.0) - std::pow(std::abs(r - rho), g + 2.0)) /
                   ((g + 2.0) * r);
        }
        return rho * std::exp(-0.5 * rho * rho) * core;
    };
    // e^{-rho^2/2} rho^{g+3}-ish decay: [0, r+12] captures the integrand to
    // far below the requested tolerance.
    double upper = r + 12.0;
    double val = adaptive_simpson(integrand, 0.0, upper, rel_tol, 1e-60, {r});
    return params.gamma0() / std::sqrt(TWO_PI) * val;
}

// ============================================================================
// Kernel pieces
// ============================================================================

double kernel_k1(const Vec3 &xi, const Vec3 &eta, const KernelParams &params) {
    double dx = sub(eta, xi, 0), dy = sub(eta, xi, 1), dz = sub(eta, xi, 2);
    double v = std::sqrt(dx * dx + dy * dy + dz * dz);
    double nxi = xi[0] * xi[0] + xi[1] * xi[1] + xi[2] * xi[2];
    double neta = eta[0] * eta[0] + eta[1] * eta[1] + eta[2] * eta[2];
    return std::pow(TWO_PI, -1.5) * params.gamma0() * std::pow(v, params.gamma) *
           std::exp(-0.25 * (nxi + neta));
}

double kernel_k2(const Vec3 &xi, const Vec3 &eta, const KernelParams &params,
                 const PlanarQuadSpec &spec, PlanarQuadUsed *used) {
    double dx = sub(eta, xi, 0), dy = sub(eta, xi, 1), dz = sub(eta, xi, 2);
    double v2 = dx * dx + dy * dy + dz * dz;
    if (v2 == 0.0)
        throw std::domain_error("kernel_k2: coincident velocities (xi = eta); "
                                "the kernel is singular on the diagonal");
    if (spec.n_radial < 2 || spec.n_angle < 8 || spec.n_angle % 8 != 0)
        throw std::invalid_argument("kernel_k2: need n_radial >= 2 and n_angle a "
                                    "multiple of 8 (the azimuthal sum is blocked in 4s "
                                    "over a half table)");
    double v = std::sqrt(v2);
    double nxi2 = xi[0] * xi[0] + xi[1] * xi[1] + xi[2] * xi[2];
    double xi_par = (xi[0] * dx + xi[1] * dy + xi[2] * dz) / v;
    double s = std::sqrt(std::max(0.0, nxi2 - xi_par * xi_par));
    double C0 = -0.5 * nxi2 - 0.5 * xi_par * v - 0.25 * v2;

    PlanarQuadUsed info;
    info.n_radial = spec.n_radial;
    info.n_angle = spec.n_angle;

    // Best case over (rho, phi) is rho = s, cos phi = -1: exponent C0 + s^2/2.
    if (C0 + 0.5 * s * s < UNDERFLOW_EXPONENT + 16.0) {
        if (used) *used = info;
        return 0.0;
    }

    const double prefactor = std::pow(v, params.gamma - 2.0) / std::sqrt(2.0 * PI * PI * PI);
    double prev = 0.0, val = 0.0;
    bool have_prev = false;
    for (int d = 0; d <= spec.max_doublings; ++d) {
        val = planar_integral(s, v, C0, info.n_radial, info.n_angle, params);
        if (have_prev) {
            double scale = std::max(std::abs(val), 1e-290);
            if (std::abs(val - prev) <= spec.rel_tol * scale) {
                info.converged = true;
                break;
            }
        }
        if (d == spec.max_doublings) {
            info.converged = false;
            break;
        }
        prev = val;
        have_prev = true;
        info.n_radial *= 2;
        info.n_angle *= 2;
        info.doublings = d + 1;
    }
    if (used) *used = info;
    return prefactor * val;
}

double kernel_point(const Vec3 &xi, const Vec3 &eta, const KernelParams &params,
                    const PlanarQuadSpec &spec, PlanarQuadUsed *used) {
    return -kernel_k1(xi, eta, params) + kernel_k2(xi, eta, params, spec, used);
}

} // namespace kinwave
