#include "kinwave/velocity_grid.hpp"

#include <cmath>
#include <sstream>
#include <stdexcept>

namespace kinwave {

namespace {
const double TWO_PI = 2.0 * std::acos(-1.0);
}

double maxwellian(double abs_v) {
    return std::pow(TWO_PI, -1.5) * std::exp(-0.5 * abs_v * abs_v);
}

double sqrt_maxwellian(double abs_v) {
    return std::pow(TWO_PI, -0.75) * std::exp(-0.25 * abs_v * abs_v);
}

VelocityGrid VelocityGrid::make(int n, double R) {
    if (n < 4) {
        std::ostringstream msg;
        msg << "VelocityGrid: n = " << n
            << " is invalid (need n >= 4 nodes per axis to resolve the Gaussian core)";
        throw std::invalid_argument(msg.str());
    }
    if (!(R > 0.0)) {
        std::ostringstream msg;
        msg << "VelocityGrid: R = " << R << " is invalid (need R > 0)";
        throw std::invalid_argument(msg.str());
    }
    VelocityGrid g;
    g.n = n;
    g.R = R;
    g.h = 2.0 * R / n;
    g.cell_weight = g.h * g.h * g.h;
    const std::size_t N = static_cast<std::size_t>(n) * n * n;
    g.vx.resize(N);
    g.vy.resize(N);
    g.vz.resize(N);
    g.abs_v.resize(N);
    for (int i = 0; i < n; ++i)
        for (int j = 0; j < n; ++j)
            for (int k = 0; k < n; ++k) {
                std::size_t idx = g.index(i, j, k);
                g.vx[idx] = g.axis_coord(i);
                g.vy[idx] = g.axis_coord(j);
                g.vz[idx] = g.axis_coord(k);
                g.abs_v[idx] = std::sqrt(g.vx[idx] * g.vx[idx] + g.vy[idx] * g.vy[idx] +
                                         g.vz[idx] * g.vz[idx]);
            }
    return g;
}

std::size_t VelocityGrid::negation_index(std::size_t idx) const {
    int k = static_cast<int>(idx) % n;
    int j = (static_cast<int>(idx) / n) % n;
    int i = static_cast<int>(idx) / (n * n);
    return index(n - 1 - i, n - 1 - j, n - 1 - k);
}

std::size_t VelocityGrid::reflect_x_index(std::size_t idx) const {
    int k = static_cast<int>(idx) % n;
    int j = (static_cast<int>(idx) / n) % n;
    int i = static_cast<int>(idx) / (n * n);
    return index(n - 1 - i, j, k);
}

Eigen::VectorXd VelocityGrid::bracket_weights(double tau) const {
    Eigen::VectorXd w(size());
    for (std::size_t i = 0; i < size(); ++i) w[i] = std::pow(1.0 + abs_v[i], tau);
    return w;
}

Eigen::VectorXd VelocityGrid::sqrt_maxwellian_values() const {
    Eigen::VectorXd w(size());
    for (std::size_t i = 0; i < size(); ++i) w[i] = sqrt_maxwellian(abs_v[i]);
    return w;
}

// ============================================================================
// Macroscopic basis
// ============================================================================

MacroBasis MacroBasis::make(const VelocityGrid &grid) {
    const std::size_t N = grid.size();
    MacroBasis basis;
    basis.chi_raw.resize(N, 5);
    const double inv_sqrt6 = 1.0 / std::sqrt(6.0);
    for (std::size_t i = 0; i < N; ++i) {
        double m = sqrt_maxwellian(grid.abs_v[i]);
        basis.chi_raw(i, 0) = m;
        basis.chi_raw(i, 1) = grid.vx[i] * m;
        basis.chi_raw(i, 2) = grid.vy[i] * m;
        basis.chi_raw(i, 3) = grid.vz[i] * m;
        basis.chi_raw(i, 4) = (grid.abs_v[i] * grid.abs_v[i] - 3.0) * m * inv_sqrt6;
    }
    // Modified Gram-Schmidt under the weighted inner product, applied twice
    // ("twice is enough") so the discrete Gram matrix is the identity to
    // machine precision even though the raw columns are only analytically
    // orthonormal.
    basis.chi = basis.chi_raw;
    for (int pass = 0; pass < 2; ++pass) {
        for (int c = 0; c < 5; ++c) {
            Eigen::VectorXd col = basis.chi.col(c);
            for (int p = 0; p < c; ++p) {
                double proj = grid.dot(basis.chi.col(p), col);
                col -= proj * basis.chi.col(p);
            }
            double nrm = grid.norm(col);
            if (!(nrm > 0.0))
                throw std::runtime_error("MacroBasis: degenerate carrier column");
            basis.chi.col(c) = col / nrm;
        }
    }
    return basis;
}

Eigen::MatrixXd MacroBasis::gram(const VelocityGrid &grid) const {
    return grid.cell_weight * (chi.transpose() * chi);
}

Eigen::VectorXd MacroBasis::project_fluid(const VelocityGrid &grid,
                                          const Eigen::VectorXd &f) const {
    Eigen::VectorXd coeff = grid.cell_weight * (chi.transpose() * f);
    return chi * coeff;
}

Eigen::VectorXd MacroBasis::project_particle(const VelocityGrid &grid,
                                             const Eigen::VectorXd &f) const {
    return f - project_fluid(grid, f);
}

} // namespace kinwave
