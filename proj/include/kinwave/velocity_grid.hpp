/**
 * Velocity-space discretization.
 *
 * A cube [-R, R]^3 is covered by n^3 congruent cells; nodes sit at cell
 * centers, and every node carries the same quadrature weight h^3 (midpoint
 * rule).  The node set is symmetric under negation of any coordinate, which
 * several modules rely on:
 *
 *   - odd velocity moments vanish exactly, not just to quadrature accuracy,
 *   - the collision-kernel matrix is exactly symmetric before symmetrization,
 *   - reflecting a distribution in xi_1 (slab parity) permutes nodes.
 *
 * The five-dimensional macroscopic subspace (mass / momentum / energy
 * carriers chi_0..chi_4 under the Gaussian-weighted inner product) is
 * assembled here too, re-orthonormalized against the discrete inner product
 * so projector idempotence holds to machine precision.
 */
#ifndef KINWAVE_VELOCITY_GRID_HPP
#define KINWAVE_VELOCITY_GRID_HPP

#include <Eigen/Dense>
#include <cstddef>
#include <vector>

namespace kinwave {

/// Global Maxwellian (2 pi)^{-3/2} exp(-|v|^2/2) and its square root.
double maxwellian(double abs_v);
double sqrt_maxwellian(double abs_v);

struct VelocityGrid {
    int n = 0;           ///< nodes per axis
    double R = 0.0;      ///< half-width of the cube
    double h = 0.0;      ///< cell side, 2R/n
    double cell_weight = 0.0; ///< h^3, shared by every node

    // Node coordinates, structure-of-arrays.
    std::vector<double> vx, vy, vz;
    std::vector<double> abs_v;

    std::size_t size() const { return vx.size(); }

    /// Flat index of node (i,j,k), each in [0,n).
    std::size_t index(int i, int j, int k) const {
        return (static_cast<std::size_t>(i) * n + j) * n + k;
    }

    /// 1D node coordinate for per-axis index i.
    double axis_coord(int i) const { return -R + (i + 0.5) * h; }

    /// Index of the node at -xi (exact, by construction).
    std::size_t negation_index(std::size_t idx) const;

    /// Index of the node with xi_1 negated (slab parity partner).
    std::size_t reflect_x_index(std::size_t idx) const;

    /// Weighted inner product sum_i w f_i g_i.
    double dot(const Eigen::VectorXd &f, const Eigen::VectorXd &g) const {
        return cell_weight * f.dot(g);
    }
    double norm(const Eigen::VectorXd &f) const { return std::sqrt(dot(f, f)); }

    /// Per-node values of (1 + |xi|)^tau, for weighted sup/L2 norms.
    Eigen::VectorXd bracket_weights(double tau) const;

    /// Node values of the Maxwellian square root.
    Eigen::VectorXd sqrt_maxwellian_values() const;

    /**
     * Build a grid.  Throws std::invalid_argument for n < 4 or R <= 0 with
     * the offending parameter named (n = 2 cannot resolve the Gaussian core,
     * and nothing downstream is meaningful there).
     */
    static VelocityGrid make(int n, double R);
};

// ============================================================================
// Macroscopic basis and projectors
// ============================================================================

struct MacroBasis {
    /// Columns: discrete orthonormal chi_0..chi_4 (after re-orthonormalization).
    Eigen::MatrixXd chi;
    /// Raw analytic carriers before Gram-Schmidt, for drift diagnostics.
    Eigen::MatrixXd chi_raw;

    /// Gram matrix of the orthonormalized columns under the grid inner product.
    Eigen::MatrixXd gram(const VelocityGrid &grid) const;

    /// Projection onto the macroscopic span, P0 f.
    Eigen::VectorXd project_fluid(const VelocityGrid &grid, const Eigen::VectorXd &f) const;

    /// Complementary projection P1 f = f - P0 f.
    Eigen::VectorXd project_particle(const VelocityGrid &grid, const Eigen::VectorXd &f) const;

    static MacroBasis make(const VelocityGrid &grid);
};

} // namespace kinwave

#endif // KINWAVE_VELOCITY_GRID_HPP
