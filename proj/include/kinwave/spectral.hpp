/**
 * Fourier-mode spectral structure of the linearized dynamics.
 *
 * For a spatial wavevector eta the mode operator is A(eta) = -i diag(xi.eta)
 * + L on C^N.  A is complex symmetric (not Hermitian), which buys two things:
 *
 *   - left eigenvectors coincide with right eigenvectors under the
 *     *unconjugated* bilinear pairing <u, v> = h^3 sum u_i v_i, so the
 *     biorthogonal normalization needs no separate left solves;
 *   - the real part of the spectrum is bounded by the top eigenvalue of the
 *     (real symmetric) collision part, giving a cheap certified stability
 *     bound for every eta at once.
 *
 * The collision part comes straight from the assembled bundle, whose
 * conservative correction makes the five collision invariants exact null
 * vectors (see operator_assembly.hpp).  That exactness is what lets moment
 * conservation under propagation reach the 1e-8 contract: otherwise it would
 * be limited by quadrature error in K instead of by the integrator.
 *
 * For |eta| below the long-wave cutoff the spectrum splits into five "fluid"
 * eigenvalues lambda_j(eta) = -i a_j |eta| - A_j |eta|^2 + O(|eta|^3) near 0
 * and the rest at strictly negative real part.  Those five are computed by
 * shift-invert subspace iteration (one LU of A, a handful of solves), their
 * dispersion coefficients a_j, A_j by regression over a sweep in |eta|, and
 * the semigroup splits into fluid / non-fluid long-wave / short-wave parts
 * that sum to the full matrix exponential by construction.
 */
#ifndef KINWAVE_SPECTRAL_HPP
#define KINWAVE_SPECTRAL_HPP

#include "kinwave/operator_assembly.hpp"
#include "kinwave/velocity_grid.hpp"

#include <Eigen/Dense>

#include <array>
#include <complex>
#include <vector>

namespace kinwave {

struct FluidEigensystem {
    double eta_mag = 0.0;
    Vec3 dir{0.0, 0.0, 1.0};
    /// Canonical order: [0] Im < 0 (forward acoustic), [1] Im > 0 (backward
    /// acoustic), [2..4] real branches by descending Re.
    std::array<std::complex<double>, 5> lambda{};
    /// Columns: eigenvectors, bilinearly normalized (v^T v h^3 = 1, sign
    /// fixed deterministically).
    Eigen::MatrixXcd vectors;
    /// max_j ||A v_j - lambda_j v_j|| (grid norm), for diagnostics.
    double residual = 0.0;
    int iterations = 0;
};

struct DispersionFit {
    std::vector<double> samples;             ///< |eta| sweep, ascending
    Eigen::MatrixXcd lambda_table;           ///< samples x 5, branch-tracked
    std::array<double, 5> a{};               ///< Im lambda_j ~ -a_j |eta|
    std::array<double, 5> A{};               ///< Re lambda_j ~ -A_j |eta|^2
    std::array<double, 5> fit_residual{};    ///< rms misfit per branch
    double min_tracking_overlap = 1.0;       ///< branch continuity diagnostic
    FluidEigensystem smallest;               ///< eigensystem at samples.front()
};

struct SemigroupSplit {
    Eigen::VectorXcd fluid;      ///< long-wave fluid part (five branches)
    Eigen::VectorXcd nonfluid;   ///< long-wave remainder
    Eigen::VectorXcd shortwave;  ///< short-wave part
};

class ModeWorkspace {
  public:
    explicit ModeWorkspace(const CollisionOperator &op);

    const VelocityGrid &grid() const { return grid_; }
    const MacroBasis &basis() const { return basis_; }
    const Eigen::MatrixXd &Lc() const { return Lc_; }
    const Eigen::VectorXd &nu() const { return nu_; }

    /// Per-node transport phase xi . eta.
    Eigen::VectorXd transport_phase(const Vec3 &eta) const;

    /// Dense mode operator A(eta).
    Eigen::MatrixXcd mode_matrix(const Vec3 &eta) const;

    /// Largest eigenvalue of Lc by power iteration; bounds Re spec(A(eta))
    /// for every eta.
    double lambda_max_L(double tol = 1e-11, int max_iter = 5000) const;

    /// Five fluid eigenpairs of A(|eta| * dir) by shift-invert subspace
    /// iteration about 0.  Requires eta_mag > 0.
    FluidEigensystem fluid_eigensystem(double eta_mag, const Vec3 &dir) const;

    /// Crank-Nicolson march of f' = A(eta) f over [0, t].
    Eigen::VectorXcd propagate(const Vec3 &eta, double t, const Eigen::VectorXcd &f0,
                               int steps_per_unit = 64) const;

    /// Full matrix exponential e^{t A(eta)} f0 (scaling and squaring).
    Eigen::VectorXcd propagate_exact(const Vec3 &eta, double t,
                                     const Eigen::VectorXcd &f0) const;

  private:
    VelocityGrid grid_;
    MacroBasis basis_;
    Eigen::VectorXd nu_;
    Eigen::MatrixXd Lc_;
};

/// Dispersion sweep along `dir`: eigensystems at each |eta| in `samples`
/// (ascending), branch tracking by eigenvector overlap, and per-branch
/// regressions Im lambda = -a s + c s^3, Re lambda = -A s^2 + c' s^3.
DispersionFit fit_dispersion(const ModeWorkspace &ws, const std::vector<double> &samples,
                             const Vec3 &dir);

/// Leading-order eigenvectors E_0..E_4 for transport direction omega, as
/// combinations of the discrete orthonormal carriers (acoustic pair, thermal,
/// two shear).  Columns 0..4 match the canonical branch order above.
Eigen::MatrixXd leading_eigenvectors(const MacroBasis &basis, const VelocityGrid &grid,
                                     const Vec3 &omega);

/// Three-way semigroup split at wavevector eta: long-wave fluid, long-wave
/// remainder, short-wave.  The parts sum to e^{t A(eta)} f0 by construction;
/// `delta` is the long-wave cutoff (window 1 on [0, delta/2], 0 past delta).
SemigroupSplit semigroup_split(const ModeWorkspace &ws, const Eigen::VectorXcd &f0,
                               const Vec3 &eta, double t, double delta = 0.5);

} // namespace kinwave

#endif // KINWAVE_SPECTRAL_HPP
