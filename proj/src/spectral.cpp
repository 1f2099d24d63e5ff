#include "kinwave/spectral.hpp"

#include "kinwave/common.hpp"
#include "kinwave/smooth_cutoff.hpp"

#include <unsupported/Eigen/MatrixFunctions>

#include <algorithm>
#include <cmath>
#include <complex>
#include <random>
#include <stdexcept>

namespace kinwave {

using Cplx = std::complex<double>;

namespace {

/// Deterministic sign fix for a bilinearly normalized vector: v^T v = 1
/// leaves only v -> -v free; pick the representative whose largest-magnitude
/// entry points into the right half plane.
void fix_sign(Eigen::Ref<Eigen::VectorXcd> v) {
    Eigen::Index k;
    v.cwiseAbs().maxCoeff(&k);
    Cplx lead = v[k];
    if (lead.real() < 0.0 || (lead.real() == 0.0 && lead.imag() < 0.0)) v = -v;
}

} // namespace

ModeWorkspace::ModeWorkspace(const CollisionOperator &op)
    : grid_(op.grid), basis_(MacroBasis::make(op.grid)), nu_(op.nu) {
    // The bundle's L is conservative (exact null space) and symmetric by
    // construction; re-symmetrizing is a cheap no-op that makes this ctor
    // safe for hand-built operators too.
    Eigen::MatrixXd L = op.K;
    L.diagonal() -= op.nu;
    Lc_ = 0.5 * (L + L.transpose());
}

Eigen::VectorXd ModeWorkspace::transport_phase(const Vec3 &eta) const {
    Eigen::VectorXd phase(grid_.size());
    for (std::size_t i = 0; i < grid_.size(); ++i)
        phase[Eigen::Index(i)] =
            grid_.vx[i] * eta[0] + grid_.vy[i] * eta[1] + grid_.vz[i] * eta[2];
    return phase;
}

Eigen::MatrixXcd ModeWorkspace::mode_matrix(const Vec3 &eta) const {
    Eigen::MatrixXcd A = Lc_.cast<Cplx>();
    Eigen::VectorXd phase = transport_phase(eta);
    for (Eigen::Index i = 0; i < A.rows(); ++i) A(i, i) -= Cplx(0.0, phase[i]);
    return A;
}

double ModeWorkspace::lambda_max_L(double tol, int max_iter) const {
    // Power iteration on Lc + cI with c clearing the most negative part of
    // the spectrum; the dominant eigenvalue is then c + lambda_max(Lc).
    const double c = nu_.maxCoeff() + 1.0;
    const Eigen::Index N = Lc_.rows();
    std::mt19937_64 rng(424242);
    std::normal_distribution<double> gauss;
    Eigen::VectorXd v(N);
    for (Eigen::Index i = 0; i < N; ++i) v[i] = gauss(rng);
    v.normalize();

    double rho = 0.0, prev = 1e300;
    for (int it = 0; it < max_iter; ++it) {
        Eigen::VectorXd w = Lc_ * v + c * v;
        rho = v.dot(w); // Rayleigh quotient (v normalized)
        double n = w.norm();
        if (n == 0.0) break; // Lc v = -c v exactly; vanishingly unlikely
        v = w / n;
        if (std::abs(rho - prev) < tol * std::max(1.0, std::abs(rho)) && it > 8) break;
        prev = rho;
    }
    return rho - c;
}

FluidEigensystem ModeWorkspace::fluid_eigensystem(double eta_mag, const Vec3 &dir) const {
    if (!(eta_mag > 0.0))
        throw std::invalid_argument("fluid_eigensystem: |eta| must be positive "
                                    "(the operator at eta = 0 is exactly singular)");
    const Eigen::Index N = Lc_.rows();
    const Vec3 eta{eta_mag * dir[0], eta_mag * dir[1], eta_mag * dir[2]};
    Eigen::MatrixXcd A = mode_matrix(eta);
    Eigen::PartialPivLU<Eigen::MatrixXcd> lu(A);

    // Subspace: the five macroscopic carriers plus three random columns of
    // headroom, iterated under the shift-inverted operator.
    constexpr int m = 8;
    Eigen::MatrixXcd X(N, m);
    X.setZero();
    X.leftCols(5) = basis_.chi.cast<Cplx>();
    std::mt19937_64 rng(1123581321);
    std::normal_distribution<double> gauss;
    for (int c = 5; c < m; ++c)
        for (Eigen::Index i = 0; i < N; ++i) X(i, c) = Cplx(gauss(rng), gauss(rng));

    FluidEigensystem out;
    out.eta_mag = eta_mag;
    out.dir = dir;

    // The per-sweep amplification is |lambda_9th| / |lambda_fluid| in
    // shift-inverted magnitudes — only a factor of a few at the top of the
    // fit window — so the sweep budget is sized for the slow end, not the
    // |eta| -> 0 limit where two sweeps would do.
    constexpr int max_sweeps = 40;
    Eigen::MatrixXcd V;
    Eigen::VectorXcd ritz(m);
    for (int sweep = 1; sweep <= max_sweeps; ++sweep) {
        X = lu.solve(X);
        Eigen::HouseholderQR<Eigen::MatrixXcd> qr(X);
        X = qr.householderQ() * Eigen::MatrixXcd::Identity(N, m);
        Eigen::MatrixXcd H = X.adjoint() * (A * X);
        Eigen::ComplexEigenSolver<Eigen::MatrixXcd> es(H);
        ritz = es.eigenvalues();
        V = X * es.eigenvectors();
        out.iterations = sweep;

        // order Ritz values by magnitude; fluid cluster = five smallest
        std::array<int, m> idx{};
        for (int i = 0; i < m; ++i) idx[std::size_t(i)] = i;
        std::sort(idx.begin(), idx.end(),
                  [&](int a, int b) { return std::abs(ritz[a]) < std::abs(ritz[b]); });

        double worst = 0.0;
        for (int k = 0; k < 5; ++k) {
            Eigen::VectorXcd v = V.col(idx[std::size_t(k)]).normalized();
            double r = (A * v - ritz[idx[std::size_t(k)]] * v).norm();
            worst = std::max(worst, r);
        }
        out.residual = worst;
        if (worst < 1e-10) {
            // collapse to the converged five columns
            Eigen::MatrixXcd W(N, 5);
            Eigen::VectorXcd lam(5);
            for (int k = 0; k < 5; ++k) {
                W.col(k) = V.col(idx[std::size_t(k)]);
                lam[k] = ritz[idx[std::size_t(k)]];
            }
            V = W;
            ritz = lam;
            break;
        }
        if (sweep == max_sweeps)
            throw std::runtime_error("fluid_eigensystem: subspace iteration failed to "
                                     "converge (spectral gap too small at this |eta|?)");
    }

    // Canonical branch order: acoustic pair by sign of Im, then the three
    // real branches by descending Re.  The acoustic/real split uses a
    // threshold relative to the largest |Im| in the cluster: the Im parts of
    // the nominally real branches are eigensolver roundoff, whose absolute
    // size tracks |eta| and the operator norm rather than machine epsilon.
    double im_scale = 0.0;
    for (int k = 0; k < 5; ++k) im_scale = std::max(im_scale, std::abs(ritz[k].imag()));
    const double im_cut = 0.3 * im_scale;
    std::array<int, 5> ord{0, 1, 2, 3, 4};
    std::sort(ord.begin(), ord.end(), [&](int a, int b) {
        auto rank = [&](int k) {
            double im = ritz[k].imag();
            if (im < -im_cut) return 0;
            if (im > im_cut) return 1;
            return 2;
        };
        int ra = rank(a), rb = rank(b);
        if (ra != rb) return ra < rb;
        return ritz[a].real() > ritz[b].real();
    });

    out.vectors.resize(N, 5);
    for (int k = 0; k < 5; ++k) {
        out.lambda[std::size_t(k)] = ritz[ord[std::size_t(k)]];
        out.vectors.col(k) = V.col(ord[std::size_t(k)]);
    }

    // Bilinear (unconjugated) normalization; near-degenerate clusters get a
    // bilinear Gram-Schmidt pass first so the pairing matrix is exactly the
    // identity within each cluster, not merely diagonal-dominant.
    const double w = grid_.cell_weight;
    for (int k = 0; k < 5; ++k) {
        Eigen::VectorXcd v = out.vectors.col(k);
        for (int j = 0; j < k; ++j) {
            if (std::abs(out.lambda[std::size_t(j)] - out.lambda[std::size_t(k)]) < 1e-7) {
                Cplx proj = w * (out.vectors.col(j).transpose() * v)(0);
                v -= proj * out.vectors.col(j);
            }
        }
        Cplx norm2 = w * (v.transpose() * v)(0);
        Cplx scale = std::sqrt(norm2); // principal branch; |norm2| ~ 1 here
        if (std::abs(scale) < 1e-8)
            throw std::runtime_error("fluid_eigensystem: quasi-null eigenvector, "
                                     "bilinear normalization impossible");
        v /= scale;
        fix_sign(v);
        out.vectors.col(k) = v;
    }
    return out;
}

Eigen::VectorXcd ModeWorkspace::propagate(const Vec3 &eta, double t,
                                          const Eigen::VectorXcd &f0,
                                          int steps_per_unit) const {
    if (t < 0.0) throw std::invalid_argument("propagate: negative time");
    if (t == 0.0) return f0;
    const int steps = std::max(1, int(std::ceil(t * steps_per_unit)));
    const double dt = t / steps;
    Eigen::MatrixXcd A = mode_matrix(eta);
    const Eigen::Index N = A.rows();
    Eigen::MatrixXcd M_minus = Eigen::MatrixXcd::Identity(N, N) - (0.5 * dt) * A;
    Eigen::MatrixXcd M_plus = Eigen::MatrixXcd::Identity(N, N) + (0.5 * dt) * A;
    Eigen::PartialPivLU<Eigen::MatrixXcd> lu(M_minus);
    Eigen::VectorXcd f = f0;
    for (int s = 0; s < steps; ++s) f = lu.solve(M_plus * f);
    return f;
}

Eigen::VectorXcd ModeWorkspace::propagate_exact(const Vec3 &eta, double t,
                                                const Eigen::VectorXcd &f0) const {
    if (t < 0.0) throw std::invalid_argument("propagate_exact: negative time");
    Eigen::MatrixXcd At = t * mode_matrix(eta);
    return At.exp() * f0;
}

// ============================================================================
// Dispersion sweep
// ============================================================================

DispersionFit fit_dispersion(const ModeWorkspace &ws, const std::vector<double> &samples,
                             const Vec3 &dir) {
    if (samples.size() < 4)
        throw std::invalid_argument("fit_dispersion: need at least 4 |eta| samples");
    for (std::size_t i = 0; i + 1 < samples.size(); ++i)
        if (!(samples[i] < samples[i + 1]))
            throw std::invalid_argument("fit_dispersion: samples must be ascending");

    DispersionFit fit;
    fit.samples = samples;
    const std::size_t m = samples.size();
    fit.lambda_table.resize(Eigen::Index(m), 5);

    const double w = ws.grid().cell_weight;
    Eigen::MatrixXcd prev_vecs;
    for (std::size_t si = 0; si < m; ++si) {
        FluidEigensystem es = ws.fluid_eigensystem(samples[si], dir);
        if (si == 0) {
            fit.smallest = es;
            for (int k = 0; k < 5; ++k) fit.lambda_table(0, k) = es.lambda[std::size_t(k)];
            prev_vecs = es.vectors;
            continue;
        }
        // Track branches by maximal Hermitian overlap with the previous
        // sample (greedy on the 5 x 5 overlap magnitudes).
        Eigen::MatrixXd overlap(5, 5);
        for (int p = 0; p < 5; ++p)
            for (int q = 0; q < 5; ++q)
                overlap(p, q) = std::abs(w * (prev_vecs.col(p).adjoint() * es.vectors.col(q))(0));
        std::array<int, 5> match{-1, -1, -1, -1, -1};
        std::array<bool, 5> used{};
        for (int pick = 0; pick < 5; ++pick) {
            int bp = -1, bq = -1;
            double best = -1.0;
            for (int p = 0; p < 5; ++p) {
                if (match[std::size_t(p)] >= 0) continue;
                for (int q = 0; q < 5; ++q) {
                    if (used[std::size_t(q)]) continue;
                    if (overlap(p, q) > best) {
                        best = overlap(p, q);
                        bp = p;
                        bq = q;
                    }
                }
            }
            match[std::size_t(bp)] = bq;
            used[std::size_t(bq)] = true;
            fit.min_tracking_overlap = std::min(fit.min_tracking_overlap, best);
        }
        Eigen::MatrixXcd tracked(prev_vecs.rows(), 5);
        for (int p = 0; p < 5; ++p) {
            fit.lambda_table(Eigen::Index(si), p) = es.lambda[std::size_t(match[std::size_t(p)])];
            tracked.col(p) = es.vectors.col(match[std::size_t(p)]);
        }
        prev_vecs = tracked;
    }

    // Per-branch regressions with a cubic term absorbing the O(s^3) tail:
    //   Im lambda = c1 s + c3 s^3   ->  a = -c1
    //   Re lambda = d2 s^2 + d3 s^3 ->  A = -d2
    Eigen::MatrixXd Xodd(Eigen::Index(m), 2), Xeven(Eigen::Index(m), 2);
    for (std::size_t i = 0; i < m; ++i) {
        double s = samples[i];
        Xodd(Eigen::Index(i), 0) = s;
        Xodd(Eigen::Index(i), 1) = s * s * s;
        Xeven(Eigen::Index(i), 0) = s * s;
        Xeven(Eigen::Index(i), 1) = s * s * s;
    }
    for (int b = 0; b < 5; ++b) {
        Eigen::VectorXd yi{Eigen::VectorXd::Zero(Eigen::Index(m))};
        Eigen::VectorXd yr{Eigen::VectorXd::Zero(Eigen::Index(m))};
        for (std::size_t i = 0; i < m; ++i) {
            yi[Eigen::Index(i)] = fit.lambda_table(Eigen::Index(i), b).imag();
            yr[Eigen::Index(i)] = fit.lambda_table(Eigen::Index(i), b).real();
        }
        Eigen::Vector2d ci = Xodd.colPivHouseholderQr().solve(yi);
        Eigen::Vector2d cr = Xeven.colPivHouseholderQr().solve(yr);
        fit.a[std::size_t(b)] = -ci[0];
        fit.A[std::size_t(b)] = -cr[0];
        double r2 = (Xodd * ci - yi).squaredNorm() + (Xeven * cr - yr).squaredNorm();
        fit.fit_residual[std::size_t(b)] = std::sqrt(r2 / double(m));
    }
    return fit;
}

// ============================================================================
// Leading-order eigenvectors
// ============================================================================

Eigen::MatrixXd leading_eigenvectors(const MacroBasis &basis, const VelocityGrid &grid,
                                     const Vec3 &omega) {
    (void)grid;
    // Orthonormal frame {w1, w2, omega}.
    Eigen::Vector3d om(omega[0], omega[1], omega[2]);
    om.normalize();
    Eigen::Vector3d seed = std::abs(om[0]) < 0.9 ? Eigen::Vector3d::UnitX()
                                                 : Eigen::Vector3d::UnitY();
    Eigen::Vector3d w1 = (seed - seed.dot(om) * om).normalized();
    Eigen::Vector3d w2 = om.cross(w1);

    const Eigen::MatrixXd &chi = basis.chi;
    Eigen::VectorXd om_chi = chi.col(1) * om[0] + chi.col(2) * om[1] + chi.col(3) * om[2];
    Eigen::VectorXd w1_chi = chi.col(1) * w1[0] + chi.col(2) * w1[1] + chi.col(3) * w1[2];
    Eigen::VectorXd w2_chi = chi.col(1) * w2[0] + chi.col(2) * w2[1] + chi.col(3) * w2[2];

    Eigen::MatrixXd E(chi.rows(), 5);
    const double s310 = std::sqrt(3.0 / 10.0), s12 = std::sqrt(0.5);
    const double s15 = std::sqrt(0.2), s25 = std::sqrt(0.4), s35 = std::sqrt(0.6);
    // Forward acoustic (+sound speed), backward acoustic, thermal, two shear.
    E.col(0) = s310 * chi.col(0) + s12 * om_chi + s15 * chi.col(4);
    E.col(1) = s310 * chi.col(0) - s12 * om_chi + s15 * chi.col(4);
    E.col(2) = -s25 * chi.col(0) + s35 * chi.col(4);
    E.col(3) = w1_chi;
    E.col(4) = w2_chi;
    return E;
}

// ============================================================================
// Semigroup split
// ============================================================================

SemigroupSplit semigroup_split(const ModeWorkspace &ws, const Eigen::VectorXcd &f0,
                               const Vec3 &eta, double t, double delta) {
    const double s = std::sqrt(eta[0] * eta[0] + eta[1] * eta[1] + eta[2] * eta[2]);
    Eigen::VectorXcd full = ws.propagate_exact(eta, t, f0);

    SemigroupSplit split;
    split.fluid = Eigen::VectorXcd::Zero(f0.size());
    split.nonfluid = Eigen::VectorXcd::Zero(f0.size());
    const double window = low_frequency_window(s, delta);

    if (window > 0.0) {
        Eigen::VectorXcd fluid = Eigen::VectorXcd::Zero(f0.size());
        const double w = ws.grid().cell_weight;
        if (s > 0.0) {
            const Vec3 dir{eta[0] / s, eta[1] / s, eta[2] / s};
            FluidEigensystem es = ws.fluid_eigensystem(s, dir);
            for (int j = 0; j < 5; ++j) {
                // biorthogonality <e_j(-eta), e_l(eta)> = delta_jl makes the
                // unconjugated product the right expansion coefficient
                Cplx coef = w * (es.vectors.col(j).transpose() * f0)(0);
                fluid += std::exp(es.lambda[std::size_t(j)] * t) * coef * es.vectors.col(j);
            }
        } else {
            // Zero frequency: the five branches degenerate to the conserved
            // moments with lambda = 0, so the fluid part is the plain
            // projection onto span{chi} (invariant under the semigroup).
            const Eigen::MatrixXd &chi = ws.basis().chi;
            fluid = chi * (w * (chi.transpose() * f0));
        }
        split.fluid = window * fluid;
        split.nonfluid = window * (full - fluid);
    }
    split.shortwave = (1.0 - window) * full;
    return split;
}

} // namespace kinwave
