/**
 * Evolution operators on the slab: damped free transport, the Picard mixture
 * ladder, the full linearized semigroup, and the particle/fluid split.
 *
 * Everything is block-diagonal over spatial modes.  The damped transport
 * semigroup S^t is an exact entrywise multiplier,
 *
 *     (S^t h)(m, i) = e^{-(nu_i + i vx_i eta_m) t} h(m, i),
 *
 * and the ladder levels solve
 *
 *     h^(0) = S^t h0,     h^(m) = Int_0^t S^{t-s} K h^(m-1)(s) ds,
 *
 * marched on a shared time lattice with the composite trapezoid rule.  The
 * march applies S exactly over each step and recomputes level 0 from the
 * exact factor at every lattice node, so "level 0 equals damped transport of
 * the initial data" holds bitwise, not just to quadrature accuracy.  K is one
 * dense symmetric matrix acting on the velocity index; a step applies it to
 * each level once (reusing the product as the left trapezoid sample of the
 * next step), so the cost per step is one real GEMM pair per level.
 *
 * The full semigroup G^t = e^{(-i xi_1 eta - nu + K) t} comes in two forms:
 *
 *   - full_green_mode: per-mode matrix exponential (scaling-and-squaring).
 *     Exact up to the exponential's own tolerance, cost O(modes * Nv^3) —
 *     meant for coarse geometries and as the oracle for the march.
 *   - full_green_march: trapezoid march, implicit in K (one real LDLT factor
 *     shared by all modes), exact in the transport factor.  Second order in
 *     the step, unconditionally stable, and affordable on the big audit
 *     geometry.  particle_fluid_split uses this solver.
 *
 * The split exposes the remainder's source K h^(N) so callers can check that
 * fluid = full - particle satisfies the inhomogeneous equation.
 */
#ifndef KINWAVE_TRANSPORT_HPP
#define KINWAVE_TRANSPORT_HPP

#include "kinwave/slab.hpp"

#include <complex>
#include <functional>
#include <vector>

namespace kinwave {

/// The exact per-entry transport multiplier e^{-(nu + i vx eta) t}.  Shared
/// by every code path that applies S so equal inputs give bitwise equal
/// factors.
std::complex<double> transport_factor(double nu, double vx, double eta, double t);

/// S^t applied to a field.  Throws std::invalid_argument for t < 0.
ModeField damped_transport_mode(const ModeField &field, double t);

/// K applied on the velocity index of every mode (the gain part of L).
ModeField collision_gain(const ModeField &field);

struct MixtureLadder {
    std::vector<ModeField> levels; ///< h^(0) .. h^(N) at the common time t
    int N = 0;
    int time_steps = 0; ///< trapezoid intervals used for the Duhamel integrals
    double t = 0.0;
};

/**
 * Build ladder levels 0..N at time t with `steps` trapezoid intervals.
 * Throws std::invalid_argument for t < 0, N < 0, or steps < 8 (the
 * error-model checks assume a minimally resolved lattice).
 */
MixtureLadder mixture_ladder(const ModeField &h0, double t, int N, int steps);

/**
 * March the ladder and report snapshots.  snapshot_steps lists lattice
 * indices j (time j*t/steps, 0 <= j <= steps, ascending); on_snapshot
 * receives the time and levels 0..N at that node.  mixture_ladder is the
 * special case snapshot_steps = {steps}.
 */
void march_mixture_ladder(const ModeField &h0, double t, int N, int steps,
                          const std::vector<int> &snapshot_steps,
                          const std::function<void(double, const std::vector<ModeField> &)>
                              &on_snapshot);

/// Per-mode matrix exponential of the full linearized generator.  The bundle
/// must be the field's own (same grid); throws on mismatch or t < 0.
ModeField full_green_mode(const ModeField &h0, double t, const CollisionOperator &op);

/// Trapezoid march for the full semigroup, implicit in K.  steps >= 8.
ModeField full_green_march(const ModeField &h0, double t, int steps);

struct SplitSolution {
    ModeField particle; ///< sum of ladder levels 0..N
    ModeField fluid;    ///< full - particle (the remainder R^(N))
    ModeField source;   ///< K h^(N), the remainder's forcing term
    int N = 0;
};

/**
 * Particle/fluid decomposition at time t.  steps = 0 picks ceil(64 * t)
 * trapezoid intervals (the module's default time resolution).  N >= 1.
 */
SplitSolution particle_fluid_split(const ModeField &h0, double t, int N, int steps = 0);

} // namespace kinwave

#endif // KINWAVE_TRANSPORT_HPP
