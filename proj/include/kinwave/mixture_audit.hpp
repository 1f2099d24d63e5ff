/**
 * Numerical audits of the mixture ladder's regularization and decay claims.
 *
 * One march of the ladder (levels 0..N on a shared time lattice) feeds four
 * measurements:
 *
 *  (a) decay fit — the (1+|xi|)^P-weighted L2 norm of level N against
 *      e^{-ct}, log-linear fit over the samples with t >= 1;
 *
 *  (b) pointwise table — e^{+c0 nu(xi) t} (1+|x|)^M (1+|xi|)^P |h^(N)| over
 *      an (x, t) probe lattice with the velocity sup split into three
 *      |xi|-shells; a monotone shell blow-up raises the unbounded-growth
 *      flag;
 *
 *  (c) tradeoff sweep — for the pure transport level (closed form, no
 *      march), the same weighted sup for a sweep of (M, P) pairs at fixed
 *      datum weight Q.  Spatial decay (1+|x|)^{-M} costs velocity weight at
 *      the rate M(1-gamma) + P <= Q; entries over that line by a clear
 *      margin must flag, entries at or under it must not.  Two violation
 *      channels exist on a slab, and each needs its own shell binning:
 *      the velocity-weight channel (P > Q) grows across |xi|-shells at the
 *      smallest times, while the spatial channel rides the rays x ~ vx t
 *      for one collision time t ~ M/nu and grows across |vx|-reach shells
 *      (on a slab the displacement is vx t, not |xi| t, so |xi|-shells
 *      cannot see it).  Probes sit exactly on the rays: x = vx t + offsets
 *      inside the datum support;
 *
 *  (d) weight-gain scan — for each ladder level j, the largest integer P'
 *      whose (1+|xi|)^{P'}-weighted shell profile stays flat at the earliest
 *      sample.  Each K application trades ~(2-gamma) powers of velocity
 *      decay upward, so the scan must be non-decreasing in j.
 *
 * A Prop-3.3-style scan accompanies (a): <x>^{theta/(1-gamma)} weights
 * against the L-infinity norm in xi with weight Q - theta, for
 * theta in {0, 1, 2}, per ladder level.
 *
 * All lattices are fixed by the config; there is no randomness anywhere, so
 * equal configs give equal reports to the last bit.
 */
#ifndef KINWAVE_MIXTURE_AUDIT_HPP
#define KINWAVE_MIXTURE_AUDIT_HPP

#include "kinwave/slab.hpp"

#include <array>
#include <vector>

namespace kinwave {

struct MixtureAuditParams {
    int N = 6;          ///< ladder depth; audits budget N <= 8
    double P = 2.0;     ///< velocity weight for (a) and (b)
    double M = 4.0;     ///< space weight for (b)
    double c0 = 0.25;   ///< velocity-dependent compensator fraction in (b)
    int steps_per_unit = 32;     ///< trapezoid resolution of the march
    std::vector<double> t_samples; ///< ascending; empty = default ladder
    std::vector<double> x_probes;  ///< pointwise probes; empty = default set

    /// (M, P) pairs for the tradeoff sweep; empty = default conforming +
    /// violating pairs around the line M(1-gamma) + P = Q.
    std::vector<std::array<double, 2>> tradeoff_pairs;
};

struct TradeoffEntry {
    double M = 0.0, P = 0.0;
    double excess = 0.0;       ///< M(1-gamma) + P - Q
    double sup_weighted = 0.0; ///< lattice sup of the compensated weight
    std::array<double, 3> shell_sup{}; ///< by |xi|-shell, inner to outer
    std::array<double, 3> reach_sup{}; ///< by |vx|-reach shell along the rays
    bool flagged = false; ///< monotone growth in either shell family
};

struct ThetaRow {
    int level = 0;
    double theta = 0.0;
    std::array<double, 3> shell_sup{}; ///< by |x| shell, inner to outer
    bool flagged = false;
};

struct PointwiseRow {
    double t = 0.0, x = 0.0;
    double weighted_sup = 0.0; ///< max over xi of the compensated weight
};

struct MixtureAuditReport {
    // (a) weighted L2 decay of level N.
    std::vector<double> times;
    std::vector<double> weighted_l2;
    double fitted_rate = 0.0;
    double fit_rms = 0.0;

    // (b) pointwise table and growth flag.
    std::vector<PointwiseRow> pointwise;
    std::array<double, 3> pointwise_shell_sup{};
    bool pointwise_flagged = false;

    // (c) tradeoff sweep at the transport level.
    std::vector<TradeoffEntry> tradeoff;

    // Prop-3.3-style x-weighted scan per level and theta.
    std::vector<ThetaRow> theta_rows;

    // (d) largest bounded velocity weight per ladder level.
    std::vector<int> max_bounded_weight;
};

/**
 * Run the audit.  The datum must vanish for |x| > 1 (support violation is a
 * precondition error), N in [0, 8], and the march must resolve at least 8
 * trapezoid steps.  Throws std::invalid_argument on any of these.
 */
MixtureAuditReport enhanced_mixture_audit(std::shared_ptr<const CollisionOperator> op,
                                          const SlabGeometry &geom,
                                          const CompactDatum &datum,
                                          const MixtureAuditParams &params);

} // namespace kinwave

#endif // KINWAVE_MIXTURE_AUDIT_HPP
