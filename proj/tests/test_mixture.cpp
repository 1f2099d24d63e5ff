/**
 * Mixture-audit checks on the production slab (X = 40, 256 modes) over the
 * n = 10 velocity bundle.  One ladder march (N = 6, t up to 4) feeds the
 * weighted-L2 decay fit, the pointwise compensated-weight table, the
 * x-weighted per-level scan, and the per-level weight-gain ledder; the
 * space/velocity weight tradeoff sweep is closed-form and needs no march.
 *
 * The discriminating physics: the pure transport level pays for spatial
 * decay (1+|x|)^{-M} with velocity weight at the exchange rate
 * M(1-gamma) + P <= Q, while six collision passes lift the budget far past
 * it.  The same (M, P) = (4, 2) pair that must flag at level zero must come
 * out clean at level six.
 */
#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include "kinwave/kernel_cache.hpp"
#include "kinwave/mixture_audit.hpp"
#include "kinwave/operator_assembly.hpp"

#include <cmath>
#include <memory>
#include <vector>

using namespace kinwave;

namespace {

std::shared_ptr<const CollisionOperator> audit_bundle() {
    static std::shared_ptr<const CollisionOperator> op =
        std::make_shared<CollisionOperator>(assemble_or_load(
            cache_dir_from_env(), VelocityGrid::make(10, 6.0), KernelParams{}));
    return op;
}

/// The one expensive march, shared by every case that reads the report.
const MixtureAuditReport &default_audit() {
    static MixtureAuditReport rep = enhanced_mixture_audit(
        audit_bundle(), SlabGeometry::make(40.0, 256), CompactDatum{},
        MixtureAuditParams{});
    return rep;
}

} // namespace

TEST_CASE("tradeoff sweep separates conforming from violating weight pairs") {
    // N = 0 keeps the march trivial; the sweep itself is closed-form.
    MixtureAuditParams p;
    p.N = 0;
    p.t_samples = {0.5, 1.0};
    MixtureAuditReport rep = enhanced_mixture_audit(
        audit_bundle(), SlabGeometry::make(40.0, 256), CompactDatum{}, p);

    REQUIRE(rep.tradeoff.size() == 9);
    for (const TradeoffEntry &e : rep.tradeoff) {
        MESSAGE("tradeoff M=", e.M, " P=", e.P, " excess=", e.excess, " xi=",
                e.shell_sup[0], "/", e.shell_sup[1], "/", e.shell_sup[2], " reach=",
                e.reach_sup[0], "/", e.reach_sup[1], "/", e.reach_sup[2],
                std::string(e.flagged ? " FLAG" : " ok"));
        CHECK(std::isfinite(e.sup_weighted));
        CHECK(e.sup_weighted > 0.0);
        // Conforming pairs (excess <= 0) stay shell-flat or decaying; pairs
        // one full unit over the exchange line must be caught.
        CHECK(e.flagged == (e.excess > 0.5));
    }
}

TEST_CASE("level-N weighted L2 decays exponentially") {
    const MixtureAuditReport &rep = default_audit();
    REQUIRE(rep.times.size() == 6);
    REQUIRE(rep.weighted_l2.size() == 6);
    // Snapshots land on the march lattice within half a step.
    const std::vector<double> want{0.125, 0.5, 1.0, 2.0, 3.0, 4.0};
    for (std::size_t i = 0; i < want.size(); ++i)
        CHECK(std::abs(rep.times[i] - want[i]) <= 0.5 * 4.0 / 128.0 + 1e-12);

    for (double v : rep.weighted_l2) CHECK(v > 0.0);
    // Past the fill-in transient the norm falls monotonically.
    CHECK(rep.weighted_l2[3] < rep.weighted_l2[2]);
    CHECK(rep.weighted_l2[4] < rep.weighted_l2[3]);
    CHECK(rep.weighted_l2[5] < rep.weighted_l2[4]);

    MESSAGE("fitted rate = ", rep.fitted_rate, ", rms = ", rep.fit_rms);
    CHECK(rep.fitted_rate > 0.3);
    CHECK(rep.fit_rms < 0.5);
}

TEST_CASE("pointwise compensated weights stay shell-bounded at level N") {
    const MixtureAuditReport &rep = default_audit();
    REQUIRE(!rep.pointwise.empty());
    for (const PointwiseRow &r : rep.pointwise) CHECK(std::isfinite(r.weighted_sup));

    MESSAGE("pointwise shells = ", rep.pointwise_shell_sup[0], " / ",
            rep.pointwise_shell_sup[1], " / ", rep.pointwise_shell_sup[2]);
    // Six collision passes buy (M, P) = (4, 2) at Q = 2 — the very pair the
    // transport level fails on — so no velocity-shell blow-up here.
    CHECK(!rep.pointwise_flagged);
}

TEST_CASE("x-weighted per-level scan stays clean") {
    const MixtureAuditReport &rep = default_audit();
    REQUIRE(rep.theta_rows.size() == 9); // levels {0, 3, 6} x theta {0, 1, 2}
    for (const ThetaRow &row : rep.theta_rows) {
        MESSAGE("level ", row.level, " theta ", row.theta, " shells = ",
                row.shell_sup[0], " / ", row.shell_sup[1], " / ", row.shell_sup[2]);
        CHECK(!row.flagged);
    }
}

TEST_CASE("admissible velocity weight grows with the ladder level") {
    const MixtureAuditReport &rep = default_audit();
    REQUIRE(rep.max_bounded_weight.size() == 7);
    MESSAGE("max bounded weight per level = ", rep.max_bounded_weight[0], " ",
            rep.max_bounded_weight[1], " ", rep.max_bounded_weight[2], " ",
            rep.max_bounded_weight[3], " ", rep.max_bounded_weight[4], " ",
            rep.max_bounded_weight[5], " ", rep.max_bounded_weight[6]);

    // Level 0 is exact: the compensator cancels the damping, leaving the
    // datum profile (1+|xi|)^{-2}, so the scan stops exactly at 2.
    CHECK(rep.max_bounded_weight.front() == 2);
    // Each collision pass gains decay, never loses it.
    for (std::size_t j = 1; j < rep.max_bounded_weight.size(); ++j)
        CHECK(rep.max_bounded_weight[j] >= rep.max_bounded_weight[j - 1]);
    // Six passes at gain ~(2 - gamma) = 1.5 per pass saturate the scan cap.
    CHECK(rep.max_bounded_weight.back() == 8);
}

TEST_CASE("audit reports are deterministic") {
    MixtureAuditParams p;
    p.N = 2;
    p.steps_per_unit = 16;
    p.t_samples = {0.5, 1.0};
    SlabGeometry small = SlabGeometry::make(20.0, 64);
    MixtureAuditReport a =
        enhanced_mixture_audit(audit_bundle(), small, CompactDatum{}, p);
    MixtureAuditReport b =
        enhanced_mixture_audit(audit_bundle(), small, CompactDatum{}, p);

    REQUIRE(a.weighted_l2.size() == b.weighted_l2.size());
    for (std::size_t i = 0; i < a.weighted_l2.size(); ++i)
        CHECK(a.weighted_l2[i] == b.weighted_l2[i]);
    CHECK(a.fitted_rate == b.fitted_rate);
    REQUIRE(a.pointwise.size() == b.pointwise.size());
    for (std::size_t i = 0; i < a.pointwise.size(); ++i)
        CHECK(a.pointwise[i].weighted_sup == b.pointwise[i].weighted_sup);
    REQUIRE(a.tradeoff.size() == b.tradeoff.size());
    for (std::size_t i = 0; i < a.tradeoff.size(); ++i)
        CHECK(a.tradeoff[i].sup_weighted == b.tradeoff[i].sup_weighted);
}

TEST_CASE("audit input validation") {
    SlabGeometry geom = SlabGeometry::make(20.0, 64);
    MixtureAuditParams p;
    p.t_samples = {0.5, 1.0};
    p.steps_per_unit = 16;
    p.N = 1;

    // Datum must vanish outside the unit slab cell.
    CHECK_THROWS_AS(enhanced_mixture_audit(audit_bundle(), geom,
                                           CompactDatum{2.0, 0.8, 0.5}, p),
                    std::invalid_argument);

    auto with = [&](auto mutate) {
        MixtureAuditParams q = p;
        mutate(q);
        return [=] {
            enhanced_mixture_audit(audit_bundle(), geom, CompactDatum{}, q);
        };
    };
    CHECK_THROWS_AS(with([](MixtureAuditParams &q) { q.N = 9; })(),
                    std::invalid_argument);
    CHECK_THROWS_AS(with([](MixtureAuditParams &q) { q.N = -1; })(),
                    std::invalid_argument);
    CHECK_THROWS_AS(with([](MixtureAuditParams &q) { q.steps_per_unit = 0; })(),
                    std::invalid_argument);
    CHECK_THROWS_AS(with([](MixtureAuditParams &q) { q.t_samples = {1.0, 0.5}; })(),
                    std::invalid_argument);
    CHECK_THROWS_AS(with([](MixtureAuditParams &q) { q.t_samples = {1.0}; })(),
                    std::invalid_argument);
    // Two samples on the same march node cannot be told apart.
    CHECK_THROWS_AS(
        with([](MixtureAuditParams &q) { q.t_samples = {0.5, 0.501, 1.0}; })(),
        std::invalid_argument);
}
