#include "kinwave/mixture_audit.hpp"

#include "kinwave/common.hpp"
#include "kinwave/transport.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <stdexcept>
#include <string>

namespace kinwave {

namespace {

/// Shell index 0/1/2 for a radius against thirds of a maximum.
int shell_of(double r, double rmax) {
    if (r <= rmax / 3.0) return 0;
    if (r <= 2.0 * rmax / 3.0) return 1;
    return 2;
}

/// Blow-up detector for march-based shell tables: every step outward must
/// exceed the previous shell by the factor.  The conjunction guards against
/// the reconstruction-ripple floor, which can lift a single far shell but
/// not produce consecutive geometric growth.
bool shells_grow(const std::array<double, 3> &s, double factor) {
    const double floor_ = 1e-12 * (s[0] + s[1] + s[2]) + 1e-300;
    return s[1] > factor * std::max(s[0], floor_) &&
           s[2] > factor * std::max(s[1], floor_) && s[1] > floor_ && s[2] > floor_;
}

/// Blow-up detector for the closed-form tradeoff shells (no ripple floor
/// there): monotone outward growth with a net factor across the span.  The
/// mixed (M, P) violations split their excess between the two shell
/// families, so per-step ratios sit near sqrt of the net; measured on the
/// canonical pairs (gamma = 0.5, Q = 2, n = 10) the conforming/violating
/// net-growth gap is 0.86 vs 2.18, and 1.9 splits it.
bool shells_grow_net(const std::array<double, 3> &s, double net_factor) {
    const double floor_ = 1e-12 * (s[0] + s[1] + s[2]) + 1e-300;
    return s[2] > s[1] && s[1] > s[0] && s[0] > floor_ &&
           s[2] > net_factor * s[0];
}

/// Least-squares slope/intercept of y against x; returns {slope, rms misfit}.
std::array<double, 2> log_linear_fit(const std::vector<double> &x,
                                     const std::vector<double> &y) {
    const double n = static_cast<double>(x.size());
    double sx = 0, sy = 0, sxx = 0, sxy = 0;
    for (std::size_t i = 0; i < x.size(); ++i) {
        sx += x[i];
        sy += y[i];
        sxx += x[i] * x[i];
        sxy += x[i] * y[i];
    }
    const double slope = (n * sxy - sx * sy) / (n * sxx - sx * sx);
    const double icpt = (sy - slope * sx) / n;
    double rss = 0;
    for (std::size_t i = 0; i < x.size(); ++i) rss += sq(y[i] - (icpt + slope * x[i]));
    return {slope, std::sqrt(rss / n)};
}

} // namespace

MixtureAuditReport enhanced_mixture_audit(std::shared_ptr<const CollisionOperator> op,
                                          const SlabGeometry &geom,
                                          const CompactDatum &datum,
                                          const MixtureAuditParams &params) {
    if (!datum.unit_supported())
        throw std::invalid_argument(
            "enhanced_mixture_audit: datum support exceeds |x| <= 1 (center " +
            std::to_string(datum.center) + ", radius " + std::to_string(datum.radius) + ")");
    if (params.N < 0 || params.N > 8)
        throw std::invalid_argument("enhanced_mixture_audit: N must be in [0, 8], got " +
                                    std::to_string(params.N));
    if (params.steps_per_unit < 1)
        throw std::invalid_argument("enhanced_mixture_audit: steps_per_unit must be >= 1");

    std::vector<double> t_samples = params.t_samples;
    if (t_samples.empty()) t_samples = {0.125, 0.5, 1.0, 2.0, 3.0, 4.0};
    if (t_samples.size() < 2 || t_samples.front() <= 0.0 ||
        !std::is_sorted(t_samples.begin(), t_samples.end()))
        throw std::invalid_argument(
            "enhanced_mixture_audit: t_samples must be >= 2 ascending positive times");

    std::vector<double> x_probes = params.x_probes;
    if (x_probes.empty())
        x_probes = {0.0, 0.5, -0.5, 1.0, -1.0, 2.0, -2.0, 3.5, -3.5, 5.0, -5.0, 8.0, -8.0};

    const VelocityGrid &grid = op->grid;
    const double gamma = op->params.gamma;
    const double Q = datum.q_weight;
    const double vmax = *std::max_element(grid.abs_v.begin(), grid.abs_v.end());
    const double growth_factor = 1.7;

    // Map requested times onto the march lattice (nearest node).
    const double t_back = t_samples.back();
    const int steps = std::max(8, static_cast<int>(std::ceil(params.steps_per_unit * t_back)));
    std::vector<int> snap_steps;
    for (double ts : t_samples) {
        int j = static_cast<int>(std::llround(ts / t_back * steps));
        j = std::max(1, std::min(steps, j));
        if (!snap_steps.empty() && j <= snap_steps.back())
            throw std::invalid_argument(
                "enhanced_mixture_audit: t_samples collide on the march lattice; "
                "raise steps_per_unit or spread the samples");
        snap_steps.push_back(j);
    }

    const ModeField h0 = make_mode_datum(op, geom, datum);

    // Ladder levels whose x-weighted profiles we scan.
    std::vector<int> scan_levels{0};
    if (params.N >= 2) scan_levels.push_back(params.N / 2);
    if (params.N >= 1) scan_levels.push_back(params.N);
    scan_levels.erase(std::unique(scan_levels.begin(), scan_levels.end()), scan_levels.end());

    MixtureAuditReport rep;
    // theta scan raw values: [level][theta] -> per (time, probe) sup over xi.
    std::map<int, std::array<std::vector<std::vector<double>>, 3>> theta_raw;
    for (int lvl : scan_levels)
        for (int th = 0; th < 3; ++th) theta_raw[lvl][static_cast<std::size_t>(th)] = {};

    // weight-gain scan accumulators: [level][P'] -> velocity-shell sups.
    std::vector<std::array<std::array<double, 3>, 9>> gain(
        static_cast<std::size_t>(params.N) + 1);
    for (auto &per_level : gain)
        for (auto &shells : per_level) shells = {0.0, 0.0, 0.0};

    std::size_t snap_idx = 0;
    march_mixture_ladder(
        h0, t_back, params.N, steps, snap_steps,
        [&](double t, const std::vector<ModeField> &levels) {
            const ModeField &top = levels.back();
            rep.times.push_back(t);
            rep.weighted_l2.push_back(top.weighted_l2(params.P));

            // Cache the pointwise velocity profiles once per (level, probe).
            std::map<int, std::vector<Eigen::VectorXcd>> profiles;
            auto profile = [&](int lvl, std::size_t xi) -> const Eigen::VectorXcd & {
                auto &rows = profiles[lvl];
                if (rows.empty()) {
                    rows.reserve(x_probes.size());
                    for (double x : x_probes)
                        rows.push_back(levels[static_cast<std::size_t>(lvl)].eval_at(x));
                }
                return rows[xi];
            };

            // (b) pointwise compensated weight of level N.
            for (std::size_t xi = 0; xi < x_probes.size(); ++xi) {
                const Eigen::VectorXcd &v = profile(params.N, xi);
                const double xw = std::pow(1.0 + std::abs(x_probes[xi]), params.M);
                double sup = 0.0;
                for (std::size_t i = 0; i < grid.size(); ++i) {
                    const double val = std::exp(params.c0 * op->nu[Eigen::Index(i)] * t) *
                                       xw * std::pow(1.0 + grid.abs_v[i], params.P) *
                                       std::abs(v[Eigen::Index(i)]);
                    sup = std::max(sup, val);
                    auto &cell =
                        rep.pointwise_shell_sup[static_cast<std::size_t>(
                            shell_of(grid.abs_v[i], vmax))];
                    cell = std::max(cell, val);
                }
                rep.pointwise.push_back({t, x_probes[xi], sup});
            }

            // Prop-3.3 raw scan: sup over xi with weight (1+|xi|)^{Q-theta}.
            for (int lvl : scan_levels)
                for (int th = 0; th < 3; ++th) {
                    std::vector<double> per_probe(x_probes.size(), 0.0);
                    for (std::size_t xi = 0; xi < x_probes.size(); ++xi) {
                        const Eigen::VectorXcd &v = profile(lvl, xi);
                        double sup = 0.0;
                        for (std::size_t i = 0; i < grid.size(); ++i)
                            sup = std::max(sup,
                                           std::pow(1.0 + grid.abs_v[i], Q - th) *
                                               std::abs(v[Eigen::Index(i)]));
                        per_probe[xi] = sup;
                    }
                    theta_raw[lvl][static_cast<std::size_t>(th)].push_back(
                        std::move(per_probe));
                }

            // (d) weight-gain scan at the earliest sample: full e^{+nu t}
            // compensation cancels the transport damping of level 0 exactly
            // and leaves each level's velocity-decay profile visible.
            if (snap_idx == 0) {
                for (int lvl = 0; lvl <= params.N; ++lvl)
                    for (std::size_t xi = 0; xi < x_probes.size(); ++xi) {
                        const Eigen::VectorXcd &v = profile(lvl, xi);
                        for (std::size_t i = 0; i < grid.size(); ++i) {
                            const double base =
                                std::exp(op->nu[Eigen::Index(i)] * t) *
                                std::abs(v[Eigen::Index(i)]);
                            const int sh = shell_of(grid.abs_v[i], vmax);
                            for (int pw = 0; pw <= 8; ++pw) {
                                auto &cell = gain[static_cast<std::size_t>(lvl)]
                                                 [static_cast<std::size_t>(pw)]
                                                 [static_cast<std::size_t>(sh)];
                                cell = std::max(cell, std::pow(1.0 + grid.abs_v[i],
                                                               double(pw)) *
                                                          base);
                            }
                        }
                    }
            }
            ++snap_idx;
        });

    // (a) decay fit on the t >= 1 samples (early transient excluded) or on
    // everything if the sample list is all early.
    {
        std::vector<double> tf, lf;
        for (std::size_t i = 0; i < rep.times.size(); ++i)
            if (rep.times[i] >= 1.0 && rep.weighted_l2[i] > 0.0) {
                tf.push_back(rep.times[i]);
                lf.push_back(std::log(rep.weighted_l2[i]));
            }
        if (tf.size() < 2) {
            tf = rep.times;
            lf.clear();
            for (double v : rep.weighted_l2) lf.push_back(std::log(std::max(v, 1e-300)));
        }
        const auto fit = log_linear_fit(tf, lf);
        rep.fitted_rate = -fit[0];
        rep.fit_rms = fit[1];
    }

    rep.pointwise_flagged = shells_grow(rep.pointwise_shell_sup, growth_factor);

    // Prop-3.3 rows: e^{+c t} with half the fitted rate, x-weight
    // <x>^{theta/(1-gamma)}, shells in |x|.
    const double c_comp = 0.5 * std::max(rep.fitted_rate, 0.0);
    const double xmax = *std::max_element(
        x_probes.begin(), x_probes.end(),
        [](double a, double b) { return std::abs(a) < std::abs(b); });
    for (int lvl : scan_levels)
        for (int th = 0; th < 3; ++th) {
            ThetaRow row;
            row.level = lvl;
            row.theta = th;
            row.shell_sup = {0.0, 0.0, 0.0};
            const auto &snaps = theta_raw[lvl][static_cast<std::size_t>(th)];
            for (std::size_t si = 0; si < snaps.size(); ++si)
                for (std::size_t xi = 0; xi < x_probes.size(); ++xi) {
                    const double ax = std::abs(x_probes[xi]);
                    const double val = std::exp(c_comp * rep.times[si]) *
                                       std::pow(bracket(ax), th / (1.0 - gamma)) *
                                       snaps[si][xi];
                    auto &cell =
                        row.shell_sup[static_cast<std::size_t>(shell_of(ax, std::abs(xmax)))];
                    cell = std::max(cell, val);
                }
            row.flagged = shells_grow(row.shell_sup, growth_factor);
            rep.theta_rows.push_back(row);
        }

    // (d) largest P' whose outer shells stay flat, per level.
    for (int lvl = 0; lvl <= params.N; ++lvl) {
        int best = -1;
        for (int pw = 0; pw <= 8; ++pw) {
            const auto &s = gain[static_cast<std::size_t>(lvl)][static_cast<std::size_t>(pw)];
            const double floor_ = 1e-12 * (s[0] + s[1] + s[2]) + 1e-300;
            const bool flat = s[2] <= 1.25 * std::max(s[1], floor_);
            if (flat)
                best = pw;
            else
                break;
        }
        rep.max_bounded_weight.push_back(best);
    }

    // (c) tradeoff sweep on the closed-form transport level.  Probes ride
    // the rays x = vx t + u exactly (u inside the datum support), over times
    // from well under one collision time up to several.  The velocity-weight
    // channel (P > Q) shows up across |xi|-shells at the smallest t; the
    // spatial channel (M > 0 over budget) shows up across |vx|-reach shells
    // near its optimal time t ~ 2M/nu.  A slab cannot route the spatial
    // channel through |xi| (displacement is vx t), hence the two binnings.
    std::vector<std::array<double, 2>> pairs = params.tradeoff_pairs;
    if (pairs.empty())
        pairs = {{0.0, 0.0}, {0.0, 1.0}, {2.0, 1.0}, {4.0, 0.0}, {0.0, 2.0},
                 {0.0, 4.0}, {4.0, 2.0}, {8.0, 0.0}, {2.0, 3.0}};
    const double axmax =
        *std::max_element(grid.vx.begin(), grid.vx.end(),
                          [](double a, double b) { return std::abs(a) < std::abs(b); });
    const std::vector<double> sweep_t{0.0625, 0.125, 0.25, 0.5, 1.0, 2.0, 4.0};
    const std::vector<double> sweep_u{0.0, 0.45, -0.45, 0.8, -0.8};
    for (const auto &mp : pairs) {
        TradeoffEntry e;
        e.M = mp[0];
        e.P = mp[1];
        e.excess = e.M * (1.0 - gamma) + e.P - Q;
        for (double t : sweep_t)
            for (double u : sweep_u)
                for (std::size_t i = 0; i < grid.size(); ++i) {
                    const double nu = op->nu[Eigen::Index(i)];
                    const double x = grid.vx[i] * t + datum.center + u * datum.radius;
                    const double val = std::exp(-0.5 * nu * t) *
                                       std::pow(1.0 + std::abs(x), e.M) *
                                       std::pow(1.0 + grid.abs_v[i], e.P) *
                                       datum.eval(x - grid.vx[i] * t, grid.abs_v[i]);
                    if (val == 0.0) continue;
                    e.sup_weighted = std::max(e.sup_weighted, val);
                    auto &xi_cell =
                        e.shell_sup[static_cast<std::size_t>(shell_of(grid.abs_v[i], vmax))];
                    xi_cell = std::max(xi_cell, val);
                    auto &reach_cell = e.reach_sup[static_cast<std::size_t>(
                        shell_of(std::abs(grid.vx[i]), std::abs(axmax)))];
                    reach_cell = std::max(reach_cell, val);
                }
        e.flagged = shells_grow_net(e.shell_sup, 1.9) ||
                    shells_grow_net(e.reach_sup, 1.9);
        rep.tradeoff.push_back(e);
    }

    return rep;
}

} // namespace kinwave
