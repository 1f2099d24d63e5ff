#include "kinwave/convolve.hpp"

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <stdexcept>

#include "kinwave/common.hpp"
#include "kinwave/quadrature.hpp"

namespace kinwave {

namespace {

// ----------------------------------------------------------------------------
// Cumulative radial mass H(w) = int_0^w u E(u, T) du on a graded knot grid.
// H' = w E(w) is stored alongside, so the cubic-Hermite interpolant matches
// value and slope at every knot; between knots the error is O(h^4) against
// grids already graded to the profile width.
// ----------------------------------------------------------------------------
struct HTable {
    std::vector<double> w, H, dH;

    double eval(double x) const {
        if (x <= 0.0) return 0.0;
        if (x >= w.back()) return H.back();
        std::size_t i = (std::upper_bound(w.begin(), w.end(), x) - w.begin()) - 1;
        double h = w[i + 1] - w[i];
        double u = (x - w[i]) / h;
        double u2 = u * u, u3 = u2 * u;
        return H[i] * (2.0 * u3 - 3.0 * u2 + 1.0) + H[i + 1] * (3.0 * u2 - 2.0 * u3) +
               h * (dH[i] * (u3 - 2.0 * u2 + u) + dH[i + 1] * (u3 - u2));
    }
};

double ridge_speed(const Envelope &e) {
    return e.kind == Envelope::Kind::Huygens ? std::abs(e.speed) : 0.0;
}

/// R_max for the s-integral at radius r: covers the fastest ridge plus many
/// profile widths.  range_scale stretches the box for truncation probes.
double truncation_radius(const Envelope &e1, const Envelope &e2, double r, double t,
                         const ConvQuadrature &q) {
    double v = std::max(ridge_speed(e1), ridge_speed(e2));
    return q.range_scale * (r + v * t + q.range_pad * std::sqrt(1.0 + t) + q.range_extra);
}

void add_graded(std::vector<double> &knots, double lo, double hi, double step, double cap) {
    lo = std::max(lo, 0.0);
    hi = std::min(hi, cap);
    if (!(step > 0.0) || hi <= lo) return;
    int n = std::max(1, static_cast<int>(std::ceil((hi - lo) / step)));
    for (int i = 0; i <= n; ++i) knots.push_back(lo + (hi - lo) * i / n);
}

HTable build_htable(const Envelope &e, double T, double umax, const ConvQuadrature &q) {
    int base = std::max(8, static_cast<int>(std::llround(q.table_base_cells * q.range_scale)));
    std::vector<double> knots;
    knots.reserve(base + 26 * q.table_per_sigma);
    for (int i = 0; i <= base; ++i) knots.push_back(umax * i / base);

    double sigma = std::sqrt(1.0 + T);
    double fine = sigma / q.table_per_sigma;
    if (e.kind == Envelope::Kind::Huygens) {
        add_graded(knots, e.speed * T - 10.0 * sigma, e.speed * T + 10.0 * sigma, fine, umax);
    } else if (e.kind == Envelope::Kind::Diffusion) {
        add_graded(knots, 0.0, 10.0 * sigma, fine, umax);
    } else {
        // static kernels vary on unit scale near the origin
        add_graded(knots, 0.0, 10.0, 1.0 / q.table_per_sigma, umax);
    }
    if (e.cone_gated) {
        // sandwich the indicator jump in a thin cell so both neighbouring cells
        // interpolate one-sided smooth data (H has a corner, not a jump)
        double g = e.gate_speed * T;
        double eps = 1e-4 * (1.0 + sigma);
        if (g > eps && g < umax - eps) {
            knots.push_back(g - eps);
            knots.push_back(g);
            knots.push_back(g + eps);
        }
    }
    std::sort(knots.begin(), knots.end());
    double gap = 1e-8 * (1.0 + umax);
    std::vector<double> w;
    w.reserve(knots.size());
    for (double k : knots)
        if (w.empty() || k - w.back() > gap) w.push_back(k);
    if (w.back() < umax) w.push_back(umax);
    w.front() = 0.0;

    std::size_t n = w.size();
    HTable tab;
    tab.w = std::move(w);
    tab.H.assign(n, 0.0);
    tab.dH.resize(n);
    for (std::size_t i = 0; i < n; ++i) tab.dH[i] = tab.w[i] * e.eval(tab.w[i], T);
    const Quadrature1D &gl = gauss_legendre(q.table_gl);
    for (std::size_t i = 0; i + 1 < n; ++i) {
        double mid = 0.5 * (tab.w[i] + tab.w[i + 1]);
        double half = 0.5 * (tab.w[i + 1] - tab.w[i]);
        double acc = 0.0;
        for (std::size_t k = 0; k < gl.size(); ++k) {
            double u = mid + half * gl.nodes[k];
            acc += gl.weights[k] * u * e.eval(u, T);
        }
        tab.H[i + 1] = tab.H[i] + half * acc;
    }
    return tab;
}

/**
 * Panel edges for the s-integral at radius r, elapsed time T = t - tau,
 * source time tau.  Panels align to: the source's ridge/gate and origin
 * structure (evaluated pointwise at the nodes), the |r-s| kink at s = r, and
 * the radii where r+s or |r-s| crosses the propagator's ridge or gate (there
 * the H-difference varies on the propagator width).  Gaps wider than
 * R_max / radial_subdiv are split uniformly.
 */
std::vector<double> radial_panels(const Envelope &e1, const Envelope &e2, double r,
                                  double T, double tau, double rmax,
                                  const ConvQuadrature &q) {
    std::vector<double> knots{0.0, rmax};
    auto push = [&](double s) {
        if (s > 0.0 && s < rmax) knots.push_back(s);
    };
    push(r);
    double s1 = std::sqrt(1.0 + T), s2 = std::sqrt(1.0 + tau);
    static const double ladder[] = {1.0, 2.0, 3.0, 5.0, 10.0};
    if (e2.kind == Envelope::Kind::Huygens) {
        double c2 = e2.speed * tau;
        push(c2);
        for (double u : ladder) {
            push(c2 - u * s2);
            push(c2 + u * s2);
        }
    } else {
        double scale = e2.kind == Envelope::Kind::Diffusion ? s2 : 1.0;
        for (double u : ladder) push(u * scale);
    }
    if (e2.cone_gated) push(e2.gate_speed * tau);

    std::vector<double> cross;
    double cross_w = s1; // width of the H-difference structure at a crossing
    if (e1.kind == Envelope::Kind::Huygens) {
        double c1 = e1.speed * T;
        cross = {r - c1, r + c1, c1 - r};
    } else {
        // H saturates around w = 0 (on scale s1 for diffusion, unit scale for
        // the static kernels), so the integrand bumps where |r-s| sweeps zero
        cross.push_back(r);
        if (e1.kind != Envelope::Kind::Diffusion) cross_w = 1.0;
    }
    if (e1.cone_gated) {
        double g1 = e1.gate_speed * T;
        cross.push_back(r - g1);
        cross.push_back(r + g1);
        cross.push_back(g1 - r);
    }
    for (double s0 : cross)
        for (double u : {1.0, 2.0, 3.0}) {
            push(s0);
            push(s0 - u * cross_w);
            push(s0 + u * cross_w);
        }

    std::sort(knots.begin(), knots.end());
    double gap = 1e-9 * (1.0 + rmax);
    std::vector<double> edges;
    edges.reserve(knots.size());
    for (double k : knots)
        if (edges.empty() || k - edges.back() > gap) edges.push_back(k);
    if (edges.back() < rmax) edges.push_back(rmax);

    int subdiv = std::max(1, static_cast<int>(std::llround(q.radial_subdiv * q.range_scale)));
    double wmax = rmax / subdiv;
    std::vector<double> out{edges.front()};
    for (std::size_t i = 1; i < edges.size(); ++i) {
        double a = edges[i - 1], b = edges[i];
        int nsplit = std::max(1, static_cast<int>(std::ceil((b - a) / wmax)));
        for (int j = 1; j <= nsplit; ++j) out.push_back(a + (b - a) * j / nsplit);
    }
    return out;
}

/// Spatial convolution int E1(|x-y|, T) E2(|y|, tau) dy at r = |x| via the
/// one-dimensional reduction; r below 1e-9 takes the analytic r -> 0 limit.
double radial_conv(const Envelope &e1, const Envelope &e2, const HTable &h1, double r,
                   double T, double tau, double rmax, const ConvQuadrature &q) {
    const double pi = std::acos(-1.0);
    const Quadrature1D &gl = gauss_legendre(q.radial_gl);
    std::vector<double> panels = radial_panels(e1, e2, r, T, tau, rmax, q);
    double acc = 0.0;
    if (r < 1e-9) {
        // H(r+s) - H(|r-s|) ~ 2 r s E1(s): the 2 pi / r prefactor cancels
        for (std::size_t p = 0; p + 1 < panels.size(); ++p) {
            double mid = 0.5 * (panels[p] + panels[p + 1]);
            double half = 0.5 * (panels[p + 1] - panels[p]);
            double sum = 0.0;
            for (std::size_t k = 0; k < gl.size(); ++k) {
                double s = mid + half * gl.nodes[k];
                sum += gl.weights[k] * s * s * e1.eval(s, T) * e2.eval(s, tau);
            }
            acc += half * sum;
        }
        return 4.0 * pi * acc;
    }
    for (std::size_t p = 0; p + 1 < panels.size(); ++p) {
        double mid = 0.5 * (panels[p] + panels[p + 1]);
        double half = 0.5 * (panels[p + 1] - panels[p]);
        double sum = 0.0;
        for (std::size_t k = 0; k < gl.size(); ++k) {
            double s = mid + half * gl.nodes[k];
            double hdiff = h1.eval(r + s) - h1.eval(std::abs(r - s));
            sum += gl.weights[k] * s * e2.eval(s, tau) * hdiff;
        }
        acc += half * sum;
    }
    return 2.0 * pi / r * acc;
}

struct TimeNode {
    double tau = 0.0;
    double weight = 0.0;
    HTable table;
};

std::vector<TimeNode> build_time_nodes(const Envelope &e1, double t, double umax,
                                       const ConvQuadrature &q) {
    int panels = std::max(1, q.time_panels);
    const Quadrature1D &gl = gauss_legendre(q.time_gl);
    std::vector<TimeNode> nodes;
    nodes.reserve(panels * gl.size());
    for (int p = 0; p < panels; ++p) {
        double a = t * p / panels, b = t * (p + 1) / panels;
        double mid = 0.5 * (a + b), half = 0.5 * (b - a);
        for (std::size_t k = 0; k < gl.size(); ++k) {
            TimeNode n;
            n.tau = mid + half * gl.nodes[k];
            n.weight = half * gl.weights[k];
            n.table = build_htable(e1, t - n.tau, umax, q);
            nodes.push_back(std::move(n));
        }
    }
    return nodes;
}

/// conv(E1,E2)(x, t) for every x in xs at one t.  The tau tables depend only
/// on t and the largest radius, so the whole batch shares them.
std::vector<double> conv_batch(const Envelope &e1, const Envelope &e2, double t,
                               const std::vector<double> &xs, const ConvQuadrature &q) {
    std::vector<double> out(xs.size(), 0.0);
    if (t <= 0.0 || xs.empty()) return out;
    double rtop = *std::max_element(xs.begin(), xs.end());
    double umax = rtop + truncation_radius(e1, e2, rtop, t, q);
    std::vector<TimeNode> nodes = build_time_nodes(e1, t, umax, q);
    for (std::size_t i = 0; i < xs.size(); ++i) {
        double rmax = truncation_radius(e1, e2, xs[i], t, q);
        double acc = 0.0;
        for (const TimeNode &n : nodes)
            acc += n.weight * radial_conv(e1, e2, n.table, xs[i], t - n.tau, n.tau, rmax, q);
        out[i] = acc;
    }
    return out;
}

} // namespace

ConvQuadrature ConvQuadrature::doubled() const {
    ConvQuadrature q = *this;
    q.time_panels *= 2;
    q.radial_subdiv *= 2;
    q.table_base_cells *= 2;
    q.table_per_sigma *= 2;
    return q;
}

double conv_envelope(const Envelope &e1, const Envelope &e2, double x_mag, double t,
                     const ConvQuadrature &quad) {
    if (t <= 0.0) return 0.0;
    return conv_batch(e1, e2, t, std::vector<double>{x_mag}, quad)[0];
}

std::vector<double> audit_time_lattice() {
    std::vector<double> ts;
    ts.reserve(13);
    for (int k = 0; k <= 12; ++k) ts.push_back(std::pow(10.0, k / 6.0));
    return ts;
}

std::vector<double> audit_radius_lattice(double t) {
    const double c = FLUID_SOUND_SPEED;
    double st = std::sqrt(1.0 + t);
    std::vector<double> xs = {0.0,        0.5 * t, t - st,     t,   t + st,
                              2.0 * t,    0.5 * c * t, c * t - st, c * t,
                              c * t + st, 2.0 * c * t, 1.0,       5.0, 20.0};
    for (double &x : xs) x = std::max(x, 0.0);
    std::sort(xs.begin(), xs.end());
    std::vector<double> out;
    double gap = 1e-9 * (1.0 + t);
    for (double x : xs)
        if (out.empty() || x - out.back() > gap) out.push_back(x);
    return out;
}

ConvolutionReport convolution_audit(const std::string &name, const Envelope &e1,
                                    const Envelope &e2, const std::vector<Envelope> &bound,
                                    const std::vector<double> &t_lattice,
                                    const ConvQuadrature &quad, int threads) {
    if (bound.empty())
        throw std::invalid_argument("convolution_audit: empty bound envelope list");
    for (std::size_t i = 0; i < t_lattice.size(); ++i) {
        if (!(t_lattice[i] > 0.0))
            throw std::invalid_argument("convolution_audit: times must be positive");
        if (i > 0 && !(t_lattice[i] > t_lattice[i - 1]))
            throw std::invalid_argument("convolution_audit: times must be ascending");
    }

    ConvolutionReport rep;
    rep.name = name;
    rep.lhs_legend = e1.describe() + " * " + e2.describe();
    for (std::size_t i = 0; i < bound.size(); ++i)
        rep.rhs_legend += (i ? " + " : "") + bound[i].describe();

    std::vector<std::vector<ConvPoint>> per_t(t_lattice.size());
    parallel_for_chunks(t_lattice.size(), resolve_threads(threads),
                        [&](std::size_t lo, std::size_t hi) {
                            for (std::size_t k = lo; k < hi; ++k) {
                                double t = t_lattice[k];
                                std::vector<double> xs = audit_radius_lattice(t);
                                std::vector<double> vals = conv_batch(e1, e2, t, xs, quad);
                                per_t[k].resize(xs.size());
                                for (std::size_t j = 0; j < xs.size(); ++j) {
                                    ConvPoint &p = per_t[k][j];
                                    p.x_mag = xs[j];
                                    p.t = t;
                                    p.value = vals[j];
                                    for (const Envelope &benv : bound)
                                        p.bound += benv.eval(xs[j], t);
                                    p.ratio = p.value / p.bound;
                                }
                            }
                        });

    std::vector<double> tsup(t_lattice.size(), 0.0);
    for (std::size_t k = 0; k < per_t.size(); ++k) {
        for (const ConvPoint &p : per_t[k]) {
            rep.points.push_back(p);
            if (!std::isfinite(p.value) || !std::isfinite(p.ratio) || !(p.bound > 0.0))
                rep.values_finite = false;
            tsup[k] = std::max(tsup[k], p.ratio);
        }
        rep.sup_ratio = std::max(rep.sup_ratio, tsup[k]);
    }
    // Asymptotic-regime sanity over the last decade of t, comparing growth
    // across scales rather than adjacent lattice steps (per-t sups oscillate
    // a few percent after settling as the argmax migrates between lattice
    // radii; adjacent-step rules misfire on that).  Split the decade at its
    // geometric midpoint: healthy ratios either stopped growing across the
    // second half (G2 <= 1.05) or decelerated measurably (G2 <= 0.95 G1).
    // A power-law divergence keeps G2 = G1 = 10^{alpha/2} and trips both.
    // Measured saturating items have G2/G1 <= 0.89.
    if (t_lattice.size() >= 3) {
        double t_end = t_lattice.back();
        std::size_t i0 = 0;
        while (i0 < t_lattice.size() && t_lattice[i0] < 0.1 * t_end * (1.0 - 1e-12)) ++i0;
        double t_mid = std::sqrt(t_lattice[i0] * t_end);
        std::size_t im = i0;
        while (im < t_lattice.size() && t_lattice[im] < t_mid * (1.0 - 1e-12)) ++im;
        if (i0 < im && im + 1 < t_lattice.size() && tsup[i0] > 0.0 && tsup[im] > 0.0) {
            double g1 = tsup[im] / tsup[i0];
            double g2 = tsup.back() / tsup[im];
            rep.trend_flagged = !(g2 <= 1.05 || g2 <= 0.95 * g1);
        }
    }

    // Truncation sensitivity: recompute the interior and far-field points of
    // the largest time with the radial box stretched 1.5x at matched node
    // density; the baseline values are reused from the lattice pass.
    if (!t_lattice.empty()) {
        double t = t_lattice.back();
        const std::vector<ConvPoint> &row = per_t.back();
        std::vector<double> probe = {row.front().x_mag, row.back().x_mag};
        std::vector<double> base = {row.front().value, row.back().value};
        ConvQuadrature wide = quad;
        wide.range_scale *= 1.5;
        std::vector<double> ext = conv_batch(e1, e2, t, probe, wide);
        for (std::size_t j = 0; j < probe.size(); ++j) {
            double ref = std::max(std::abs(base[j]), 1e-300);
            rep.tail_fraction =
                std::max(rep.tail_fraction, std::abs(ext[j] - base[j]) / ref);
        }
        rep.accuracy_warning = rep.tail_fraction > 0.01;
    }
    return rep;
}

std::vector<ConvolutionReport> interaction_suite(const ConvQuadrature &quad, int threads) {
    const double c = FLUID_SOUND_SPEED;
    const double m = 3.0;        // interior/ridge profile order ("any large m")
    const double theta_x = 5.25; // exponential-tail spatial order at k=3, gamma=1/2
    const std::vector<Envelope> ridge_rhs = {Envelope::diffusion(2.0, 1.5),
                                             Envelope::huygens(2.5, 1.0, c)};
    const std::vector<double> ts = audit_time_lattice();

    std::vector<ConvolutionReport> out;
    out.reserve(7);
    out.push_back(convolution_audit("interior-x-interior", Envelope::diffusion(2.0, m),
                                    Envelope::diffusion(3.0, 3.0),
                                    {Envelope::diffusion(2.0, 3.0)}, ts, quad, threads));
    out.push_back(convolution_audit(
        "cone-interior-x-ridge", Envelope::diffusion(2.0, 1.5).gated(c),
        Envelope::huygens(4.0, 2.0, c), ridge_rhs, ts, quad, threads));
    out.push_back(convolution_audit("ridge-x-interior", Envelope::huygens(2.5, m, c),
                                    Envelope::diffusion(3.0, 3.0), ridge_rhs, ts, quad,
                                    threads));
    out.push_back(convolution_audit("interior-x-ridge", Envelope::diffusion(2.0, m),
                                    Envelope::huygens(4.0, 2.0, c), ridge_rhs, ts, quad,
                                    threads));
    out.push_back(convolution_audit("ridge-x-ridge", Envelope::huygens(2.5, m, c),
                                    Envelope::huygens(4.0, 2.0, c), ridge_rhs, ts, quad,
                                    threads));
    out.push_back(convolution_audit(
        "exp-tail-x-interior", Envelope::static_exp(1.0, theta_x),
        Envelope::diffusion(3.0, 21.0 / 8.0), {Envelope::diffusion(3.0, 21.0 / 8.0)}, ts,
        quad, threads));
    out.push_back(convolution_audit(
        "exp-tail-x-ridge", Envelope::static_exp(1.0, theta_x),
        Envelope::huygens(31.0 / 8.0, 7.0 / 4.0, c),
        {Envelope::huygens(31.0 / 8.0, 7.0 / 4.0, c)}, ts, quad, threads));
    return out;
}

std::vector<ConvolutionReport> source_preservation_suite(const ConvQuadrature &quad,
                                                         int threads) {
    const double c = FLUID_SOUND_SPEED;
    const std::vector<double> ts = audit_time_lattice();
    std::vector<ConvolutionReport> out;
    out.reserve(2);
    out.push_back(convolution_audit(
        "diffusion-profile-source", Envelope::diffusion(3.0, 3.0),
        Envelope::static_exp(1.0, 6.0), {Envelope::diffusion(3.0, 3.0)}, ts, quad, threads));
    out.push_back(convolution_audit(
        "huygens-profile-source", Envelope::huygens(2.0, 2.0, c),
        Envelope::static_exp(1.0, 5.0), {Envelope::huygens(2.0, 2.0, c)}, ts, quad,
        threads));
    return out;
}

} // namespace kinwave
