#include "kinwave/transport.hpp"

#include <unsupported/Eigen/MatrixFunctions>

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <string>

namespace kinwave {

std::complex<double> transport_factor(double nu, double vx, double eta, double t) {
    const double damp = std::exp(-nu * t);
    const double phase = -vx * eta * t;
    return {damp * std::cos(phase), damp * std::sin(phase)};
}

namespace {

/// Matrix of transport factors over a time span dt, in the field's layout.
Eigen::MatrixXcd factor_matrix(const ModeField &model, double dt) {
    const VelocityGrid &grid = model.op->grid;
    const Eigen::VectorXd &nu = model.op->nu;
    Eigen::MatrixXcd F(model.values.rows(), model.values.cols());
    for (Eigen::Index m = 0; m < F.rows(); ++m) {
        const double eta = model.geom.eta(static_cast<int>(m));
        for (Eigen::Index i = 0; i < F.cols(); ++i)
            F(m, i) = transport_factor(nu[i], grid.vx[static_cast<std::size_t>(i)], eta, dt);
    }
    return F;
}

/**
 * K applied on the velocity index of a mode-stacked matrix.  K is real
 * symmetric, so (K h)(m, :) = h(m, :) * K; the complex field splits into two
 * real GEMMs, which is twice as cheap as promoting K to complex.
 */
Eigen::MatrixXcd apply_K_modes(const Eigen::MatrixXcd &v, const Eigen::MatrixXd &K) {
    Eigen::MatrixXd vr = v.real();
    Eigen::MatrixXd vi = v.imag();
    Eigen::MatrixXd pr, pi;
    pr.noalias() = vr * K;
    pi.noalias() = vi * K;
    Eigen::MatrixXcd out(v.rows(), v.cols());
    out.real() = pr;
    out.imag() = pi;
    return out;
}

ModeField wrap_like(const ModeField &model, Eigen::MatrixXcd values) {
    ModeField f;
    f.geom = model.geom;
    f.op = model.op;
    f.values = std::move(values);
    return f;
}

} // namespace

ModeField damped_transport_mode(const ModeField &field, double t) {
    if (t < 0.0)
        throw std::invalid_argument("damped_transport_mode: t must be >= 0, got " +
                                    std::to_string(t));
    if (t == 0.0) return field; // exact identity, bit for bit
    return wrap_like(field, factor_matrix(field, t).cwiseProduct(field.values));
}

ModeField collision_gain(const ModeField &field) {
    return wrap_like(field, apply_K_modes(field.values, field.op->K));
}

void march_mixture_ladder(const ModeField &h0, double t, int N, int steps,
                          const std::vector<int> &snapshot_steps,
                          const std::function<void(double, const std::vector<ModeField> &)>
                              &on_snapshot) {
    if (t < 0.0)
        throw std::invalid_argument("mixture_ladder: t must be >= 0, got " + std::to_string(t));
    if (N < 0)
        throw std::invalid_argument("mixture_ladder: N must be >= 0, got " + std::to_string(N));
    if (steps < 8)
        throw std::invalid_argument("mixture_ladder: steps must be >= 8, got " +
                                    std::to_string(steps));
    for (std::size_t s = 0; s < snapshot_steps.size(); ++s) {
        if (snapshot_steps[s] < 0 || snapshot_steps[s] > steps ||
            (s > 0 && snapshot_steps[s] <= snapshot_steps[s - 1]))
            throw std::invalid_argument(
                "mixture_ladder: snapshot steps must be ascending within [0, steps]");
    }

    const std::size_t L = static_cast<std::size_t>(N);
    const Eigen::MatrixXd &K = h0.op->K;
    const double dt = t / steps;

    std::vector<Eigen::MatrixXcd> cur(L + 1);
    cur[0] = h0.values;
    for (std::size_t m = 1; m <= L; ++m)
        cur[m] = Eigen::MatrixXcd::Zero(h0.values.rows(), h0.values.cols());

    // Trapezoid samples K h^(m)(t_j), kept across the step so each level
    // costs one GEMM per step.  Only levels 0..N-1 ever feed a Duhamel
    // integral.
    std::vector<Eigen::MatrixXcd> Kcur(L);
    for (std::size_t m = 0; m < L; ++m) Kcur[m] = apply_K_modes(cur[m], K);

    // Lattice node times; the endpoint is t itself, not t*steps/steps, so the
    // level-0 invariant (exact transport factor at the node time) holds bit
    // for bit whatever the step count.
    const auto node_time = [&](int j) { return j == steps ? t : t * j / steps; };

    const auto emit = [&](int j) {
        std::vector<ModeField> levels;
        levels.reserve(L + 1);
        for (std::size_t m = 0; m <= L; ++m) levels.push_back(wrap_like(h0, cur[m]));
        on_snapshot(node_time(j), levels);
    };

    std::size_t next_snap = 0;
    if (next_snap < snapshot_steps.size() && snapshot_steps[next_snap] == 0) {
        emit(0);
        ++next_snap;
    }
    if (t == 0.0) {
        // Degenerate lattice: every node is time 0.
        while (next_snap < snapshot_steps.size()) {
            emit(snapshot_steps[next_snap]);
            ++next_snap;
        }
        return;
    }

    const Eigen::MatrixXcd E = factor_matrix(h0, dt);
    std::vector<Eigen::MatrixXcd> nxt(L + 1), Knxt(L);
    for (int j = 1; j <= steps; ++j) {
        // Level 0 from the exact factor at the node time, not by repeated
        // multiplication: the ladder invariant is S^{t_j} h0 exactly.
        nxt[0] = factor_matrix(h0, node_time(j)).cwiseProduct(h0.values);
        if (L > 0) Knxt[0] = apply_K_modes(nxt[0], K);
        for (std::size_t m = 1; m <= L; ++m) {
            nxt[m] = E.cwiseProduct(cur[m] + (0.5 * dt) * Kcur[m - 1]) +
                     (0.5 * dt) * Knxt[m - 1];
            if (m < L) Knxt[m] = apply_K_modes(nxt[m], K);
        }
        cur.swap(nxt);
        Kcur.swap(Knxt);
        if (next_snap < snapshot_steps.size() && snapshot_steps[next_snap] == j) {
            emit(j);
            ++next_snap;
        }
    }
}

MixtureLadder mixture_ladder(const ModeField &h0, double t, int N, int steps) {
    MixtureLadder out;
    out.N = N;
    out.time_steps = steps;
    out.t = t;
    march_mixture_ladder(h0, t, N, steps, {steps},
                         [&](double, const std::vector<ModeField> &levels) {
                             out.levels = levels;
                         });
    return out;
}

ModeField full_green_mode(const ModeField &h0, double t, const CollisionOperator &op) {
    if (t < 0.0)
        throw std::invalid_argument("full_green_mode: t must be >= 0, got " +
                                    std::to_string(t));
    if (op.grid.n != h0.op->grid.n || op.grid.R != h0.op->grid.R)
        throw std::invalid_argument("full_green_mode: bundle grid does not match the field");
    if (t == 0.0) return h0;

    const Eigen::Index nv = h0.values.cols();
    ModeField out = ModeField::zero_like(h0);
    Eigen::MatrixXcd A(nv, nv);
    for (Eigen::Index m = 0; m < h0.values.rows(); ++m) {
        const double eta = h0.geom.eta(static_cast<int>(m));
        A = op.K.cast<std::complex<double>>();
        for (Eigen::Index i = 0; i < nv; ++i)
            A(i, i) -= std::complex<double>(op.nu[i],
                                            op.grid.vx[static_cast<std::size_t>(i)] * eta);
        Eigen::MatrixXcd At = t * A;
        out.values.row(m) = (At.exp() * h0.values.row(m).transpose()).transpose();
    }
    return out;
}

ModeField full_green_march(const ModeField &h0, double t, int steps) {
    if (t < 0.0)
        throw std::invalid_argument("full_green_march: t must be >= 0, got " +
                                    std::to_string(t));
    if (steps < 8)
        throw std::invalid_argument("full_green_march: steps must be >= 8, got " +
                                    std::to_string(steps));
    if (t == 0.0) return h0;

    const Eigen::MatrixXd &K = h0.op->K;
    const double dt = t / steps;
    const Eigen::MatrixXcd E = factor_matrix(h0, dt);

    // Exponential-trapezoid step, implicit in K:
    //   u_{j+1} = E (u_j + dt/2 K u_j) + dt/2 K u_{j+1},
    // so every mode shares one real factorization of (I - dt/2 K).  The
    // scheme is exact in the transport factor, second order in K, and
    // A-stable; LU instead of LDLT because I - dt/2 K need not be definite
    // at coarse steps.
    Eigen::MatrixXd M = -0.5 * dt * K;
    M.diagonal().array() += 1.0;
    Eigen::PartialPivLU<Eigen::MatrixXd> lu(M);

    Eigen::MatrixXcd cur = h0.values;
    for (int j = 1; j <= steps; ++j) {
        const Eigen::MatrixXcd Kcur = apply_K_modes(cur, K);
        const Eigen::MatrixXcd B = E.cwiseProduct(cur + (0.5 * dt) * Kcur);
        // Solve (I - dt/2 K) u^T = B^T for each mode row, split into real
        // and imaginary passes (the factorization is real).
        Eigen::MatrixXd xr = lu.solve(B.real().transpose());
        Eigen::MatrixXd xi = lu.solve(B.imag().transpose());
        cur.real() = xr.transpose();
        cur.imag() = xi.transpose();
    }
    return wrap_like(h0, std::move(cur));
}

SplitSolution particle_fluid_split(const ModeField &h0, double t, int N, int steps) {
    if (N < 1)
        throw std::invalid_argument("particle_fluid_split: N must be >= 1, got " +
                                    std::to_string(N));
    if (steps == 0) steps = std::max(8, static_cast<int>(std::ceil(64.0 * t)));

    MixtureLadder ladder = mixture_ladder(h0, t, N, steps);
    ModeField full = full_green_march(h0, t, steps);

    SplitSolution split;
    split.N = N;
    split.particle = ModeField::zero_like(h0);
    for (const ModeField &lvl : ladder.levels) split.particle.values += lvl.values;
    split.fluid = wrap_like(h0, full.values - split.particle.values);
    split.source = wrap_like(
        h0, apply_K_modes(ladder.levels[static_cast<std::size_t>(N)].values, h0.op->K));
    return split;
}

} // namespace kinwave
