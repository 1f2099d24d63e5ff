#include "kinwave/operator_assembly.hpp"

#include "kinwave/common.hpp"

#include <atomic>
#include <chrono>
#include <cmath>
#include <map>
#include <thread>

namespace kinwave {

namespace {

// Integer radius key: axis coordinates are odd multiples of h/2, so
// |xi|^2 = (h/2)^2 * (a^2 + b^2 + c^2) with odd integers a, b, c.  The sum of
// squares is an exact key, immune to floating-point noise.
long radius_key(const VelocityGrid &g, int i, int j, int k) {
    long a = 2L * i - g.n + 1, b = 2L * j - g.n + 1, c = 2L * k - g.n + 1;
    return a * a + b * b + c * c;
}

} // namespace

Eigen::VectorXd collision_frequency_table(const VelocityGrid &grid,
                                          const KernelParams &params, double rel_tol,
                                          std::size_t *distinct_out) {
    std::map<long, double> by_key;
    for (int i = 0; i < grid.n; ++i)
        for (int j = 0; j < grid.n; ++j)
            for (int k = 0; k < grid.n; ++k) by_key[radius_key(grid, i, j, k)] = 0.0;

    const double scale = 0.5 * grid.h;
    for (auto &[key, value] : by_key)
        value = collision_frequency(scale * std::sqrt(double(key)), params, rel_tol);

    Eigen::VectorXd nu(grid.size());
    for (int i = 0; i < grid.n; ++i)
        for (int j = 0; j < grid.n; ++j)
            for (int k = 0; k < grid.n; ++k)
                nu[grid.index(i, j, k)] = by_key.at(radius_key(grid, i, j, k));
    if (distinct_out) *distinct_out = by_key.size();
    return nu;
}

std::vector<Vec3> diagonal_cloud(DiagonalRule rule, double h) {
    // Midpoints of a 4x4x4 split of the cell: per-axis offsets at
    // +-h/8 and +-3h/8.  No sample touches the center, where k2 blows up.
    const double shrink = (rule == DiagonalRule::HalfCellAverage) ? 0.5 : 1.0;
    const double base[4] = {-0.375, -0.125, 0.125, 0.375};
    std::vector<Vec3> cloud;
    cloud.reserve(64);
    for (double ox : base)
        for (double oy : base)
            for (double oz : base)
                cloud.push_back({shrink * h * ox, shrink * h * oy, shrink * h * oz});
    return cloud;
}

CollisionOperator assemble_operator(const VelocityGrid &grid, const KernelParams &params,
                                    const AssemblyOptions &opts) {
    params.validate();
    const auto t0 = std::chrono::steady_clock::now();

    CollisionOperator op;
    op.grid = grid;
    op.params = params;
    op.nu = collision_frequency_table(grid, params, opts.nu_rel_tol, &op.stats.distinct_radii);

    const Eigen::Index N = grid.size();
    op.K.resize(N, N);

    const std::vector<Vec3> cloud = diagonal_cloud(opts.diagonal, grid.h);
    const double w = grid.cell_weight;
    const int threads = resolve_threads(opts.threads);

    // Upper triangle, rows interleaved across threads so the shrinking row
    // lengths balance.  Each entry is written exactly once, so the result is
    // independent of the thread count.
    std::atomic<std::size_t> pair_evals{0}, nonconverged{0};
    auto rows = [&](int tid) {
        std::size_t my_pairs = 0, my_bad = 0;
        PlanarQuadUsed used;
        for (Eigen::Index i = tid; i < N; i += threads) {
            const Vec3 xi{grid.vx[i], grid.vy[i], grid.vz[i]};
            for (Eigen::Index j = i; j < N; ++j) {
                double kij;
                if (i == j) {
                    double acc = 0.0;
                    for (const Vec3 &d : cloud) {
                        const Vec3 eta{xi[0] + d[0], xi[1] + d[1], xi[2] + d[2]};
                        acc += kernel_point(xi, eta, params, opts.quad, &used);
                        ++my_pairs;
                        if (!used.converged) ++my_bad;
                    }
                    kij = acc / double(cloud.size());
                } else {
                    const Vec3 eta{grid.vx[j], grid.vy[j], grid.vz[j]};
                    kij = kernel_point(xi, eta, params, opts.quad, &used);
                    ++my_pairs;
                    if (!used.converged) ++my_bad;
                }
                op.K(i, j) = kij * w;
            }
        }
        pair_evals += my_pairs;
        nonconverged += my_bad;
    };
    if (threads <= 1) {
        rows(0);
    } else {
        std::vector<std::thread> pool;
        for (int t = 0; t < threads; ++t) pool.emplace_back(rows, t);
        for (auto &th : pool) th.join();
    }

    // Mirror the triangle, then symmetrize.  The kernel evaluator is exactly
    // swap-symmetric, so the second step changes nothing; it is kept so the
    // contract does not rest on that property.
    for (Eigen::Index i = 0; i < N; ++i)
        for (Eigen::Index j = 0; j < i; ++j) op.K(i, j) = op.K(j, i);
    op.K = 0.5 * (op.K + op.K.transpose()).eval();

    const MacroBasis basis = MacroBasis::make(grid);
    auto worst_null_residual = [&]() {
        double worst = 0.0;
        for (int c = 0; c < 5; ++c) {
            const Eigen::VectorXd chi = basis.chi.col(c);
            worst = std::max(worst, grid.norm(op.K * chi - op.nu.cwiseProduct(chi)));
        }
        return worst;
    };
    op.stats.null_residual_raw = worst_null_residual();

    if (opts.conservative) {
        // L -> (I - P) L (I - P) with P the projector onto the invariant
        // span, done in place on K = L + diag(nu).
        op.K.diagonal() -= op.nu;
        Eigen::MatrixXd t = basis.chi.transpose() * op.K;
        op.K.noalias() -= w * (basis.chi * t);
        Eigen::MatrixXd u = op.K * basis.chi;
        op.K.noalias() -= w * (u * basis.chi.transpose());
        op.K = 0.5 * (op.K + op.K.transpose()).eval();
        op.K.diagonal() += op.nu;
    }
    op.stats.null_residual = opts.conservative ? worst_null_residual()
                                               : op.stats.null_residual_raw;

    op.stats.pair_evals = pair_evals.load();
    op.stats.nonconverged = nonconverged.load();
    op.stats.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    return op;
}

} // namespace kinwave
