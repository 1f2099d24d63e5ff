#include "kinwave/wave_fit.hpp"

#include "kinwave/common.hpp"
#include "kinwave/quadrature.hpp"
#include "kinwave/smooth_cutoff.hpp"

#include <fcntl.h>
#include <sys/file.h>
#include <unistd.h>

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <optional>
#include <random>
#include <stdexcept>

namespace kinwave {

namespace {

constexpr int SLOTS = 4; // acoustic (Im<0), acoustic (Im>0), shear pair, thermal
constexpr int MOMS = 3;  // mass, axial momentum, energy

double now_seconds() {
    using clk = std::chrono::steady_clock;
    return std::chrono::duration<double>(clk::now().time_since_epoch()).count();
}

// ---------------------------------------------------------------------------
// Natural cubic spline (the table radii are few and uniform; evaluation
// clamps outside the node range, which the window integrals rely on below
// rho_min).
// ---------------------------------------------------------------------------

struct Spline {
    std::vector<double> x, y, m; // m: second derivatives at the nodes

    void build(const std::vector<double> &xs, const std::vector<double> &ys) {
        const std::size_t n = xs.size();
        x = xs;
        y = ys;
        m.assign(n, 0.0);
        if (n < 3) return; // linear fallback via zero curvature
        std::vector<double> diag(n, 2.0), rhs(n, 0.0), scratch(n, 0.0);
        for (std::size_t i = 1; i + 1 < n; ++i) {
            const double hl = x[i] - x[i - 1], hr = x[i + 1] - x[i];
            rhs[i] = 6.0 * ((y[i + 1] - y[i]) / hr - (y[i] - y[i - 1]) / hl) / (hl + hr);
            scratch[i] = hl / (hl + hr); // sub-diagonal weight; super is 1 - it
        }
        // Thomas sweep with natural ends (m[0] = m[n-1] = 0).
        for (std::size_t i = 2; i + 1 < n; ++i) {
            const double f = scratch[i] / diag[i - 1];
            diag[i] -= f * (1.0 - scratch[i - 1]);
            rhs[i] -= f * rhs[i - 1];
        }
        for (std::size_t i = n - 2; i >= 1; --i) {
            m[i] = (rhs[i] - (1.0 - scratch[i]) * m[i + 1]) / diag[i];
            if (i == 1) break;
        }
    }

    double eval(double q) const {
        if (x.empty()) return 0.0;
        if (q <= x.front()) return y.front();
        if (q >= x.back()) return y.back();
        std::size_t i = std::size_t(std::upper_bound(x.begin(), x.end(), q) - x.begin()) - 1;
        const double h = x[i + 1] - x[i], a = (x[i + 1] - q) / h, b = (q - x[i]) / h;
        return a * y[i] + b * y[i + 1] +
               ((a * a * a - a) * m[i] + (b * b * b - b) * m[i + 1]) * h * h / 6.0;
    }
};

struct CSpline {
    Spline re, im;
    void build(const std::vector<double> &xs, const std::vector<std::complex<double>> &ys) {
        std::vector<double> r(ys.size()), i(ys.size());
        for (std::size_t k = 0; k < ys.size(); ++k) {
            r[k] = ys[k].real();
            i[k] = ys[k].imag();
        }
        re.build(xs, r);
        im.build(xs, i);
    }
    std::complex<double> eval(double q) const { return {re.eval(q), im.eval(q)}; }
};

// ---------------------------------------------------------------------------
// Slot-merged eigendata
// ---------------------------------------------------------------------------

struct SlotValues {
    std::array<std::complex<double>, SLOTS> lam;
    std::array<std::array<std::complex<double>, SLOTS>, MOMS> d; // c_j * <chi_b, v_j>
};

// Branch -> slot reduction at one tabulated node.  The shear pair (branches
// 2 and 3) is merged: averaged eigenvalue, summed amplitude products, so the
// result is independent of the arbitrary basis inside the degenerate pair.
// The moment columns chi_b (b = mass, axial momentum, energy) are passed
// pre-cast to complex so one cast serves every node.
SlotValues slot_values(const std::array<std::complex<double>, 5> &lam,
                       const Eigen::MatrixXcd &vecs, const Eigen::MatrixXcd &chi_c,
                       double cell_weight, const Eigen::VectorXcd &psi_c) {
    std::array<std::complex<double>, 5> c{};
    std::array<std::array<std::complex<double>, 5>, MOMS> M{};
    for (int j = 0; j < 5; ++j) {
        c[std::size_t(j)] = cell_weight * (vecs.col(j).transpose() * psi_c)(0, 0);
        for (int b = 0; b < MOMS; ++b)
            M[std::size_t(b)][std::size_t(j)] =
                cell_weight * (chi_c.col(b).transpose() * vecs.col(j))(0, 0);
    }
    SlotValues out;
    const int branch_of[SLOTS] = {0, 1, 2, 4};
    for (int s = 0; s < SLOTS; ++s) {
        const int j = branch_of[s];
        out.lam[std::size_t(s)] = lam[std::size_t(j)];
        for (int b = 0; b < MOMS; ++b)
            out.d[std::size_t(b)][std::size_t(s)] =
                c[std::size_t(j)] * M[std::size_t(b)][std::size_t(j)];
    }
    // Fold branch 3 into the shear slot.
    out.lam[2] = 0.5 * (lam[2] + lam[3]);
    for (int b = 0; b < MOMS; ++b) out.d[std::size_t(b)][2] += c[3] * M[std::size_t(b)][3];
    return out;
}

Eigen::MatrixXcd moment_columns(const MacroBasis &basis) {
    Eigen::MatrixXcd chi_c(basis.chi.rows(), MOMS);
    const int chi_of[MOMS] = {0, 3, 4}; // mass, axial momentum, energy
    for (int b = 0; b < MOMS; ++b)
        chi_c.col(b) = basis.chi.col(chi_of[b]).cast<std::complex<double>>();
    return chi_c;
}

// Per-(theta column, slot, quantity) splines over the table radii.
struct SlotSplines {
    int cols = 0;
    std::vector<CSpline> lam;          // [col * SLOTS + slot]
    std::vector<CSpline> d[MOMS];      // same layout
    double shear_amp = 0.0;            // largest shear-slot amplitude seen
    std::complex<double> resp0{};      // mass response at the smallest node

    static SlotSplines build(const FluidWaveTable &table, const Eigen::VectorXd &psi) {
        const int cols = table.spec.theta_nodes;
        const int nr = table.spec.rho_nodes;
        const Eigen::VectorXcd psi_c = psi.cast<std::complex<double>>();
        const Eigen::MatrixXcd chi_c = moment_columns(table.basis);
        std::vector<SlotValues> values(table.nodes());
        for (std::size_t idx = 0; idx < table.nodes(); ++idx)
            values[idx] = slot_values(table.lambda[idx], table.vectors[idx], chi_c,
                                      table.grid.cell_weight, psi_c);

        SlotSplines out;
        out.cols = cols;
        out.lam.resize(std::size_t(cols) * SLOTS);
        for (auto &dm : out.d) dm.resize(std::size_t(cols) * SLOTS);
        {
            const SlotValues &s0 = values[table.node_index(0, 0)];
            out.resp0 = s0.d[0][0] + s0.d[0][1] + s0.d[0][2] + s0.d[0][3];
        }
        std::vector<std::complex<double>> buf_l(std::size_t(nr), std::complex<double>{});
        std::vector<std::complex<double>> buf_d[MOMS];
        for (auto &b : buf_d) b.resize(std::size_t(nr));
        for (int k = 0; k < cols; ++k) {
            for (int s = 0; s < SLOTS; ++s) {
                for (int i = 0; i < nr; ++i) {
                    const SlotValues &sv = values[table.node_index(i, k)];
                    buf_l[std::size_t(i)] = sv.lam[std::size_t(s)];
                    for (int b = 0; b < MOMS; ++b)
                        buf_d[b][std::size_t(i)] = sv.d[std::size_t(b)][std::size_t(s)];
                    if (s == 2)
                        for (int b = 0; b < MOMS; ++b)
                            out.shear_amp =
                                std::max(out.shear_amp, std::abs(buf_d[b][std::size_t(i)]));
                }
                const std::size_t at = std::size_t(k) * SLOTS + std::size_t(s);
                out.lam[at].build(table.rho, buf_l);
                for (int b = 0; b < MOMS; ++b) out.d[b][at].build(table.rho, buf_d[b]);
            }
        }
        return out;
    }
};

// Barycentric denominator weights for a small node set.
std::vector<double> bary_weights(const std::vector<double> &nodes) {
    std::vector<double> w(nodes.size(), 1.0);
    for (std::size_t k = 0; k < nodes.size(); ++k)
        for (std::size_t j = 0; j < nodes.size(); ++j)
            if (j != k) w[k] /= (nodes[k] - nodes[j]);
    return w;
}

// ---------------------------------------------------------------------------
// Table cache ("KWAV"): same protocol as the collision-operator cache —
// checksummed payload, temp-file + rename, advisory build lock.
// ---------------------------------------------------------------------------

constexpr char MAGIC[4] = {'K', 'W', 'A', 'V'};
constexpr std::uint32_t VERSION = 1;

template <typename T> void put(std::ofstream &os, const T &v) {
    os.write(reinterpret_cast<const char *>(&v), sizeof(T));
}
template <typename T> bool get(std::ifstream &is, T &v) {
    is.read(reinterpret_cast<char *>(&v), sizeof(T));
    return bool(is);
}

[[noreturn]] void refuse(const std::string &path, const std::string &why) {
    throw std::runtime_error("wave table cache: refusing '" + path + "': " + why);
}

std::uint64_t table_checksum(const FluidWaveTable &t) {
    std::uint64_t h = fnv1a64(t.rho.data(), sizeof(double) * t.rho.size());
    h = fnv1a64(t.s.data(), sizeof(double) * t.s.size(), h);
    for (std::size_t i = 0; i < t.nodes(); ++i) {
        h = fnv1a64(t.lambda[i].data(), sizeof(std::complex<double>) * 5, h);
        h = fnv1a64(t.vectors[i].data(),
                    sizeof(std::complex<double>) * std::size_t(t.vectors[i].size()), h);
    }
    return h;
}

void store_wave_table(const std::string &path, const FluidWaveTable &t) {
    const std::string tmp = path + ".tmp." + std::to_string(::getpid());
    {
        std::ofstream os(tmp, std::ios::binary | std::ios::trunc);
        if (!os) throw std::runtime_error("wave table cache: cannot write '" + tmp + "'");
        os.write(MAGIC, 4);
        put(os, VERSION);
        put(os, t.params.gamma);
        put(os, t.params.beta_id());
        put(os, std::uint32_t(t.grid.n));
        put(os, t.grid.R);
        put(os, t.spec.delta);
        put(os, t.spec.rho_min);
        put(os, std::uint32_t(t.spec.rho_nodes));
        put(os, std::uint32_t(t.spec.theta_nodes));
        put(os, std::uint64_t(t.grid.size()));
        put(os, t.max_residual);
        put(os, std::uint32_t(t.max_iterations));
        put(os, t.build_seconds);
        put(os, table_checksum(t));
        os.write(reinterpret_cast<const char *>(t.rho.data()),
                 std::streamsize(sizeof(double) * t.rho.size()));
        os.write(reinterpret_cast<const char *>(t.s.data()),
                 std::streamsize(sizeof(double) * t.s.size()));
        for (std::size_t i = 0; i < t.nodes(); ++i) {
            os.write(reinterpret_cast<const char *>(t.lambda[i].data()),
                     std::streamsize(sizeof(std::complex<double>) * 5));
            os.write(reinterpret_cast<const char *>(t.vectors[i].data()),
                     std::streamsize(sizeof(std::complex<double>) *
                                     std::size_t(t.vectors[i].size())));
        }
        if (!os) throw std::runtime_error("wave table cache: short write to '" + tmp + "'");
    }
    std::filesystem::rename(tmp, path);
}

std::optional<FluidWaveTable> load_wave_table(const std::string &path, const KernelParams &params,
                                              int n, double R, const WaveTableSpec &spec) {
    std::ifstream is(path, std::ios::binary);
    if (!is) return std::nullopt;
    char magic[4];
    is.read(magic, 4);
    if (!is || std::memcmp(magic, MAGIC, 4) != 0) refuse(path, "bad magic");
    std::uint32_t version = 0, beta = 0, hn = 0, rn = 0, tn = 0, iters = 0;
    std::uint64_t hsize = 0, checksum = 0;
    double gamma = 0, hr = 0, delta = 0, rho_min = 0, residual = 0, seconds = 0;
    if (!get(is, version) || !get(is, gamma) || !get(is, beta) || !get(is, hn) || !get(is, hr) ||
        !get(is, delta) || !get(is, rho_min) || !get(is, rn) || !get(is, tn) || !get(is, hsize) ||
        !get(is, residual) || !get(is, iters) || !get(is, seconds) || !get(is, checksum))
        refuse(path, "truncated header");
    if (version != VERSION) refuse(path, "unsupported version");
    if (gamma != params.gamma || beta != params.beta_id() || int(hn) != n || hr != R ||
        delta != spec.delta || rho_min != spec.rho_min || int(rn) != spec.rho_nodes ||
        int(tn) != spec.theta_nodes)
        refuse(path, "parameters do not match the request");

    FluidWaveTable t;
    t.params = params;
    t.grid = VelocityGrid::make(n, R);
    t.basis = MacroBasis::make(t.grid);
    t.spec = spec;
    if (std::uint64_t(t.grid.size()) != hsize) refuse(path, "grid size mismatch");
    t.max_residual = residual;
    t.max_iterations = int(iters);
    t.build_seconds = seconds;
    const Eigen::Index N = Eigen::Index(t.grid.size());
    t.rho.resize(std::size_t(spec.rho_nodes));
    t.s.resize(std::size_t(spec.theta_nodes));
    is.read(reinterpret_cast<char *>(t.rho.data()),
            std::streamsize(sizeof(double) * t.rho.size()));
    is.read(reinterpret_cast<char *>(t.s.data()), std::streamsize(sizeof(double) * t.s.size()));
    const std::size_t nodes = t.rho.size() * t.s.size();
    t.lambda.resize(nodes);
    t.vectors.assign(nodes, Eigen::MatrixXcd(N, 5));
    for (std::size_t i = 0; i < nodes; ++i) {
        is.read(reinterpret_cast<char *>(t.lambda[i].data()),
                std::streamsize(sizeof(std::complex<double>) * 5));
        is.read(reinterpret_cast<char *>(t.vectors[i].data()),
                std::streamsize(sizeof(std::complex<double>) * std::size_t(N) * 5));
        if (!is) refuse(path, "truncated payload");
    }
    if (table_checksum(t) != checksum)
        refuse(path, "checksum mismatch (corrupt or tampered payload)");
    return t;
}

std::optional<FluidWaveTable> load_or_miss(const std::string &path, const KernelParams &params,
                                           int n, double R, const WaveTableSpec &spec) {
    try {
        return load_wave_table(path, params, n, R, spec);
    } catch (const std::exception &) {
        return std::nullopt;
    }
}

void validate_spec(const WaveTableSpec &spec) {
    if (!(spec.delta > 0.0)) throw std::invalid_argument("wave table: delta must be positive");
    if (!(spec.rho_min > 0.0) || !(spec.rho_min < spec.delta))
        throw std::invalid_argument("wave table: rho_min must lie in (0, delta)");
    if (spec.rho_nodes < 8) throw std::invalid_argument("wave table: rho_nodes < 8");
    if (spec.theta_nodes < 3) throw std::invalid_argument("wave table: theta_nodes < 3");
}

} // namespace

// ---------------------------------------------------------------------------
// Table build
// ---------------------------------------------------------------------------

FluidWaveTable FluidWaveTable::build(const CollisionOperator &op, const WaveTableSpec &spec,
                                     int threads) {
    validate_spec(spec);
    const double t0 = now_seconds();
    FluidWaveTable t;
    t.params = op.params;
    t.grid = op.grid;
    t.basis = MacroBasis::make(op.grid);
    t.spec = spec;

    t.rho.resize(std::size_t(spec.rho_nodes));
    for (int i = 0; i < spec.rho_nodes; ++i)
        t.rho[std::size_t(i)] =
            spec.rho_min + (spec.delta - spec.rho_min) * double(i) / double(spec.rho_nodes - 1);
    // Chebyshev-Lobatto in s = u^2, descending from the axis (s = 1) to the
    // equator (s = 0); both symmetry directions are table nodes.
    t.s.resize(std::size_t(spec.theta_nodes));
    {
        const double pi = std::acos(-1.0);
        for (int k = 0; k < spec.theta_nodes; ++k)
            t.s[std::size_t(k)] =
                0.5 * (1.0 + std::cos(pi * double(k) / double(spec.theta_nodes - 1)));
        t.s.front() = 1.0;
        t.s.back() = 0.0;
    }

    const std::size_t nodes = t.rho.size() * t.s.size();
    t.lambda.resize(nodes);
    t.vectors.resize(nodes);
    std::vector<double> residual(nodes, 0.0);
    std::vector<int> iterations(nodes, 0);

    ModeWorkspace ws(op);
    parallel_for_chunks(nodes, resolve_threads(threads), [&](std::size_t lo, std::size_t hi) {
        for (std::size_t idx = lo; idx < hi; ++idx) {
            const int i = int(idx) / spec.theta_nodes;
            const int k = int(idx) % spec.theta_nodes;
            const double u = std::sqrt(t.s[std::size_t(k)]);
            const Vec3 dir{std::sqrt(std::max(0.0, 1.0 - u * u)), 0.0, u};
            FluidEigensystem fes = ws.fluid_eigensystem(t.rho[std::size_t(i)], dir);
            t.lambda[idx] = fes.lambda;
            t.vectors[idx] = std::move(fes.vectors);
            residual[idx] = fes.residual;
            iterations[idx] = fes.iterations;
        }
    });
    for (std::size_t idx = 0; idx < nodes; ++idx) {
        t.max_residual = std::max(t.max_residual, residual[idx]);
        t.max_iterations = std::max(t.max_iterations, iterations[idx]);
    }
    t.build_seconds = now_seconds() - t0;
    return t;
}

std::string wave_table_name(const KernelParams &params, int n, double R,
                            const WaveTableSpec &spec) {
    char buf[192];
    std::snprintf(buf, sizeof buf, "waves_g%.17g_b%u_n%d_R%.17g_d%.17g_m%.17g_r%d_t%d.kwav",
                  params.gamma, params.beta_id(), n, R, spec.delta, spec.rho_min, spec.rho_nodes,
                  spec.theta_nodes);
    return buf;
}

FluidWaveTable wave_table_or_load(const std::string &dir, const CollisionOperator &op,
                                  const WaveTableSpec &spec, int threads) {
    validate_spec(spec);
    if (dir.empty()) return FluidWaveTable::build(op, spec, threads);

    std::filesystem::create_directories(dir);
    const std::string path =
        dir + "/" + wave_table_name(op.params, op.grid.n, op.grid.R, spec);
    if (auto cached = load_or_miss(path, op.params, op.grid.n, op.grid.R, spec))
        return std::move(*cached);

    const std::string lock_path = path + ".lock";
    int fd = ::open(lock_path.c_str(), O_CREAT | O_RDWR, 0644);
    if (fd >= 0) ::flock(fd, LOCK_EX);
    FluidWaveTable t;
    try {
        if (auto cached = load_or_miss(path, op.params, op.grid.n, op.grid.R, spec)) {
            t = std::move(*cached);
        } else {
            t = FluidWaveTable::build(op, spec, threads);
            store_wave_table(path, t);
        }
    } catch (...) {
        if (fd >= 0) {
            ::flock(fd, LOCK_UN);
            ::close(fd);
        }
        throw;
    }
    if (fd >= 0) {
        ::flock(fd, LOCK_UN);
        ::close(fd);
    }
    return t;
}

// ---------------------------------------------------------------------------
// Interpolation fidelity probe
// ---------------------------------------------------------------------------

TableProbe probe_table_interpolation(const FluidWaveTable &table, const CollisionOperator &op,
                                     int samples, unsigned seed) {
    if (samples < 1) throw std::invalid_argument("probe_table_interpolation: samples < 1");
    const RadialDatum datum = mass_datum(table);
    const SlotSplines ss = SlotSplines::build(table, datum.velocity_profile);
    const std::vector<double> bw = bary_weights(table.s);
    const Eigen::VectorXcd psi_c = datum.velocity_profile.cast<std::complex<double>>();
    const Eigen::MatrixXcd chi_c = moment_columns(table.basis);

    ModeWorkspace ws(op);
    std::mt19937 gen(seed);
    const double span = table.spec.delta - table.spec.rho_min;
    std::uniform_real_distribution<double> pick_rho(table.spec.rho_min + 0.03 * span,
                                                    table.spec.delta - 0.03 * span);
    std::uniform_real_distribution<double> pick_s(0.05, 0.95);

    TableProbe probe;
    probe.samples = samples;
    for (int trial = 0; trial < samples; ++trial) {
        const double rho = pick_rho(gen);
        const double s = pick_s(gen);
        const double u = std::sqrt(s);
        const Vec3 dir{std::sqrt(1.0 - u * u), 0.0, u};
        FluidEigensystem fes = ws.fluid_eigensystem(rho, dir);
        SlotValues exact =
            slot_values(fes.lambda, fes.vectors, chi_c, table.grid.cell_weight, psi_c);

        double dscale = 0.0;
        for (int b = 0; b < MOMS; ++b)
            for (int sl = 0; sl < SLOTS; ++sl)
                dscale = std::max(dscale, std::abs(exact.d[std::size_t(b)][std::size_t(sl)]));

        // Interpolate: spline in rho per theta column, barycentric in s.  The
        // axial-momentum channel is odd in u for this (even) datum, so it is
        // interpolated as u times a function of s, like the model does.
        const std::vector<double> bw_odd = bary_weights({table.s.begin(), table.s.end() - 1});
        for (int sl = 0; sl < SLOTS; ++sl) {
            std::complex<double> lam_num = 0.0, d_even[MOMS] = {};
            double den = 0.0;
            for (int k = 0; k < ss.cols; ++k) {
                const double ds = s - table.s[std::size_t(k)];
                const std::size_t at = std::size_t(k) * SLOTS + std::size_t(sl);
                const double w = bw[std::size_t(k)] / ds;
                lam_num += w * ss.lam[at].eval(rho);
                for (int b = 0; b < MOMS; ++b) d_even[b] += w * ss.d[b][at].eval(rho);
                den += w;
            }
            std::complex<double> pz_num = 0.0;
            double pz_den = 0.0;
            for (int k = 0; k + 1 < ss.cols; ++k) {
                const double ds = s - table.s[std::size_t(k)];
                const std::size_t at = std::size_t(k) * SLOTS + std::size_t(sl);
                const double w = bw_odd[std::size_t(k)] / ds;
                pz_num += w * ss.d[1][at].eval(rho) / std::sqrt(table.s[std::size_t(k)]);
                pz_den += w;
            }
            std::complex<double> d_i[MOMS];
            d_i[0] = d_even[0] / den;
            d_i[1] = u * pz_num / pz_den;
            d_i[2] = d_even[2] / den;

            const std::complex<double> lam_i = lam_num / den;
            probe.max_lambda_err =
                std::max(probe.max_lambda_err, std::abs(lam_i - exact.lam[std::size_t(sl)]) /
                                                   std::abs(exact.lam[std::size_t(sl)]));
            for (int b = 0; b < MOMS; ++b)
                probe.max_moment_err =
                    std::max(probe.max_moment_err,
                             std::abs(d_i[b] - exact.d[std::size_t(b)][std::size_t(sl)]) /
                                 std::max(dscale, 1e-300));
        }
    }
    return probe;
}

// ---------------------------------------------------------------------------
// Data
// ---------------------------------------------------------------------------

RadialDatum mass_datum(const FluidWaveTable &table, double width) {
    if (!(width > 0.0)) throw std::invalid_argument("mass_datum: width must be positive");
    RadialDatum d;
    d.width = width;
    d.velocity_profile = table.basis.chi.col(0);
    return d;
}

RadialDatum microscopic_datum(const FluidWaveTable &table, double width) {
    if (!(width > 0.0)) throw std::invalid_argument("microscopic_datum: width must be positive");
    const VelocityGrid &grid = table.grid;
    const Eigen::Index N = Eigen::Index(grid.size());
    Eigen::VectorXd g(N);
    for (Eigen::Index i = 0; i < N; ++i) {
        const double r2 = sq(grid.abs_v[std::size_t(i)]);
        g[i] = grid.vz[std::size_t(i)] * r2 * std::exp(-0.25 * r2);
    }
    // Only the axial-momentum carrier survives the parity of xi_z * radial;
    // remove it, then apply the exact microscopic projection.
    g -= grid.dot(table.basis.chi.col(3), g) * table.basis.chi.col(3);
    Eigen::VectorXd psi = table.basis.project_particle(grid, g);
    psi /= grid.norm(psi);
    RadialDatum d;
    d.width = width;
    d.z_parity = -1;
    d.velocity_profile = psi;
    return d;
}

RadialDatum microscopic_datum_even(const FluidWaveTable &table, double width) {
    if (!(width > 0.0))
        throw std::invalid_argument("microscopic_datum_even: width must be positive");
    const VelocityGrid &grid = table.grid;
    const Eigen::Index N = Eigen::Index(grid.size());
    Eigen::VectorXd g0(N), g2(N), g4(N);
    for (Eigen::Index i = 0; i < N; ++i) {
        const double r2 = sq(grid.abs_v[std::size_t(i)]);
        g0[i] = std::exp(-0.25 * r2);
        g2[i] = r2 * g0[i];
        g4[i] = r2 * r2 * g0[i];
    }
    // Zero the mass and energy moments with the quartic coefficients; odd
    // moments vanish by node symmetry already.
    Eigen::Matrix2d A;
    Eigen::Vector2d rhs;
    const int rows[2] = {0, 4};
    for (int r = 0; r < 2; ++r) {
        const Eigen::VectorXd chi = table.basis.chi.col(rows[r]);
        A(r, 0) = grid.dot(chi, g2);
        A(r, 1) = grid.dot(chi, g4);
        rhs[r] = -grid.dot(chi, g0);
    }
    const Eigen::Vector2d coef = A.fullPivLu().solve(rhs);
    Eigen::VectorXd psi = g0 + coef[0] * g2 + coef[1] * g4;
    psi = table.basis.project_particle(grid, psi); // exact cleanup
    psi /= grid.norm(psi);
    RadialDatum d;
    d.width = width;
    d.velocity_profile = psi;
    return d;
}

// ---------------------------------------------------------------------------
// Model
// ---------------------------------------------------------------------------

struct FluidWaveModel::Slot {
    // Layout [k * n_q + q] over theta columns k and quadrature radii q.
    std::vector<std::complex<double>> lam, d_mass, d_pz, d_en;
};

FluidWaveModel::~FluidWaveModel() = default;

WaveQuadrature WaveQuadrature::doubled() const {
    WaveQuadrature q = *this;
    q.rho_nodes *= 2;
    q.polar_base *= 2;
    q.polar_per_radius *= 2.0;
    return q;
}

FluidWaveModel::FluidWaveModel(const FluidWaveTable &table, const RadialDatum &datum,
                               const WaveQuadrature &quad)
    : quad_(quad) {
    if (quad.rho_nodes < 16) throw std::invalid_argument("wave quadrature: rho_nodes < 16");
    if (quad.polar_base < 8) throw std::invalid_argument("wave quadrature: polar_base < 8");
    if (datum.velocity_profile.size() != Eigen::Index(table.grid.size()))
        throw std::invalid_argument("wave model: datum does not match the table grid");
    if (!(datum.width > 0.0)) throw std::invalid_argument("wave model: datum width <= 0");
    if (datum.z_parity != 1 && datum.z_parity != -1)
        throw std::invalid_argument("wave model: z_parity must be +1 or -1");

    delta_ = table.spec.delta;
    rho_min_ = table.spec.rho_min;
    width_ = datum.width;
    parity_ = datum.z_parity;
    theta_nodes_ = table.spec.theta_nodes;
    s_ = table.s;
    u_cols_.resize(s_.size());
    for (std::size_t k = 0; k < s_.size(); ++k) u_cols_[k] = std::sqrt(s_[k]);
    bw_all_ = bary_weights(s_);
    bw_odd_ = bary_weights({s_.begin(), s_.end() - 1}); // equator excluded (u = 0)

    const Quadrature1D rule = gauss_legendre_on(quad.rho_nodes, 0.0, delta_);
    rho_q_ = rule.nodes;
    w_q_ = rule.weights;
    const double pi = std::acos(-1.0);
    const double amp = std::pow(2.0 * pi * width_ * width_, 1.5);
    pref_.resize(rho_q_.size());
    for (std::size_t q = 0; q < rho_q_.size(); ++q) {
        const double rho = rho_q_[q];
        pref_[q] = rho * rho * low_frequency_window(rho, delta_) *
                   amp * std::exp(-0.5 * sq(width_ * rho));
    }

    const SlotSplines ss = SlotSplines::build(table, datum.velocity_profile);
    resp0_ = ss.resp0;
    shear_amp_ = ss.shear_amp;
    const std::size_t nq = rho_q_.size();
    slots_.resize(SLOTS);
    for (int sl = 0; sl < SLOTS; ++sl) {
        Slot &slot = slots_[std::size_t(sl)];
        slot.lam.resize(std::size_t(theta_nodes_) * nq);
        slot.d_mass.resize(slot.lam.size());
        slot.d_pz.resize(slot.lam.size());
        slot.d_en.resize(slot.lam.size());
        for (int k = 0; k < theta_nodes_; ++k) {
            const std::size_t at = std::size_t(k) * SLOTS + std::size_t(sl);
            for (std::size_t q = 0; q < nq; ++q) {
                const double rho = std::max(rho_q_[q], rho_min_);
                const std::size_t to = std::size_t(k) * nq + q;
                slot.lam[to] = ss.lam[at].eval(rho);
                slot.d_mass[to] = ss.d[0][at].eval(rho);
                slot.d_pz[to] = ss.d[1][at].eval(rho);
                slot.d_en[to] = ss.d[2][at].eval(rho);
            }
        }
    }
}

/**
 * Polar profile S_b(rho_q, u_i) at fixed time: slot sum of e^{lambda t} times
 * the moment amplitudes, interpolated across the theta columns.  A channel
 * that is even in u interpolates in s = u^2 over all columns; an odd channel
 * factors u out and interpolates the remainder from the columns off the
 * equator.  Which channel is which follows from the datum parity: for even
 * data the scalar moments are even and the axial momentum odd, for odd data
 * the roles swap.  The window/transform prefactor is folded in.
 */
void FluidWaveModel::polar_profile(double t, int n_u, std::vector<std::complex<double>> &S) const {
    const std::size_t nq = rho_q_.size();
    const std::size_t cols = std::size_t(theta_nodes_);
    const Quadrature1D &urule = gauss_legendre(n_u);
    S.assign(nq * std::size_t(n_u) * MOMS, {});

    // Intrinsic z-reflection signs of (mass, axial momentum, energy) times
    // the datum parity: +1 = even in u.
    const int chan_sign[MOMS] = {parity_, -parity_, parity_};

    std::vector<std::complex<double>> T(cols * MOMS);
    std::vector<std::complex<double>> Todd((cols - 1) * MOMS);
    for (std::size_t q = 0; q < nq; ++q) {
        for (std::size_t k = 0; k < cols; ++k) {
            std::complex<double> t0 = 0.0, t1 = 0.0, t2 = 0.0;
            for (int sl = 0; sl < SLOTS; ++sl) {
                const Slot &slot = slots_[std::size_t(sl)];
                const std::size_t at = k * nq + q;
                const std::complex<double> w = std::exp(slot.lam[at] * t);
                t0 += w * slot.d_mass[at];
                t1 += w * slot.d_pz[at];
                t2 += w * slot.d_en[at];
            }
            T[k * MOMS + 0] = t0;
            T[k * MOMS + 1] = t1;
            T[k * MOMS + 2] = t2;
        }
        for (std::size_t k = 0; k + 1 < cols; ++k)
            for (int b = 0; b < MOMS; ++b)
                Todd[k * MOMS + std::size_t(b)] = T[k * MOMS + std::size_t(b)] / u_cols_[k];

        for (int iu = 0; iu < n_u; ++iu) {
            const double u = urule.nodes[std::size_t(iu)];
            const double s = u * u;
            std::complex<double> *out = &S[(q * std::size_t(n_u) + std::size_t(iu)) * MOMS];
            for (int b = 0; b < MOMS; ++b) {
                std::complex<double> num = 0.0;
                double den = 0.0;
                bool snapped = false;
                if (chan_sign[b] > 0) {
                    for (std::size_t k = 0; k < cols; ++k) {
                        const double ds = s - s_[k];
                        if (std::abs(ds) < 1e-12) {
                            num = T[k * MOMS + std::size_t(b)];
                            den = 1.0;
                            snapped = true;
                            break;
                        }
                        const double w = bw_all_[k] / ds;
                        num += w * T[k * MOMS + std::size_t(b)];
                        den += w;
                    }
                    out[b] = pref_[q] * (snapped ? num : num / den);
                } else {
                    for (std::size_t k = 0; k + 1 < cols; ++k) {
                        const double ds = s - s_[k];
                        if (std::abs(ds) < 1e-12) {
                            num = Todd[k * MOMS + std::size_t(b)];
                            den = 1.0;
                            snapped = true;
                            break;
                        }
                        const double w = bw_odd_[k] / ds;
                        num += w * Todd[k * MOMS + std::size_t(b)];
                        den += w;
                    }
                    out[b] = pref_[q] * u * (snapped ? num : num / den);
                }
            }
        }
    }
}

MomentField FluidWaveModel::moments(double t, const std::vector<double> &radii) const {
    if (!(t >= 0.0)) throw std::invalid_argument("wave model: t must be >= 0");
    double r_max = 0.0;
    for (double r : radii) {
        if (!(r >= 0.0)) throw std::invalid_argument("wave model: radii must be >= 0");
        r_max = std::max(r_max, r);
    }
    const int n_u = quad_.polar_base + int(std::ceil(quad_.polar_per_radius * delta_ * r_max));
    const Quadrature1D &urule = gauss_legendre(n_u);
    std::vector<std::complex<double>> S;
    polar_profile(t, n_u, S);

    const double pi = std::acos(-1.0);
    MomentField out;
    out.moments = Eigen::MatrixXd::Zero(5, Eigen::Index(radii.size()));
    double max_re = 0.0, max_im = 0.0;
    const std::size_t nq = rho_q_.size();
    for (std::size_t ir = 0; ir < radii.size(); ++ir) {
        const double r = radii[ir];
        double acc_re[MOMS] = {}, acc_im[MOMS] = {};
        for (std::size_t q = 0; q < nq; ++q) {
            const double zr = rho_q_[q] * r;
            const std::complex<double> *Sq = &S[q * std::size_t(n_u) * MOMS];
            for (int iu = 0; iu < n_u; ++iu) {
                const double w = w_q_[q] * urule.weights[std::size_t(iu)];
                const double ph = zr * urule.nodes[std::size_t(iu)];
                const double c = std::cos(ph), s = std::sin(ph);
                const std::complex<double> *Su = Sq + std::size_t(iu) * MOMS;
                for (int b = 0; b < MOMS; ++b) {
                    acc_re[b] += w * (c * Su[b].real() - s * Su[b].imag());
                    acc_im[b] += w * (c * Su[b].imag() + s * Su[b].real());
                }
            }
        }
        const double scale = 1.0 / (4.0 * pi * pi);
        out.moments(0, Eigen::Index(ir)) = scale * acc_re[0];
        out.moments(3, Eigen::Index(ir)) = scale * acc_re[1];
        out.moments(4, Eigen::Index(ir)) = scale * acc_re[2];
        for (int b = 0; b < MOMS; ++b) {
            max_re = std::max(max_re, std::abs(acc_re[b]));
            max_im = std::max(max_im, std::abs(acc_im[b]));
        }
    }
    out.imag_residue = max_im / std::max(max_re, 1e-300);
    return out;
}

RadialField FluidWaveModel::reconstruct_fluid_radial(double t,
                                                     const std::vector<double> &radii) const {
    MomentField mf = moments(t, radii);
    RadialField field;
    field.t = t;
    field.radii = radii;
    field.values.resize(radii.size());
    for (std::size_t i = 0; i < radii.size(); ++i)
        field.values[i] = mf.moments.col(Eigen::Index(i)).norm();
    return field;
}

double FluidWaveModel::spatial_moment(double t, double r_max) const {
    if (!(t >= 0.0)) throw std::invalid_argument("wave model: t must be >= 0");
    if (!(r_max > 0.0)) throw std::invalid_argument("wave model: r_max must be positive");
    const int n_u = quad_.polar_base + int(std::ceil(quad_.polar_per_radius * delta_ * r_max));
    const Quadrature1D &urule = gauss_legendre(n_u);
    std::vector<std::complex<double>> S;
    polar_profile(t, n_u, S);

    // Int_0^R r^2 e^{izr} dr in closed form (Taylor below |zR| ~ 1e-3).
    const auto ball = [r_max](double z) -> std::complex<double> {
        const double a = z * r_max;
        const double R3 = r_max * r_max * r_max;
        if (std::abs(a) < 1e-3) {
            return R3 * std::complex<double>(1.0 / 3.0 - a * a / 10.0,
                                             a / 4.0 - a * a * a / 36.0);
        }
        const std::complex<double> i(0.0, 1.0);
        const std::complex<double> e = std::exp(i * a);
        return R3 * (e * (-i / a + 2.0 / (a * a) + 2.0 * i / (a * a * a)) -
                     2.0 * i / (a * a * a));
    };

    const double pi = std::acos(-1.0);
    std::complex<double> acc = 0.0;
    const std::size_t nq = rho_q_.size();
    for (std::size_t q = 0; q < nq; ++q) {
        const std::complex<double> *Sq = &S[q * std::size_t(n_u) * MOMS];
        for (int iu = 0; iu < n_u; ++iu) {
            const double w = w_q_[q] * urule.weights[std::size_t(iu)];
            const double z = rho_q_[q] * urule.nodes[std::size_t(iu)];
            acc += w * Sq[std::size_t(iu) * MOMS] * ball(z);
        }
    }
    return acc.real() / pi;
}

std::complex<double> FluidWaveModel::zero_frequency_mass_response() const { return resp0_; }

double FluidWaveModel::shear_amplitude() const { return shear_amp_; }

// ---------------------------------------------------------------------------
// Fits
// ---------------------------------------------------------------------------

namespace {

struct Peak {
    bool found = false;
    double r = 0.0, value = 0.0;
};

// Parabolic refinement through the argmax over radii beyond the search
// floor.  Requires a strict interior maximum; boundary maxima mean the ridge
// left the sampled window and the time is dropped.
Peak find_ridge(const RadialField &field, double r_floor) {
    std::vector<std::size_t> idx;
    for (std::size_t i = 0; i < field.radii.size(); ++i)
        if (field.radii[i] > r_floor) idx.push_back(i);
    if (idx.size() < 3) return {};
    std::size_t best = 0;
    for (std::size_t j = 1; j < idx.size(); ++j)
        if (field.values[idx[j]] > field.values[idx[best]]) best = j;
    if (best == 0 || best + 1 == idx.size()) return {};
    const double x1 = field.radii[idx[best - 1]], v1 = field.values[idx[best - 1]];
    const double x2 = field.radii[idx[best]], v2 = field.values[idx[best]];
    const double x3 = field.radii[idx[best + 1]], v3 = field.values[idx[best + 1]];
    if (!(v2 > v1) || !(v2 > v3)) return {};
    const double d21 = (v2 - v1) / (x2 - x1), d32 = (v3 - v2) / (x3 - x2);
    const double curv = (d32 - d21) / (x3 - x1);
    if (!(curv < 0.0)) return {};
    double xs = 0.5 * (x1 + x2) - d21 / (2.0 * curv);
    xs = std::clamp(xs, x1, x3);
    Peak p;
    p.found = true;
    p.r = xs;
    p.value = v1 + d21 * (xs - x1) + curv * (xs - x1) * (xs - x2);
    return p;
}

} // namespace

WaveFitReport fit_decay(const std::vector<RadialField> &fields) {
    if (fields.size() < 5)
        throw std::invalid_argument("fit_decay: need at least five time samples");
    for (std::size_t i = 0; i < fields.size(); ++i) {
        if (fields[i].radii.empty() || fields[i].radii.size() != fields[i].values.size())
            throw std::invalid_argument("fit_decay: malformed field");
        if (i > 0 && !(fields[i].t > fields[i - 1].t))
            throw std::invalid_argument("fit_decay: times must be strictly ascending");
    }
    if (!(fields.back().t >= 10.0 * fields.front().t * (1.0 - 1e-12)))
        throw std::invalid_argument("fit_decay: times must span at least one decade");

    WaveFitReport rep;
    std::vector<double> shift(fields.size()), interior(fields.size());
    for (std::size_t i = 0; i < fields.size(); ++i) {
        shift[i] = 1.0 + fields[i].t;
        const double split = 0.5 * FLUID_SOUND_SPEED * fields[i].t;
        double best = 0.0;
        for (std::size_t j = 0; j < fields[i].radii.size(); ++j)
            if (fields[i].radii[j] < split || fields[i].t == 0.0)
                best = std::max(best, fields[i].values[j]);
        interior[i] = best;
    }
    const LineFit fin = fit_power_law(shift, interior);
    rep.interior.exponent = -fin.slope;
    rep.interior.rms = fin.rms;
    rep.interior.points = fin.points;
    rep.interior.t_lo = fields.front().t;
    rep.interior.t_hi = fields.back().t;

    std::vector<double> t_det, r_det, v_det;
    for (const RadialField &f : fields) {
        const Peak p = find_ridge(f, 0.5 * FLUID_SOUND_SPEED * f.t);
        if (p.found && p.value > 0.0) {
            t_det.push_back(f.t);
            r_det.push_back(p.r);
            v_det.push_back(p.value);
        }
    }
    rep.ridge_detected = t_det.size() >= 5 && 2 * t_det.size() >= fields.size();
    if (rep.ridge_detected) {
        // Peak location model r* = speed * t + drift * sqrt(1+t) + const.
        Eigen::MatrixXd X(Eigen::Index(t_det.size()), 3);
        Eigen::VectorXd y(Eigen::Index(t_det.size()));
        for (std::size_t i = 0; i < t_det.size(); ++i) {
            X(Eigen::Index(i), 0) = t_det[i];
            X(Eigen::Index(i), 1) = std::sqrt(1.0 + t_det[i]);
            X(Eigen::Index(i), 2) = 1.0;
            y[Eigen::Index(i)] = r_det[i];
        }
        const Eigen::Vector3d beta = (X.transpose() * X).ldlt().solve(X.transpose() * y);
        rep.ridge_speed = beta[0];
        rep.ridge_drift = beta[1];
        rep.ridge_speed_rms = (X * beta - y).norm() / std::sqrt(double(t_det.size()));
        std::vector<double> rshift(t_det.size());
        for (std::size_t i = 0; i < t_det.size(); ++i) rshift[i] = 1.0 + t_det[i];
        const LineFit rf = fit_power_law(rshift, v_det);
        rep.ridge.exponent = -rf.slope;
        rep.ridge.rms = rf.rms;
        rep.ridge.points = rf.points;
        rep.ridge.t_lo = t_det.front();
        rep.ridge.t_hi = t_det.back();
    }
    return rep;
}

std::vector<double> wave_time_lattice() {
    std::vector<double> t(13);
    for (int k = 0; k <= 12; ++k) t[std::size_t(k)] = 20.0 * std::pow(10.0, double(k) / 12.0);
    return t;
}

WaveSweep run_wave_sweep(const FluidWaveTable &table, const RadialDatum &datum,
                         const std::vector<double> &times, const WaveQuadrature &quad,
                         int threads) {
    const double t0 = now_seconds();
    const FluidWaveModel base(table, datum, quad);
    const FluidWaveModel fine(table, datum, quad.doubled());

    WaveSweep sweep;
    sweep.fields.resize(times.size());
    std::vector<double> change(times.size(), 0.0), residue(times.size(), 0.0);

    parallel_for_chunks(times.size(), resolve_threads(threads), [&](std::size_t lo,
                                                                    std::size_t hi) {
        for (std::size_t i = lo; i < hi; ++i) {
            const double t = times[i];
            const double c = FLUID_SOUND_SPEED;
            std::vector<double> radii;
            for (double f : {0.0, 0.15, 0.3, 0.45, 0.6}) radii.push_back(f * c * t);
            for (double f : {0.6, 1.2, 1.8, 2.5}) {
                const double r = f * std::sqrt(1.0 + t);
                if (r < 0.48 * c * t) radii.push_back(r);
            }
            const double step = std::max(std::sqrt(1.0 + t) / 6.0, 0.2);
            for (double r = 0.8 * c * t; r <= 1.35 * c * t + 1e-9; r += step)
                radii.push_back(r);

            MomentField mb = base.moments(t, radii);
            MomentField mf = fine.moments(t, radii);
            RadialField &field = sweep.fields[i];
            field.t = t;
            field.radii = radii;
            field.values.resize(radii.size());
            double scale = 0.0;
            for (std::size_t j = 0; j < radii.size(); ++j) {
                field.values[j] = mb.moments.col(Eigen::Index(j)).norm();
                scale = std::max(scale, field.values[j]);
            }
            for (std::size_t j = 0; j < radii.size(); ++j) {
                const double v2 = mf.moments.col(Eigen::Index(j)).norm();
                change[i] = std::max(change[i], std::abs(v2 - field.values[j]) /
                                                    (field.values[j] + 1e-3 * scale));
            }
            residue[i] = std::max(mb.imag_residue, mf.imag_residue);
        }
    });

    sweep.report = fit_decay(sweep.fields);
    for (std::size_t i = 0; i < times.size(); ++i) {
        sweep.report.refinement_change = std::max(sweep.report.refinement_change, change[i]);
        sweep.report.imag_residue = std::max(sweep.report.imag_residue, residue[i]);
    }
    sweep.report.seconds = now_seconds() - t0;
    return sweep;
}

} // namespace kinwave
