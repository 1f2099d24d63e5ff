#include "kinwave/kernel_cache.hpp"

#include "kinwave/common.hpp"

#include <fcntl.h>
#include <sys/file.h>
#include <unistd.h>

#include <cstdio>
#include <cstdlib>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <stdexcept>
#include <vector>

namespace kinwave {

namespace {

constexpr char MAGIC[4] = {'K', 'G', 'R', 'N'};
// Version history: 1 = raw symmetrized assembly; 2 = conservative correction
// baked into K (see operator_assembly.hpp).  Old entries refuse to load and
// assemble_or_load rebuilds them in place.
constexpr std::uint32_t VERSION = 2;

struct Header {
    std::uint32_t version;
    double gamma;
    std::uint32_t n;
    double R;
    std::uint32_t beta_id;
    std::uint64_t checksum;
};

template <typename T> void put(std::ofstream &os, const T &v) {
    os.write(reinterpret_cast<const char *>(&v), sizeof(T));
}

template <typename T> bool get(std::ifstream &is, T &v) {
    is.read(reinterpret_cast<char *>(&v), sizeof(T));
    return bool(is);
}

std::uint64_t payload_checksum(const Eigen::VectorXd &nu, const Eigen::MatrixXd &K) {
    std::uint64_t h = fnv1a64(nu.data(), sizeof(double) * std::size_t(nu.size()));
    // Chain row by row so the digest matches the on-disk (row-major) order.
    std::vector<double> row(std::size_t(K.cols()));
    for (Eigen::Index i = 0; i < K.rows(); ++i) {
        for (Eigen::Index j = 0; j < K.cols(); ++j) row[std::size_t(j)] = K(i, j);
        h = fnv1a64(row.data(), sizeof(double) * row.size(), h);
    }
    return h;
}

[[noreturn]] void refuse(const std::string &path, const std::string &why) {
    throw std::runtime_error("kernel cache: refusing '" + path + "': " + why);
}

bool default_like(const AssemblyOptions &opts) {
    const AssemblyOptions ref;
    return opts.diagonal == ref.diagonal && opts.quad.n_radial == ref.quad.n_radial &&
           opts.quad.n_angle == ref.quad.n_angle && opts.quad.rel_tol == ref.quad.rel_tol &&
           opts.quad.max_doublings == ref.quad.max_doublings &&
           opts.nu_rel_tol == ref.nu_rel_tol && opts.conservative == ref.conservative;
}

// Miss-or-rebuild semantics for the assemble_or_load path: any load failure
// (stale format version, corruption, partial write) counts as a miss and the
// entry is rebuilt.  Callers who want the strict behavior use
// load_operator_cache directly.
std::optional<CollisionOperator> load_or_miss(const std::string &path,
                                              const KernelParams &params) {
    try {
        return load_operator_cache(path, params);
    } catch (const std::exception &) {
        return std::nullopt;
    }
}

} // namespace

std::string cache_entry_name(const KernelParams &params, int n, double R) {
    char buf[128];
    std::snprintf(buf, sizeof buf, "op_g%.17g_b%u_n%d_R%.17g.kgrn", params.gamma,
                  params.beta_id(), n, R);
    return buf;
}

std::optional<CollisionOperator> load_operator_cache(const std::string &path,
                                                     const KernelParams &params) {
    std::ifstream is(path, std::ios::binary);
    if (!is) return std::nullopt;

    char magic[4];
    is.read(magic, 4);
    if (!is || std::memcmp(magic, MAGIC, 4) != 0) refuse(path, "bad magic");

    Header h{};
    if (!get(is, h.version) || !get(is, h.gamma) || !get(is, h.n) || !get(is, h.R) ||
        !get(is, h.beta_id) || !get(is, h.checksum))
        refuse(path, "truncated header");
    if (h.version != VERSION) refuse(path, "unsupported version");
    if (h.gamma != params.gamma || h.beta_id != params.beta_id())
        refuse(path, "kernel parameters do not match the request");

    VelocityGrid grid = VelocityGrid::make(int(h.n), h.R);
    const Eigen::Index N = Eigen::Index(grid.size());

    CollisionOperator op;
    op.grid = std::move(grid);
    op.params = params;
    op.nu.resize(N);
    op.K.resize(N, N);
    is.read(reinterpret_cast<char *>(op.nu.data()), std::streamsize(sizeof(double)) * N);
    if (!is) refuse(path, "truncated payload");
    std::vector<double> row(static_cast<std::size_t>(N));
    for (Eigen::Index i = 0; i < N; ++i) {
        is.read(reinterpret_cast<char *>(row.data()), std::streamsize(sizeof(double)) * N);
        if (!is) refuse(path, "truncated payload");
        for (Eigen::Index j = 0; j < N; ++j) op.K(i, j) = row[std::size_t(j)];
    }
    if (payload_checksum(op.nu, op.K) != h.checksum)
        refuse(path, "checksum mismatch (corrupt or tampered payload)");
    return op;
}

void store_operator_cache(const std::string &path, const CollisionOperator &op) {
    const std::string tmp = path + ".tmp." + std::to_string(::getpid());
    {
        std::ofstream os(tmp, std::ios::binary | std::ios::trunc);
        if (!os) throw std::runtime_error("kernel cache: cannot write '" + tmp + "'");
        os.write(MAGIC, 4);
        put(os, VERSION);
        put(os, op.params.gamma);
        put(os, std::uint32_t(op.grid.n));
        put(os, op.grid.R);
        put(os, op.params.beta_id());
        put(os, payload_checksum(op.nu, op.K));
        os.write(reinterpret_cast<const char *>(op.nu.data()),
                 std::streamsize(sizeof(double)) * op.nu.size());
        std::vector<double> row(std::size_t(op.K.cols()));
        for (Eigen::Index i = 0; i < op.K.rows(); ++i) {
            for (Eigen::Index j = 0; j < op.K.cols(); ++j) row[std::size_t(j)] = op.K(i, j);
            os.write(reinterpret_cast<const char *>(row.data()),
                     std::streamsize(sizeof(double)) * op.K.cols());
        }
        if (!os) throw std::runtime_error("kernel cache: short write to '" + tmp + "'");
    }
    std::filesystem::rename(tmp, path);
}

CollisionOperator assemble_or_load(const std::string &dir, const VelocityGrid &grid,
                                   const KernelParams &params, const AssemblyOptions &opts) {
    if (dir.empty() || !default_like(opts)) return assemble_operator(grid, params, opts);

    std::filesystem::create_directories(dir);
    const std::string path = dir + "/" + cache_entry_name(params, grid.n, grid.R);
    if (auto cached = load_or_miss(path, params)) return std::move(*cached);

    // Build behind an advisory lock so concurrent binaries assemble once.
    const std::string lock_path = path + ".lock";
    int fd = ::open(lock_path.c_str(), O_CREAT | O_RDWR, 0644);
    if (fd >= 0) ::flock(fd, LOCK_EX);
    CollisionOperator op;
    try {
        if (auto cached = load_or_miss(path, params)) {
            op = std::move(*cached); // someone else finished while we waited
        } else {
            op = assemble_operator(grid, params, opts);
            store_operator_cache(path, op);
        }
    } catch (...) {
        if (fd >= 0) { ::flock(fd, LOCK_UN); ::close(fd); }
        throw;
    }
    if (fd >= 0) { ::flock(fd, LOCK_UN); ::close(fd); }
    return op;
}

std::string cache_dir_from_env() {
    const char *dir = std::getenv("KINWAVE_TEST_CACHE");
    if (!dir || !*dir) return "";
    std::filesystem::create_directories(dir);
    return dir;
}

} // namespace kinwave
