#include "kinwave/simd_dispatch.hpp"

#include <atomic>
#include <cmath>
#include <stdexcept>

namespace kinwave::simd {

// Implemented in the AVX2-flagged translation unit.
namespace detail {
double angular_exp_sum_avx2(double base, double t, const double *c, std::size_t m);
void exp4_avx2(const double *x, double *out);
} // namespace detail

namespace {

double angular_exp_sum_scalar(double base, double t, const double *c, std::size_t m) {
    // Four independent accumulators, mirroring the lane structure of the
    // vector path so both paths use a comparable summation tree.
    double s0 = 0.0, s1 = 0.0, s2 = 0.0, s3 = 0.0;
    for (std::size_t k = 0; k < m; k += 4) {
        s0 += std::exp(base - t * c[k]);
        s1 += std::exp(base - t * c[k + 1]);
        s2 += std::exp(base - t * c[k + 2]);
        s3 += std::exp(base - t * c[k + 3]);
    }
    return (s0 + s1) + (s2 + s3);
}

void exp4_scalar(const double *x, double *out) {
    for (int i = 0; i < 4; ++i) out[i] = std::exp(x[i]);
}

bool detect_avx2() {
#if defined(__x86_64__) || defined(__i386__)
    return __builtin_cpu_supports("avx2") && __builtin_cpu_supports("fma");
#else
    return false;
#endif
}

std::atomic<Path> g_forced{Path::Auto};
const bool g_has_avx2 = detect_avx2();

Path resolve() {
    Path f = g_forced.load(std::memory_order_relaxed);
    if (f != Path::Auto) return f;
    return g_has_avx2 ? Path::Avx2 : Path::Scalar;
}

} // namespace

bool host_supports_avx2() { return g_has_avx2; }

void force_path(Path p) {
    if (p == Path::Avx2 && !g_has_avx2)
        throw std::runtime_error("simd: AVX2+FMA path forced on an unsupported host");
    g_forced.store(p, std::memory_order_relaxed);
}

Path active_path() { return resolve(); }

const char *active_path_name() {
    return resolve() == Path::Avx2 ? "avx2-fma" : "scalar";
}

double angular_exp_sum(double base, double t, const double *c, std::size_t m) {
    if (resolve() == Path::Avx2) return detail::angular_exp_sum_avx2(base, t, c, m);
    return angular_exp_sum_scalar(base, t, c, m);
}

void exp4(const double *x, double *out) {
    if (resolve() == Path::Avx2) {
        detail::exp4_avx2(x, out);
        return;
    }
    exp4_scalar(x, out);
}

} // namespace kinwave::simd
