/**
 * Shared small utilities: version/metadata constants, deterministic hashing,
 * a minimal thread chunker, and a few numeric helpers used across modules.
 */
#ifndef KINWAVE_COMMON_HPP
#define KINWAVE_COMMON_HPP

#include <cmath>
#include <cstdint>
#include <cstring>
#include <functional>
#include <stdexcept>
#include <string>
#include <thread>
#include <vector>

namespace kinwave {

inline constexpr const char *VERSION_STRING = "kinwave 0.1.0";

/// Sound speed of the linearized five-field fluid closure, sqrt(5/3).
inline const double FLUID_SOUND_SPEED = std::sqrt(5.0 / 3.0);

// ============================================================================
// Deterministic hashing (FNV-1a, 64-bit)
// ============================================================================
// Used for cache payload checksums and config fingerprints.  Not
// cryptographic; chosen because it is dependency-free and byte-deterministic.

inline std::uint64_t fnv1a64(const void *data, std::size_t nbytes,
                             std::uint64_t seed = 1469598103934665603ull) {
    const auto *p = static_cast<const unsigned char *>(data);
    std::uint64_t h = seed;
    for (std::size_t i = 0; i < nbytes; ++i) {
        h ^= p[i];
        h *= 1099511628211ull;
    }
    return h;
}

inline std::uint64_t fnv1a64(const std::string &s) {
    return fnv1a64(s.data(), s.size());
}

// ============================================================================
// Thread chunking
// ============================================================================

/**
 * Run fn(begin, end) over [0, count) split into contiguous chunks, one per
 * worker.  Results must be written to disjoint locations so the output is
 * independent of the worker count (all audits require run-to-run determinism).
 * threads <= 1 runs inline.
 */
inline void parallel_for_chunks(std::size_t count, int threads,
                                const std::function<void(std::size_t, std::size_t)> &fn) {
    if (threads <= 1 || count < 2) {
        fn(0, count);
        return;
    }
    std::size_t nw = std::min<std::size_t>(threads, count);
    std::vector<std::thread> pool;
    pool.reserve(nw);
    for (std::size_t w = 0; w < nw; ++w) {
        std::size_t b = count * w / nw;
        std::size_t e = count * (w + 1) / nw;
        pool.emplace_back([=, &fn] { fn(b, e); });
    }
    for (auto &t : pool) t.join();
}

/// Resolve a thread-count request: 0 means "use hardware concurrency".
inline int resolve_threads(int requested) {
    if (requested > 0) return requested;
    unsigned hc = std::thread::hardware_concurrency();
    return hc == 0 ? 1 : static_cast<int>(hc);
}

// ============================================================================
// Small numeric helpers
// ============================================================================

/// <x> = sqrt(1 + x^2), the Japanese bracket.
inline double bracket(double x) { return std::sqrt(1.0 + x * x); }

inline double sq(double x) { return x * x; }

/// Relative difference |a-b| / max(|a|,|b|,floor).
inline double rel_diff(double a, double b, double floor_ = 1e-300) {
    double m = std::max({std::abs(a), std::abs(b), floor_});
    return std::abs(a - b) / m;
}

} // namespace kinwave

#endif // KINWAVE_COMMON_HPP
