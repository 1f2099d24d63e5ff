/**
 * On-disk cache for assembled collision operators.
 *
 * Assembling K at production resolution costs minutes; every test binary and
 * CLI run wants the same handful of matrices.  The cache stores one file per
 * (gamma, angular law, n, R) under a shared directory, in a fixed
 * little-endian layout ("KGRN"):
 *
 *   magic "KGRN" | u32 version | f64 gamma | u32 n | f64 R | u32 beta_id |
 *   u64 fnv1a(payload) | payload = nu[N] f64, K[N*N] f64 row-major
 *
 * Readers verify the header against the requested parameters and the
 * checksum against the payload, and refuse loudly on any mismatch — a wrong
 * answer from a cache is far worse than a rebuild.  Writers serialize on an
 * advisory file lock and publish via temp-file + rename, so concurrent test
 * binaries either find a complete file or build behind the lock; nobody ever
 * reads a half-written matrix.
 */
#ifndef KINWAVE_KERNEL_CACHE_HPP
#define KINWAVE_KERNEL_CACHE_HPP

#include "kinwave/operator_assembly.hpp"

#include <optional>
#include <string>

namespace kinwave {

/// Cache file name (without directory) for the given request.
std::string cache_entry_name(const KernelParams &params, int n, double R);

/// Load a cached operator.  Returns nullopt if the file does not exist;
/// throws std::runtime_error if it exists but is not a valid cache entry for
/// exactly these parameters (wrong magic/version/parameters/checksum).
std::optional<CollisionOperator> load_operator_cache(const std::string &path,
                                                     const KernelParams &params);

/// Write an operator to `path` atomically (temp file + rename).
void store_operator_cache(const std::string &path, const CollisionOperator &op);

/**
 * Assemble-or-load through a cache directory.  An empty `dir` disables
 * caching.  Only default-option assemblies are cached (the file format does
 * not record diagonal-rule or quadrature overrides); non-default options
 * always assemble fresh.
 */
CollisionOperator assemble_or_load(const std::string &dir, const VelocityGrid &grid,
                                   const KernelParams &params,
                                   const AssemblyOptions &opts = {});

/// Shared cache directory from the KINWAVE_TEST_CACHE environment variable
/// (created if missing), or "" when unset.
std::string cache_dir_from_env();

} // namespace kinwave

#endif // KINWAVE_KERNEL_CACHE_HPP
