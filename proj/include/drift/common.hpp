// Copyright 2026 drift authors. Apache 2.0 License.
//
// Shared error types, RNG seeding helpers and small geometry aliases.

#pragma once

#include <Eigen/Core>
#include <cmath>
#include <cstdint>
#include <random>
#include <stdexcept>
#include <string>
#include <vector>

namespace drift {

/// Raised when an operation produces NaN/Inf; finite values are an invariant
/// of every numeric result in this library.
struct NonFiniteError : std::runtime_error {
    explicit NonFiniteError(const std::string& what) : std::runtime_error(what) {}
};

/// Raised on file-system failures (distinct exit code in the CLI).
struct IoError : std::runtime_error {
    explicit IoError(const std::string& what) : std::runtime_error(what) {}
};

using Vec2 = Eigen::Vector2d;
using PointSet = std::vector<Vec2>;

/// Waypoint sequence, one row per waypoint, robot frame, meters.
using Trajectory = Eigen::MatrixX2d;

/// splitmix64: cheap stateless mixing used to derive independent sub-seeds
/// (episode seeds, per-parameter init seeds) from one master seed.
inline std::uint64_t mix_seed(std::uint64_t x) {
    x += 0x9e3779b97f4a7c15ull;
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ull;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebull;
    return x ^ (x >> 31);
}

inline std::uint64_t mix_seed(std::uint64_t a, std::uint64_t b) {
    return mix_seed(a ^ mix_seed(b));
}

inline std::mt19937_64 make_rng(std::uint64_t seed) {
    return std::mt19937_64(mix_seed(seed));
}

// ---- portable sampling ----
// std::uniform_real_distribution / std::normal_distribution leave the exact
// value sequence up to the standard library, which would break the
// byte-identical determinism contract if the toolchain ever changes.  These
// draw directly from the engine's bit stream.

/// Uniform double in [0, 1).
inline double runif(std::mt19937_64& rng) {
    return static_cast<double>(rng() >> 11) * 0x1.0p-53;
}

inline double runif(std::mt19937_64& rng, double lo, double hi) {
    return lo + (hi - lo) * runif(rng);
}

/// Uniform integer in [lo, hi] inclusive.
inline std::int64_t rint(std::mt19937_64& rng, std::int64_t lo, std::int64_t hi) {
    const std::uint64_t span = static_cast<std::uint64_t>(hi - lo) + 1u;
    return lo + static_cast<std::int64_t>(rng() % span);
}

/// Standard normal via Box-Muller (single value; the twin is discarded so
/// consumption per call is fixed at two engine draws).
inline double rnorm(std::mt19937_64& rng) {
    double u1 = 0.0;
    while (u1 == 0.0) u1 = runif(rng);
    const double u2 = runif(rng);
    return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * M_PI * u2);
}

/// FNV-1a 64-bit hash, used for dataset manifest integrity records.
inline std::uint64_t fnv1a(const void* bytes, std::size_t n, std::uint64_t h = 0xcbf29ce484222325ull) {
    const auto* p = static_cast<const unsigned char*>(bytes);
    for (std::size_t i = 0; i < n; ++i) {
        h ^= p[i];
        h *= 0x100000001b3ull;
    }
    return h;
}

}  // namespace drift
