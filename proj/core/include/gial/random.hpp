#pragma once

// Seeded sampling helpers built directly on the 64-bit Mersenne Twister.
// The standard distribution classes are implementation-defined, so these are
// spelled out to keep datasets and runs identical across toolchains.

#include <cstdint>
#include <random>
#include <span>
#include <vector>

#include "gial/matrix.hpp"

namespace gial {

using Rng = std::mt19937_64;

/// Independent stream for a named stage of a seeded procedure.
Rng derive_rng(std::uint64_t seed, std::uint64_t stream);

/// Uniform in [0, 1).
double uniform01(Rng& rng);
double uniform(Rng& rng, double lo, double hi);
/// Standard normal via Box–Muller (one draw per call, two uniforms consumed).
double normal(Rng& rng);
/// Uniform integer in [0, bound) without modulo bias.
std::size_t uniform_index(Rng& rng, std::size_t bound);

/// Uniformly random permutation of 0..n-1 (Fisher–Yates).
std::vector<std::size_t> random_permutation(std::size_t n, Rng& rng);
void shuffle(std::span<std::size_t> values, Rng& rng);

/// Entries uniform in [−bound, bound].
Matrix uniform_matrix(std::size_t rows, std::size_t cols, double bound, Rng& rng);

}  // namespace gial
