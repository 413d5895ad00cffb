#pragma once

#include <cstdint>
#include <initializer_list>
#include <random>
#include <string_view>

namespace zopro {

using Rng = std::mt19937_64;

// SplitMix64 finalizer; used to derive independent stream seeds.
std::uint64_t mix64(std::uint64_t x);

// Deterministic seed for a named stream keyed by integers, e.g.
// derive_seed(seed, "directions", {round}).
std::uint64_t derive_seed(std::uint64_t base, std::string_view stream,
                          std::initializer_list<std::uint64_t> keys = {});

inline Rng make_rng(std::uint64_t base, std::string_view stream,
                    std::initializer_list<std::uint64_t> keys = {}) {
  return Rng(derive_seed(base, stream, keys));
}

// Standard normal draw via Box-Muller. std::normal_distribution is
// implementation-defined across standard libraries; this keeps generated
// data identical across toolchains.
double standard_normal(Rng& rng);

// Uniform integer in [0, n) by rejection, independent of the library's
// distribution implementation.
std::uint64_t uniform_index(Rng& rng, std::uint64_t n);

// Uniform double in [0, 1).
double uniform01(Rng& rng);

// FNV-1a over raw bytes; 64-bit digests for payloads, graphs and problems.
std::uint64_t fnv1a(const void* data, std::size_t size,
                    std::uint64_t h = 0xcbf29ce484222325ULL);

}  // namespace zopro
