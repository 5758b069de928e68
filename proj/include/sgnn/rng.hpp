#pragma once

#include <cstdint>
#include <initializer_list>
#include <random>

namespace sgnn {

using Rng = std::mt19937_64;

/// SplitMix64 finalizer. Used for every named seed derivation in the project.
constexpr std::uint64_t mix64(std::uint64_t x) noexcept
{
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

/// Derive a child seed from a base seed and an ordered list of stream ids,
/// e.g. derive_seed(base, {cell, trial}).
constexpr std::uint64_t derive_seed(std::uint64_t base, std::initializer_list<std::uint64_t> ids) noexcept
{
  std::uint64_t h = mix64(base);
  for (auto id : ids) h = mix64(h ^ mix64(id + 0x632be59bd9b4e019ULL));
  return h;
}

// Named sub-streams so components never share a generator state.
namespace stream {
inline constexpr std::uint64_t patterns = 1;
inline constexpr std::uint64_t graph = 2;
inline constexpr std::uint64_t split = 3;
inline constexpr std::uint64_t init = 4;
inline constexpr std::uint64_t sampling = 5;
inline constexpr std::uint64_t prune = 6;
inline constexpr std::uint64_t alpha = 7;
}  // namespace stream

inline double uniform01(Rng& rng) { return std::uniform_real_distribution<double>(0.0, 1.0)(rng); }

inline std::size_t uniform_index(Rng& rng, std::size_t n)
{
  return std::uniform_int_distribution<std::size_t>(0, n - 1)(rng);
}

}  // namespace sgnn
