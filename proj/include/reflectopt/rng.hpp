#pragma once

#include <cmath>
#include <cstdint>
#include <numbers>

namespace reflectopt {

// Counter-based standard normals: the value for (seed, step, coord) is a pure
// function of its key, so paths are reproducible regardless of how they are
// split across workers.
inline std::uint64_t splitmix64(std::uint64_t z)
{
  z += 0x9e3779b97f4a7c15ULL;
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

inline std::uint64_t hash_key(std::uint64_t seed, std::uint64_t step, std::uint64_t lane)
{
  return splitmix64(splitmix64(splitmix64(seed) ^ step) ^ lane);
}

// Uniform on the open interval (0, 1).
inline double open_unit(std::uint64_t bits) { return (static_cast<double>(bits >> 11) + 0.5) * 0x1.0p-53; }

// Box-Muller: coordinates 2k and 2k+1 share one pair of uniforms.
inline double counter_normal(std::uint64_t seed, std::uint64_t step, std::uint64_t coord)
{
  std::uint64_t const pair = coord >> 1;
  double const u1 = open_unit(hash_key(seed, step, 2 * pair));
  double const u2 = open_unit(hash_key(seed, step, 2 * pair + 1));
  double const radius = std::sqrt(-2.0 * std::log(u1));
  double const angle = 2.0 * std::numbers::pi * u2;
  return (coord & 1U) ? radius * std::sin(angle) : radius * std::cos(angle);
}

// Fills out(0..n-1) with the normals for one step.
template <typename Vec> void counter_normals(std::uint64_t seed, std::uint64_t step, Vec &out)
{
  auto const n = static_cast<std::uint64_t>(out.size());
  for (std::uint64_t pair = 0; 2 * pair < n; ++pair) {
    double const u1 = open_unit(hash_key(seed, step, 2 * pair));
    double const u2 = open_unit(hash_key(seed, step, 2 * pair + 1));
    double const radius = std::sqrt(-2.0 * std::log(u1));
    double const angle = 2.0 * std::numbers::pi * u2;
    out(static_cast<long>(2 * pair)) = radius * std::cos(angle);
    if (2 * pair + 1 < n) { out(static_cast<long>(2 * pair + 1)) = radius * std::sin(angle); }
  }
}

} // namespace reflectopt
