#pragma once

#include <cmath>
#include <cstdint>
#include <initializer_list>
#include <random>

#include "jadce/linalg.hpp"

namespace jadce {

using Rng = std::mt19937_64;

/// splitmix64 finalizer; used to turn structured counters into seeds.
constexpr std::uint64_t mix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

/// Derive an independent stream seed from a master seed and a counter path,
/// e.g. derive_seed(master, {sweep_index, trial, stream_tag}).
inline std::uint64_t derive_seed(std::uint64_t master,
                                 std::initializer_list<std::uint64_t> path) {
  std::uint64_t h = mix64(master);
  for (std::uint64_t p : path) h = mix64(h ^ mix64(p + 0x632be59bd9b4e019ULL));
  return h;
}

// Stream tags keep the randomness of different pipeline stages disjoint.
namespace stream {
inline constexpr std::uint64_t scenario = 1;
inline constexpr std::uint64_t pilots = 2;
inline constexpr std::uint64_t training = 3;
inline constexpr std::uint64_t threshold = 4;
inline constexpr std::uint64_t evaluation = 5;
inline constexpr std::uint64_t lambda_search = 6;
}  // namespace stream

/// Circularly-symmetric complex Gaussian CN(0, variance).
inline Complex complex_normal(Rng& rng, double variance = 1.0) {
  std::normal_distribution<double> n(0.0, 1.0);
  const double s = std::sqrt(variance / 2.0);
  const double re = n(rng);
  const double im = n(rng);
  return {s * re, s * im};
}

inline CMatrix complex_normal_matrix(Rng& rng, Index rows, Index cols,
                                     double variance = 1.0) {
  CMatrix m(rows, cols);
  for (Index j = 0; j < cols; ++j)
    for (Index i = 0; i < rows; ++i) m(i, j) = complex_normal(rng, variance);
  return m;
}

}  // namespace jadce
