#pragma once

#include <cmath>
#include <cstdint>
#include <random>
#include <span>
#include <stdexcept>

namespace psrl {

using Rng = std::mt19937_64;

// Library distributions are implementation-defined; these are bit-stable across toolchains.
inline double uniform01(Rng& rng) { return static_cast<double>(rng() >> 11) * 0x1.0p-53; }

template <typename Scalar>
int sample_categorical(std::span<const Scalar> weights, Rng& rng) {
  Scalar total = 0;
  for (Scalar w : weights) total += w;
  if (!(total > 0)) throw std::invalid_argument("sample_categorical: zero total mass");
  const Scalar u = static_cast<Scalar>(uniform01(rng)) * total;
  Scalar acc = 0;
  int last_positive = -1;
  for (std::size_t i = 0; i < weights.size(); ++i) {
    if (weights[i] <= 0) continue;
    acc += weights[i];
    last_positive = static_cast<int>(i);
    if (u < acc) return last_positive;
  }
  return last_positive;
}

/// Standard normal draw by Box-Muller.
inline double standard_normal(Rng& rng) {
  double u1 = uniform01(rng);
  while (u1 <= 0.0) u1 = uniform01(rng);
  const double u2 = uniform01(rng);
  return std::sqrt(-2.0 * std::log(u1)) * std::cos(6.283185307179586 * u2);
}

}  // namespace psrl
