// Copyright 2026 The confkit Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#ifndef CONFKIT_RNG_HPP_
#define CONFKIT_RNG_HPP_

#include <cstdint>
#include <span>
#include <string_view>
#include <vector>

namespace confkit {

/// SplitMix64: the i-th output is mix64(seed + i * 0x9E3779B97F4A7C15).
///
/// All sampling routines below are written out explicitly (no <random>
/// distributions) so that a given seed produces the same stream on every
/// platform and standard library. Every draw consumes a documented number
/// of counter steps:
///   uniform()        1
///   normal()         2   (Box-Muller, cosine branch only)
///   gamma(a)         variable (Marsaglia-Tsang rejection)
///   below(n)         >= 1 (rejection on the top bits)
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : state_(seed) {}

  /// Independent stream for a named sub-task, e.g. derive(seed, utt_id).
  static Rng derive(std::uint64_t seed, std::string_view tag);
  static std::uint64_t hash(std::uint64_t seed, std::string_view tag);

  std::uint64_t next();
  /// Uniform in [0, 1) with 53 random bits.
  double uniform();
  /// Uniform in (0, 1).
  double uniform_open();
  /// Uniform integer in [0, n).
  std::uint64_t below(std::uint64_t n);
  double normal();
  double gamma(double shape);
  double beta(double a, double b);
  /// Index drawn proportionally to non-negative weights (need not sum to 1).
  std::size_t categorical(std::span<const double> weights);

  template <typename T>
  void shuffle(std::vector<T>& v) {
    for (std::size_t i = v.size(); i > 1; --i) {
      std::size_t j = static_cast<std::size_t>(below(i));
      std::swap(v[i - 1], v[j]);
    }
  }

 private:
  std::uint64_t state_;
};

}  // namespace confkit

#endif  // CONFKIT_RNG_HPP_
