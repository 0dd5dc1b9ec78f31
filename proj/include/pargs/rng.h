// Copyright 2026 The PARGS Authors.
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

#ifndef PARGS_RNG_H_
#define PARGS_RNG_H_

#include <cstddef>
#include <cstdint>
#include <random>
#include <span>
#include <utility>
#include <vector>

namespace pargs {

// SplitMix64 finalizer.
constexpr std::uint64_t Mix64(std::uint64_t x) {
  x += 0x9E3779B97F4A7C15ULL;
  x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ULL;
  x = (x ^ (x >> 27)) * 0x94D049BB133111EBULL;
  return x ^ (x >> 31);
}

// Stable child seed for work item `index` under `master`. Every per-prompt and
// per-sample seed in the project comes from this function, so serial and
// parallel runs draw identical streams.
constexpr std::uint64_t DeriveSeed(std::uint64_t master, std::uint64_t index) {
  return Mix64(master ^ Mix64(index));
}

// Random stream with platform-independent derived draws. Only the raw
// mt19937_64 output is used; the <random> distributions are avoided because
// their algorithms are implementation-defined.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : engine_(seed) {}

  std::uint64_t NextU64() { return engine_(); }

  // Uniform in [0, 1) with 53 bits of resolution.
  double Uniform() {
    return static_cast<double>(engine_() >> 11) * 0x1.0p-53;
  }

  // Uniform integer in [0, n). Rejection sampling, no modulo bias.
  std::uint64_t Below(std::uint64_t n);

  // Standard normal via Box-Muller.
  double Normal();

  template <typename T>
  void Shuffle(std::vector<T>& items) {
    for (std::size_t i = items.size(); i > 1; --i) {
      std::size_t j = static_cast<std::size_t>(Below(i));
      std::swap(items[i - 1], items[j]);
    }
  }

 private:
  std::mt19937_64 engine_;
  bool has_spare_ = false;
  double spare_ = 0.0;
};

// Inverse-CDF draw from `probs` (nonnegative, summing to ~1) given u in
// [0, 1). Falls back to the last index with positive mass when rounding leaves
// the cumulative sum short of u.
std::size_t SampleCategorical(std::span<const double> probs, double u);

}  // namespace pargs

#endif  // PARGS_RNG_H_
