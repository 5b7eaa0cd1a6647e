// Copyright 2026 The vertiformer Authors
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

#ifndef VTF_CORE_RNG_H_
#define VTF_CORE_RNG_H_

#include <cstdint>
#include <random>

namespace vtf {

// Deterministic random source. The std:: distributions are
// implementation-defined, so all draws go through our own transforms to keep
// results bit-identical across standard libraries.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : engine_(seed) {}

  std::uint64_t next_u64() { return engine_(); }

  // Uniform in [0, 1) with 53 bits of mantissa.
  double uniform();

  // Uniform in [lo, hi).
  double uniform(double lo, double hi);

  // Uniform integer in [0, n).
  std::uint64_t uniform_index(std::uint64_t n);

  // Standard normal via Box-Muller (no cached spare, one value per pair).
  double normal();

  double normal(double mean, double stddev) { return mean + stddev * normal(); }

  // Derive an independent stream, e.g. one per episode or per epoch.
  Rng fork(std::uint64_t stream_id) const;

 private:
  std::mt19937_64 engine_;
};

}  // namespace vtf

#endif  // VTF_CORE_RNG_H_
