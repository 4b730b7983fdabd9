/*
 * Copyright 2026 The PrivFT Authors.
 * Licensed under the Apache License, Version 2.0 (the "License");
 * you may not use this file except in compliance with the License.
 * You may obtain a copy of the License at
 *
 *     https://www.apache.org/licenses/LICENSE-2.0
 *
 * Unless required by applicable law or agreed to in writing, software
 * distributed under the License is distributed on an "AS IS" BASIS,
 * WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
 * See the License for the specific language governing permissions and
 * limitations under the License.
 */

#ifndef PRIVFT_SAMPLING_H_
#define PRIVFT_SAMPLING_H_

#include <cstddef>
#include <cstdint>
#include <random>
#include <vector>

#include "privft/rns_ring.h"

namespace privft::ckks {

// Seeded randomness for keys, encryption and model initialization. Built on
// std::mt19937_64, whose output sequence is fixed by the standard, with
// hand-written distributions so results match across standard libraries.
class Sampler {
 public:
  explicit Sampler(std::uint64_t seed) : engine_(seed) {}

  std::uint64_t next() { return engine_(); }
  // Uniform in [0, bound), bound >= 1.
  std::uint64_t uniform(std::uint64_t bound);
  // Uniform in [0, 1) with 53 random bits.
  double uniform_real();
  double uniform_real(double lo, double hi);
  // Rounded Gaussian with tails cut at 6 sigma, by rejection.
  std::int64_t gaussian(double sigma);

  std::vector<std::int64_t> binary_vector(std::size_t n);
  // Uniform over {-1, 0, 1}.
  std::vector<std::int64_t> ternary_vector(std::size_t n);
  std::vector<std::int64_t> gaussian_vector(std::size_t n, double sigma);
  // Uniform residues on every limb, tagged as evaluation form.
  rns::RnsPolynomial uniform_polynomial(const rns::BasisPtr& basis,
                                        std::size_t level);

 private:
  std::mt19937_64 engine_;
};

// Seed taken from PRIVFT_SEED when set, otherwise `fallback`.
std::uint64_t seed_from_env(std::uint64_t fallback);

}  // namespace privft::ckks

#endif  // PRIVFT_SAMPLING_H_
