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

#include "privft/sampling.h"

#include <cmath>
#include <cstdlib>
#include <stdexcept>
#include <string>

namespace privft::ckks {

std::uint64_t Sampler::uniform(std::uint64_t bound) {
  if (bound == 0) throw std::invalid_argument("empty sampling range");
  // Reject the top partial block so every residue is equally likely.
  const std::uint64_t limit = UINT64_MAX - UINT64_MAX % bound;
  std::uint64_t x;
  do {
    x = engine_();
  } while (x >= limit);
  return x % bound;
}

double Sampler::uniform_real() {
  return static_cast<double>(engine_() >> 11) * 0x1.0p-53;
}

double Sampler::uniform_real(double lo, double hi) {
  return lo + (hi - lo) * uniform_real();
}

std::int64_t Sampler::gaussian(double sigma) {
  if (!(sigma > 0)) throw std::invalid_argument("sigma must be positive");
  const auto bound = static_cast<std::int64_t>(std::ceil(6 * sigma));
  const double denom = 2 * sigma * sigma;
  while (true) {
    const auto x = static_cast<std::int64_t>(uniform(2 * bound + 1)) - bound;
    const double accept = std::exp(-static_cast<double>(x * x) / denom);
    if (uniform_real() < accept) return x;
  }
}

std::vector<std::int64_t> Sampler::binary_vector(std::size_t n) {
  std::vector<std::int64_t> out(n);
  for (std::size_t i = 0; i < n; i += 64) {
    const std::uint64_t bits = engine_();
    for (std::size_t j = 0; j < 64 && i + j < n; ++j) {
      out[i + j] = static_cast<std::int64_t>((bits >> j) & 1);
    }
  }
  return out;
}

std::vector<std::int64_t> Sampler::ternary_vector(std::size_t n) {
  std::vector<std::int64_t> out(n);
  std::size_t i = 0;
  while (i < n) {
    std::uint64_t bits = engine_();
    for (int j = 0; j < 32 && i < n; ++j, bits >>= 2) {
      const auto pair = static_cast<std::int64_t>(bits & 3);
      if (pair != 3) out[i++] = pair - 1;
    }
  }
  return out;
}

std::vector<std::int64_t> Sampler::gaussian_vector(std::size_t n,
                                                   double sigma) {
  std::vector<std::int64_t> out(n);
  for (auto& x : out) x = gaussian(sigma);
  return out;
}

rns::RnsPolynomial Sampler::uniform_polynomial(const rns::BasisPtr& basis,
                                               std::size_t level) {
  rns::RnsPolynomial p(basis, level, rns::PolyForm::kEvaluation);
  for (std::size_t i = 0; i < level; ++i) {
    const std::uint64_t q = basis->modulus(i).value();
    for (auto& x : p.limb(i)) x = uniform(q);
  }
  return p;
}

std::uint64_t seed_from_env(std::uint64_t fallback) {
  const char* env = std::getenv("PRIVFT_SEED");
  if (env == nullptr || *env == '\0') return fallback;
  try {
    return std::stoull(env, nullptr, 0);
  } catch (const std::exception&) {
    throw std::invalid_argument(std::string("PRIVFT_SEED is not an integer: ") +
                                env);
  }
}

}  // namespace privft::ckks
