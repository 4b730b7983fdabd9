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

#include <algorithm>
#include <bit>
#include <cmath>
#include <numbers>
#include <string>

#include "privft/ckks.h"

namespace privft::ckks {

void EncryptionParams::validate() const {
  chain.validate();
  if (chain.degree != degree) {
    throw std::invalid_argument("chain built for a different ring degree");
  }
  if (!rns::supports_ntt(special_prime, degree) ||
      std::find(chain.primes.begin(), chain.primes.end(), special_prime) !=
          chain.primes.end()) {
    throw std::invalid_argument("invalid special prime");
  }
  if (log_scale < 1 || log_scale > rns::kMaxModulusBits) {
    throw std::invalid_argument("scale exponent out of range");
  }
  if (!(sigma > 0)) throw std::invalid_argument("sigma must be positive");
}

std::uint64_t choose_special_prime(const rns::PrimeChain& chain) {
  int max_bits = 0;
  for (std::uint64_t p : chain.primes) {
    max_bits = std::max(max_bits, static_cast<int>(std::bit_width(p)));
  }
  const int bits = max_bits >= 61 ? 62 : 61;
  return rns::generate_prime_chain(chain.degree, 1, bits, chain.primes)
      .primes[0];
}

EncryptionParams setup(std::size_t degree, std::size_t levels, int log_scale,
                       double sigma, int security_bits) {
  if (!rns::is_power_of_two(degree) || degree < 4) {
    throw std::invalid_argument("ring degree must be a power of two >= 4");
  }
  EncryptionParams params;
  params.degree = degree;
  params.chain = rns::generate_prime_chain(degree, levels, log_scale);
  params.special_prime = choose_special_prime(params.chain);
  params.log_scale = log_scale;
  params.sigma = sigma;
  params.security_bits = security_bits;
  params.validate();
  return params;
}

CkksContext::CkksContext(EncryptionParams params) : params_(std::move(params)) {
  params_.validate();
  std::vector<std::uint64_t> primes = params_.chain.primes;
  primes.push_back(params_.special_prime);
  basis_ = std::make_shared<rns::RnsBasis>(params_.degree, std::move(primes));

  const std::size_t n = params_.degree;
  const std::uint64_t m = 2 * static_cast<std::uint64_t>(n);
  rot_group_.resize(n / 2);
  std::uint64_t g = 1;
  for (auto& r : rot_group_) {
    r = g;
    g = (g * 5) % m;
  }
  roots_.resize(m + 1);
  for (std::uint64_t j = 0; j <= m; ++j) {
    const long double angle = 2 * std::numbers::pi_v<long double> *
                              static_cast<long double>(j) /
                              static_cast<long double>(m);
    roots_[j] = {std::cos(angle), std::sin(angle)};
  }

  const std::size_t levels = params_.levels();
  special_mod_.resize(levels);
  special_inv_.resize(levels);
  for (std::size_t k = 0; k < levels; ++k) {
    const rns::Modulus& mod = basis_->modulus(k);
    special_mod_[k] = mod.reduce(params_.special_prime);
    special_inv_[k] = mod.inv(special_mod_[k]);
  }
}

std::uint64_t CkksContext::galois_element(std::int64_t step) const {
  const auto slots = static_cast<std::int64_t>(this->slots());
  std::int64_t k = step % slots;
  if (k < 0) k += slots;
  // 5 has order N/2 modulo 2N.
  const rns::Modulus two_n(2 * static_cast<std::uint64_t>(params_.degree));
  return two_n.pow(5, static_cast<std::uint64_t>(k));
}

namespace {

void bit_reverse_permute(std::vector<std::complex<long double>>& v) {
  const std::size_t n = v.size();
  for (std::size_t i = 1, j = 0; i < n; ++i) {
    std::size_t bit = n >> 1;
    for (; j & bit; bit >>= 1) j ^= bit;
    j ^= bit;
    if (i < j) std::swap(v[i], v[j]);
  }
}

}  // namespace

void CkksContext::embed_inverse(
    std::vector<std::complex<long double>>& values) const {
  const std::size_t size = values.size();
  const std::uint64_t m = 2 * static_cast<std::uint64_t>(params_.degree);
  for (std::size_t len = size; len >= 1; len >>= 1) {
    for (std::size_t i = 0; i < size; i += len) {
      const std::size_t half = len >> 1;
      const std::uint64_t quarter = static_cast<std::uint64_t>(len) << 2;
      const std::uint64_t gap = m / quarter;
      for (std::size_t j = 0; j < half; ++j) {
        const std::uint64_t idx =
            ((quarter - (rot_group_[j] % quarter)) * gap) % m;
        const auto u = values[i + j] + values[i + j + half];
        const auto v = (values[i + j] - values[i + j + half]) * roots_[idx];
        values[i + j] = u;
        values[i + j + half] = v;
      }
    }
    if (len == 1) break;
  }
  bit_reverse_permute(values);
  const long double inv = 1.0L / static_cast<long double>(size);
  for (auto& x : values) x *= inv;
}

void CkksContext::embed_forward(
    std::vector<std::complex<long double>>& values) const {
  const std::size_t size = values.size();
  const std::uint64_t m = 2 * static_cast<std::uint64_t>(params_.degree);
  bit_reverse_permute(values);
  for (std::size_t len = 2; len <= size; len <<= 1) {
    const std::size_t half = len >> 1;
    const std::uint64_t quarter = static_cast<std::uint64_t>(len) << 2;
    const std::uint64_t gap = m / quarter;
    for (std::size_t i = 0; i < size; i += len) {
      for (std::size_t j = 0; j < half; ++j) {
        const std::uint64_t idx = (rot_group_[j] % quarter) * gap;
        const auto u = values[i + j];
        const auto v = values[i + j + half] * roots_[idx];
        values[i + j] = u + v;
        values[i + j + half] = u - v;
      }
    }
  }
}

ContextPtr make_context(EncryptionParams params) {
  return std::make_shared<const CkksContext>(std::move(params));
}

void GaloisKeys::insert(std::int64_t step,
                        std::shared_ptr<const KeySwitchKey> key) {
  keys_[step] = std::move(key);
}

const KeySwitchKey& GaloisKeys::at(std::int64_t step) const {
  const auto it = keys_.find(step);
  if (it == keys_.end()) {
    throw MissingKeyError("no rotation key for step " + std::to_string(step));
  }
  return *it->second;
}

std::vector<std::int64_t> GaloisKeys::steps() const {
  std::vector<std::int64_t> out;
  for (const auto& [step, key] : keys_) out.push_back(step);
  return out;
}

std::vector<std::int64_t> power_of_two_steps(std::size_t slots,
                                             bool both_directions) {
  std::vector<std::int64_t> steps;
  for (std::size_t s = 1; s < slots; s <<= 1) {
    steps.push_back(static_cast<std::int64_t>(s));
    if (both_directions) steps.push_back(-static_cast<std::int64_t>(s));
  }
  return steps;
}

}  // namespace privft::ckks
