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

#include "privft/modarith.h"

#include <bit>
#include <limits>
#include <stdexcept>
#include <string>

namespace privft::rns {

Modulus::Modulus(std::uint64_t value) : value_(value) {
  if (value < 2 || std::bit_width(value) > kMaxModulusBits) {
    throw std::invalid_argument("modulus must lie in [2, 2^62), got " +
                                std::to_string(value));
  }
  bit_count_ = std::bit_width(value);
  // floor((2^128 - 1) / p) == floor(2^128 / p) for any p that is not a
  // power of two; for powers of two the Barrett estimate is still within 2.
  const u128 ratio = std::numeric_limits<u128>::max() / value;
  ratio_hi_ = static_cast<std::uint64_t>(ratio >> 64);
  ratio_lo_ = static_cast<std::uint64_t>(ratio);
}

std::uint64_t Modulus::pow(std::uint64_t base, std::uint64_t exponent) const {
  std::uint64_t result = 1 % value_;
  base = reduce(base);
  while (exponent != 0) {
    if (exponent & 1) result = mul(result, base);
    base = mul(base, base);
    exponent >>= 1;
  }
  return result;
}

std::uint64_t Modulus::inv(std::uint64_t a) const {
  a = reduce(a);
  if (a == 0) throw std::domain_error("zero has no modular inverse");
  return pow(a, value_ - 2);
}

namespace {

std::uint64_t mul_mod_u64(std::uint64_t a, std::uint64_t b, std::uint64_t n) {
  return static_cast<std::uint64_t>(static_cast<u128>(a) * b % n);
}

std::uint64_t pow_mod_u64(std::uint64_t a, std::uint64_t e, std::uint64_t n) {
  std::uint64_t r = 1 % n;
  a %= n;
  while (e) {
    if (e & 1) r = mul_mod_u64(r, a, n);
    a = mul_mod_u64(a, a, n);
    e >>= 1;
  }
  return r;
}

}  // namespace

bool is_prime(std::uint64_t n) {
  if (n < 2) return false;
  for (std::uint64_t p : {2ULL, 3ULL, 5ULL, 7ULL, 11ULL, 13ULL, 17ULL, 19ULL,
                          23ULL, 29ULL, 31ULL, 37ULL}) {
    if (n % p == 0) return n == p;
  }
  std::uint64_t d = n - 1;
  int s = 0;
  while ((d & 1) == 0) {
    d >>= 1;
    ++s;
  }
  // These twelve bases are a deterministic witness set below 3.3 * 10^24.
  for (std::uint64_t a : {2ULL, 3ULL, 5ULL, 7ULL, 11ULL, 13ULL, 17ULL, 19ULL,
                          23ULL, 29ULL, 31ULL, 37ULL}) {
    std::uint64_t x = pow_mod_u64(a, d, n);
    if (x == 1 || x == n - 1) continue;
    bool composite = true;
    for (int r = 1; r < s; ++r) {
      x = mul_mod_u64(x, x, n);
      if (x == n - 1) {
        composite = false;
        break;
      }
    }
    if (composite) return false;
  }
  return true;
}

}  // namespace privft::rns
