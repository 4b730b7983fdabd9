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

#ifndef PRIVFT_MODARITH_H_
#define PRIVFT_MODARITH_H_

#include <cstdint>

namespace privft::rns {

using u128 = unsigned __int128;

// Largest supported modulus bit width. Keeping two bits of headroom lets
// a + b and Shoup intermediates stay inside one 64-bit word.
inline constexpr int kMaxModulusBits = 62;

// A word-sized modulus with a precomputed Barrett constant floor(2^128 / p).
// All arithmetic takes and returns canonical residues in [0, p).
class Modulus {
 public:
  Modulus() = default;
  explicit Modulus(std::uint64_t value);

  std::uint64_t value() const { return value_; }
  int bit_count() const { return bit_count_; }

  std::uint64_t reduce(std::uint64_t x) const {
    return reduce(static_cast<u128>(x));
  }

  std::uint64_t reduce(u128 z) const {
    const auto z0 = static_cast<std::uint64_t>(z);
    const auto z1 = static_cast<std::uint64_t>(z >> 64);
    // Truncated 128x128 -> high-128 product; the estimate undershoots the
    // true quotient by at most 2.
    const u128 lo_lo = static_cast<u128>(z0) * ratio_lo_;
    const u128 lo_hi = static_cast<u128>(z0) * ratio_hi_;
    const u128 hi_lo = static_cast<u128>(z1) * ratio_lo_;
    const u128 mid = (lo_lo >> 64) + static_cast<std::uint64_t>(lo_hi) +
                     static_cast<std::uint64_t>(hi_lo);
    const std::uint64_t quotient =
        static_cast<std::uint64_t>((lo_hi >> 64) + (hi_lo >> 64) + (mid >> 64)) +
        z1 * ratio_hi_;
    std::uint64_t r = z0 - quotient * value_;
    while (r >= value_) r -= value_;
    return r;
  }

  // Reduces a signed integer to [0, p).
  std::uint64_t reduce_signed(std::int64_t x) const {
    if (x >= 0) return reduce(static_cast<std::uint64_t>(x));
    const std::uint64_t r = reduce(static_cast<std::uint64_t>(-(x + 1)) + 1);
    return r == 0 ? 0 : value_ - r;
  }

  std::uint64_t add(std::uint64_t a, std::uint64_t b) const {
    const std::uint64_t s = a + b;
    return s >= value_ ? s - value_ : s;
  }
  std::uint64_t sub(std::uint64_t a, std::uint64_t b) const {
    return a >= b ? a - b : a + value_ - b;
  }
  std::uint64_t neg(std::uint64_t a) const { return a == 0 ? 0 : value_ - a; }
  std::uint64_t mul(std::uint64_t a, std::uint64_t b) const {
    return reduce(static_cast<u128>(a) * b);
  }

  // Shoup constant floor(w * 2^64 / p) for a fixed multiplicand w < p.
  std::uint64_t shoup(std::uint64_t w) const {
    return static_cast<std::uint64_t>((static_cast<u128>(w) << 64) / value_);
  }
  std::uint64_t mul_shoup(std::uint64_t a, std::uint64_t w,
                          std::uint64_t w_shoup) const {
    const auto q =
        static_cast<std::uint64_t>((static_cast<u128>(a) * w_shoup) >> 64);
    const std::uint64_t r = a * w - q * value_;
    return r >= value_ ? r - value_ : r;
  }

  std::uint64_t pow(std::uint64_t base, std::uint64_t exponent) const;
  // Inverse via Fermat; requires a prime modulus and a != 0.
  std::uint64_t inv(std::uint64_t a) const;

  friend bool operator==(const Modulus& a, const Modulus& b) {
    return a.value_ == b.value_;
  }

 private:
  std::uint64_t value_ = 0;
  int bit_count_ = 0;
  std::uint64_t ratio_hi_ = 0;
  std::uint64_t ratio_lo_ = 0;
};

// Deterministic Miller-Rabin, exact for all 64-bit inputs.
bool is_prime(std::uint64_t n);

}  // namespace privft::rns

#endif  // PRIVFT_MODARITH_H_
