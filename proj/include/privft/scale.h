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

#ifndef PRIVFT_SCALE_H_
#define PRIVFT_SCALE_H_

#include <cstdint>
#include <map>
#include <string>

namespace privft::ckks {

// Exact encoding scale 2^a * prod(p_i^e_i) with integer exponents. Rescaling
// divides by a chain prime, so scales are rational and tracked symbolically.
class Scale {
 public:
  Scale() = default;
  static Scale power_of_two(int exponent);
  static Scale prime(std::uint64_t p);

  int pow2_exponent() const { return pow2_; }
  const std::map<std::uint64_t, int>& prime_exponents() const {
    return primes_;
  }

  long double value() const;
  double log2() const;
  std::string to_string() const;

  Scale& operator*=(const Scale& other);
  Scale& operator/=(const Scale& other);
  friend Scale operator*(Scale a, const Scale& b) { return a *= b; }
  friend Scale operator/(Scale a, const Scale& b) { return a /= b; }
  friend bool operator==(const Scale& a, const Scale& b) = default;

  Scale divided_by_prime(std::uint64_t p) const;
  Scale multiplied_by_prime(std::uint64_t p) const;

 private:
  void add_prime(std::uint64_t p, int exponent);

  int pow2_ = 0;
  std::map<std::uint64_t, int> primes_;  // zero exponents are erased
};

}  // namespace privft::ckks

#endif  // PRIVFT_SCALE_H_
