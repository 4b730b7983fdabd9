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

#include "privft/scale.h"

#include <cmath>
#include <sstream>
#include <stdexcept>

namespace privft::ckks {

Scale Scale::power_of_two(int exponent) {
  Scale s;
  s.pow2_ = exponent;
  return s;
}

Scale Scale::prime(std::uint64_t p) {
  if (p < 2) throw std::invalid_argument("scale factor must be at least 2");
  Scale s;
  s.add_prime(p, 1);
  return s;
}

void Scale::add_prime(std::uint64_t p, int exponent) {
  // Powers of two are folded into the binary exponent.
  while (p % 2 == 0 && p > 1) {
    pow2_ += exponent;
    p /= 2;
  }
  if (p == 1) return;
  const int e = (primes_[p] += exponent);
  if (e == 0) primes_.erase(p);
}

long double Scale::value() const {
  long double v = 1;
  for (const auto& [p, e] : primes_) {
    v *= std::pow(static_cast<long double>(p), static_cast<long double>(e));
  }
  return std::ldexp(v, pow2_);
}

double Scale::log2() const {
  double bits = pow2_;
  for (const auto& [p, e] : primes_) {
    bits += e * std::log2(static_cast<double>(p));
  }
  return bits;
}

std::string Scale::to_string() const {
  std::ostringstream out;
  out << "2^" << pow2_;
  for (const auto& [p, e] : primes_) out << " * " << p << "^" << e;
  return out.str();
}

Scale& Scale::operator*=(const Scale& other) {
  pow2_ += other.pow2_;
  for (const auto& [p, e] : other.primes_) add_prime(p, e);
  return *this;
}

Scale& Scale::operator/=(const Scale& other) {
  pow2_ -= other.pow2_;
  for (const auto& [p, e] : other.primes_) add_prime(p, -e);
  return *this;
}

Scale Scale::divided_by_prime(std::uint64_t p) const {
  Scale s = *this;
  s.add_prime(p, -1);
  return s;
}

Scale Scale::multiplied_by_prime(std::uint64_t p) const {
  Scale s = *this;
  s.add_prime(p, 1);
  return s;
}

}  // namespace privft::ckks
