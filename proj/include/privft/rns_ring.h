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

// Exact arithmetic in Z_q[X]/(X^N + 1) for q a product of word-sized primes,
// with every polynomial held as one residue limb per prime.

#ifndef PRIVFT_RNS_RING_H_
#define PRIVFT_RNS_RING_H_

#include <cstddef>
#include <cstdint>
#include <memory>
#include <optional>
#include <span>
#include <stdexcept>
#include <vector>

#include <boost/multiprecision/cpp_int.hpp>

#include "privft/modarith.h"

namespace privft::rns {

using BigInt = boost::multiprecision::cpp_int;

class PrimeExhaustedError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Ordered prime chain p_1 > p_2 > ... > p_L, each p_i = 1 (mod 2N).
struct PrimeChain {
  std::size_t degree = 0;
  std::vector<std::uint64_t> primes;

  std::size_t size() const { return primes.size(); }
  // Sum of log2(p_i) over the first `level` primes.
  double log2_product(std::size_t level) const;
  // Throws std::invalid_argument when an invariant is broken.
  void validate() const;
};

// Scans p = k*2N + 1 downward from 2^bits and keeps the first `count` primes.
// Primes listed in `exclude` are skipped.
PrimeChain generate_prime_chain(std::size_t degree, std::size_t count, int bits,
                                std::span<const std::uint64_t> exclude = {});

bool is_power_of_two(std::size_t n);

// Negacyclic NTT tables for one prime. Forward output is in bit-reversed
// order: slot i holds a(psi^(2*bitrev(i)+1)).
class NttTables {
 public:
  NttTables(const Modulus& modulus, std::size_t degree);

  void forward(std::span<std::uint64_t> values) const;
  void inverse(std::span<std::uint64_t> values) const;

  const Modulus& modulus() const { return modulus_; }
  std::size_t degree() const { return degree_; }
  std::uint64_t root() const { return psi_; }

 private:
  Modulus modulus_;
  std::size_t degree_;
  std::uint64_t psi_;
  std::vector<std::uint64_t> roots_;
  std::vector<std::uint64_t> roots_shoup_;
  std::vector<std::uint64_t> inv_roots_;
  std::vector<std::uint64_t> inv_roots_shoup_;
  std::uint64_t inv_degree_;
  std::uint64_t inv_degree_shoup_;
};

// True when an element of order 2N exists mod p, i.e. p = 1 (mod 2N).
bool supports_ntt(std::uint64_t prime, std::size_t degree);

// Shared, immutable description of the residue base. Primes that are not
// NTT-friendly are allowed; polynomials over them stay in coefficient form.
class RnsBasis {
 public:
  RnsBasis(std::size_t degree, std::vector<std::uint64_t> primes);

  std::size_t degree() const { return degree_; }
  std::size_t size() const { return moduli_.size(); }
  const Modulus& modulus(std::size_t i) const { return moduli_.at(i); }
  bool has_ntt(std::size_t i) const { return ntt_.at(i).has_value(); }
  const NttTables& ntt(std::size_t i) const;
  // Permutation of evaluation-form indices realizing X -> X^kappa.
  std::vector<std::uint32_t> automorphism_permutation(
      std::uint64_t kappa) const;

 private:
  std::size_t degree_;
  std::vector<Modulus> moduli_;
  std::vector<std::optional<NttTables>> ntt_;
};

using BasisPtr = std::shared_ptr<const RnsBasis>;

enum class PolyForm : std::uint8_t { kCoefficient = 0, kEvaluation = 1 };

// An element of R_{q_l}: `level` limbs of N residues, limb i modulo the
// basis' i-th prime. Residues are always canonical, in [0, p_i).
class RnsPolynomial {
 public:
  RnsPolynomial() = default;
  RnsPolynomial(BasisPtr basis, std::size_t level, PolyForm form);

  // Reduces small signed integer coefficients into every limb.
  static RnsPolynomial from_coefficients(BasisPtr basis, std::size_t level,
                                         std::span<const std::int64_t> coeffs);

  const BasisPtr& basis() const { return basis_; }
  std::size_t level() const { return level_; }
  std::size_t degree() const { return basis_ ? basis_->degree() : 0; }
  PolyForm form() const { return form_; }
  bool empty() const { return data_.empty(); }

  std::span<std::uint64_t> limb(std::size_t i) {
    return {data_.data() + i * degree(), degree()};
  }
  std::span<const std::uint64_t> limb(std::size_t i) const {
    return {data_.data() + i * degree(), degree()};
  }
  std::span<const std::uint64_t> data() const { return data_; }
  std::span<std::uint64_t> mutable_data() { return data_; }

  // In-place transforms; no-ops when already in the requested form.
  void to_evaluation();
  void to_coefficient();

  // Keeps the first `level` limbs.
  void drop_to_level(std::size_t level);

  RnsPolynomial& operator+=(const RnsPolynomial& other);
  RnsPolynomial& operator-=(const RnsPolynomial& other);
  // Pointwise product; both operands must be in evaluation form.
  RnsPolynomial& operator*=(const RnsPolynomial& other);
  void negate();
  // Multiplies limb i by scalars[i].
  void multiply_scalars(std::span<const std::uint64_t> scalars);
  // acc += a * b pointwise (evaluation form).
  void multiply_accumulate(const RnsPolynomial& a, const RnsPolynomial& b);

  friend bool operator==(const RnsPolynomial& a, const RnsPolynomial& b) {
    return a.basis_ == b.basis_ && a.level_ == b.level_ &&
           a.form_ == b.form_ && a.data_ == b.data_;
  }

 private:
  void check_compatible(const RnsPolynomial& other) const;

  BasisPtr basis_;
  std::size_t level_ = 0;
  PolyForm form_ = PolyForm::kCoefficient;
  std::vector<std::uint64_t> data_;
};

// Contract: the input must be in coefficient (resp. evaluation) form.
RnsPolynomial ntt_forward(RnsPolynomial p);
RnsPolynomial ntt_inverse(RnsPolynomial p);

RnsPolynomial poly_add(const RnsPolynomial& a, const RnsPolynomial& b);
RnsPolynomial poly_sub(const RnsPolynomial& a, const RnsPolynomial& b);
// Converts copies of the operands to evaluation form as needed; the result
// is in evaluation form.
RnsPolynomial poly_mul(const RnsPolynomial& a, const RnsPolynomial& b);

// X -> X^kappa for odd kappa; works in either form and preserves it.
RnsPolynomial apply_automorphism(const RnsPolynomial& p, std::uint64_t kappa);

enum class Division : std::uint8_t { kFloor, kRound };

// Drops the last limb p_l and maps every coefficient c to floor(c / p_l),
// computed limb-wise as (c - [c]_{p_l}) * p_l^{-1} mod p_k with [c]_{p_l} in
// [0, p_l). kRound uses the residue in (-p_l/2, p_l/2] instead, giving
// floor(c / p_l + 1/2). Works in either form and preserves it. Requires
// level >= 2.
RnsPolynomial divide_by_last_prime(const RnsPolynomial& p,
                                   Division mode = Division::kFloor);

// Unique representative in [0, q_l) of every coefficient. Test oracle.
std::vector<BigInt> crt_recompose(const RnsPolynomial& p);

// Balanced reconstruction of every coefficient into (-q/2, q/2] through
// mixed-radix digits. Exact whenever the true value is representable in a
// long double, which covers every decryption of a correct ciphertext.
std::vector<long double> centered_coefficients(const RnsPolynomial& p);

}  // namespace privft::rns

#endif  // PRIVFT_RNS_RING_H_
