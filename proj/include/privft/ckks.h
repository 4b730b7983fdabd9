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

// Leveled RNS-CKKS: parameters, keys, slot encoding, encryption and the
// homomorphic operations used by the text pipelines.

#ifndef PRIVFT_CKKS_H_
#define PRIVFT_CKKS_H_

#include <complex>
#include <cstddef>
#include <cstdint>
#include <map>
#include <memory>
#include <span>
#include <stdexcept>
#include <utility>
#include <vector>

#include "privft/rns_ring.h"
#include "privft/sampling.h"
#include "privft/scale.h"

namespace privft::ckks {

class LevelExhaustedError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class ScaleMismatchError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

class MissingKeyError : public std::out_of_range {
 public:
  using std::out_of_range::out_of_range;
};

class EncodingOverflowError : public std::overflow_error {
 public:
  using std::overflow_error::overflow_error;
};

struct EncryptionParams {
  std::size_t degree = 0;
  rns::PrimeChain chain;
  // Extra key-switching prime; never part of a ciphertext modulus.
  std::uint64_t special_prime = 0;
  int log_scale = 0;
  double sigma = 3.2;
  int security_bits = 0;  // informational

  std::size_t levels() const { return chain.size(); }
  std::size_t slots() const { return degree / 2; }
  double log2_modulus() const { return chain.log2_product(chain.size()); }
  Scale default_scale() const { return Scale::power_of_two(log_scale); }
  void validate() const;
};

// L primes of log_scale bits each plus the special prime.
EncryptionParams setup(std::size_t degree, std::size_t levels, int log_scale,
                       double sigma = 3.2, int security_bits = 0);

// Largest NTT-friendly prime below 2^61 (2^62 for wider chains) that is
// not already in the chain.
std::uint64_t choose_special_prime(const rns::PrimeChain& chain);

class CkksContext {
 public:
  explicit CkksContext(EncryptionParams params);

  const EncryptionParams& params() const { return params_; }
  // Limbs [p_1 .. p_L, P]; ciphertexts at level l use the first l.
  const rns::BasisPtr& basis() const { return basis_; }
  std::size_t degree() const { return params_.degree; }
  std::size_t slots() const { return params_.degree / 2; }
  std::size_t max_level() const { return params_.levels(); }
  std::size_t special_index() const { return params_.levels(); }

  // 5^step mod 2N; negative steps use the inverse element.
  std::uint64_t galois_element(std::int64_t step) const;

  // Slot <-> coefficient transforms of the canonical embedding, restricted
  // to the orbit of 5 so that X -> X^(5^k) shifts slots left by k.
  void embed_inverse(std::vector<std::complex<long double>>& values) const;
  void embed_forward(std::vector<std::complex<long double>>& values) const;

  std::uint64_t special_mod(std::size_t k) const { return special_mod_[k]; }
  std::uint64_t special_inv(std::size_t k) const { return special_inv_[k]; }

 private:
  EncryptionParams params_;
  rns::BasisPtr basis_;
  std::vector<std::uint64_t> rot_group_;
  std::vector<std::complex<long double>> roots_;
  std::vector<std::uint64_t> special_mod_;
  std::vector<std::uint64_t> special_inv_;
};

using ContextPtr = std::shared_ptr<const CkksContext>;
ContextPtr make_context(EncryptionParams params);

// Polynomials below are kept in evaluation form.
struct Plaintext {
  rns::RnsPolynomial poly;
  Scale scale;
  std::size_t level() const { return poly.level(); }
};

struct Ciphertext {
  std::vector<rns::RnsPolynomial> parts;
  Scale scale;
  std::size_t slots = 0;
  std::size_t level() const { return parts.empty() ? 0 : parts[0].level(); }
  std::size_t size() const { return parts.size(); }
};

struct SecretKey {
  rns::RnsPolynomial s;  // all L+1 limbs
};

struct PublicKey {
  rns::RnsPolynomial b;  // b = -a*s + e over the L chain limbs
  rns::RnsPolynomial a;
};

// One (b_d, a_d) pair per chain limb d, each over all L+1 limbs, with
// b_d = -a_d*s + e_d + P*s' on limb d.
struct KeySwitchKey {
  std::vector<rns::RnsPolynomial> b;
  std::vector<rns::RnsPolynomial> a;
};

class GaloisKeys {
 public:
  void insert(std::int64_t step, std::shared_ptr<const KeySwitchKey> key);
  bool contains(std::int64_t step) const { return keys_.count(step) != 0; }
  const KeySwitchKey& at(std::int64_t step) const;
  std::size_t size() const { return keys_.size(); }
  std::vector<std::int64_t> steps() const;
  const std::map<std::int64_t, std::shared_ptr<const KeySwitchKey>>& entries()
      const {
    return keys_;
  }

 private:
  std::map<std::int64_t, std::shared_ptr<const KeySwitchKey>> keys_;
};

struct EvalKeys {
  KeySwitchKey relin;
  GaloisKeys galois;
};

struct KeySet {
  SecretKey secret;
  PublicKey public_key;
  EvalKeys eval;
};

// +-2^i for i < log2(slots); positive steps only when `both_directions` is
// false.
std::vector<std::int64_t> power_of_two_steps(std::size_t slots,
                                             bool both_directions = true);

SecretKey generate_secret_key(const CkksContext& ctx, Sampler& rng);
PublicKey generate_public_key(const CkksContext& ctx, const SecretKey& sk,
                              Sampler& rng);
// Key switching from `target` (over all L+1 limbs) back to sk.
KeySwitchKey generate_switch_key(const CkksContext& ctx, const SecretKey& sk,
                                 const rns::RnsPolynomial& target,
                                 Sampler& rng);
KeySwitchKey generate_relin_key(const CkksContext& ctx, const SecretKey& sk,
                                Sampler& rng);
GaloisKeys generate_galois_keys(const CkksContext& ctx, const SecretKey& sk,
                                std::span<const std::int64_t> steps,
                                Sampler& rng);
// Full key set; the Galois keys cover `steps`, or every power-of-two step in
// both directions when empty.
KeySet keygen(const CkksContext& ctx, Sampler& rng,
              std::span<const std::int64_t> steps = {});

Plaintext encode(const CkksContext& ctx,
                 std::span<const std::complex<double>> values,
                 const Scale& scale, std::size_t level);
Plaintext encode(const CkksContext& ctx, std::span<const double> values,
                 const Scale& scale, std::size_t level);
Plaintext encode_constant(const CkksContext& ctx, double value,
                          const Scale& scale, std::size_t level);
std::vector<std::complex<double>> decode(const CkksContext& ctx,
                                         const Plaintext& pt);
std::vector<double> decode_real(const CkksContext& ctx, const Plaintext& pt);

Ciphertext encrypt(const CkksContext& ctx, const Plaintext& pt,
                   const PublicKey& pk, Sampler& rng);
// Accepts 2- and 3-part ciphertexts at any level.
Plaintext decrypt(const CkksContext& ctx, const Ciphertext& ct,
                  const SecretKey& sk);

Ciphertext add(const Ciphertext& a, const Ciphertext& b);
Ciphertext sub(const Ciphertext& a, const Ciphertext& b);
void add_inplace(Ciphertext& acc, const Ciphertext& b);
Ciphertext add_plain(const Ciphertext& ct, const Plaintext& pt);
Ciphertext sub_plain(const Ciphertext& ct, const Plaintext& pt);
Ciphertext negate(const Ciphertext& ct);
Ciphertext multiply_plain(const Ciphertext& ct, const Plaintext& pt);
// Tensor product without relinearization (3 parts).
Ciphertext multiply_no_relin(const Ciphertext& a, const Ciphertext& b);
Ciphertext relinearize(const CkksContext& ctx, const Ciphertext& ct,
                       const KeySwitchKey& relin);
Ciphertext multiply(const CkksContext& ctx, const Ciphertext& a,
                    const Ciphertext& b, const KeySwitchKey& relin);
Ciphertext square(const CkksContext& ctx, const Ciphertext& a,
                  const KeySwitchKey& relin);
Ciphertext rescale(const CkksContext& ctx, const Ciphertext& ct);
Ciphertext drop_to_level(const Ciphertext& ct, std::size_t level);
// Cyclic left shift of the slots by `step`, one key switch per set bit.
Ciphertext rotate(const CkksContext& ctx, const Ciphertext& ct,
                  std::int64_t step, const GaloisKeys& keys);
// Every slot receives the sum of all slots.
Ciphertext total_sum(const CkksContext& ctx, const Ciphertext& ct,
                     const GaloisKeys& keys);

// Returns (d0, d1) with d0 + d1*s ~ d*s' where the key maps s' to s.
std::pair<rns::RnsPolynomial, rns::RnsPolynomial> key_switch(
    const CkksContext& ctx, const rns::RnsPolynomial& d,
    const KeySwitchKey& key);

}  // namespace privft::ckks

#endif  // PRIVFT_CKKS_H_
