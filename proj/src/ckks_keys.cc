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

#include <string>
#include <unordered_map>

#include "privft/ckks.h"

namespace privft::ckks {

namespace {

rns::RnsPolynomial small_polynomial(const CkksContext& ctx, std::size_t level,
                                    const std::vector<std::int64_t>& coeffs) {
  auto p = rns::RnsPolynomial::from_coefficients(ctx.basis(), level, coeffs);
  p.to_evaluation();
  return p;
}

rns::RnsPolynomial restricted(rns::RnsPolynomial p, std::size_t level) {
  p.drop_to_level(level);
  return p;
}

}  // namespace

SecretKey generate_secret_key(const CkksContext& ctx, Sampler& rng) {
  return {small_polynomial(ctx, ctx.max_level() + 1,
                           rng.binary_vector(ctx.degree()))};
}

PublicKey generate_public_key(const CkksContext& ctx, const SecretKey& sk,
                              Sampler& rng) {
  const std::size_t level = ctx.max_level();
  PublicKey pk;
  pk.a = rng.uniform_polynomial(ctx.basis(), level);
  pk.b = small_polynomial(ctx, level,
                          rng.gaussian_vector(ctx.degree(), ctx.params().sigma));
  rns::RnsPolynomial as = pk.a;
  as *= restricted(sk.s, level);
  pk.b -= as;
  return pk;
}

KeySwitchKey generate_switch_key(const CkksContext& ctx, const SecretKey& sk,
                                 const rns::RnsPolynomial& target,
                                 Sampler& rng) {
  const std::size_t full = ctx.max_level() + 1;
  if (target.level() != full || target.form() != rns::PolyForm::kEvaluation) {
    throw std::invalid_argument("switch-key target must span the key basis");
  }
  KeySwitchKey key;
  for (std::size_t d = 0; d < ctx.max_level(); ++d) {
    rns::RnsPolynomial a = rng.uniform_polynomial(ctx.basis(), full);
    rns::RnsPolynomial b = small_polynomial(
        ctx, full, rng.gaussian_vector(ctx.degree(), ctx.params().sigma));
    rns::RnsPolynomial as = a;
    as *= sk.s;
    b -= as;
    const rns::Modulus& mod = ctx.basis()->modulus(d);
    const std::uint64_t factor = ctx.special_mod(d);
    const std::uint64_t factor_shoup = mod.shoup(factor);
    auto limb = b.limb(d);
    auto src = target.limb(d);
    for (std::size_t j = 0; j < limb.size(); ++j) {
      limb[j] = mod.add(limb[j], mod.mul_shoup(src[j], factor, factor_shoup));
    }
    key.b.push_back(std::move(b));
    key.a.push_back(std::move(a));
  }
  return key;
}

KeySwitchKey generate_relin_key(const CkksContext& ctx, const SecretKey& sk,
                                Sampler& rng) {
  rns::RnsPolynomial s2 = sk.s;
  s2 *= sk.s;
  return generate_switch_key(ctx, sk, s2, rng);
}

GaloisKeys generate_galois_keys(const CkksContext& ctx, const SecretKey& sk,
                                std::span<const std::int64_t> steps,
                                Sampler& rng) {
  GaloisKeys keys;
  std::unordered_map<std::uint64_t, std::shared_ptr<const KeySwitchKey>> made;
  for (std::int64_t step : steps) {
    const std::uint64_t kappa = ctx.galois_element(step);
    auto& key = made[kappa];
    if (!key) {
      key = std::make_shared<const KeySwitchKey>(generate_switch_key(
          ctx, sk, rns::apply_automorphism(sk.s, kappa), rng));
    }
    keys.insert(step, key);
  }
  return keys;
}

KeySet keygen(const CkksContext& ctx, Sampler& rng,
              std::span<const std::int64_t> steps) {
  KeySet keys;
  keys.secret = generate_secret_key(ctx, rng);
  keys.public_key = generate_public_key(ctx, keys.secret, rng);
  keys.eval.relin = generate_relin_key(ctx, keys.secret, rng);
  const auto all = power_of_two_steps(ctx.slots());
  keys.eval.galois = generate_galois_keys(
      ctx, keys.secret, steps.empty() ? std::span<const std::int64_t>(all) : steps,
      rng);
  return keys;
}

Ciphertext encrypt(const CkksContext& ctx, const Plaintext& pt,
                   const PublicKey& pk, Sampler& rng) {
  const std::size_t level = pt.level();
  if (pt.poly.basis() != ctx.basis()) {
    throw std::invalid_argument("plaintext belongs to another context");
  }
  if (level > pk.a.level()) {
    throw std::invalid_argument("plaintext level exceeds the public key");
  }
  const double sigma = ctx.params().sigma;
  const rns::RnsPolynomial v =
      small_polynomial(ctx, level, rng.ternary_vector(ctx.degree()));
  Ciphertext ct;
  ct.scale = pt.scale;
  ct.slots = ctx.slots();
  rns::RnsPolynomial c0 =
      small_polynomial(ctx, level, rng.gaussian_vector(ctx.degree(), sigma));
  c0.multiply_accumulate(restricted(pk.b, level), v);
  c0 += pt.poly;
  rns::RnsPolynomial c1 =
      small_polynomial(ctx, level, rng.gaussian_vector(ctx.degree(), sigma));
  c1.multiply_accumulate(restricted(pk.a, level), v);
  ct.parts.push_back(std::move(c0));
  ct.parts.push_back(std::move(c1));
  return ct;
}

Plaintext decrypt(const CkksContext& ctx, const Ciphertext& ct,
                  const SecretKey& sk) {
  if (ct.size() < 2 || ct.size() > 3) {
    throw std::invalid_argument("ciphertext must have 2 or 3 parts");
  }
  if (ct.parts[0].basis() != ctx.basis()) {
    throw std::invalid_argument("ciphertext belongs to another context");
  }
  const std::size_t level = ct.level();
  const rns::RnsPolynomial s = restricted(sk.s, level);
  Plaintext pt{ct.parts[0], ct.scale};
  pt.poly.multiply_accumulate(ct.parts[1], s);
  if (ct.size() == 3) {
    rns::RnsPolynomial s2 = s;
    s2 *= s;
    pt.poly.multiply_accumulate(ct.parts[2], s2);
  }
  return pt;
}

}  // namespace privft::ckks
