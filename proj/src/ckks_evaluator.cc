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

#include <bit>
#include <cstdlib>
#include <string>

#include "privft/ckks.h"

namespace privft::ckks {

namespace {

void require_same_level(const Ciphertext& a, std::size_t level) {
  if (a.level() != level) {
    throw std::invalid_argument("level mismatch: " + std::to_string(a.level()) +
                                " vs " + std::to_string(level));
  }
}

void require_same_scale(const Scale& a, const Scale& b) {
  if (!(a == b)) {
    throw ScaleMismatchError("scale mismatch: " + a.to_string() + " vs " +
                             b.to_string());
  }
}

void require_two_parts(const Ciphertext& ct) {
  if (ct.size() != 2) {
    throw std::invalid_argument("operation expects a relinearized ciphertext");
  }
}

}  // namespace

void add_inplace(Ciphertext& acc, const Ciphertext& b) {
  require_same_level(acc, b.level());
  require_same_scale(acc.scale, b.scale);
  if (acc.size() != b.size()) {
    throw std::invalid_argument("ciphertext part counts differ");
  }
  for (std::size_t i = 0; i < acc.size(); ++i) acc.parts[i] += b.parts[i];
}

Ciphertext add(const Ciphertext& a, const Ciphertext& b) {
  Ciphertext out = a;
  add_inplace(out, b);
  return out;
}

Ciphertext sub(const Ciphertext& a, const Ciphertext& b) {
  require_same_level(a, b.level());
  require_same_scale(a.scale, b.scale);
  if (a.size() != b.size()) {
    throw std::invalid_argument("ciphertext part counts differ");
  }
  Ciphertext out = a;
  for (std::size_t i = 0; i < out.size(); ++i) out.parts[i] -= b.parts[i];
  return out;
}

Ciphertext add_plain(const Ciphertext& ct, const Plaintext& pt) {
  require_same_level(ct, pt.level());
  require_same_scale(ct.scale, pt.scale);
  Ciphertext out = ct;
  out.parts[0] += pt.poly;
  return out;
}

Ciphertext sub_plain(const Ciphertext& ct, const Plaintext& pt) {
  require_same_level(ct, pt.level());
  require_same_scale(ct.scale, pt.scale);
  Ciphertext out = ct;
  out.parts[0] -= pt.poly;
  return out;
}

Ciphertext negate(const Ciphertext& ct) {
  Ciphertext out = ct;
  for (auto& part : out.parts) part.negate();
  return out;
}

Ciphertext multiply_plain(const Ciphertext& ct, const Plaintext& pt) {
  require_same_level(ct, pt.level());
  Ciphertext out = ct;
  for (auto& part : out.parts) part *= pt.poly;
  out.scale *= pt.scale;
  return out;
}

Ciphertext multiply_no_relin(const Ciphertext& a, const Ciphertext& b) {
  require_two_parts(a);
  require_two_parts(b);
  require_same_level(a, b.level());
  Ciphertext out;
  out.slots = a.slots;
  out.scale = a.scale * b.scale;
  rns::RnsPolynomial d0 = a.parts[0];
  d0 *= b.parts[0];
  rns::RnsPolynomial d1 = a.parts[0];
  d1 *= b.parts[1];
  d1.multiply_accumulate(a.parts[1], b.parts[0]);
  rns::RnsPolynomial d2 = a.parts[1];
  d2 *= b.parts[1];
  out.parts = {std::move(d0), std::move(d1), std::move(d2)};
  return out;
}

Ciphertext relinearize(const CkksContext& ctx, const Ciphertext& ct,
                       const KeySwitchKey& relin) {
  if (ct.size() == 2) return ct;
  if (ct.size() != 3) throw std::invalid_argument("expected 3 parts");
  auto [k0, k1] = key_switch(ctx, ct.parts[2], relin);
  Ciphertext out;
  out.slots = ct.slots;
  out.scale = ct.scale;
  out.parts = {ct.parts[0], ct.parts[1]};
  out.parts[0] += k0;
  out.parts[1] += k1;
  return out;
}

Ciphertext multiply(const CkksContext& ctx, const Ciphertext& a,
                    const Ciphertext& b, const KeySwitchKey& relin) {
  return relinearize(ctx, multiply_no_relin(a, b), relin);
}

Ciphertext square(const CkksContext& ctx, const Ciphertext& a,
                  const KeySwitchKey& relin) {
  return multiply(ctx, a, a, relin);
}

Ciphertext rescale(const CkksContext& ctx, const Ciphertext& ct) {
  const std::size_t level = ct.level();
  if (level < 2) {
    throw LevelExhaustedError("cannot rescale a ciphertext at level 1");
  }
  Ciphertext out;
  out.slots = ct.slots;
  out.scale = ct.scale.divided_by_prime(ctx.basis()->modulus(level - 1).value());
  out.parts.reserve(ct.size());
  for (const auto& part : ct.parts) {
    out.parts.push_back(rns::divide_by_last_prime(part, rns::Division::kRound));
  }
  return out;
}

Ciphertext drop_to_level(const Ciphertext& ct, std::size_t level) {
  if (level == ct.level()) return ct;
  if (level < 1 || level > ct.level()) {
    throw std::invalid_argument("cannot raise a ciphertext's level");
  }
  Ciphertext out = ct;
  for (auto& part : out.parts) part.drop_to_level(level);
  return out;
}

namespace {

Ciphertext rotate_once(const CkksContext& ctx, const Ciphertext& ct,
                       std::int64_t step, const KeySwitchKey& key) {
  const std::uint64_t kappa = ctx.galois_element(step);
  rns::RnsPolynomial c0 = rns::apply_automorphism(ct.parts[0], kappa);
  const rns::RnsPolynomial c1 = rns::apply_automorphism(ct.parts[1], kappa);
  auto [k0, k1] = key_switch(ctx, c1, key);
  c0 += k0;
  Ciphertext out;
  out.slots = ct.slots;
  out.scale = ct.scale;
  out.parts = {std::move(c0), std::move(k1)};
  return out;
}

}  // namespace

Ciphertext rotate(const CkksContext& ctx, const Ciphertext& ct,
                  std::int64_t step, const GaloisKeys& keys) {
  require_two_parts(ct);
  const auto slots = static_cast<std::int64_t>(ctx.slots());
  if (step <= -slots || step >= slots) {
    throw std::invalid_argument("rotation step " + std::to_string(step) +
                                " out of range");
  }
  if (step == 0) return ct;
  const std::int64_t sign = step < 0 ? -1 : 1;
  auto magnitude = static_cast<std::uint64_t>(std::llabs(step));
  Ciphertext out = ct;
  for (std::uint64_t bit = 1; magnitude != 0; bit <<= 1) {
    if (magnitude & bit) {
      const std::int64_t part = sign * static_cast<std::int64_t>(bit);
      out = rotate_once(ctx, out, part, keys.at(part));
      magnitude &= ~bit;
    }
  }
  return out;
}

Ciphertext total_sum(const CkksContext& ctx, const Ciphertext& ct,
                     const GaloisKeys& keys) {
  Ciphertext acc = ct;
  for (std::size_t shift = 1; shift < ctx.slots(); shift <<= 1) {
    const auto step = static_cast<std::int64_t>(shift);
    add_inplace(acc, rotate_once(ctx, acc, step, keys.at(step)));
  }
  return acc;
}

std::pair<rns::RnsPolynomial, rns::RnsPolynomial> key_switch(
    const CkksContext& ctx, const rns::RnsPolynomial& d,
    const KeySwitchKey& key) {
  if (d.form() != rns::PolyForm::kEvaluation) {
    throw std::logic_error("key switching expects evaluation form");
  }
  const auto& basis = *ctx.basis();
  const std::size_t level = d.level();
  const std::size_t n = ctx.degree();
  const std::size_t special = ctx.special_index();
  if (key.b.size() < level) {
    throw std::invalid_argument("switch key has too few digits");
  }
  rns::RnsPolynomial coeff = d;
  coeff.to_coefficient();

  // Accumulators for target limbs 0..level-1 followed by the special limb.
  const std::size_t targets = level + 1;
  std::vector<std::uint64_t> acc0(targets * n, 0);
  std::vector<std::uint64_t> acc1(targets * n, 0);
  std::vector<std::uint64_t> lifted(n);
  for (std::size_t t = 0; t < targets; ++t) {
    const std::size_t limb = t < level ? t : special;
    const rns::Modulus& mod = basis.modulus(limb);
    std::uint64_t* out0 = acc0.data() + t * n;
    std::uint64_t* out1 = acc1.data() + t * n;
    for (std::size_t digit = 0; digit < level; ++digit) {
      const std::uint64_t* src;
      if (digit == limb) {
        src = d.limb(digit).data();
      } else {
        const auto from = coeff.limb(digit);
        const bool fits = basis.modulus(digit).value() <= mod.value();
        for (std::size_t j = 0; j < n; ++j) {
          lifted[j] = fits ? from[j] : mod.reduce(from[j]);
        }
        basis.ntt(limb).forward(lifted);
        src = lifted.data();
      }
      const std::uint64_t* kb = key.b[digit].limb(limb).data();
      const std::uint64_t* ka = key.a[digit].limb(limb).data();
      for (std::size_t j = 0; j < n; ++j) {
        out0[j] = mod.add(out0[j], mod.mul(src[j], kb[j]));
        out1[j] = mod.add(out1[j], mod.mul(src[j], ka[j]));
      }
    }
  }

  // Divide by the special prime, rounding through its centered residue.
  const rns::Modulus& special_mod = basis.modulus(special);
  const std::uint64_t big = special_mod.value();
  const std::uint64_t half = big / 2;
  auto mod_down = [&](std::vector<std::uint64_t>& acc) {
    std::vector<std::uint64_t> top(acc.begin() + level * n, acc.end());
    basis.ntt(special).inverse(top);
    rns::RnsPolynomial out(ctx.basis(), level, rns::PolyForm::kEvaluation);
    for (std::size_t k = 0; k < level; ++k) {
      const rns::Modulus& mod = basis.modulus(k);
      const std::uint64_t p_mod = ctx.special_mod(k);
      for (std::size_t j = 0; j < n; ++j) {
        const std::uint64_t r = mod.reduce(top[j]);
        lifted[j] = top[j] > half ? mod.sub(r, p_mod) : r;
      }
      basis.ntt(k).forward(lifted);
      const std::uint64_t inv = ctx.special_inv(k);
      const std::uint64_t inv_shoup = mod.shoup(inv);
      const std::uint64_t* src = acc.data() + k * n;
      auto dst = out.limb(k);
      for (std::size_t j = 0; j < n; ++j) {
        dst[j] = mod.mul_shoup(mod.sub(src[j], lifted[j]), inv, inv_shoup);
      }
    }
    return out;
  };
  return {mod_down(acc0), mod_down(acc1)};
}

}  // namespace privft::ckks
