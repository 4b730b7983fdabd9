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

#include <cmath>
#include <string>

#include "privft/ckks.h"

namespace privft::ckks {

namespace {

void check_level(const CkksContext& ctx, std::size_t level) {
  if (level < 1 || level > ctx.max_level()) {
    throw std::invalid_argument("level " + std::to_string(level) +
                                " outside [1, " +
                                std::to_string(ctx.max_level()) + "]");
  }
}

// Rounds scaled coefficients and reduces them into every limb.
Plaintext from_scaled(const CkksContext& ctx,
                      const std::vector<long double>& coeffs,
                      const Scale& scale, std::size_t level) {
  const auto& basis = ctx.basis();
  const long double limit =
      std::exp2(static_cast<long double>(ctx.params().chain.log2_product(level)) - 1);
  Plaintext pt{rns::RnsPolynomial(basis, level, rns::PolyForm::kCoefficient),
               scale};
  for (std::size_t j = 0; j < coeffs.size(); ++j) {
    const long double c = std::round(coeffs[j]);
    if (!std::isfinite(c) || std::fabs(c) >= limit) {
      throw EncodingOverflowError("scaled value does not fit the modulus at level " +
                                  std::to_string(level));
    }
    if (c == 0) continue;
    if (std::fabs(c) < 0x1p62L) {
      const auto x = static_cast<std::int64_t>(c);
      for (std::size_t i = 0; i < level; ++i) {
        pt.poly.limb(i)[j] = basis->modulus(i).reduce_signed(x);
      }
    } else {
      for (std::size_t i = 0; i < level; ++i) {
        const auto p = static_cast<long double>(basis->modulus(i).value());
        long double r = std::fmod(c, p);
        if (r < 0) r += p;
        pt.poly.limb(i)[j] = static_cast<std::uint64_t>(r);
      }
    }
  }
  pt.poly.to_evaluation();
  return pt;
}

}  // namespace

Plaintext encode(const CkksContext& ctx,
                 std::span<const std::complex<double>> values,
                 const Scale& scale, std::size_t level) {
  check_level(ctx, level);
  const std::size_t slots = ctx.slots();
  if (values.size() > slots) {
    throw std::invalid_argument(std::to_string(values.size()) +
                                " values exceed the " + std::to_string(slots) +
                                " available slots");
  }
  std::vector<std::complex<long double>> u(slots);
  for (std::size_t i = 0; i < values.size(); ++i) {
    u[i] = {values[i].real(), values[i].imag()};
  }
  ctx.embed_inverse(u);
  const long double s = scale.value();
  std::vector<long double> coeffs(ctx.degree());
  for (std::size_t i = 0; i < slots; ++i) {
    coeffs[i] = u[i].real() * s;
    coeffs[i + slots] = u[i].imag() * s;
  }
  return from_scaled(ctx, coeffs, scale, level);
}

Plaintext encode(const CkksContext& ctx, std::span<const double> values,
                 const Scale& scale, std::size_t level) {
  std::vector<std::complex<double>> z(values.begin(), values.end());
  return encode(ctx, z, scale, level);
}

Plaintext encode_constant(const CkksContext& ctx, double value,
                          const Scale& scale, std::size_t level) {
  check_level(ctx, level);
  std::vector<long double> coeffs(ctx.degree(), 0);
  coeffs[0] = static_cast<long double>(value) * scale.value();
  return from_scaled(ctx, coeffs, scale, level);
}

std::vector<std::complex<double>> decode(const CkksContext& ctx,
                                         const Plaintext& pt) {
  rns::RnsPolynomial poly = pt.poly;
  poly.to_coefficient();
  const auto coeffs = rns::centered_coefficients(poly);
  const std::size_t slots = ctx.slots();
  const long double inv = 1.0L / pt.scale.value();
  std::vector<std::complex<long double>> u(slots);
  for (std::size_t i = 0; i < slots; ++i) {
    u[i] = {coeffs[i] * inv, coeffs[i + slots] * inv};
  }
  ctx.embed_forward(u);
  std::vector<std::complex<double>> out(slots);
  for (std::size_t i = 0; i < slots; ++i) {
    out[i] = {static_cast<double>(u[i].real()),
              static_cast<double>(u[i].imag())};
  }
  return out;
}

std::vector<double> decode_real(const CkksContext& ctx, const Plaintext& pt) {
  const auto z = decode(ctx, pt);
  std::vector<double> out(z.size());
  for (std::size_t i = 0; i < z.size(); ++i) out[i] = z[i].real();
  return out;
}

}  // namespace privft::ckks
