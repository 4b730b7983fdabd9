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

#include "privft/ckks.h"

#include <gtest/gtest.h>

#include <cmath>
#include <numbers>
#include <random>

namespace privft::ckks {
namespace {

using cplx = std::complex<double>;

struct Fixture {
  ContextPtr ctx;
  KeySet keys;
};

const Fixture& toy(std::size_t degree, std::size_t levels, int log_scale) {
  static std::map<std::tuple<std::size_t, std::size_t, int>,
                  std::unique_ptr<Fixture>>
      cache;
  auto& slot = cache[{degree, levels, log_scale}];
  if (!slot) {
    slot = std::make_unique<Fixture>();
    slot->ctx = make_context(setup(degree, levels, log_scale));
    Sampler rng(degree * 131 + levels);
    slot->keys = keygen(*slot->ctx, rng);
  }
  return *slot;
}

const Fixture& big() { return toy(8192, 5, 40); }

double max_error(std::span<const cplx> got, std::span<const cplx> want) {
  double err = 0;
  for (std::size_t i = 0; i < want.size(); ++i) {
    err = std::max(err, std::abs(got[i] - want[i]));
  }
  for (std::size_t i = want.size(); i < got.size(); ++i) {
    err = std::max(err, std::abs(got[i]));
  }
  return err;
}

std::vector<cplx> random_vector(std::size_t n, double bound, std::mt19937_64& g,
                                bool complex_values = true) {
  std::uniform_real_distribution<double> d(-bound, bound);
  std::vector<cplx> v(n);
  for (auto& x : v) x = {d(g), complex_values ? d(g) : 0.0};
  return v;
}

Ciphertext enc(const Fixture& f, std::span<const cplx> v, Sampler& rng) {
  const auto& ctx = *f.ctx;
  return encrypt(ctx, encode(ctx, v, ctx.params().default_scale(), ctx.max_level()),
                 f.keys.public_key, rng);
}

std::vector<cplx> dec(const Fixture& f, const Ciphertext& ct) {
  return decode(*f.ctx, decrypt(*f.ctx, ct, f.keys.secret));
}

// Evaluation points exp(i*pi*5^j / N): m(zeta_j) is slot j.
std::vector<std::complex<long double>> slot_roots(std::size_t n) {
  std::vector<std::complex<long double>> roots(n / 2);
  std::uint64_t g = 1;
  for (auto& r : roots) {
    const long double a = std::numbers::pi_v<long double> * g / n;
    r = {std::cos(a), std::sin(a)};
    g = g * 5 % (2 * n);
  }
  return roots;
}

std::vector<long double> plaintext_coefficients(const Plaintext& pt) {
  rns::RnsPolynomial p = pt.poly;
  p.to_coefficient();
  return rns::centered_coefficients(p);
}

TEST(Setup, Examples) {
  const EncryptionParams p = setup(8192, 5, 40, 3.2);
  EXPECT_EQ(p.levels(), 5u);
  EXPECT_EQ(p.slots(), 4096u);
  EXPECT_NEAR(p.log2_modulus(), 200.0, 0.01);
  EXPECT_DOUBLE_EQ(p.sigma, 3.2);
  EXPECT_GT(p.special_prime, std::uint64_t{1} << 60);
  EXPECT_NO_THROW(setup(32, 2, 20, 3.2));
  EXPECT_THROW(setup(8192, 5, 70, 3.2), std::invalid_argument);
  EXPECT_THROW(setup(8192, 0, 40, 3.2), std::invalid_argument);
  EXPECT_THROW(setup(100, 2, 40), std::invalid_argument);
}

TEST(Keygen, DeterministicUnderSeed) {
  const auto ctx = make_context(setup(64, 2, 30));
  Sampler a(99), b(99), c(100);
  const KeySet ka = keygen(*ctx, a);
  const KeySet kb = keygen(*ctx, b);
  const KeySet kc = keygen(*ctx, c);
  EXPECT_EQ(ka.secret.s, kb.secret.s);
  EXPECT_EQ(ka.public_key.b, kb.public_key.b);
  EXPECT_EQ(ka.eval.relin.b[1], kb.eval.relin.b[1]);
  EXPECT_FALSE(ka.secret.s == kc.secret.s);
}

TEST(Keygen, GaloisKeyCount) {
  const auto& f = toy(64, 2, 30);
  EXPECT_EQ(f.keys.eval.galois.size(), 2u * 5u);
  // +-16 are the same element when there are 32 slots.
  EXPECT_EQ(&f.keys.eval.galois.at(16), &f.keys.eval.galois.at(-16));
  EXPECT_EQ(big().keys.eval.galois.size(), 2u * 12u);
}

TEST(Keygen, SecretKeyIsBinary) {
  const auto& f = toy(64, 2, 30);
  rns::RnsPolynomial s = f.keys.secret.s;
  s.to_coefficient();
  for (long double c : rns::centered_coefficients(s)) {
    EXPECT_TRUE(c == 0 || c == 1);
  }
}

TEST(Sampler, TernaryIsUniformOverMinusOneZeroOne) {
  Sampler rng(21);
  const auto v = rng.ternary_vector(30000);
  std::map<std::int64_t, int> counts;
  for (auto x : v) ++counts[x];
  ASSERT_EQ(counts.size(), 3u);
  for (std::int64_t x : {-1, 0, 1}) {
    EXPECT_NEAR(counts[x] / 30000.0, 1.0 / 3, 0.015) << x;
  }
}

// Fresh noise. The {0,1} secret has mean 1/2, so s(zeta) ~ N/pi at the
// root nearest 1 and slot 0 carries a noise spike well above the rest.
TEST(Keygen, EncryptionOfZeroIsSmall) {
  const auto& f = big();
  Sampler rng(1);
  const std::vector<cplx> zeros;
  double worst = 0;
  for (int trial = 0; trial < 10; ++trial) {
    const auto out = dec(f, enc(f, zeros, rng));
    double sq = 0;
    for (std::size_t i = 1; i < out.size(); ++i) sq += std::norm(out[i]);
    EXPECT_LE(std::sqrt(sq / (out.size() - 1)), 1e-7);
    worst = std::max(worst, max_error(out, zeros));
  }
  EXPECT_LE(worst, 2e-5);
}

TEST(Encode, ZerosGiveZeroPolynomial) {
  const auto& ctx = *toy(64, 2, 30).ctx;
  const std::vector<cplx> zeros(32);
  const Plaintext pt = encode(ctx, zeros, ctx.params().default_scale(), 2);
  for (long double c : plaintext_coefficients(pt)) EXPECT_EQ(c, 0);
}

TEST(Encode, ConstantGivesConstantPolynomial) {
  const auto& ctx = *toy(64, 2, 30).ctx;
  const std::vector<cplx> v(32, cplx{0.75, 0});
  const auto coeffs =
      plaintext_coefficients(encode(ctx, v, ctx.params().default_scale(), 2));
  EXPECT_EQ(coeffs[0], std::round(0.75L * (1LL << 30)));
  for (std::size_t k = 1; k < coeffs.size(); ++k) EXPECT_EQ(coeffs[k], 0);
  EXPECT_EQ(plaintext_coefficients(
                encode_constant(ctx, 0.75, ctx.params().default_scale(), 2)),
            coeffs);
}

TEST(Encode, MatchesDirectInverseEmbedding) {
  const std::size_t n = 64;
  const auto& ctx = *toy(n, 2, 30).ctx;
  std::mt19937_64 g(3);
  const auto v = random_vector(n / 2, 1.0, g);
  const auto coeffs =
      plaintext_coefficients(encode(ctx, v, ctx.params().default_scale(), 2));
  const auto roots = slot_roots(n);
  const long double scale = 1LL << 30;
  for (std::size_t k = 0; k < n; ++k) {
    long double m = 0;
    for (std::size_t j = 0; j < n / 2; ++j) {
      const std::complex<long double> z(v[j].real(), v[j].imag());
      m += (z * std::pow(std::conj(roots[j]), static_cast<int>(k))).real();
    }
    m *= 2.0L / n;
    EXPECT_NEAR(static_cast<double>(coeffs[k]), static_cast<double>(m * scale),
                1.0)
        << "coefficient " << k;
  }
  // And decoding evaluates at the same points.
  const auto back = decode(ctx, encode(ctx, v, ctx.params().default_scale(), 2));
  for (std::size_t j = 0; j < n / 2; ++j) {
    std::complex<long double> acc = 0;
    for (std::size_t k = n; k-- > 0;) acc = acc * roots[j] + coeffs[k];
    acc /= scale;
    EXPECT_NEAR(back[j].real(), static_cast<double>(acc.real()), 1e-12);
    EXPECT_NEAR(back[j].imag(), static_cast<double>(acc.imag()), 1e-12);
  }
}

TEST(Encode, RoundtripPrecision) {
  const auto& ctx = *big().ctx;
  std::mt19937_64 g(4);
  const auto v = random_vector(4096, 1.0, g);
  const auto out = decode(ctx, encode(ctx, v, ctx.params().default_scale(), 5));
  EXPECT_LE(max_error(out, v), 1e-9);
}

TEST(Encode, Errors) {
  const auto& ctx = *toy(64, 2, 30).ctx;
  const std::vector<cplx> too_long(33);
  EXPECT_THROW(encode(ctx, too_long, ctx.params().default_scale(), 2),
               std::invalid_argument);
  const std::vector<cplx> huge(4, cplx{1e30, 0});
  EXPECT_THROW(encode(ctx, huge, ctx.params().default_scale(), 2),
               EncodingOverflowError);
  EXPECT_THROW(encode(ctx, too_long, ctx.params().default_scale(), 3),
               std::invalid_argument);
}

TEST(Encode, LargeScaledCoefficientsReduceExactly) {
  const auto& f = toy(64, 3, 40);
  const auto& ctx = *f.ctx;
  const std::vector<cplx> v(32, cplx{3.0e6, 0});
  const Scale scale = Scale::power_of_two(60);
  const auto out = decode(ctx, encode(ctx, v, scale, 3));
  for (const auto& x : out) EXPECT_NEAR(x.real(), 3.0e6, 1e-6);
}

TEST(Encrypt, BasisSlotRoundtrip) {
  const auto& f = big();
  Sampler rng(5);
  std::vector<cplx> e1(4096);
  e1[0] = 1.0;
  const auto out = dec(f, enc(f, e1, rng));
  EXPECT_NEAR(out[0].real(), 1.0, 1e-6);
  EXPECT_LE(max_error(out, e1), 1e-6);
}

TEST(Encrypt, RandomRoundtrip) {
  const auto& f = big();
  Sampler rng(6);
  std::mt19937_64 g(6);
  const auto v = random_vector(4096, 1.0, g);
  const auto out = dec(f, enc(f, v, rng));
  EXPECT_LE(max_error(out, v), 2e-5);
  const std::vector<cplx> tail(out.begin() + 1, out.end());
  const std::vector<cplx> want(v.begin() + 1, v.end());
  EXPECT_LE(max_error(tail, want), 1e-6);
}

TEST(Encrypt, WrongKeyGivesGarbage) {
  const auto& f = toy(1024, 2, 40);
  Sampler rng(7);
  const SecretKey other = generate_secret_key(*f.ctx, rng);
  std::vector<cplx> v(512, 0.5);
  const Ciphertext ct = enc(f, v, rng);
  const auto out = decode(*f.ctx, decrypt(*f.ctx, ct, other));
  double largest = 0;
  for (const auto& x : out) largest = std::max(largest, std::abs(x));
  EXPECT_GT(largest, 1e6);
}

TEST(Encrypt, LowerLevelPlaintext) {
  const auto& f = toy(1024, 3, 40);
  Sampler rng(8);
  const std::vector<cplx> v(512, 0.25);
  const auto& ctx = *f.ctx;
  const Ciphertext ct =
      encrypt(ctx, encode(ctx, v, ctx.params().default_scale(), 1),
              f.keys.public_key, rng);
  EXPECT_EQ(ct.level(), 1u);
  EXPECT_LE(max_error(dec(f, ct), v), 1e-6);
}

TEST(Add, Examples) {
  const auto& f = big();
  const auto& ctx = *f.ctx;
  Sampler rng(9);
  std::vector<cplx> v(4096), w(4096);
  for (std::size_t i = 0; i < 4096; ++i) {
    v[i] = (i % 100) + 1.0;
    w[i] = 10.0 * ((i % 100) + 1.0);
  }
  const Ciphertext cv = enc(f, v, rng);
  const std::vector<cplx> zeros;
  EXPECT_LE(max_error(dec(f, add(cv, enc(f, zeros, rng))), v), 1e-5);
  std::vector<cplx> sum(4096);
  for (std::size_t i = 0; i < 4096; ++i) sum[i] = v[i] + w[i];
  EXPECT_LE(max_error(dec(f, add(cv, enc(f, w, rng))), sum), 1e-5);
  const Plaintext pw = encode(ctx, w, ctx.params().default_scale(), 5);
  EXPECT_LE(max_error(dec(f, add_plain(cv, pw)), sum), 1e-5);
  EXPECT_LE(max_error(dec(f, sub_plain(add_plain(cv, pw), pw)), v), 1e-5);
  EXPECT_LE(max_error(dec(f, sub(cv, cv)), zeros), 1e-5);
  EXPECT_EQ(add(cv, cv).scale, cv.scale);
}

TEST(Add, RejectsMismatches) {
  const auto& f = toy(64, 3, 30);
  const auto& ctx = *f.ctx;
  Sampler rng(10);
  const std::vector<cplx> v(32, 1.0);
  const Ciphertext a = enc(f, v, rng);
  const Ciphertext b = encrypt(
      ctx, encode(ctx, v, Scale::power_of_two(31), 3), f.keys.public_key, rng);
  EXPECT_THROW(add(a, b), ScaleMismatchError);
  EXPECT_THROW(add(a, drop_to_level(a, 2)), std::invalid_argument);
}

TEST(Multiply, Examples) {
  const auto& f = big();
  const auto& ctx = *f.ctx;
  Sampler rng(11);
  std::vector<cplx> v(4096), w(4096, 2.0), vw(4096), half(4096, 0.5),
      quarter(4096, 0.25), ones(4096, 1.0);
  for (std::size_t i = 0; i < 4096; ++i) {
    v[i] = (i % 8) + 1.0;
    vw[i] = 2.0 * v[i];
  }
  const Ciphertext cv = enc(f, v, rng);
  const auto s = ctx.params().default_scale();
  EXPECT_LE(max_error(dec(f, rescale(ctx, multiply_plain(cv, encode(ctx, ones, s, 5)))), v),
            1e-4);
  const Ciphertext prod = multiply(ctx, cv, enc(f, w, rng), f.keys.eval.relin);
  EXPECT_EQ(prod.size(), 2u);
  EXPECT_EQ(prod.scale, Scale::power_of_two(80));
  EXPECT_LE(max_error(dec(f, rescale(ctx, prod)), vw), 1e-4);
  const Ciphertext ch = enc(f, half, rng);
  EXPECT_LE(max_error(dec(f, rescale(ctx, square(ctx, ch, f.keys.eval.relin))),
                      quarter),
            1e-4);
}

TEST(Multiply, ThreePartDecryptPath) {
  const auto& f = toy(1024, 3, 40);
  Sampler rng(12);
  const std::vector<cplx> v(512, 1.5), w(512, -2.0), vw(512, -3.0);
  const Ciphertext t = multiply_no_relin(enc(f, v, rng), enc(f, w, rng));
  EXPECT_EQ(t.size(), 3u);
  EXPECT_LE(max_error(dec(f, t), vw), 1e-4);
  EXPECT_LE(max_error(dec(f, relinearize(*f.ctx, t, f.keys.eval.relin)), vw),
            1e-4);
}

TEST(Rescale, LimbFormulaMatchesFloorOracle) {
  auto basis =
      std::make_shared<rns::RnsBasis>(4, std::vector<std::uint64_t>{13, 11});
  for (std::int64_t c = 0; c < 143; ++c) {
    const std::vector<std::int64_t> coeffs{c, 0, 142 - c, 100};
    const auto p = rns::RnsPolynomial::from_coefficients(basis, 2, coeffs);
    const auto r = rns::crt_recompose(rns::divide_by_last_prime(p));
    EXPECT_EQ(r[0], c / 11) << c;
    EXPECT_EQ(r[2], (142 - c) / 11) << c;
    EXPECT_EQ(r[3], 9);
    EXPECT_EQ(r[1], 0);
  }
  const std::vector<std::int64_t> ten{10};
  EXPECT_EQ(rns::crt_recompose(rns::divide_by_last_prime(
                rns::RnsPolynomial::from_coefficients(basis, 2, ten)))[0],
            0);
}

TEST(Rescale, RoundingModeMatchesNearestOracle) {
  auto basis =
      std::make_shared<rns::RnsBasis>(4, std::vector<std::uint64_t>{13, 11});
  for (std::int64_t c = 0; c < 143; ++c) {
    const std::vector<std::int64_t> coeffs{c, 142 - c, (c * 7) % 143, 5};
    const auto p = rns::RnsPolynomial::from_coefficients(basis, 2, coeffs);
    const auto r = rns::crt_recompose(
        rns::divide_by_last_prime(p, rns::Division::kRound));
    for (std::size_t i = 0; i < coeffs.size(); ++i) {
      // Nearest integer to c/11, reduced mod 13 (c = 137..142 round to 13).
      EXPECT_EQ(r[i], (2 * coeffs[i] + 11) / 22 % 13) << coeffs[i];
    }
  }
}

TEST(Rescale, EvaluationFormMatchesCoefficientForm) {
  const auto& ctx = *toy(256, 3, 40).ctx;
  Sampler rng(13);
  rns::RnsPolynomial p = rng.uniform_polynomial(ctx.basis(), 3);
  rns::RnsPolynomial via_eval = rns::divide_by_last_prime(p);
  via_eval.to_coefficient();
  p.to_coefficient();
  EXPECT_EQ(via_eval, rns::divide_by_last_prime(p));
}

TEST(Rescale, DepthContractAndScale) {
  const auto& f = toy(1024, 4, 40);
  const auto& ctx = *f.ctx;
  Sampler rng(14);
  const std::vector<cplx> v(512, 0.5);
  Ciphertext ct = enc(f, v, rng);
  Scale expected = ct.scale;
  int rescales = 0;
  while (true) {
    try {
      const std::uint64_t last = ctx.basis()->modulus(ct.level() - 1).value();
      ct = rescale(ctx, ct);
      expected = expected.divided_by_prime(last);
      ++rescales;
    } catch (const LevelExhaustedError&) {
      break;
    }
  }
  EXPECT_EQ(rescales, 3);
  EXPECT_EQ(ct.level(), 1u);
  EXPECT_EQ(ct.scale, expected);
}

TEST(Rotate, Examples) {
  const auto& f = big();
  const auto& ctx = *f.ctx;
  Sampler rng(15);
  std::vector<cplx> v(4096);
  v[0] = 1;
  v[1] = 2;
  v[2] = 3;
  v[3] = 4;
  const Ciphertext ct = enc(f, v, rng);
  EXPECT_LE(max_error(dec(f, rotate(ctx, ct, 0, f.keys.eval.galois)), v), 1e-5);
  std::vector<cplx> left(4096);
  left[0] = 2;
  left[1] = 3;
  left[2] = 4;
  left[4095] = 1;
  EXPECT_LE(max_error(dec(f, rotate(ctx, ct, 1, f.keys.eval.galois)), left),
            1e-4);
  std::vector<cplx> three(4096);
  three[0] = 4;
  three[4093] = 1;
  three[4094] = 2;
  three[4095] = 3;
  EXPECT_LE(max_error(dec(f, rotate(ctx, ct, 3, f.keys.eval.galois)), three),
            1e-4);
  std::vector<cplx> right(4096);
  right[2] = 1;
  right[3] = 2;
  right[4] = 3;
  right[5] = 4;
  EXPECT_LE(max_error(dec(f, rotate(ctx, ct, -2, f.keys.eval.galois)), right),
            1e-4);
}

TEST(Rotate, CompositionAndErrors) {
  const auto& f = toy(1024, 3, 40);
  const auto& ctx = *f.ctx;
  Sampler rng(16);
  std::mt19937_64 g(16);
  const auto v = random_vector(512, 1.0, g);
  const Ciphertext ct = enc(f, v, rng);
  const auto& gk = f.keys.eval.galois;
  const auto twice = dec(f, rotate(ctx, rotate(ctx, ct, 37, gk), 100, gk));
  const auto once = dec(f, rotate(ctx, ct, 137, gk));
  EXPECT_LE(max_error(twice, once), 1e-4);
  std::vector<cplx> shifted(512);
  for (std::size_t i = 0; i < 512; ++i) shifted[i] = v[(i + 137) % 512];
  EXPECT_LE(max_error(once, shifted), 1e-4);
  EXPECT_THROW(rotate(ctx, ct, 512, gk), std::invalid_argument);
  GaloisKeys partial;
  partial.insert(1, std::make_shared<KeySwitchKey>(gk.at(1)));
  EXPECT_NO_THROW(rotate(ctx, ct, 1, partial));
  EXPECT_THROW(rotate(ctx, ct, 3, partial), MissingKeyError);
}

TEST(TotalSum, Examples) {
  const auto& f = toy(8, 2, 40);
  const auto& ctx = *f.ctx;
  ASSERT_EQ(ctx.slots(), 4u);
  Sampler rng(17);
  const std::vector<cplx> v{1, 2, 3, 4}, tens(4, 10.0), zeros(4),
      e0{1, 0, 0, 0}, ones(4, 1.0);
  EXPECT_LE(max_error(dec(f, total_sum(ctx, enc(f, v, rng), f.keys.eval.galois)),
                      tens),
            1e-4);
  EXPECT_LE(max_error(dec(f, total_sum(ctx, enc(f, zeros, rng), f.keys.eval.galois)),
                      zeros),
            1e-4);
  EXPECT_LE(max_error(dec(f, total_sum(ctx, enc(f, e0, rng), f.keys.eval.galois)),
                      ones),
            1e-4);
}

TEST(Homomorphism, RandomTrials) {
  const auto& f = toy(1024, 3, 40);
  const auto& ctx = *f.ctx;
  Sampler rng(18);
  std::mt19937_64 g(18);
  for (int trial = 0; trial < 100; ++trial) {
    const auto v = random_vector(512, 1.0, g);
    const auto w = random_vector(512, 1.0, g);
    std::vector<cplx> sum(512), prod(512);
    for (std::size_t i = 0; i < 512; ++i) {
      sum[i] = v[i] + w[i];
      prod[i] = v[i] * w[i];
    }
    const Ciphertext a = enc(f, v, rng);
    const Ciphertext b = enc(f, w, rng);
    ASSERT_LE(max_error(dec(f, add(a, b)), sum), 1e-4);
    ASSERT_LE(max_error(dec(f, rescale(ctx, multiply(ctx, a, b, f.keys.eval.relin))),
                        prod),
              1e-4);
  }
}

TEST(ScaleTracking, ExactRationalBookkeeping) {
  const Scale a = Scale::power_of_two(40);
  const Scale p = Scale::prime(1099511480321ULL);
  const Scale x = a * a / p;
  EXPECT_EQ(x.pow2_exponent(), 80);
  EXPECT_EQ(x.prime_exponents().at(1099511480321ULL), -1);
  EXPECT_EQ(x * p, a * a);
  EXPECT_EQ(x.multiplied_by_prime(1099511480321ULL), a * a);
  EXPECT_NEAR(static_cast<double>(x.value()),
              std::ldexp(1.0, 80) / 1099511480321.0, 1e-3);
  EXPECT_EQ(Scale::prime(8), Scale::power_of_two(3));
}

}  // namespace
}  // namespace privft::ckks
