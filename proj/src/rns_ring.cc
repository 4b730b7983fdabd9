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

#include "privft/rns_ring.h"

#include <algorithm>
#include <bit>
#include <cmath>
#include <string>
#include <utility>

namespace privft::rns {

namespace {

std::uint32_t bit_reverse(std::uint32_t x, int bits) {
  std::uint32_t r = 0;
  for (int i = 0; i < bits; ++i) {
    r = (r << 1) | ((x >> i) & 1);
  }
  return r;
}

// All limbs of a basis prefix must support the NTT before switching forms.
void require_ntt(const RnsBasis& basis, std::size_t level) {
  for (std::size_t i = 0; i < level; ++i) {
    if (!basis.has_ntt(i)) {
      throw std::logic_error("prime " +
                             std::to_string(basis.modulus(i).value()) +
                             " is not NTT-friendly for this degree");
    }
  }
}

}  // namespace

bool is_power_of_two(std::size_t n) { return n != 0 && (n & (n - 1)) == 0; }

double PrimeChain::log2_product(std::size_t level) const {
  double bits = 0;
  for (std::size_t i = 0; i < level && i < primes.size(); ++i) {
    bits += std::log2(static_cast<double>(primes[i]));
  }
  return bits;
}

void PrimeChain::validate() const {
  if (!is_power_of_two(degree)) {
    throw std::invalid_argument("ring degree must be a power of two");
  }
  if (primes.empty()) throw std::invalid_argument("prime chain is empty");
  for (std::size_t i = 0; i < primes.size(); ++i) {
    const std::uint64_t p = primes[i];
    if (std::bit_width(p) > kMaxModulusBits || !is_prime(p)) {
      throw std::invalid_argument("chain entry " + std::to_string(p) +
                                  " is not a word-sized prime");
    }
    if (p % (2 * degree) != 1) {
      throw std::invalid_argument("chain entry " + std::to_string(p) +
                                  " is not 1 mod 2N");
    }
    if (i > 0 && p >= primes[i - 1]) {
      throw std::invalid_argument("prime chain must be strictly decreasing");
    }
  }
}

PrimeChain generate_prime_chain(std::size_t degree, std::size_t count, int bits,
                                std::span<const std::uint64_t> exclude) {
  if (!is_power_of_two(degree)) {
    throw std::invalid_argument("ring degree must be a power of two");
  }
  if (count < 1) throw std::invalid_argument("prime chain needs L >= 1");
  if (bits < 2 || bits > kMaxModulusBits) {
    throw std::invalid_argument("prime size " + std::to_string(bits) +
                                " bits exceeds the word budget of " +
                                std::to_string(kMaxModulusBits));
  }
  PrimeChain chain{degree, {}};
  const std::uint64_t step = 2 * static_cast<std::uint64_t>(degree);
  const std::uint64_t limit = std::uint64_t{1} << bits;
  if (limit <= step) {
    throw PrimeExhaustedError("no candidate below 2^bits is 1 mod 2N");
  }
  // Largest candidate k*2N + 1 strictly below 2^bits.
  std::uint64_t candidate = ((limit - 2) / step) * step + 1;
  while (chain.primes.size() < count) {
    if (candidate <= step) {
      throw PrimeExhaustedError(
          "ran out of NTT-friendly primes: found " +
          std::to_string(chain.primes.size()) + " of " +
          std::to_string(count) + " below 2^" + std::to_string(bits));
    }
    if (is_prime(candidate) &&
        std::find(exclude.begin(), exclude.end(), candidate) == exclude.end()) {
      chain.primes.push_back(candidate);
    }
    candidate -= step;
  }
  return chain;
}

bool supports_ntt(std::uint64_t prime, std::size_t degree) {
  return is_power_of_two(degree) && prime % (2 * degree) == 1 &&
         is_prime(prime);
}

NttTables::NttTables(const Modulus& modulus, std::size_t degree)
    : modulus_(modulus), degree_(degree) {
  const std::uint64_t p = modulus.value();
  if (!supports_ntt(p, degree)) {
    throw std::invalid_argument("prime " + std::to_string(p) +
                                " does not support a negacyclic NTT of size " +
                                std::to_string(degree));
  }
  const std::uint64_t order = 2 * static_cast<std::uint64_t>(degree);
  psi_ = 0;
  for (std::uint64_t g = 2; g < p; ++g) {
    const std::uint64_t c = modulus.pow(g, (p - 1) / order);
    if (modulus.pow(c, degree) == p - 1) {
      psi_ = c;
      break;
    }
  }
  const int log_n = std::countr_zero(degree);
  const std::uint64_t psi_inv = modulus.inv(psi_);
  roots_.resize(degree);
  inv_roots_.resize(degree);
  roots_shoup_.resize(degree);
  inv_roots_shoup_.resize(degree);
  std::uint64_t power = 1;
  std::uint64_t inv_power = 1;
  for (std::uint32_t i = 0; i < degree; ++i) {
    const std::uint32_t r = bit_reverse(i, log_n);
    roots_[r] = power;
    inv_roots_[r] = inv_power;
    power = modulus.mul(power, psi_);
    inv_power = modulus.mul(inv_power, psi_inv);
  }
  for (std::size_t i = 0; i < degree; ++i) {
    roots_shoup_[i] = modulus.shoup(roots_[i]);
    inv_roots_shoup_[i] = modulus.shoup(inv_roots_[i]);
  }
  inv_degree_ = modulus.inv(degree);
  inv_degree_shoup_ = modulus.shoup(inv_degree_);
}

void NttTables::forward(std::span<std::uint64_t> a) const {
  const std::uint64_t p = modulus_.value();
  const std::size_t n = degree_;
  std::size_t t = n;
  for (std::size_t m = 1; m < n; m <<= 1) {
    t >>= 1;
    for (std::size_t i = 0; i < m; ++i) {
      const std::size_t j1 = 2 * i * t;
      const std::uint64_t w = roots_[m + i];
      const std::uint64_t w_shoup = roots_shoup_[m + i];
      std::uint64_t* x = a.data() + j1;
      std::uint64_t* y = x + t;
      for (std::size_t j = 0; j < t; ++j) {
        const std::uint64_t u = x[j];
        const std::uint64_t v = modulus_.mul_shoup(y[j], w, w_shoup);
        const std::uint64_t s = u + v;
        x[j] = s >= p ? s - p : s;
        y[j] = u >= v ? u - v : u + p - v;
      }
    }
  }
}

void NttTables::inverse(std::span<std::uint64_t> a) const {
  const std::uint64_t p = modulus_.value();
  const std::size_t n = degree_;
  std::size_t t = 1;
  for (std::size_t m = n; m > 1; m >>= 1) {
    const std::size_t h = m >> 1;
    std::size_t j1 = 0;
    for (std::size_t i = 0; i < h; ++i) {
      const std::uint64_t w = inv_roots_[h + i];
      const std::uint64_t w_shoup = inv_roots_shoup_[h + i];
      std::uint64_t* x = a.data() + j1;
      std::uint64_t* y = x + t;
      for (std::size_t j = 0; j < t; ++j) {
        const std::uint64_t u = x[j];
        const std::uint64_t v = y[j];
        const std::uint64_t s = u + v;
        x[j] = s >= p ? s - p : s;
        y[j] = modulus_.mul_shoup(u >= v ? u - v : u + p - v, w, w_shoup);
      }
      j1 += 2 * t;
    }
    t <<= 1;
  }
  for (auto& x : a) x = modulus_.mul_shoup(x, inv_degree_, inv_degree_shoup_);
}

RnsBasis::RnsBasis(std::size_t degree, std::vector<std::uint64_t> primes)
    : degree_(degree) {
  if (!is_power_of_two(degree)) {
    throw std::invalid_argument("ring degree must be a power of two");
  }
  if (primes.empty()) throw std::invalid_argument("empty RNS basis");
  moduli_.reserve(primes.size());
  ntt_.reserve(primes.size());
  for (std::uint64_t p : primes) {
    moduli_.emplace_back(p);
    if (supports_ntt(p, degree)) {
      ntt_.emplace_back(std::in_place, moduli_.back(), degree);
    } else {
      ntt_.emplace_back(std::nullopt);
    }
  }
}

const NttTables& RnsBasis::ntt(std::size_t i) const {
  const auto& tables = ntt_.at(i);
  if (!tables) {
    throw std::logic_error("prime " + std::to_string(moduli_[i].value()) +
                           " has no NTT tables");
  }
  return *tables;
}

std::vector<std::uint32_t> RnsBasis::automorphism_permutation(
    std::uint64_t kappa) const {
  const std::size_t n = degree_;
  const std::uint64_t two_n = 2 * static_cast<std::uint64_t>(n);
  if (kappa % 2 == 0) throw std::invalid_argument("Galois element must be odd");
  kappa %= two_n;
  const int log_n = std::countr_zero(n);
  std::vector<std::uint32_t> perm(n);
  for (std::uint32_t i = 0; i < n; ++i) {
    const std::uint64_t exponent = 2 * bit_reverse(i, log_n) + 1;
    const std::uint64_t mapped = (exponent * kappa) % two_n;
    perm[i] = bit_reverse(static_cast<std::uint32_t>((mapped - 1) / 2), log_n);
  }
  return perm;
}

RnsPolynomial::RnsPolynomial(BasisPtr basis, std::size_t level, PolyForm form)
    : basis_(std::move(basis)), level_(level), form_(form) {
  if (!basis_) throw std::invalid_argument("null basis");
  if (level_ == 0 || level_ > basis_->size()) {
    throw std::invalid_argument("level " + std::to_string(level) +
                                " outside basis of size " +
                                std::to_string(basis_->size()));
  }
  if (form_ == PolyForm::kEvaluation) require_ntt(*basis_, level_);
  data_.assign(level_ * basis_->degree(), 0);
}

RnsPolynomial RnsPolynomial::from_coefficients(
    BasisPtr basis, std::size_t level, std::span<const std::int64_t> coeffs) {
  RnsPolynomial p(std::move(basis), level, PolyForm::kCoefficient);
  if (coeffs.size() > p.degree()) {
    throw std::invalid_argument("more coefficients than the ring degree");
  }
  for (std::size_t i = 0; i < level; ++i) {
    const Modulus& mod = p.basis_->modulus(i);
    auto out = p.limb(i);
    for (std::size_t j = 0; j < coeffs.size(); ++j) {
      out[j] = mod.reduce_signed(coeffs[j]);
    }
  }
  return p;
}

void RnsPolynomial::to_evaluation() {
  if (form_ == PolyForm::kEvaluation) return;
  require_ntt(*basis_, level_);
  for (std::size_t i = 0; i < level_; ++i) basis_->ntt(i).forward(limb(i));
  form_ = PolyForm::kEvaluation;
}

void RnsPolynomial::to_coefficient() {
  if (form_ == PolyForm::kCoefficient) return;
  for (std::size_t i = 0; i < level_; ++i) basis_->ntt(i).inverse(limb(i));
  form_ = PolyForm::kCoefficient;
}

void RnsPolynomial::drop_to_level(std::size_t level) {
  if (level == 0 || level > level_) {
    throw std::invalid_argument("cannot drop from level " +
                                std::to_string(level_) + " to " +
                                std::to_string(level));
  }
  level_ = level;
  data_.resize(level_ * degree());
}

void RnsPolynomial::check_compatible(const RnsPolynomial& other) const {
  if (basis_ != other.basis_) throw std::invalid_argument("basis mismatch");
  if (level_ != other.level_) {
    throw std::invalid_argument("level mismatch: " + std::to_string(level_) +
                                " vs " + std::to_string(other.level_));
  }
  if (form_ != other.form_) throw std::logic_error("form mismatch");
}

RnsPolynomial& RnsPolynomial::operator+=(const RnsPolynomial& other) {
  check_compatible(other);
  const std::size_t n = degree();
  for (std::size_t i = 0; i < level_; ++i) {
    const Modulus& mod = basis_->modulus(i);
    std::uint64_t* x = data_.data() + i * n;
    const std::uint64_t* y = other.data_.data() + i * n;
    for (std::size_t j = 0; j < n; ++j) x[j] = mod.add(x[j], y[j]);
  }
  return *this;
}

RnsPolynomial& RnsPolynomial::operator-=(const RnsPolynomial& other) {
  check_compatible(other);
  const std::size_t n = degree();
  for (std::size_t i = 0; i < level_; ++i) {
    const Modulus& mod = basis_->modulus(i);
    std::uint64_t* x = data_.data() + i * n;
    const std::uint64_t* y = other.data_.data() + i * n;
    for (std::size_t j = 0; j < n; ++j) x[j] = mod.sub(x[j], y[j]);
  }
  return *this;
}

RnsPolynomial& RnsPolynomial::operator*=(const RnsPolynomial& other) {
  check_compatible(other);
  if (form_ != PolyForm::kEvaluation) {
    throw std::logic_error("pointwise product needs evaluation form");
  }
  const std::size_t n = degree();
  for (std::size_t i = 0; i < level_; ++i) {
    const Modulus& mod = basis_->modulus(i);
    std::uint64_t* x = data_.data() + i * n;
    const std::uint64_t* y = other.data_.data() + i * n;
    for (std::size_t j = 0; j < n; ++j) x[j] = mod.mul(x[j], y[j]);
  }
  return *this;
}

void RnsPolynomial::negate() {
  const std::size_t n = degree();
  for (std::size_t i = 0; i < level_; ++i) {
    const Modulus& mod = basis_->modulus(i);
    std::uint64_t* x = data_.data() + i * n;
    for (std::size_t j = 0; j < n; ++j) x[j] = mod.neg(x[j]);
  }
}

void RnsPolynomial::multiply_scalars(std::span<const std::uint64_t> scalars) {
  if (scalars.size() < level_) throw std::invalid_argument("too few scalars");
  const std::size_t n = degree();
  for (std::size_t i = 0; i < level_; ++i) {
    const Modulus& mod = basis_->modulus(i);
    const std::uint64_t w = mod.reduce(scalars[i]);
    const std::uint64_t w_shoup = mod.shoup(w);
    std::uint64_t* x = data_.data() + i * n;
    for (std::size_t j = 0; j < n; ++j) x[j] = mod.mul_shoup(x[j], w, w_shoup);
  }
}

void RnsPolynomial::multiply_accumulate(const RnsPolynomial& a,
                                        const RnsPolynomial& b) {
  check_compatible(a);
  check_compatible(b);
  if (form_ != PolyForm::kEvaluation) {
    throw std::logic_error("pointwise product needs evaluation form");
  }
  const std::size_t n = degree();
  for (std::size_t i = 0; i < level_; ++i) {
    const Modulus& mod = basis_->modulus(i);
    std::uint64_t* x = data_.data() + i * n;
    const std::uint64_t* y = a.data_.data() + i * n;
    const std::uint64_t* z = b.data_.data() + i * n;
    for (std::size_t j = 0; j < n; ++j) {
      x[j] = mod.add(x[j], mod.mul(y[j], z[j]));
    }
  }
}

RnsPolynomial ntt_forward(RnsPolynomial p) {
  if (p.form() != PolyForm::kCoefficient) {
    throw std::logic_error("ntt_forward expects coefficient form");
  }
  p.to_evaluation();
  return p;
}

RnsPolynomial ntt_inverse(RnsPolynomial p) {
  if (p.form() != PolyForm::kEvaluation) {
    throw std::logic_error("ntt_inverse expects evaluation form");
  }
  p.to_coefficient();
  return p;
}

RnsPolynomial poly_add(const RnsPolynomial& a, const RnsPolynomial& b) {
  RnsPolynomial r = a;
  if (r.form() != b.form()) {
    RnsPolynomial rhs = b;
    rhs.to_evaluation();
    r.to_evaluation();
    return r += rhs;
  }
  return r += b;
}

RnsPolynomial poly_sub(const RnsPolynomial& a, const RnsPolynomial& b) {
  RnsPolynomial r = a;
  if (r.form() != b.form()) {
    RnsPolynomial rhs = b;
    rhs.to_evaluation();
    r.to_evaluation();
    return r -= rhs;
  }
  return r -= b;
}

namespace {

// Schoolbook negacyclic product for limbs whose prime has no NTT.
void schoolbook_limb(const Modulus& mod, std::span<const std::uint64_t> a,
                     std::span<const std::uint64_t> b,
                     std::span<std::uint64_t> out) {
  const std::size_t n = a.size();
  std::fill(out.begin(), out.end(), 0);
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = 0; j < n; ++j) {
      const std::uint64_t prod = mod.mul(a[i], b[j]);
      const std::size_t k = i + j;
      if (k < n) {
        out[k] = mod.add(out[k], prod);
      } else {
        out[k - n] = mod.sub(out[k - n], prod);
      }
    }
  }
}

}  // namespace

RnsPolynomial poly_mul(const RnsPolynomial& a, const RnsPolynomial& b) {
  bool all_ntt = true;
  for (std::size_t i = 0; i < a.level(); ++i) {
    all_ntt = all_ntt && a.basis()->has_ntt(i);
  }
  if (!all_ntt) {
    RnsPolynomial x = a;
    RnsPolynomial y = b;
    x.to_coefficient();
    y.to_coefficient();
    RnsPolynomial r(a.basis(), a.level(), PolyForm::kCoefficient);
    if (x.basis() != y.basis() || x.level() != y.level()) {
      throw std::invalid_argument("level mismatch");
    }
    for (std::size_t i = 0; i < a.level(); ++i) {
      schoolbook_limb(a.basis()->modulus(i), x.limb(i), y.limb(i), r.limb(i));
    }
    return r;
  }
  RnsPolynomial x = a;
  x.to_evaluation();
  if (b.form() == PolyForm::kEvaluation) return x *= b;
  RnsPolynomial y = b;
  y.to_evaluation();
  return x *= y;
}

RnsPolynomial apply_automorphism(const RnsPolynomial& p, std::uint64_t kappa) {
  const std::size_t n = p.degree();
  const std::uint64_t two_n = 2 * static_cast<std::uint64_t>(n);
  if (kappa % 2 == 0) {
    throw std::invalid_argument("Galois element must be odd");
  }
  kappa %= two_n;
  RnsPolynomial out(p.basis(), p.level(), p.form());
  if (p.form() == PolyForm::kEvaluation) {
    const auto perm = p.basis()->automorphism_permutation(kappa);
    for (std::size_t i = 0; i < p.level(); ++i) {
      auto src = p.limb(i);
      auto dst = out.limb(i);
      for (std::size_t j = 0; j < n; ++j) dst[j] = src[perm[j]];
    }
    return out;
  }
  for (std::size_t i = 0; i < p.level(); ++i) {
    const Modulus& mod = p.basis()->modulus(i);
    auto src = p.limb(i);
    auto dst = out.limb(i);
    for (std::size_t j = 0; j < n; ++j) {
      const std::uint64_t idx = (j * kappa) % two_n;
      if (idx < n) {
        dst[idx] = src[j];
      } else {
        dst[idx - n] = mod.neg(src[j]);
      }
    }
  }
  return out;
}

RnsPolynomial divide_by_last_prime(const RnsPolynomial& p, Division mode) {
  const std::size_t level = p.level();
  if (level < 2) {
    throw std::invalid_argument("cannot divide out the only remaining prime");
  }
  const auto& basis = *p.basis();
  const std::size_t last = level - 1;
  const std::uint64_t divisor = basis.modulus(last).value();
  std::vector<std::uint64_t> remainder(p.limb(last).begin(),
                                       p.limb(last).end());
  const bool eval = p.form() == PolyForm::kEvaluation;
  if (eval) basis.ntt(last).inverse(remainder);
  const std::uint64_t half = divisor / 2;

  RnsPolynomial out = p;
  out.drop_to_level(last);
  std::vector<std::uint64_t> lifted(p.degree());
  for (std::size_t k = 0; k < last; ++k) {
    const Modulus& mod = basis.modulus(k);
    const std::uint64_t divisor_mod = mod.reduce(divisor);
    for (std::size_t j = 0; j < lifted.size(); ++j) {
      lifted[j] = divisor < mod.value() ? remainder[j] : mod.reduce(remainder[j]);
      // Residues above p_l/2 stand for r - p_l, which rounds up.
      if (mode == Division::kRound && remainder[j] > half) {
        lifted[j] = mod.sub(lifted[j], divisor_mod);
      }
    }
    if (eval) basis.ntt(k).forward(lifted);
    const std::uint64_t inv = mod.inv(mod.reduce(divisor));
    const std::uint64_t inv_shoup = mod.shoup(inv);
    auto limb = out.limb(k);
    for (std::size_t j = 0; j < lifted.size(); ++j) {
      limb[j] = mod.mul_shoup(mod.sub(limb[j], lifted[j]), inv, inv_shoup);
    }
  }
  return out;
}

std::vector<BigInt> crt_recompose(const RnsPolynomial& p) {
  if (p.form() != PolyForm::kCoefficient) {
    throw std::logic_error("crt_recompose expects coefficient form");
  }
  const auto& basis = *p.basis();
  BigInt q = 1;
  for (std::size_t i = 0; i < p.level(); ++i) q *= basis.modulus(i).value();
  // x = sum_i r_i * (q/p_i) * [(q/p_i)^-1 mod p_i]  (mod q)
  std::vector<BigInt> factors;
  for (std::size_t i = 0; i < p.level(); ++i) {
    const std::uint64_t pi = basis.modulus(i).value();
    const BigInt q_hat = q / pi;
    const auto q_hat_mod = static_cast<std::uint64_t>(q_hat % pi);
    factors.push_back(q_hat * basis.modulus(i).inv(q_hat_mod));
  }
  std::vector<BigInt> out(p.degree());
  for (std::size_t j = 0; j < p.degree(); ++j) {
    BigInt acc = 0;
    for (std::size_t i = 0; i < p.level(); ++i) {
      acc += factors[i] * p.limb(i)[j];
    }
    out[j] = acc % q;
  }
  return out;
}

std::vector<long double> centered_coefficients(const RnsPolynomial& p) {
  if (p.form() != PolyForm::kCoefficient) {
    throw std::logic_error("centered_coefficients expects coefficient form");
  }
  const auto& basis = *p.basis();
  const std::size_t level = p.level();
  // inv_prefix[i] = (p_0 * ... * p_{i-1})^-1 mod p_i
  std::vector<std::uint64_t> inv_prefix(level, 1);
  for (std::size_t i = 1; i < level; ++i) {
    const Modulus& mod = basis.modulus(i);
    std::uint64_t prod = 1;
    for (std::size_t k = 0; k < i; ++k) {
      prod = mod.mul(prod, mod.reduce(basis.modulus(k).value()));
    }
    inv_prefix[i] = mod.inv(prod);
  }
  std::vector<long double> out(p.degree());
  std::vector<std::int64_t> digits(level);
  for (std::size_t j = 0; j < p.degree(); ++j) {
    for (std::size_t i = 0; i < level; ++i) {
      const Modulus& mod = basis.modulus(i);
      // Value of the digits found so far, reduced mod p_i (Horner).
      std::uint64_t partial = 0;
      for (std::size_t k = i; k-- > 0;) {
        partial = mod.add(mod.mul(partial, mod.reduce(basis.modulus(k).value())),
                          mod.reduce_signed(digits[k]));
      }
      const std::uint64_t digit =
          mod.mul(mod.sub(p.limb(i)[j], partial), inv_prefix[i]);
      const std::uint64_t half = mod.value() / 2;
      digits[i] = digit > half
                      ? -static_cast<std::int64_t>(mod.value() - digit)
                      : static_cast<std::int64_t>(digit);
    }
    long double value = 0;
    for (std::size_t i = level; i-- > 0;) {
      value = value * static_cast<long double>(basis.modulus(i).value()) +
              static_cast<long double>(digits[i]);
    }
    out[j] = value;
  }
  return out;
}

}  // namespace privft::rns
