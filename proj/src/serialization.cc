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

#include "privft/serialization.h"

#include <bit>
#include <cstring>
#include <map>
#include <sstream>

namespace privft::io {

namespace {

constexpr char kMagic[4] = {'P', 'V', 'F', 'T'};
constexpr std::uint64_t kMaxLimbs = 4096;
constexpr std::uint64_t kMaxDegree = std::uint64_t{1} << 20;

}  // namespace

void Writer::u8(std::uint8_t v) { out_.put(static_cast<char>(v)); }

void Writer::u16(std::uint16_t v) {
  u8(static_cast<std::uint8_t>(v));
  u8(static_cast<std::uint8_t>(v >> 8));
}

void Writer::u32(std::uint32_t v) {
  u16(static_cast<std::uint16_t>(v));
  u16(static_cast<std::uint16_t>(v >> 16));
}

void Writer::u64(std::uint64_t v) {
  u32(static_cast<std::uint32_t>(v));
  u32(static_cast<std::uint32_t>(v >> 32));
}

void Writer::f64(double v) { u64(std::bit_cast<std::uint64_t>(v)); }

void Writer::str(const std::string& s) {
  u64(s.size());
  out_.write(s.data(), static_cast<std::streamsize>(s.size()));
}

void Writer::u64_array(std::span<const std::uint64_t> values) {
  if constexpr (std::endian::native == std::endian::little) {
    out_.write(reinterpret_cast<const char*>(values.data()),
               static_cast<std::streamsize>(values.size_bytes()));
  } else {
    for (std::uint64_t v : values) u64(v);
  }
}

void Reader::raw(void* data, std::size_t size) {
  in_.read(static_cast<char*>(data), static_cast<std::streamsize>(size));
  if (static_cast<std::size_t>(in_.gcount()) != size) {
    throw FormatError("unexpected end of input");
  }
}

std::uint8_t Reader::u8() {
  std::uint8_t v;
  raw(&v, 1);
  return v;
}

std::uint16_t Reader::u16() {
  const std::uint16_t lo = u8();
  return static_cast<std::uint16_t>(lo | (static_cast<std::uint16_t>(u8()) << 8));
}

std::uint32_t Reader::u32() {
  const std::uint32_t lo = u16();
  return lo | (static_cast<std::uint32_t>(u16()) << 16);
}

std::uint64_t Reader::u64() {
  const std::uint64_t lo = u32();
  return lo | (static_cast<std::uint64_t>(u32()) << 32);
}

double Reader::f64() { return std::bit_cast<double>(u64()); }

std::string Reader::str() {
  const std::uint64_t n = count(std::uint64_t{1} << 32);
  std::string s(n, '\0');
  raw(s.data(), n);
  return s;
}

void Reader::u64_array(std::span<std::uint64_t> values) {
  if constexpr (std::endian::native == std::endian::little) {
    raw(values.data(), values.size_bytes());
  } else {
    for (auto& v : values) v = u64();
  }
}

std::uint64_t Reader::count(std::uint64_t limit) {
  const std::uint64_t n = u64();
  if (n > limit) throw FormatError("length field out of range");
  return n;
}

void write_header(Writer& w, ObjectType type) {
  for (char c : kMagic) w.u8(static_cast<std::uint8_t>(c));
  w.u16(kFormatVersion);
  w.u16(static_cast<std::uint16_t>(type));
}

void read_header(Reader& r, ObjectType expected) {
  for (char c : kMagic) {
    if (r.u8() != static_cast<std::uint8_t>(c)) {
      throw FormatError("not a PrivFT file (bad magic)");
    }
  }
  const std::uint16_t version = r.u16();
  if (version != kFormatVersion) {
    throw FormatError("unsupported format version " + std::to_string(version));
  }
  const std::uint16_t type = r.u16();
  if (type != static_cast<std::uint16_t>(expected)) {
    throw FormatError("object type " + std::to_string(type) + ", expected " +
                      std::to_string(static_cast<int>(expected)));
  }
}

void write_params(Writer& w, const ckks::EncryptionParams& params) {
  w.u64(params.degree);
  w.u64(params.levels());
  w.i32(params.log_scale);
  w.f64(params.sigma);
  w.i32(params.security_bits);
  w.u64_array(params.chain.primes);
  w.u64(params.special_prime);
}

ckks::EncryptionParams read_params(Reader& r) {
  ckks::EncryptionParams params;
  params.degree = r.count(kMaxDegree);
  const std::uint64_t levels = r.count(kMaxLimbs);
  params.log_scale = r.i32();
  params.sigma = r.f64();
  params.security_bits = r.i32();
  params.chain.degree = params.degree;
  params.chain.primes.resize(levels);
  r.u64_array(params.chain.primes);
  params.special_prime = r.u64();
  try {
    params.validate();
  } catch (const std::exception& e) {
    throw FormatError(std::string("invalid parameter block: ") + e.what());
  }
  return params;
}

void expect_params(Reader& r, const ckks::CkksContext& ctx) {
  const ckks::EncryptionParams got = read_params(r);
  const auto& want = ctx.params();
  if (got.degree != want.degree || got.chain.primes != want.chain.primes ||
      got.special_prime != want.special_prime ||
      got.log_scale != want.log_scale) {
    throw FormatError("object was produced under different parameters");
  }
}

void write_scale(Writer& w, const ckks::Scale& scale) {
  w.i32(scale.pow2_exponent());
  w.u64(scale.prime_exponents().size());
  for (const auto& [p, e] : scale.prime_exponents()) {
    w.u64(p);
    w.i32(e);
  }
}

ckks::Scale read_scale(Reader& r) {
  ckks::Scale s = ckks::Scale::power_of_two(r.i32());
  const std::uint64_t n = r.count(kMaxLimbs);
  for (std::uint64_t i = 0; i < n; ++i) {
    const std::uint64_t p = r.u64();
    const std::int32_t e = r.i32();
    if (p < 3 || e == 0) throw FormatError("malformed scale factor");
    for (std::int32_t k = 0; k < e; ++k) s = s.multiplied_by_prime(p);
    for (std::int32_t k = 0; k > e; --k) s = s.divided_by_prime(p);
  }
  return s;
}

void write_polynomial(Writer& w, const rns::RnsPolynomial& p) {
  w.u64(p.level());
  w.u8(static_cast<std::uint8_t>(p.form()));
  w.u64_array(p.data());
}

rns::RnsPolynomial read_polynomial(Reader& r, const rns::BasisPtr& basis) {
  const std::uint64_t level = r.count(basis->size());
  const std::uint8_t form = r.u8();
  if (level == 0 || form > 1) throw FormatError("malformed polynomial");
  rns::RnsPolynomial p(basis, level, static_cast<rns::PolyForm>(form));
  r.u64_array(p.mutable_data());
  for (std::size_t i = 0; i < level; ++i) {
    const std::uint64_t q = basis->modulus(i).value();
    for (std::uint64_t x : p.limb(i)) {
      if (x >= q) throw FormatError("residue out of range");
    }
  }
  return p;
}

void write_ciphertext(Writer& w, const ckks::Ciphertext& ct) {
  w.u64(ct.size());
  w.u64(ct.slots);
  write_scale(w, ct.scale);
  for (const auto& part : ct.parts) write_polynomial(w, part);
}

ckks::Ciphertext read_ciphertext(Reader& r, const ckks::CkksContext& ctx) {
  ckks::Ciphertext ct;
  const std::uint64_t parts = r.count(3);
  if (parts < 2) throw FormatError("ciphertext needs 2 or 3 parts");
  ct.slots = r.count(ctx.slots());
  ct.scale = read_scale(r);
  for (std::uint64_t i = 0; i < parts; ++i) {
    ct.parts.push_back(read_polynomial(r, ctx.basis()));
    if (ct.parts.back().level() != ct.parts[0].level() ||
        ct.parts.back().level() > ctx.max_level()) {
      throw FormatError("inconsistent ciphertext levels");
    }
  }
  return ct;
}

void write_plaintext(Writer& w, const ckks::Plaintext& pt) {
  write_scale(w, pt.scale);
  write_polynomial(w, pt.poly);
}

ckks::Plaintext read_plaintext(Reader& r, const ckks::CkksContext& ctx) {
  ckks::Plaintext pt;
  pt.scale = read_scale(r);
  pt.poly = read_polynomial(r, ctx.basis());
  return pt;
}

void write_switch_key(Writer& w, const ckks::KeySwitchKey& key) {
  w.u64(key.b.size());
  for (std::size_t d = 0; d < key.b.size(); ++d) {
    write_polynomial(w, key.b[d]);
    write_polynomial(w, key.a[d]);
  }
}

ckks::KeySwitchKey read_switch_key(Reader& r, const ckks::CkksContext& ctx) {
  ckks::KeySwitchKey key;
  const std::uint64_t digits = r.count(ctx.max_level());
  for (std::uint64_t d = 0; d < digits; ++d) {
    key.b.push_back(read_polynomial(r, ctx.basis()));
    key.a.push_back(read_polynomial(r, ctx.basis()));
  }
  return key;
}

void write_galois_keys(Writer& w, const ckks::GaloisKeys& keys) {
  // Shared key objects are written once and referenced by index.
  std::map<const ckks::KeySwitchKey*, std::uint64_t> index;
  std::vector<const ckks::KeySwitchKey*> unique;
  for (const auto& [step, key] : keys.entries()) {
    if (index.emplace(key.get(), unique.size()).second) {
      unique.push_back(key.get());
    }
  }
  w.u64(unique.size());
  for (const auto* key : unique) write_switch_key(w, *key);
  w.u64(keys.size());
  for (const auto& [step, key] : keys.entries()) {
    w.i64(step);
    w.u64(index.at(key.get()));
  }
}

ckks::GaloisKeys read_galois_keys(Reader& r, const ckks::CkksContext& ctx) {
  const std::uint64_t n_unique = r.count(kMaxLimbs);
  std::vector<std::shared_ptr<const ckks::KeySwitchKey>> unique;
  for (std::uint64_t i = 0; i < n_unique; ++i) {
    unique.push_back(
        std::make_shared<const ckks::KeySwitchKey>(read_switch_key(r, ctx)));
  }
  ckks::GaloisKeys keys;
  const std::uint64_t n = r.count(kMaxLimbs);
  for (std::uint64_t i = 0; i < n; ++i) {
    const std::int64_t step = r.i64();
    const std::uint64_t idx = r.count(n_unique == 0 ? 0 : n_unique - 1);
    keys.insert(step, unique.at(idx));
  }
  return keys;
}

std::ofstream open_for_write(const std::string& path) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw std::runtime_error("cannot open " + path + " for writing");
  return out;
}

std::ifstream open_for_read(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot open " + path);
  return in;
}

namespace {

template <typename Fn>
void save_with_params(const std::string& path, ObjectType type,
                      const ckks::EncryptionParams& params, Fn&& payload) {
  auto out = open_for_write(path);
  Writer w(out);
  write_header(w, type);
  write_params(w, params);
  payload(w);
  if (!out) throw std::runtime_error("write failed: " + path);
}

template <typename Fn>
auto load_with_params(const std::string& path, ObjectType type,
                      const ckks::CkksContext& ctx, Fn&& payload) {
  auto in = open_for_read(path);
  Reader r(in);
  read_header(r, type);
  expect_params(r, ctx);
  return payload(r);
}

}  // namespace

void save_params(const std::string& path,
                 const ckks::EncryptionParams& params) {
  save_with_params(path, ObjectType::kParams, params, [](Writer&) {});
}

ckks::EncryptionParams load_params(const std::string& path) {
  auto in = open_for_read(path);
  Reader r(in);
  read_header(r, ObjectType::kParams);
  return read_params(r);
}

void save_secret_key(const std::string& path, const ckks::CkksContext& ctx,
                     const ckks::SecretKey& sk) {
  save_with_params(path, ObjectType::kSecretKey, ctx.params(),
                   [&](Writer& w) { write_polynomial(w, sk.s); });
}

ckks::SecretKey load_secret_key(const std::string& path,
                                const ckks::CkksContext& ctx) {
  return load_with_params(path, ObjectType::kSecretKey, ctx, [&](Reader& r) {
    return ckks::SecretKey{read_polynomial(r, ctx.basis())};
  });
}

void save_public_key(const std::string& path, const ckks::CkksContext& ctx,
                     const ckks::PublicKey& pk) {
  save_with_params(path, ObjectType::kPublicKey, ctx.params(), [&](Writer& w) {
    write_polynomial(w, pk.b);
    write_polynomial(w, pk.a);
  });
}

ckks::PublicKey load_public_key(const std::string& path,
                                const ckks::CkksContext& ctx) {
  return load_with_params(path, ObjectType::kPublicKey, ctx, [&](Reader& r) {
    ckks::PublicKey pk;
    pk.b = read_polynomial(r, ctx.basis());
    pk.a = read_polynomial(r, ctx.basis());
    return pk;
  });
}

void save_eval_keys(const std::string& path, const ckks::CkksContext& ctx,
                    const ckks::EvalKeys& keys) {
  save_with_params(path, ObjectType::kEvalKeys, ctx.params(), [&](Writer& w) {
    write_switch_key(w, keys.relin);
    write_galois_keys(w, keys.galois);
  });
}

ckks::EvalKeys load_eval_keys(const std::string& path,
                              const ckks::CkksContext& ctx) {
  return load_with_params(path, ObjectType::kEvalKeys, ctx, [&](Reader& r) {
    ckks::EvalKeys keys;
    keys.relin = read_switch_key(r, ctx);
    keys.galois = read_galois_keys(r, ctx);
    return keys;
  });
}

void save_ciphertext(const std::string& path, const ckks::CkksContext& ctx,
                     const ckks::Ciphertext& ct) {
  save_with_params(path, ObjectType::kCiphertext, ctx.params(),
                   [&](Writer& w) { write_ciphertext(w, ct); });
}

ckks::Ciphertext load_ciphertext(const std::string& path,
                                 const ckks::CkksContext& ctx) {
  return load_with_params(path, ObjectType::kCiphertext, ctx,
                          [&](Reader& r) { return read_ciphertext(r, ctx); });
}

std::string ciphertext_bytes(const ckks::CkksContext& ctx,
                             const ckks::Ciphertext& ct) {
  std::ostringstream out(std::ios::binary);
  Writer w(out);
  write_header(w, ObjectType::kCiphertext);
  write_params(w, ctx.params());
  write_ciphertext(w, ct);
  return std::move(out).str();
}

ckks::Ciphertext ciphertext_from_bytes(const std::string& bytes,
                                       const ckks::CkksContext& ctx) {
  std::istringstream in(bytes, std::ios::binary);
  Reader r(in);
  read_header(r, ObjectType::kCiphertext);
  expect_params(r, ctx);
  return read_ciphertext(r, ctx);
}

}  // namespace privft::io
