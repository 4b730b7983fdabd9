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

// Versioned binary format shared by every artifact the tools exchange.
// Layout: magic "PVFT", u16 version, u16 object type, then for scheme objects
// the parameter block (N, L, rho, sigma, lambda, chain primes, special prime)
// and the payload. Integers are little-endian; residues are u64, limb-major.

#ifndef PRIVFT_SERIALIZATION_H_
#define PRIVFT_SERIALIZATION_H_

#include <cstdint>
#include <fstream>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "privft/ckks.h"

namespace privft::io {

inline constexpr std::uint16_t kFormatVersion = 1;

enum class ObjectType : std::uint16_t {
  kParams = 1,
  kSecretKey = 2,
  kPublicKey = 3,
  kRelinKey = 4,
  kGaloisKeys = 5,
  kPlaintext = 6,
  kCiphertext = 7,
  kEvalKeys = 8,
  kDictionary = 16,
  kModel = 17,
  kPackedModel = 18,
  kPackedBag = 19,
  kEncryptedModel = 20,
  kEncryptedScores = 21,
};

class FormatError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class Writer {
 public:
  explicit Writer(std::ostream& out) : out_(out) {}
  void u8(std::uint8_t v);
  void u16(std::uint16_t v);
  void u32(std::uint32_t v);
  void u64(std::uint64_t v);
  void i32(std::int32_t v) { u32(static_cast<std::uint32_t>(v)); }
  void i64(std::int64_t v) { u64(static_cast<std::uint64_t>(v)); }
  void f64(double v);
  void str(const std::string& s);
  void u64_array(std::span<const std::uint64_t> values);

 private:
  std::ostream& out_;
};

class Reader {
 public:
  explicit Reader(std::istream& in) : in_(in) {}
  std::uint8_t u8();
  std::uint16_t u16();
  std::uint32_t u32();
  std::uint64_t u64();
  std::int32_t i32() { return static_cast<std::int32_t>(u32()); }
  std::int64_t i64() { return static_cast<std::int64_t>(u64()); }
  double f64();
  std::string str();
  void u64_array(std::span<std::uint64_t> values);
  // Bounded count read, guarding allocations against corrupt input.
  std::uint64_t count(std::uint64_t limit);

 private:
  void raw(void* data, std::size_t size);
  std::istream& in_;
};

void write_header(Writer& w, ObjectType type);
// Throws FormatError unless the magic, version and type match.
void read_header(Reader& r, ObjectType expected);

void write_params(Writer& w, const ckks::EncryptionParams& params);
ckks::EncryptionParams read_params(Reader& r);
// Reads a parameter block and checks it against the context.
void expect_params(Reader& r, const ckks::CkksContext& ctx);

void write_scale(Writer& w, const ckks::Scale& scale);
ckks::Scale read_scale(Reader& r);
void write_polynomial(Writer& w, const rns::RnsPolynomial& p);
rns::RnsPolynomial read_polynomial(Reader& r, const rns::BasisPtr& basis);
void write_ciphertext(Writer& w, const ckks::Ciphertext& ct);
ckks::Ciphertext read_ciphertext(Reader& r, const ckks::CkksContext& ctx);
void write_plaintext(Writer& w, const ckks::Plaintext& pt);
ckks::Plaintext read_plaintext(Reader& r, const ckks::CkksContext& ctx);
void write_switch_key(Writer& w, const ckks::KeySwitchKey& key);
ckks::KeySwitchKey read_switch_key(Reader& r, const ckks::CkksContext& ctx);
void write_galois_keys(Writer& w, const ckks::GaloisKeys& keys);
ckks::GaloisKeys read_galois_keys(Reader& r, const ckks::CkksContext& ctx);

// Self-describing files: header, parameter block, payload.
void save_params(const std::string& path, const ckks::EncryptionParams& params);
ckks::EncryptionParams load_params(const std::string& path);
void save_secret_key(const std::string& path, const ckks::CkksContext& ctx,
                     const ckks::SecretKey& sk);
ckks::SecretKey load_secret_key(const std::string& path,
                                const ckks::CkksContext& ctx);
void save_public_key(const std::string& path, const ckks::CkksContext& ctx,
                     const ckks::PublicKey& pk);
ckks::PublicKey load_public_key(const std::string& path,
                                const ckks::CkksContext& ctx);
void save_eval_keys(const std::string& path, const ckks::CkksContext& ctx,
                    const ckks::EvalKeys& keys);
ckks::EvalKeys load_eval_keys(const std::string& path,
                              const ckks::CkksContext& ctx);
void save_ciphertext(const std::string& path, const ckks::CkksContext& ctx,
                     const ckks::Ciphertext& ct);
ckks::Ciphertext load_ciphertext(const std::string& path,
                                 const ckks::CkksContext& ctx);

// In-memory forms, used for size accounting and tests.
std::string ciphertext_bytes(const ckks::CkksContext& ctx,
                             const ckks::Ciphertext& ct);
ckks::Ciphertext ciphertext_from_bytes(const std::string& bytes,
                                       const ckks::CkksContext& ctx);

std::ofstream open_for_write(const std::string& path);
std::ifstream open_for_read(const std::string& path);

}  // namespace privft::io

#endif  // PRIVFT_SERIALIZATION_H_
