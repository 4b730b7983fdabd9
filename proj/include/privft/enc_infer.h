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

// Encrypted inference. The client encrypts its bag vector in chunks of t
// slots; the server holds the model as plaintexts (H column-wise, O row-wise)
// and returns one ciphertext of class scores.
//
//   h_j = (1/w) * TotalSum(sum_k v_k * H[k-th chunk, j])   2 levels
//   s   = sum_j h_j * O[j, :]                             1 level

#ifndef PRIVFT_ENC_INFER_H_
#define PRIVFT_ENC_INFER_H_

#include <cstddef>
#include <cstdint>
#include <string>
#include <vector>

#include "privft/ckks.h"
#include "privft/textmodel.h"

namespace privft::infer {

// ceil(m / t).
std::size_t chunk_count(std::size_t m, std::size_t slots);

// Levels removed by each phase of an encrypted circuit, in order.
struct DepthLedger {
  struct Phase {
    std::string name;
    std::size_t level_before = 0;
    std::size_t level_after = 0;
    std::size_t consumed() const { return level_before - level_after; }
  };
  std::vector<Phase> phases;

  void record(std::string name, std::size_t before, std::size_t after);
  std::size_t consumed() const;
  std::string to_string() const;
};

inline constexpr std::size_t kInferenceDepth = 3;

// Chunk k slot i holds v[k*t + i]; w travels in the clear.
struct PackedBag {
  std::size_t m = 0;
  std::uint32_t w = 0;
  std::vector<ckks::Ciphertext> chunks;
};

// Plaintext (j, k) slot i holds H[k*t + i, j].
struct PackedHiddenModel {
  std::size_t m = 0;
  std::size_t n = 0;
  std::size_t chunks = 0;
  std::vector<ckks::Plaintext> plaintexts;  // index j * chunks + k

  const ckks::Plaintext& at(std::size_t column, std::size_t chunk) const {
    return plaintexts.at(column * chunks + chunk);
  }
};

// Plaintext j holds row j of O in its first c slots.
struct PackedOutputModel {
  std::size_t c = 0;
  std::vector<ckks::Plaintext> rows;
};

struct PackedModel {
  std::size_t level = 0;  // level of the bag chunks it expects
  PackedHiddenModel hidden;
  PackedOutputModel output;

  std::size_t plaintext_count() const {
    return hidden.plaintexts.size() + output.rows.size();
  }
};

// First c slots hold s = h O; the remaining slots are not meaningful.
struct EncryptedScores {
  std::size_t classes = 0;
  ckks::Ciphertext ct;
};

struct ScoreResult {
  std::vector<double> scores;
  std::vector<double> probs;
  std::size_t argmax = 0;
};

// ---- client ----

// Encrypts at `level` (0 selects the top level). Throws std::invalid_argument
// when the bag length differs from m or the bag is empty.
PackedBag client_encrypt_bag(const ckks::CkksContext& ctx,
                             const text::BagVector& bag, std::size_t m,
                             const ckks::PublicKey& pk, ckks::Sampler& rng,
                             std::size_t level = 0);

ScoreResult client_decrypt_scores(const ckks::CkksContext& ctx,
                                  const EncryptedScores& scores,
                                  const ckks::SecretKey& sk);

// ---- server ----

// Encodes at scale 2^rho for bags encrypted at `level` (0: top level).
// Throws std::invalid_argument when c > t or the level leaves no room for
// the circuit.
PackedModel pack_model(const ckks::CkksContext& ctx, const text::Model& model,
                       std::size_t level = 0);

struct ServerOptions {
  std::size_t threads = 1;  // columns evaluated concurrently
};

// Ciphertext j encrypts h_j replicated across all slots.
std::vector<ckks::Ciphertext> eval_hidden(const ckks::CkksContext& ctx,
                                          const PackedBag& bag,
                                          const PackedHiddenModel& hidden,
                                          const ckks::GaloisKeys& galois,
                                          const ServerOptions& options = {},
                                          DepthLedger* ledger = nullptr);

EncryptedScores eval_output(const ckks::CkksContext& ctx,
                            const std::vector<ckks::Ciphertext>& hidden,
                            const PackedOutputModel& output,
                            const ServerOptions& options = {},
                            DepthLedger* ledger = nullptr);

EncryptedScores server_infer(const ckks::CkksContext& ctx,
                             const PackedBag& bag, const PackedModel& model,
                             const ckks::EvalKeys& keys,
                             const ServerOptions& options = {},
                             DepthLedger* ledger = nullptr);

// ---- files ----

void save_packed_bag(const std::string& path, const ckks::CkksContext& ctx,
                     const PackedBag& bag);
PackedBag load_packed_bag(const std::string& path,
                          const ckks::CkksContext& ctx);
void save_packed_model(const std::string& path, const ckks::CkksContext& ctx,
                       const PackedModel& model);
PackedModel load_packed_model(const std::string& path,
                              const ckks::CkksContext& ctx);
void save_scores(const std::string& path, const ckks::CkksContext& ctx,
                 const EncryptedScores& scores);
EncryptedScores load_scores(const std::string& path,
                            const ckks::CkksContext& ctx);

}  // namespace privft::infer

#endif  // PRIVFT_ENC_INFER_H_
