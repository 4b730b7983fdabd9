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

// Minibatch gradient descent on an encrypted model. H and O are encrypted
// with the same layouts as the packed inference model; every minibatch
// consumes nine levels:
//
//   forward:   F1 chunk products, F2 TotalSum and 1/w, F3 output layer
//   softmax:   S  (s + 2)^2 / 8 - 1/4 with the 1/8 folded into the scale
//   error:     E  (g - onehot) times the class mask
//   backward:  B1 grad_O = h e and d = TotalSum(O e), B2 d / w, B3 (d / w) v
//   update:    U  eta * gradient, rescaled back to the model scale
//
// Slot t-1 of every O ciphertext carries the constant 1 as a noise sentinel.

#ifndef PRIVFT_ENC_TRAIN_H_
#define PRIVFT_ENC_TRAIN_H_

#include <cstddef>
#include <functional>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "privft/ckks.h"
#include "privft/enc_infer.h"
#include "privft/textmodel.h"

namespace privft::train {

inline constexpr std::size_t kLevelsPerMinibatch = 9;
inline constexpr double kSentinelValue = 1.0;
inline constexpr double kSentinelTolerance = 1e-2;

class InsufficientDepthError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

class NoiseOverflowError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct DepthBudget {
  std::size_t levels_per_minibatch = kLevelsPerMinibatch;
  std::size_t minibatches = 0;
  std::size_t reserve = 1;
  std::size_t total() const { return levels_per_minibatch * minibatches + reserve; }
};

// minibatches = ceil(epochs * T / beta). Throws InsufficientDepthError when
// the chain has fewer than total() levels (skipped when levels is 0).
DepthBudget plan_depth(std::size_t total_tokens, const text::TrainingConfig& config,
                       std::size_t levels = 0);

struct EncryptedModel {
  std::size_t m = 0;
  std::size_t n = 0;
  std::size_t c = 0;
  std::size_t chunks = 0;
  std::vector<ckks::Ciphertext> hidden;  // index j * chunks + k
  std::vector<ckks::Ciphertext> output;  // n rows

  std::size_t level() const;
  std::size_t ciphertext_count() const { return hidden.size() + output.size(); }
  ckks::Ciphertext& h(std::size_t column, std::size_t chunk) {
    return hidden.at(column * chunks + chunk);
  }
  const ckks::Ciphertext& h(std::size_t column, std::size_t chunk) const {
    return hidden.at(column * chunks + chunk);
  }
};

// One training record as the client ships it.
struct EncryptedRecord {
  infer::PackedBag bag;
  std::size_t label = 0;                  // used when label_ct is empty
  std::optional<ckks::Ciphertext> label_ct;  // one-hot, when labels are hidden
};

// ---- client ----

// Requires c < t so the sentinel slot stays free. level 0 selects the top.
EncryptedModel encrypt_model(const ckks::CkksContext& ctx,
                             const text::Model& model,
                             const ckks::PublicKey& pk, ckks::Sampler& rng,
                             std::size_t level = 0);

EncryptedRecord encrypt_record(const ckks::CkksContext& ctx,
                               const text::LabeledBag& record, std::size_t m,
                               std::size_t c, const ckks::PublicKey& pk,
                               ckks::Sampler& rng, bool encrypt_label = false);

// Throws NoiseOverflowError when a sentinel slot drifts from 1 by more than
// kSentinelTolerance.
text::Model client_decrypt_model(const ckks::CkksContext& ctx,
                                 const EncryptedModel& model,
                                 const ckks::SecretKey& sk);

// ---- server ----

struct ForwardPass {
  std::vector<ckks::Ciphertext> hidden;  // h_j replicated in every slot
  ckks::Ciphertext scores;
};

ForwardPass forward_pass(const ckks::CkksContext& ctx,
                         const infer::PackedBag& bag,
                         const EncryptedModel& model,
                         const ckks::EvalKeys& keys,
                         infer::DepthLedger* ledger = nullptr);

infer::EncryptedScores encrypted_forward(const ckks::CkksContext& ctx,
                                         const infer::PackedBag& bag,
                                         const EncryptedModel& model,
                                         const ckks::EvalKeys& keys,
                                         infer::DepthLedger* ledger = nullptr);

// Slot i holds a s_i^2 + b s_i + c_0 for the default coefficients
// (1/8, 1/2, 1/4); one squaring, one level.
ckks::Ciphertext encrypted_softmax(const ckks::CkksContext& ctx,
                                   const ckks::Ciphertext& scores,
                                   const ckks::KeySwitchKey& relin,
                                   infer::DepthLedger* ledger = nullptr);

struct TrainOptions {
  std::size_t threads = 1;  // examples evaluated concurrently
};

// Accumulates the gradients of every record and applies one update. The
// ledger, when given, receives the nine phases of this round; throws
// std::logic_error if the round did not consume exactly nine levels.
EncryptedModel encrypted_backprop_update(
    const ckks::CkksContext& ctx, const EncryptedModel& model,
    std::span<const EncryptedRecord> batch,
    const text::TrainingConfig& config, const ckks::EvalKeys& keys,
    const TrainOptions& options = {}, infer::DepthLedger* ledger = nullptr);

// Runs the minibatch schedule of text::plan_minibatches over the records.
// The callback observes the encrypted model after every update.
EncryptedModel train_encrypted(
    const ckks::CkksContext& ctx, EncryptedModel model,
    std::span<const EncryptedRecord> records,
    const text::TrainingConfig& config, const ckks::EvalKeys& keys,
    const TrainOptions& options = {},
    const std::function<void(std::size_t, const EncryptedModel&,
                             const infer::DepthLedger&)>& on_update = {});

// Galois steps training needs: the positive powers of two used by TotalSum.
std::vector<std::int64_t> training_rotation_steps(const ckks::CkksContext& ctx);

// ---- files ----

void save_encrypted_model(const std::string& path, const ckks::CkksContext& ctx,
                          const EncryptedModel& model);
EncryptedModel load_encrypted_model(const std::string& path,
                                    const ckks::CkksContext& ctx);

}  // namespace privft::train

#endif  // PRIVFT_ENC_TRAIN_H_
