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

#include "privft/enc_train.h"

#include <gtest/gtest.h>

#include <cmath>
#include <filesystem>
#include <map>
#include <memory>
#include <random>
#include <tuple>

#include "privft/serialization.h"

namespace privft::train {
namespace {

using ckks::Ciphertext;
using text::BagVector;
using text::LabeledBag;
using text::Model;

struct Fixture {
  ckks::ContextPtr ctx;
  ckks::KeySet keys;
  mutable ckks::Sampler rng{0};
};

const Fixture& toy(std::size_t degree, std::size_t levels) {
  static std::map<std::tuple<std::size_t, std::size_t>, std::unique_ptr<Fixture>>
      cache;
  auto& slot = cache[{degree, levels}];
  if (!slot) {
    slot = std::make_unique<Fixture>();
    slot->ctx = ckks::make_context(ckks::setup(degree, levels, 40));
    ckks::Sampler rng(degree + 101 * levels);
    const auto steps = training_rotation_steps(*slot->ctx);
    slot->keys = ckks::keygen(*slot->ctx, rng, steps);
    slot->rng = ckks::Sampler(degree * 3 + levels);
  }
  return *slot;
}

// One round fits with a level to spare.
const Fixture& one_round() { return toy(32, 10); }

BagVector make_bag(std::vector<std::uint32_t> counts) {
  BagVector b;
  b.counts = std::move(counts);
  for (auto c : b.counts) b.w += c;
  return b;
}

std::vector<LabeledBag> random_data(std::size_t m, std::size_t c,
                                    std::size_t count, std::mt19937_64& g) {
  std::vector<LabeledBag> out;
  for (std::size_t k = 0; k < count; ++k) {
    std::vector<std::uint32_t> v(m, 0);
    const std::size_t label = g() % c;
    const std::size_t words = 1 + g() % 4;
    // Weakly separable: class k prefers the k-th block of the vocabulary.
    for (std::size_t i = 0; i < words; ++i) {
      const std::size_t block = g() % 4 == 0 ? g() % c : label;
      ++v[(block * (m / c) + g() % (m / c)) % m];
    }
    out.push_back({make_bag(v), label});
  }
  return out;
}

std::vector<EncryptedRecord> encrypt_all(const Fixture& f,
                                         std::span<const LabeledBag> data,
                                         std::size_t m, std::size_t c,
                                         bool hide_labels = false) {
  std::vector<EncryptedRecord> out;
  for (const auto& r : data) {
    out.push_back(encrypt_record(*f.ctx, r, m, c, f.keys.public_key, f.rng,
                                 hide_labels));
  }
  return out;
}

double rel_error(double got, double want) {
  return std::abs(got - want) / std::max(std::abs(want), 1e-4);
}

double max_rel_error(const Model& got, const Model& want) {
  double worst = 0;
  for (std::size_t i = 0; i < want.hidden.size(); ++i) {
    worst = std::max(worst, rel_error(got.hidden[i], want.hidden[i]));
  }
  for (std::size_t i = 0; i < want.output.size(); ++i) {
    worst = std::max(worst, rel_error(got.output[i], want.output[i]));
  }
  return worst;
}

double max_abs_error(const Model& got, const Model& want) {
  double worst = 0;
  for (std::size_t i = 0; i < want.hidden.size(); ++i) {
    worst = std::max(worst, std::abs(got.hidden[i] - want.hidden[i]));
  }
  for (std::size_t i = 0; i < want.output.size(); ++i) {
    worst = std::max(worst, std::abs(got.output[i] - want.output[i]));
  }
  return worst;
}

TEST(PlanDepth, Examples) {
  text::TrainingConfig cfg;
  cfg.batch_tokens = 1007500;
  cfg.epochs = 2;
  const auto budget = plan_depth(2518750, cfg);
  EXPECT_EQ(budget.minibatches, 5u);
  EXPECT_EQ(budget.total(), 46u);
  EXPECT_NO_THROW(plan_depth(2518750, cfg, 46));
  EXPECT_THROW(plan_depth(2518750, cfg, 45), InsufficientDepthError);

  cfg.batch_tokens = 5000;
  cfg.epochs = 1;
  const auto one = plan_depth(4000, cfg);
  EXPECT_EQ(one.minibatches, 1u);
  EXPECT_EQ(one.total(), 10u);
  EXPECT_THROW(plan_depth(4000, cfg, 9), InsufficientDepthError);
}

TEST(EncryptedModel, Roundtrip) {
  const auto& f = one_round();
  const Model model = text::init_model(20, 3, 2, 5);
  const EncryptedModel enc =
      encrypt_model(*f.ctx, model, f.keys.public_key, f.rng);
  EXPECT_EQ(enc.chunks, 2u);
  EXPECT_EQ(enc.ciphertext_count(), 3u * 2u + 3u);
  EXPECT_EQ(enc.level(), 10u);
  EXPECT_LE(max_abs_error(client_decrypt_model(*f.ctx, enc, f.keys.secret),
                          model),
            1e-6);
}

TEST(EncryptedModel, SentinelDetectsCorruption) {
  const auto& f = one_round();
  EncryptedModel enc = encrypt_model(*f.ctx, text::init_model(4, 2, 2, 1),
                                     f.keys.public_key, f.rng);
  std::vector<double> bump(f.ctx->slots(), 0.0);
  bump.back() = 0.5;
  enc.output[1] = ckks::add_plain(
      enc.output[1], ckks::encode(*f.ctx, bump, enc.output[1].scale,
                                  enc.output[1].level()));
  EXPECT_THROW(client_decrypt_model(*f.ctx, enc, f.keys.secret),
               NoiseOverflowError);
  EXPECT_THROW(encrypt_model(*f.ctx, text::init_model(4, 2, 16, 1),
                             f.keys.public_key, f.rng),
               std::invalid_argument);
}

TEST(EncryptedForward, IdentityModelAndSingleToken) {
  const auto& f = one_round();
  Model id(3, 3, 3);
  for (std::size_t i = 0; i < 3; ++i) {
    id.h(i, i) = 1;
    id.o(i, i) = 1;
  }
  const BagVector bag = make_bag({2, 1, 1});
  const auto enc = encrypt_model(*f.ctx, id, f.keys.public_key, f.rng);
  infer::DepthLedger ledger;
  const auto scores = infer::client_decrypt_scores(
      *f.ctx,
      encrypted_forward(*f.ctx,
                        infer::client_encrypt_bag(*f.ctx, bag, 3,
                                                  f.keys.public_key, f.rng),
                        enc, f.keys.eval, &ledger),
      f.keys.secret);
  const auto want = text::infer_plain(bag, id).scores;
  for (std::size_t i = 0; i < 3; ++i) EXPECT_NEAR(scores.scores[i], want[i], 1e-3);
  EXPECT_EQ(ledger.consumed(), 3u);

  std::mt19937_64 g(1);
  Model model = text::init_model(20, 4, 2, 2);
  for (auto& x : model.hidden) x *= 10;
  const auto enc2 = encrypt_model(*f.ctx, model, f.keys.public_key, f.rng);
  std::vector<std::uint32_t> v(20, 0);
  v[17] = 1;
  const auto s = infer::client_decrypt_scores(
      *f.ctx,
      encrypted_forward(
          *f.ctx,
          infer::client_encrypt_bag(*f.ctx, make_bag(v), 20, f.keys.public_key,
                                    f.rng),
          enc2, f.keys.eval),
      f.keys.secret);
  for (std::size_t i = 0; i < 2; ++i) {
    double want_i = 0;
    for (std::size_t j = 0; j < 4; ++j) want_i += model.h(17, j) * model.o(j, i);
    EXPECT_NEAR(s.scores[i], want_i, 1e-4);
  }
}

TEST(EncryptedSoftmax, PolynomialValues) {
  const auto& f = one_round();
  auto run = [&](const std::vector<double>& s) {
    const auto ct = ckks::encrypt(
        *f.ctx, ckks::encode(*f.ctx, s, f.ctx->params().default_scale(), 5),
        f.keys.public_key, f.rng);
    infer::DepthLedger ledger;
    const auto out = encrypted_softmax(*f.ctx, ct, f.keys.eval.relin, &ledger);
    EXPECT_EQ(ledger.consumed(), 1u);
    return ckks::decode_real(*f.ctx, ckks::decrypt(*f.ctx, out, f.keys.secret));
  };
  for (double x : run(std::vector<double>(16, 0.0))) EXPECT_NEAR(x, 0.25, 1e-6);
  const auto two = run({2, -2});
  EXPECT_NEAR(two[0], 1.75, 1e-6);
  EXPECT_NEAR(two[1], -0.25, 1e-6);
  std::mt19937_64 g(2);
  std::uniform_real_distribution<double> u(-4, 4);
  std::vector<double> s(16);
  for (auto& x : s) x = u(g);
  const auto got = run(s);
  for (std::size_t i = 0; i < 16; ++i) {
    EXPECT_NEAR(got[i], text::softmax_poly_eval(s[i]), 1e-4);
  }
}

TEST(EncryptedTraining, ZeroLearningRateKeepsModel) {
  const auto& f = one_round();
  std::mt19937_64 g(3);
  const auto data = random_data(8, 2, 3, g);
  const Model model = text::init_model(8, 2, 2, 3);
  text::TrainingConfig cfg;
  cfg.eta = 0;
  cfg.batch_tokens = 1000;
  const auto records = encrypt_all(f, data, 8, 2);
  const auto out = encrypted_backprop_update(
      *f.ctx, encrypt_model(*f.ctx, model, f.keys.public_key, f.rng), records,
      cfg, f.keys.eval);
  EXPECT_LE(max_abs_error(client_decrypt_model(*f.ctx, out, f.keys.secret),
                          model),
            1e-4);
}

TEST(EncryptedTraining, SingleExampleMatchesPlainStep) {
  const auto& f = one_round();
  std::mt19937_64 g(4);
  const auto data = random_data(6, 2, 1, g);
  const Model model = text::init_model(6, 3, 2, 4);
  text::TrainingConfig cfg;
  cfg.eta = 0.5;
  cfg.batch_tokens = 1000;
  const Model want = text::train_plain_minibatch(data, cfg, model);
  infer::DepthLedger ledger;
  const auto out = encrypted_backprop_update(
      *f.ctx, encrypt_model(*f.ctx, model, f.keys.public_key, f.rng),
      encrypt_all(f, data, 6, 2), cfg, f.keys.eval, {}, &ledger);
  EXPECT_LE(max_rel_error(client_decrypt_model(*f.ctx, out, f.keys.secret),
                          want),
            1e-3);
  ASSERT_EQ(ledger.phases.size(), 9u);
  EXPECT_EQ(ledger.consumed(), kLevelsPerMinibatch);
  EXPECT_EQ(ledger.phases.front().level_before, 10u);
  EXPECT_EQ(ledger.phases.back().level_after, 1u);
  for (const auto& phase : ledger.phases) EXPECT_EQ(phase.consumed(), 1u);
  EXPECT_EQ(out.level(), 1u);
}

TEST(EncryptedTraining, OrderAndThreadsDoNotMatter) {
  const auto& f = one_round();
  std::mt19937_64 g(5);
  const auto data = random_data(8, 2, 4, g);
  const Model model = text::init_model(8, 2, 2, 5);
  text::TrainingConfig cfg;
  cfg.eta = 0.3;
  cfg.batch_tokens = 1000;
  const auto enc = encrypt_model(*f.ctx, model, f.keys.public_key, f.rng);
  auto records = encrypt_all(f, data, 8, 2);
  const auto a = encrypted_backprop_update(*f.ctx, enc, records, cfg, f.keys.eval);
  const auto threaded =
      encrypted_backprop_update(*f.ctx, enc, records, cfg, f.keys.eval, {3});
  std::reverse(records.begin(), records.end());
  const auto b = encrypted_backprop_update(*f.ctx, enc, records, cfg, f.keys.eval);
  const Model ma = client_decrypt_model(*f.ctx, a, f.keys.secret);
  EXPECT_LE(max_abs_error(client_decrypt_model(*f.ctx, b, f.keys.secret), ma),
            1e-6);
  for (std::size_t i = 0; i < a.hidden.size(); ++i) {
    EXPECT_EQ(io::ciphertext_bytes(*f.ctx, a.hidden[i]),
              io::ciphertext_bytes(*f.ctx, threaded.hidden[i]));
  }
}

TEST(EncryptedTraining, EncryptedLabelsMatchPlainLabels) {
  const auto& f = one_round();
  std::mt19937_64 g(6);
  const auto data = random_data(8, 3, 3, g);
  const Model model = text::init_model(8, 2, 3, 6);
  text::TrainingConfig cfg;
  cfg.eta = 0.4;
  cfg.batch_tokens = 1000;
  const auto enc = encrypt_model(*f.ctx, model, f.keys.public_key, f.rng);
  const auto plain_labels = encrypted_backprop_update(
      *f.ctx, enc, encrypt_all(f, data, 8, 3), cfg, f.keys.eval);
  const auto hidden = encrypt_all(f, data, 8, 3, true);
  ASSERT_TRUE(hidden[0].label_ct.has_value());
  const auto hidden_labels =
      encrypted_backprop_update(*f.ctx, enc, hidden, cfg, f.keys.eval);
  const Model want = text::train_plain_minibatch(data, cfg, model);
  EXPECT_LE(max_rel_error(client_decrypt_model(*f.ctx, hidden_labels,
                                               f.keys.secret),
                          want),
            1e-3);
  EXPECT_LE(max_abs_error(
                client_decrypt_model(*f.ctx, hidden_labels, f.keys.secret),
                client_decrypt_model(*f.ctx, plain_labels, f.keys.secret)),
            1e-6);
}

TEST(EncryptedTraining, RejectsExhaustedModel) {
  const auto& f = one_round();
  std::mt19937_64 g(7);
  const auto data = random_data(4, 2, 1, g);
  text::TrainingConfig cfg;
  const auto enc = encrypt_model(*f.ctx, text::init_model(4, 2, 2, 7),
                                 f.keys.public_key, f.rng, 9);
  EXPECT_THROW(encrypted_backprop_update(*f.ctx, enc, encrypt_all(f, data, 4, 2),
                                         cfg, f.keys.eval),
               InsufficientDepthError);
  cfg.poly_a = 0.2;
  const auto top = encrypt_model(*f.ctx, text::init_model(4, 2, 2, 7),
                                 f.keys.public_key, f.rng);
  EXPECT_THROW(encrypted_backprop_update(*f.ctx, top, encrypt_all(f, data, 4, 2),
                                         cfg, f.keys.eval),
               std::invalid_argument);
}

TEST(EncryptedTraining, FiveMinibatchesTrackPlainOracle) {
  const auto& f = toy(32, 46);
  std::mt19937_64 g(8);
  const std::size_t m = 24, n = 3, c = 2;
  const auto data = random_data(m, c, 12, g);
  const auto test = random_data(m, c, 200, g);
  std::size_t total = 0;
  for (const auto& r : data) total += r.bag.w;
  text::TrainingConfig cfg;
  cfg.eta = 0.5;
  cfg.epochs = 2;
  cfg.batch_tokens = (2 * total + 4) / 5;
  ASSERT_EQ(plan_depth(total, cfg, 46).minibatches, 5u);

  const Model init = text::init_model(m, n, c, 8);
  std::vector<Model> oracle;
  text::train_plain_minibatch(data, cfg, init,
                              [&](std::size_t, const Model& m2) {
                                oracle.push_back(m2);
                              });
  ASSERT_EQ(oracle.size(), 5u);

  std::size_t rounds = 0;
  const auto out = train_encrypted(
      *f.ctx, encrypt_model(*f.ctx, init, f.keys.public_key, f.rng),
      encrypt_all(f, data, m, c), cfg, f.keys.eval, {},
      [&](std::size_t b, const EncryptedModel& enc,
          const infer::DepthLedger& ledger) {
        EXPECT_EQ(ledger.consumed(), kLevelsPerMinibatch);
        EXPECT_LE(max_rel_error(client_decrypt_model(*f.ctx, enc, f.keys.secret),
                                oracle[b]),
                  1e-2)
            << "after update " << b;
        ++rounds;
      });
  EXPECT_EQ(rounds, 5u);
  EXPECT_EQ(out.level(), 1u);
  const Model got = client_decrypt_model(*f.ctx, out, f.keys.secret);
  std::size_t agree = 0;
  for (const auto& r : test) {
    agree += text::infer_plain(r.bag, got).argmax ==
             text::infer_plain(r.bag, oracle.back()).argmax;
  }
  EXPECT_GE(agree, 190u);
}

TEST(EncryptedModel, FileRoundtrip) {
  const auto& f = one_round();
  const auto enc = encrypt_model(*f.ctx, text::init_model(20, 2, 2, 9),
                                 f.keys.public_key, f.rng);
  const auto path =
      (std::filesystem::temp_directory_path() / "privft_enc_model.bin").string();
  save_encrypted_model(path, *f.ctx, enc);
  const auto back = load_encrypted_model(path, *f.ctx);
  ASSERT_EQ(back.ciphertext_count(), enc.ciphertext_count());
  for (std::size_t i = 0; i < enc.hidden.size(); ++i) {
    EXPECT_EQ(io::ciphertext_bytes(*f.ctx, back.hidden[i]),
              io::ciphertext_bytes(*f.ctx, enc.hidden[i]));
  }
  EXPECT_EQ(io::ciphertext_bytes(*f.ctx, back.output[1]),
            io::ciphertext_bytes(*f.ctx, enc.output[1]));
}

}  // namespace
}  // namespace privft::train
