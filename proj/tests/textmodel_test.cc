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

#include "privft/textmodel.h"

#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <random>

namespace privft::text {
namespace {

using Tokens = std::vector<std::string>;

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
    const std::size_t words = 1 + g() % 5;
    for (std::size_t i = 0; i < words; ++i) ++v[g() % m];
    out.push_back({make_bag(v), g() % c});
  }
  return out;
}

TEST(Tokenize, Examples) {
  EXPECT_EQ(tokenize("The cat", 1).tokens, (Tokens{"the", "cat"}));
  EXPECT_EQ(tokenize("The cat", 1).w(), 2u);
  const auto two = tokenize("a b c", 2);
  EXPECT_EQ(two.tokens, (Tokens{"a", "b", "c", "a_b", "b_c"}));
  EXPECT_EQ(two.w(), 5u);
  EXPECT_EQ(tokenize("a b c", 3).tokens,
            (Tokens{"a", "b", "c", "a_b", "b_c", "a_b_c"}));
  EXPECT_THROW(tokenize("", 1), EmptyDocumentError);
  EXPECT_THROW(tokenize(" ,.! ", 2), EmptyDocumentError);
  EXPECT_EQ(tokenize("Hello, WORLD!! x_y", 1).tokens,
            (Tokens{"hello", "world", "x", "y"}));
  EXPECT_EQ(tokenize("caf\xc3\xa9 ok", 1).tokens,
            (Tokens{"caf\xc3\xa9", "ok"}));
}

TEST(Dictionary, FrequencyThenLexicographic) {
  const std::vector<TokenizedDoc> corpus{tokenize("a a b")};
  const Dictionary d = build_dictionary(corpus, 10);
  EXPECT_EQ(d.tokens(), (Tokens{"a", "b"}));
  EXPECT_EQ(d.index("a"), 0u);
  EXPECT_EQ(d.index("b"), 1u);
  EXPECT_FALSE(d.index("c").has_value());
  EXPECT_EQ(build_dictionary(corpus, 1).tokens(), (Tokens{"a"}));
  const std::vector<TokenizedDoc> ties{tokenize("z y x y z w")};
  EXPECT_EQ(build_dictionary(ties, 10).tokens(), (Tokens{"y", "z", "w", "x"}));
  EXPECT_THROW(build_dictionary(std::vector<TokenizedDoc>{}, 3),
               std::invalid_argument);
}

TEST(Dictionary, CapEnforced) {
  TokenizedDoc doc;
  for (int i = 0; i < 500001; ++i) doc.tokens.push_back("t" + std::to_string(i));
  const std::vector<TokenizedDoc> corpus{std::move(doc)};
  EXPECT_EQ(build_dictionary(corpus, 500000).size(), 500000u);
}

TEST(BagEncode, Examples) {
  const Dictionary dict(Tokens{"the", "cat", "dog"});
  const BagVector b = bag_encode(TokenizedDoc{{"the", "cat", "the"}}, dict);
  EXPECT_EQ(b.counts, (std::vector<std::uint32_t>{2, 1, 0}));
  EXPECT_EQ(b.w, 3u);
  EXPECT_THROW(bag_encode(TokenizedDoc{{"zzz"}}, dict), EmptyDocumentError);
  const BagVector one = bag_encode(TokenizedDoc{{"cat"}}, dict);
  EXPECT_EQ(one.counts, (std::vector<std::uint32_t>{0, 1, 0}));
  EXPECT_EQ(one.w, 1u);
  const BagVector dropped = bag_encode(TokenizedDoc{{"cat", "zzz"}}, dict);
  EXPECT_EQ(dropped.w, 1u);
}

TEST(BagEncode, SumAndPermutationInvariance) {
  const Dictionary dict(Tokens{"a", "b", "c", "d"});
  std::mt19937_64 g(1);
  for (int trial = 0; trial < 50; ++trial) {
    TokenizedDoc doc;
    for (int i = 0; i < 12; ++i) doc.tokens.push_back(std::string(1, "abcdxy"[g() % 6]));
    if (std::none_of(doc.tokens.begin(), doc.tokens.end(),
                     [](const std::string& t) { return t < "e"; })) {
      doc.tokens.push_back("a");
    }
    const BagVector b = bag_encode(doc, dict);
    std::uint32_t sum = 0;
    for (auto c : b.counts) sum += c;
    EXPECT_EQ(sum, b.w);
    std::shuffle(doc.tokens.begin(), doc.tokens.end(), g);
    EXPECT_EQ(bag_encode(doc, dict).counts, b.counts);
  }
}

TEST(InferPlain, Examples) {
  Model id(3, 3, 3);
  for (std::size_t i = 0; i < 3; ++i) {
    id.h(i, i) = 1;
    id.o(i, i) = 1;
  }
  const auto r0 = infer_plain(make_bag({1, 0, 0}), id);
  EXPECT_EQ(r0.scores, (std::vector<double>{1, 0, 0}));

  Model m(2, 2, 2);
  m.hidden = {1, 0, 0, 1};
  m.output = {1, -1, -1, 1};
  const auto r = infer_plain(make_bag({1, 1}), m);
  EXPECT_EQ(r.hidden, (std::vector<double>{0.5, 0.5}));
  EXPECT_EQ(r.scores, (std::vector<double>{0, 0}));
  EXPECT_DOUBLE_EQ(r.probs[0], 0.5);
  EXPECT_DOUBLE_EQ(r.probs[1], 0.5);
  EXPECT_EQ(r.argmax, 0u);
}

TEST(InferPlain, ArgmaxInvariances) {
  std::mt19937_64 g(2);
  std::normal_distribution<double> nd;
  for (int trial = 0; trial < 100; ++trial) {
    Model m(6, 3, 4);
    for (auto& x : m.hidden) x = nd(g);
    for (auto& x : m.output) x = nd(g);
    std::vector<std::uint32_t> v(6);
    for (auto& x : v) x = g() % 3;
    v[0] += 1;
    const BagVector bag = make_bag(v);
    const auto base = infer_plain(bag, m);
    Model doubled = m;
    for (auto& x : doubled.output) x *= 2;
    EXPECT_EQ(infer_plain(bag, doubled).argmax, base.argmax);
    std::vector<double> shifted = base.scores;
    for (auto& x : shifted) x += 3.5;
    EXPECT_EQ(argmax(shifted), base.argmax);
  }
  EXPECT_EQ(argmax(std::vector<double>{1, 3, 3}), 1u);
}

TEST(SoftmaxPoly, Examples) {
  EXPECT_DOUBLE_EQ(softmax_poly_eval(0), 0.25);
  EXPECT_DOUBLE_EQ(softmax_poly_eval(2), 1.75);
  EXPECT_DOUBLE_EQ(softmax_poly_eval(-2), -0.25);
}

TEST(Minibatch, Schedule) {
  EXPECT_EQ(minibatch_count(2518750, 1007500, 2), 5u);
  EXPECT_EQ(minibatch_count(100, 1000, 1), 1u);
  const std::vector<std::size_t> tokens{3, 4, 2, 5};  // T = 14
  // beta = 6: take records until >= 6 tokens, keeping the crossing record.
  const auto b = plan_minibatches(tokens, 6, 1);
  ASSERT_EQ(b.size(), 3u);
  EXPECT_EQ(b[0], (std::vector<std::size_t>{0, 1}));
  EXPECT_EQ(b[1], (std::vector<std::size_t>{2, 3}));
  EXPECT_EQ(b[2], (std::vector<std::size_t>{0, 1}));  // wraps around
  // Large beta: one batch, one full pass at most.
  const auto one = plan_minibatches(tokens, 1000, 1);
  ASSERT_EQ(one.size(), 1u);
  EXPECT_EQ(one[0], (std::vector<std::size_t>{0, 1, 2, 3}));
  EXPECT_EQ(plan_minibatches(tokens, 14, 2).size(), 2u);
}

TEST(TrainPlain, ZeroLearningRateKeepsModel) {
  std::mt19937_64 g(3);
  const auto data = random_data(5, 2, 10, g);
  const Model init = init_model(5, 3, 2, 7);
  TrainingConfig cfg;
  cfg.eta = 0;
  cfg.batch_tokens = 4;
  cfg.epochs = 2;
  const Model out = train_plain_minibatch(data, cfg, init);
  EXPECT_EQ(out.hidden, init.hidden);
  EXPECT_EQ(out.output, init.output);
}

TEST(TrainPlain, LargeBudgetMeansOneUpdate) {
  std::mt19937_64 g(4);
  const auto data = random_data(5, 2, 10, g);
  TrainingConfig cfg;
  cfg.batch_tokens = 1000;
  std::size_t updates = 0;
  train_plain_minibatch(data, cfg, init_model(5, 3, 2, 1),
                        [&](std::size_t, const Model&) { ++updates; });
  EXPECT_EQ(updates, 1u);
}

// One token, m = n = 1, two classes, worked out by hand.
TEST(TrainPlain, ScalarOneStepClosedForm) {
  Model m(1, 1, 2);
  const double H = 0.5, O0 = 0.8, O1 = -0.4, eta = 0.3;
  m.hidden = {H};
  m.output = {O0, O1};
  TrainingConfig cfg;
  cfg.eta = eta;
  const std::vector<LabeledBag> data{{make_bag({1}), 0}};
  const Model out = train_plain_minibatch(data, cfg, m);
  const double s0 = H * O0, s1 = H * O1;
  const double e0 = s0 * s0 / 8 + s0 / 2 + 0.25 - 1.0;
  const double e1 = s1 * s1 / 8 + s1 / 2 + 0.25;
  EXPECT_NEAR(out.output[0], O0 - eta * H * e0, 1e-15);
  EXPECT_NEAR(out.output[1], O1 - eta * H * e1, 1e-15);
  EXPECT_NEAR(out.hidden[0], H - eta * (O0 * e0 + O1 * e1), 1e-15);
}

TEST(TrainPlain, GradientMatchesFiniteDifferences) {
  std::mt19937_64 g(5);
  TrainingConfig cfg;
  for (int trial = 0; trial < 5; ++trial) {
    const auto data = random_data(6, 3, 8, g);
    Model m = init_model(6, 4, 3, 100 + trial);
    for (auto& x : m.hidden) x *= 8;
    for (auto& x : m.output) x *= 8;
    const Gradients grad = batch_gradients(m, data, cfg);
    const double h = 1e-5;
    auto check = [&](std::vector<double>& weights,
                     const std::vector<double>& analytic) {
      for (std::size_t i = 0; i < weights.size(); ++i) {
        const double saved = weights[i];
        weights[i] = saved + h;
        const double up = batch_loss(m, data, cfg);
        weights[i] = saved - h;
        const double down = batch_loss(m, data, cfg);
        weights[i] = saved;
        const double numeric = (up - down) / (2 * h);
        const double rel = std::abs(numeric - analytic[i]) /
                           std::max(std::abs(analytic[i]), 1e-4);
        EXPECT_LE(rel, 1e-4) << "weight " << i;
      }
    };
    check(m.hidden, grad.hidden);
    check(m.output, grad.output);
  }
}

TEST(TrainPlain, SgdLearnsSeparableData) {
  // Class k documents use tokens {2k, 2k+1}.
  std::vector<LabeledBag> data;
  std::mt19937_64 g(6);
  for (int i = 0; i < 200; ++i) {
    const std::size_t label = g() % 3;
    std::vector<std::uint32_t> v(6, 0);
    v[2 * label + g() % 2] = 1 + g() % 3;
    data.push_back({make_bag(v), label});
  }
  SgdConfig cfg;
  cfg.n = 4;
  const Model m = train_plain_sgd(data, 6, 3, cfg);
  EXPECT_GE(accuracy(m, data), 0.99);
}

TEST(ModelIo, Roundtrip) {
  const auto dir = std::filesystem::temp_directory_path();
  const Model m = init_model(7, 3, 2, 9);
  save_model((dir / "privft_model.bin").string(), m);
  const Model back = load_model((dir / "privft_model.bin").string());
  EXPECT_EQ(back.hidden, m.hidden);
  EXPECT_EQ(back.output, m.output);
  const Dictionary d(Tokens{"x", "y_z", "w"});
  save_dictionary((dir / "privft_dict.bin").string(), d);
  EXPECT_EQ(load_dictionary((dir / "privft_dict.bin").string()).tokens(),
            d.tokens());
  EXPECT_THROW(load_dictionary((dir / "privft_model.bin").string()),
               std::runtime_error);
}

}  // namespace
}  // namespace privft::text
