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

// Plaintext side of the classifier: tokenization, dictionary, bag-of-n-grams
// vectors, the two-matrix linear model and its reference inference/training.

#ifndef PRIVFT_TEXTMODEL_H_
#define PRIVFT_TEXTMODEL_H_

#include <cstddef>
#include <cstdint>
#include <functional>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <unordered_map>
#include <vector>

namespace privft::text {

class EmptyDocumentError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

// Joins the words of an n-gram. Never produced by the word splitter.
inline constexpr char kNgramSeparator = '_';

struct TokenizedDoc {
  std::vector<std::string> tokens;
  std::size_t w() const { return tokens.size(); }
};

// Lowercased alphanumeric words followed by the bigrams and trigrams allowed
// by max_ngram. Bytes >= 0x80 count as word characters so UTF-8 survives.
TokenizedDoc tokenize(const std::string& text, int max_ngram = 1);

class Dictionary {
 public:
  Dictionary() = default;
  explicit Dictionary(std::vector<std::string> tokens);

  std::size_t size() const { return tokens_.size(); }
  std::optional<std::size_t> index(const std::string& token) const;
  const std::string& token(std::size_t i) const { return tokens_.at(i); }
  const std::vector<std::string>& tokens() const { return tokens_; }

 private:
  std::vector<std::string> tokens_;
  std::unordered_map<std::string, std::size_t> index_;
};

// Most frequent tokens first, ties in lexicographic order, at most cap.
Dictionary build_dictionary(std::span<const TokenizedDoc> corpus,
                            std::size_t cap);

struct BagVector {
  std::vector<std::uint32_t> counts;  // length m
  std::uint32_t w = 0;                // sum of counts

  // (index, count) pairs for the nonzero entries, by increasing index.
  std::vector<std::pair<std::size_t, std::uint32_t>> nonzeros() const;
};

// Counts dictionary tokens; unknown tokens are dropped and not counted in w.
BagVector bag_encode(const TokenizedDoc& doc, const Dictionary& dict);

// H is m x n and O is n x c, both row-major.
struct Model {
  std::size_t m = 0;
  std::size_t n = 0;
  std::size_t c = 0;
  std::vector<double> hidden;
  std::vector<double> output;

  Model() = default;
  Model(std::size_t m, std::size_t n, std::size_t c);
  double& h(std::size_t row, std::size_t col) { return hidden[row * n + col]; }
  double h(std::size_t row, std::size_t col) const {
    return hidden[row * n + col];
  }
  double& o(std::size_t row, std::size_t col) { return output[row * c + col]; }
  double o(std::size_t row, std::size_t col) const {
    return output[row * c + col];
  }
  void validate() const;
};

// Uniform in [-1/(2n), 1/(2n)], seeded.
Model init_model(std::size_t m, std::size_t n, std::size_t c,
                 std::uint64_t seed);

struct InferenceResult {
  std::vector<double> hidden;
  std::vector<double> scores;
  std::vector<double> probs;
  std::size_t argmax = 0;
};

// h = (1/w) v^T H, s = h O, then softmax.
std::vector<double> hidden_layer(const BagVector& bag, const Model& model);
InferenceResult infer_plain(const BagVector& bag, const Model& model);
std::vector<double> softmax(std::span<const double> scores);
// Ties go to the lowest index.
std::size_t argmax(std::span<const double> values);

// x^2/8 + x/2 + 1/4: the activation used in place of softmax for training.
double softmax_poly_eval(double x);

struct TrainingConfig {
  double eta = 0.1;
  std::size_t batch_tokens = 1;  // beta
  std::size_t epochs = 1;
  double poly_a = 1.0 / 8;  // coefficients of the degree-2 activation
  double poly_b = 1.0 / 2;
  double poly_c = 1.0 / 4;
  void validate() const;
};

struct LabeledBag {
  BagVector bag;
  std::size_t label = 0;
};

// Minibatch schedule of the reference loop: a cursor walks the records
// cyclically; each batch takes whole records until it holds at least beta
// tokens (the record that crosses beta is kept) or has covered every record
// once. The loop advances a token counter by beta per batch and stops once it
// reaches epochs * T, giving ceil(epochs * T / beta) batches.
std::vector<std::vector<std::size_t>> plan_minibatches(
    std::span<const std::size_t> token_counts, std::size_t batch_tokens,
    std::size_t epochs);
std::size_t minibatch_count(std::size_t total_tokens, std::size_t batch_tokens,
                            std::size_t epochs);

struct Gradients {
  std::vector<double> hidden;  // m x n
  std::vector<double> output;  // n x c
};

// Error e = g(s) - onehot; grad_O = sum h^T e; grad_H[r] += (v_r / w) O e.
Gradients batch_gradients(const Model& model,
                          std::span<const LabeledBag> batch,
                          const TrainingConfig& config);
// Loss whose gradient is exactly batch_gradients: sum_i G(s_i) - y_i s_i
// with G' equal to the activation polynomial.
double batch_loss(const Model& model, std::span<const LabeledBag> batch,
                  const TrainingConfig& config);
void apply_update(Model& model, const Gradients& grad, double eta);

// Minibatch gradient descent with the polynomial activation. The callback,
// when set, observes the model after every update.
Model train_plain_minibatch(
    std::span<const LabeledBag> data, const TrainingConfig& config,
    Model model,
    const std::function<void(std::size_t, const Model&)>& on_update = {});

// Softmax cross-entropy SGD with a linearly decaying rate; produces the
// plaintext models used for inference.
struct SgdConfig {
  std::size_t n = 16;
  double lr = 0.2;
  std::size_t epochs = 5;
  std::uint64_t seed = 1;
};
Model train_plain_sgd(std::span<const LabeledBag> data, std::size_t m,
                      std::size_t c, const SgdConfig& config);

double accuracy(const Model& model, std::span<const LabeledBag> data);

// Versioned binary files and a plain-text export for inspection.
void save_dictionary(const std::string& path, const Dictionary& dict);
Dictionary load_dictionary(const std::string& path);
void save_model(const std::string& path, const Model& model);
Model load_model(const std::string& path);
void export_model_text(const std::string& path, const Model& model);

}  // namespace privft::text

#endif  // PRIVFT_TEXTMODEL_H_
