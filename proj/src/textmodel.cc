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

#include <algorithm>
#include <cctype>
#include <cmath>
#include <fstream>
#include <iomanip>
#include <map>
#include <numeric>
#include <random>

#include "privft/sampling.h"
#include "privft/serialization.h"

namespace privft::text {

namespace {

bool is_word_byte(unsigned char ch) { return std::isalnum(ch) || ch >= 0x80; }

}  // namespace

TokenizedDoc tokenize(const std::string& text, int max_ngram) {
  if (max_ngram < 1 || max_ngram > 3) {
    throw std::invalid_argument("max_ngram must be 1, 2 or 3");
  }
  TokenizedDoc doc;
  std::string word;
  for (char raw : text) {
    const auto ch = static_cast<unsigned char>(raw);
    if (is_word_byte(ch)) {
      word.push_back(ch < 0x80 ? static_cast<char>(std::tolower(ch)) : raw);
    } else if (!word.empty()) {
      doc.tokens.push_back(std::move(word));
      word.clear();
    }
  }
  if (!word.empty()) doc.tokens.push_back(std::move(word));
  if (doc.tokens.empty()) throw EmptyDocumentError("document has no words");
  const std::size_t words = doc.tokens.size();
  for (int n = 2; n <= max_ngram; ++n) {
    for (std::size_t i = 0; i + n <= words; ++i) {
      std::string gram = doc.tokens[i];
      for (int k = 1; k < n; ++k) {
        gram += kNgramSeparator;
        gram += doc.tokens[i + k];
      }
      doc.tokens.push_back(std::move(gram));
    }
  }
  return doc;
}

Dictionary::Dictionary(std::vector<std::string> tokens)
    : tokens_(std::move(tokens)) {
  for (std::size_t i = 0; i < tokens_.size(); ++i) {
    if (!index_.emplace(tokens_[i], i).second) {
      throw std::invalid_argument("duplicate dictionary token: " + tokens_[i]);
    }
  }
}

std::optional<std::size_t> Dictionary::index(const std::string& token) const {
  const auto it = index_.find(token);
  if (it == index_.end()) return std::nullopt;
  return it->second;
}

Dictionary build_dictionary(std::span<const TokenizedDoc> corpus,
                            std::size_t cap) {
  if (corpus.empty()) throw std::invalid_argument("empty corpus");
  std::unordered_map<std::string, std::size_t> freq;
  for (const auto& doc : corpus) {
    for (const auto& t : doc.tokens) ++freq[t];
  }
  std::vector<std::pair<std::string, std::size_t>> entries(freq.begin(),
                                                           freq.end());
  const std::size_t keep = std::min(cap, entries.size());
  auto order = [](const auto& a, const auto& b) {
    return a.second != b.second ? a.second > b.second : a.first < b.first;
  };
  std::partial_sort(entries.begin(), entries.begin() + keep, entries.end(),
                    order);
  std::vector<std::string> tokens;
  tokens.reserve(keep);
  for (std::size_t i = 0; i < keep; ++i) tokens.push_back(entries[i].first);
  return Dictionary(std::move(tokens));
}

std::vector<std::pair<std::size_t, std::uint32_t>> BagVector::nonzeros()
    const {
  std::vector<std::pair<std::size_t, std::uint32_t>> out;
  for (std::size_t i = 0; i < counts.size(); ++i) {
    if (counts[i] != 0) out.emplace_back(i, counts[i]);
  }
  return out;
}

BagVector bag_encode(const TokenizedDoc& doc, const Dictionary& dict) {
  BagVector bag;
  bag.counts.assign(dict.size(), 0);
  for (const auto& t : doc.tokens) {
    if (const auto idx = dict.index(t)) {
      ++bag.counts[*idx];
      ++bag.w;
    }
  }
  if (bag.w == 0) {
    throw EmptyDocumentError("no document token is in the dictionary");
  }
  return bag;
}

Model::Model(std::size_t m, std::size_t n, std::size_t c)
    : m(m), n(n), c(c), hidden(m * n, 0.0), output(n * c, 0.0) {}

void Model::validate() const {
  if (m == 0 || n == 0) throw std::invalid_argument("empty model");
  if (c < 2) throw std::invalid_argument("a classifier needs c >= 2");
  if (hidden.size() != m * n || output.size() != n * c) {
    throw std::invalid_argument("model matrices do not match their shape");
  }
  for (double x : hidden) {
    if (!std::isfinite(x)) throw std::invalid_argument("non-finite weight");
  }
  for (double x : output) {
    if (!std::isfinite(x)) throw std::invalid_argument("non-finite weight");
  }
}

Model init_model(std::size_t m, std::size_t n, std::size_t c,
                 std::uint64_t seed) {
  Model model(m, n, c);
  ckks::Sampler rng(seed);
  const double bound = 1.0 / (2.0 * static_cast<double>(n));
  for (auto& x : model.hidden) x = rng.uniform_real(-bound, bound);
  for (auto& x : model.output) x = rng.uniform_real(-bound, bound);
  return model;
}

std::vector<double> hidden_layer(const BagVector& bag, const Model& model) {
  if (bag.counts.size() != model.m) {
    throw std::invalid_argument("bag length differs from the dictionary size");
  }
  if (bag.w == 0) throw EmptyDocumentError("bag has no tokens");
  std::vector<double> h(model.n, 0.0);
  for (const auto& [r, count] : bag.nonzeros()) {
    for (std::size_t j = 0; j < model.n; ++j) h[j] += count * model.h(r, j);
  }
  for (auto& x : h) x /= bag.w;
  return h;
}

std::vector<double> softmax(std::span<const double> scores) {
  const double top = *std::max_element(scores.begin(), scores.end());
  std::vector<double> p(scores.size());
  double total = 0;
  for (std::size_t i = 0; i < p.size(); ++i) {
    p[i] = std::exp(scores[i] - top);
    total += p[i];
  }
  for (auto& x : p) x /= total;
  return p;
}

std::size_t argmax(std::span<const double> values) {
  std::size_t best = 0;
  for (std::size_t i = 1; i < values.size(); ++i) {
    if (values[i] > values[best]) best = i;
  }
  return best;
}

InferenceResult infer_plain(const BagVector& bag, const Model& model) {
  InferenceResult r;
  r.hidden = hidden_layer(bag, model);
  r.scores.assign(model.c, 0.0);
  for (std::size_t j = 0; j < model.n; ++j) {
    for (std::size_t i = 0; i < model.c; ++i) {
      r.scores[i] += r.hidden[j] * model.o(j, i);
    }
  }
  r.probs = softmax(r.scores);
  r.argmax = argmax(r.scores);
  return r;
}

double softmax_poly_eval(double x) { return x * x / 8 + x / 2 + 0.25; }

void TrainingConfig::validate() const {
  if (!(eta >= 0)) throw std::invalid_argument("learning rate must be >= 0");
  if (batch_tokens < 1) throw std::invalid_argument("beta must be >= 1");
  if (epochs < 1) throw std::invalid_argument("need at least one epoch");
}

std::size_t minibatch_count(std::size_t total_tokens, std::size_t batch_tokens,
                            std::size_t epochs) {
  if (batch_tokens == 0) throw std::invalid_argument("beta must be >= 1");
  const std::size_t budget = epochs * total_tokens;
  return (budget + batch_tokens - 1) / batch_tokens;
}

std::vector<std::vector<std::size_t>> plan_minibatches(
    std::span<const std::size_t> token_counts, std::size_t batch_tokens,
    std::size_t epochs) {
  if (token_counts.empty()) throw std::invalid_argument("empty dataset");
  const std::size_t total =
      std::accumulate(token_counts.begin(), token_counts.end(), std::size_t{0});
  const std::size_t count = minibatch_count(total, batch_tokens, epochs);
  std::vector<std::vector<std::size_t>> batches;
  batches.reserve(count);
  std::size_t cursor = 0;
  for (std::size_t b = 0; b < count; ++b) {
    std::vector<std::size_t> batch;
    std::size_t tokens = 0;
    while (tokens < batch_tokens && batch.size() < token_counts.size()) {
      batch.push_back(cursor);
      tokens += token_counts[cursor];
      cursor = (cursor + 1) % token_counts.size();
    }
    batches.push_back(std::move(batch));
  }
  return batches;
}

namespace {

struct Forward {
  std::vector<double> h;
  std::vector<double> s;
  std::vector<double> e;
};

Forward forward(const Model& model, const LabeledBag& ex,
                const TrainingConfig& cfg) {
  if (ex.label >= model.c) throw std::invalid_argument("label out of range");
  Forward f;
  f.h = hidden_layer(ex.bag, model);
  f.s.assign(model.c, 0.0);
  for (std::size_t j = 0; j < model.n; ++j) {
    for (std::size_t i = 0; i < model.c; ++i) f.s[i] += f.h[j] * model.o(j, i);
  }
  f.e.resize(model.c);
  for (std::size_t i = 0; i < model.c; ++i) {
    const double x = f.s[i];
    const double g = cfg.poly_a * x * x + cfg.poly_b * x + cfg.poly_c;
    f.e[i] = g - (i == ex.label ? 1.0 : 0.0);
  }
  return f;
}

}  // namespace

Gradients batch_gradients(const Model& model,
                          std::span<const LabeledBag> batch,
                          const TrainingConfig& config) {
  if (batch.empty()) throw std::invalid_argument("empty minibatch");
  Gradients g{std::vector<double>(model.m * model.n, 0.0),
              std::vector<double>(model.n * model.c, 0.0)};
  std::vector<double> d(model.n);
  for (const auto& ex : batch) {
    const Forward f = forward(model, ex, config);
    for (std::size_t j = 0; j < model.n; ++j) {
      d[j] = 0;
      for (std::size_t i = 0; i < model.c; ++i) {
        g.output[j * model.c + i] += f.h[j] * f.e[i];
        d[j] += model.o(j, i) * f.e[i];
      }
    }
    for (const auto& [r, count] : ex.bag.nonzeros()) {
      const double weight = static_cast<double>(count) / ex.bag.w;
      for (std::size_t j = 0; j < model.n; ++j) {
        g.hidden[r * model.n + j] += weight * d[j];
      }
    }
  }
  return g;
}

double batch_loss(const Model& model, std::span<const LabeledBag> batch,
                  const TrainingConfig& config) {
  double loss = 0;
  for (const auto& ex : batch) {
    const Forward f = forward(model, ex, config);
    for (std::size_t i = 0; i < model.c; ++i) {
      const double x = f.s[i];
      loss += config.poly_a * x * x * x / 3 + config.poly_b * x * x / 2 +
              config.poly_c * x - (i == ex.label ? x : 0.0);
    }
  }
  return loss;
}

void apply_update(Model& model, const Gradients& grad, double eta) {
  for (std::size_t i = 0; i < model.hidden.size(); ++i) {
    model.hidden[i] -= eta * grad.hidden[i];
  }
  for (std::size_t i = 0; i < model.output.size(); ++i) {
    model.output[i] -= eta * grad.output[i];
  }
}

Model train_plain_minibatch(
    std::span<const LabeledBag> data, const TrainingConfig& config,
    Model model,
    const std::function<void(std::size_t, const Model&)>& on_update) {
  config.validate();
  std::vector<std::size_t> tokens;
  tokens.reserve(data.size());
  for (const auto& ex : data) tokens.push_back(ex.bag.w);
  const auto batches = plan_minibatches(tokens, config.batch_tokens,
                                        config.epochs);
  std::vector<LabeledBag> batch;
  for (std::size_t b = 0; b < batches.size(); ++b) {
    batch.clear();
    for (std::size_t idx : batches[b]) batch.push_back(data[idx]);
    apply_update(model, batch_gradients(model, batch, config), config.eta);
    if (on_update) on_update(b, model);
  }
  return model;
}

Model train_plain_sgd(std::span<const LabeledBag> data, std::size_t m,
                      std::size_t c, const SgdConfig& config) {
  if (data.empty()) throw std::invalid_argument("empty training set");
  Model model(m, config.n, c);
  ckks::Sampler rng(config.seed);
  const double bound = 1.0 / static_cast<double>(config.n);
  for (auto& x : model.hidden) x = rng.uniform_real(-bound, bound);
  std::vector<std::size_t> order(data.size());
  std::iota(order.begin(), order.end(), 0);
  const double steps = static_cast<double>(config.epochs * data.size());
  double step = 0;
  std::vector<double> d(config.n);
  for (std::size_t epoch = 0; epoch < config.epochs; ++epoch) {
    for (std::size_t i = data.size(); i > 1; --i) {
      std::swap(order[i - 1], order[rng.uniform(i)]);
    }
    for (std::size_t idx : order) {
      const double lr = config.lr * (1.0 - step / steps);
      step += 1;
      const auto& ex = data[idx];
      const InferenceResult r = infer_plain(ex.bag, model);
      for (std::size_t j = 0; j < model.n; ++j) {
        d[j] = 0;
        for (std::size_t k = 0; k < c; ++k) {
          const double e = r.probs[k] - (k == ex.label ? 1.0 : 0.0);
          d[j] += model.o(j, k) * e;
          model.o(j, k) -= lr * r.hidden[j] * e;
        }
      }
      for (const auto& [row, count] : ex.bag.nonzeros()) {
        const double weight = lr * count / ex.bag.w;
        for (std::size_t j = 0; j < model.n; ++j) {
          model.h(row, j) -= weight * d[j];
        }
      }
    }
  }
  return model;
}

double accuracy(const Model& model, std::span<const LabeledBag> data) {
  if (data.empty()) return 0;
  std::size_t hits = 0;
  for (const auto& ex : data) {
    hits += infer_plain(ex.bag, model).argmax == ex.label;
  }
  return static_cast<double>(hits) / static_cast<double>(data.size());
}

void save_dictionary(const std::string& path, const Dictionary& dict) {
  auto out = io::open_for_write(path);
  io::Writer w(out);
  io::write_header(w, io::ObjectType::kDictionary);
  w.u64(dict.size());
  for (const auto& t : dict.tokens()) w.str(t);
}

Dictionary load_dictionary(const std::string& path) {
  auto in = io::open_for_read(path);
  io::Reader r(in);
  io::read_header(r, io::ObjectType::kDictionary);
  const std::uint64_t n = r.count(std::uint64_t{1} << 32);
  std::vector<std::string> tokens;
  tokens.reserve(n);
  for (std::uint64_t i = 0; i < n; ++i) tokens.push_back(r.str());
  return Dictionary(std::move(tokens));
}

void save_model(const std::string& path, const Model& model) {
  model.validate();
  auto out = io::open_for_write(path);
  io::Writer w(out);
  io::write_header(w, io::ObjectType::kModel);
  w.u64(model.m);
  w.u64(model.n);
  w.u64(model.c);
  for (double x : model.hidden) w.f64(x);
  for (double x : model.output) w.f64(x);
}

Model load_model(const std::string& path) {
  auto in = io::open_for_read(path);
  io::Reader r(in);
  io::read_header(r, io::ObjectType::kModel);
  const std::uint64_t limit = std::uint64_t{1} << 28;
  const std::uint64_t m = r.count(limit);
  const std::uint64_t n = r.count(limit);
  const std::uint64_t c = r.count(limit);
  if (m * n > limit || n * c > limit) throw io::FormatError("model too large");
  Model model(m, n, c);
  for (auto& x : model.hidden) x = r.f64();
  for (auto& x : model.output) x = r.f64();
  model.validate();
  return model;
}

void export_model_text(const std::string& path, const Model& model) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot open " + path);
  out << std::setprecision(17);
  out << "# H " << model.m << " x " << model.n << "\n";
  for (std::size_t r = 0; r < model.m; ++r) {
    for (std::size_t j = 0; j < model.n; ++j) {
      out << (j ? " " : "") << model.h(r, j);
    }
    out << "\n";
  }
  out << "# O " << model.n << " x " << model.c << "\n";
  for (std::size_t j = 0; j < model.n; ++j) {
    for (std::size_t i = 0; i < model.c; ++i) {
      out << (i ? " " : "") << model.o(j, i);
    }
    out << "\n";
  }
}

}  // namespace privft::text
