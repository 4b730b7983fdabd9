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

#include "privft/enc_infer.h"

#include <algorithm>
#include <sstream>
#include <stdexcept>

#include "privft/parallel.h"
#include "privft/serialization.h"

namespace privft::infer {

using ckks::Ciphertext;
using ckks::CkksContext;
using ckks::Plaintext;

std::size_t chunk_count(std::size_t m, std::size_t slots) {
  if (slots == 0) throw std::invalid_argument("zero slots");
  return (m + slots - 1) / slots;
}

void DepthLedger::record(std::string name, std::size_t before,
                         std::size_t after) {
  if (after > before) throw std::logic_error("level increased in " + name);
  phases.push_back({std::move(name), before, after});
}

std::size_t DepthLedger::consumed() const {
  std::size_t total = 0;
  for (const auto& p : phases) total += p.consumed();
  return total;
}

std::string DepthLedger::to_string() const {
  std::ostringstream out;
  for (const auto& p : phases) {
    out << p.name << ": " << p.level_before << " -> " << p.level_after << " ("
        << p.consumed() << ")\n";
  }
  out << "total: " << consumed() << "\n";
  return out.str();
}

namespace {

std::size_t resolve_level(const CkksContext& ctx, std::size_t level) {
  if (level == 0) return ctx.max_level();
  if (level > ctx.max_level()) {
    throw std::invalid_argument("level " + std::to_string(level) +
                                " exceeds the chain");
  }
  return level;
}

void note(DepthLedger* ledger, const char* name, std::size_t before,
          std::size_t after) {
  if (ledger) ledger->record(name, before, after);
}

}  // namespace

PackedBag client_encrypt_bag(const CkksContext& ctx, const text::BagVector& bag,
                             std::size_t m, const ckks::PublicKey& pk,
                             ckks::Sampler& rng, std::size_t level) {
  if (bag.counts.size() != m) {
    throw std::invalid_argument("bag has " + std::to_string(bag.counts.size()) +
                                " entries, dictionary has " +
                                std::to_string(m));
  }
  if (bag.w == 0) throw text::EmptyDocumentError("bag has no tokens");
  level = resolve_level(ctx, level);
  const std::size_t t = ctx.slots();
  PackedBag out;
  out.m = m;
  out.w = bag.w;
  const std::size_t chunks = chunk_count(m, t);
  out.chunks.reserve(chunks);
  std::vector<double> values(t);
  for (std::size_t k = 0; k < chunks; ++k) {
    std::fill(values.begin(), values.end(), 0.0);
    for (std::size_t i = 0; i < t && k * t + i < m; ++i) {
      values[i] = bag.counts[k * t + i];
    }
    const Plaintext pt =
        ckks::encode(ctx, values, ctx.params().default_scale(), level);
    out.chunks.push_back(ckks::encrypt(ctx, pt, pk, rng));
  }
  return out;
}

ScoreResult client_decrypt_scores(const CkksContext& ctx,
                                  const EncryptedScores& scores,
                                  const ckks::SecretKey& sk) {
  const auto slots = ckks::decode_real(ctx, ckks::decrypt(ctx, scores.ct, sk));
  if (scores.classes == 0 || scores.classes > slots.size()) {
    throw std::invalid_argument("invalid class count");
  }
  ScoreResult out;
  out.scores.assign(slots.begin(), slots.begin() + scores.classes);
  out.probs = text::softmax(out.scores);
  out.argmax = text::argmax(out.scores);
  return out;
}

PackedModel pack_model(const CkksContext& ctx, const text::Model& model,
                       std::size_t level) {
  model.validate();
  level = resolve_level(ctx, level);
  const std::size_t t = ctx.slots();
  if (model.c > t) {
    throw std::invalid_argument(std::to_string(model.c) +
                                " classes exceed the " + std::to_string(t) +
                                " slots");
  }
  if (level <= kInferenceDepth) {
    throw std::invalid_argument("level " + std::to_string(level) +
                                " cannot hold the inference circuit");
  }
  const ckks::Scale scale = ctx.params().default_scale();
  PackedModel out;
  out.level = level;
  out.hidden.m = model.m;
  out.hidden.n = model.n;
  out.hidden.chunks = chunk_count(model.m, t);
  out.hidden.plaintexts.reserve(model.n * out.hidden.chunks);
  std::vector<double> values(t);
  for (std::size_t j = 0; j < model.n; ++j) {
    for (std::size_t k = 0; k < out.hidden.chunks; ++k) {
      std::fill(values.begin(), values.end(), 0.0);
      for (std::size_t i = 0; i < t && k * t + i < model.m; ++i) {
        values[i] = model.h(k * t + i, j);
      }
      out.hidden.plaintexts.push_back(ckks::encode(ctx, values, scale, level));
    }
  }
  out.output.c = model.c;
  out.output.rows.reserve(model.n);
  std::vector<double> row(model.c);
  for (std::size_t j = 0; j < model.n; ++j) {
    for (std::size_t i = 0; i < model.c; ++i) row[i] = model.o(j, i);
    out.output.rows.push_back(ckks::encode(ctx, row, scale, level - 2));
  }
  return out;
}

std::vector<Ciphertext> eval_hidden(const CkksContext& ctx,
                                    const PackedBag& bag,
                                    const PackedHiddenModel& hidden,
                                    const ckks::GaloisKeys& galois,
                                    const ServerOptions& options,
                                    DepthLedger* ledger) {
  if (bag.chunks.size() != hidden.chunks || bag.m != hidden.m) {
    throw std::invalid_argument("bag and model chunk layouts differ");
  }
  if (bag.w == 0) throw std::invalid_argument("bag has no tokens");
  const std::size_t start = bag.chunks.front().level();
  std::vector<Ciphertext> out(hidden.n);
  parallel_for(hidden.n, options.threads, [&](std::size_t j) {
    Ciphertext acc = ckks::multiply_plain(bag.chunks[0], hidden.at(j, 0));
    for (std::size_t k = 1; k < hidden.chunks; ++k) {
      ckks::add_inplace(acc, ckks::multiply_plain(bag.chunks[k], hidden.at(j, k)));
    }
    acc = ckks::rescale(ctx, acc);
    acc = ckks::total_sum(ctx, acc, galois);
    const Plaintext inv_w =
        ckks::encode_constant(ctx, 1.0 / bag.w, ctx.params().default_scale(),
                              acc.level());
    out[j] = ckks::rescale(ctx, ckks::multiply_plain(acc, inv_w));
  });
  note(ledger, "chunk products", start, start - 1);
  note(ledger, "scale by 1/w", start - 1, start - 2);
  return out;
}

EncryptedScores eval_output(const CkksContext& ctx,
                            const std::vector<Ciphertext>& hidden,
                            const PackedOutputModel& output,
                            const ServerOptions& options,
                            DepthLedger* ledger) {
  if (hidden.empty() || hidden.size() != output.rows.size()) {
    throw std::invalid_argument("hidden width differs from the output layer");
  }
  const std::size_t start = hidden.front().level();
  std::vector<Ciphertext> terms(hidden.size());
  parallel_for(hidden.size(), options.threads, [&](std::size_t j) {
    terms[j] = ckks::multiply_plain(hidden[j], output.rows[j]);
  });
  Ciphertext acc = std::move(terms[0]);
  for (std::size_t j = 1; j < terms.size(); ++j) ckks::add_inplace(acc, terms[j]);
  EncryptedScores out;
  out.classes = output.c;
  out.ct = ckks::rescale(ctx, acc);
  note(ledger, "output layer", start, out.ct.level());
  return out;
}

EncryptedScores server_infer(const CkksContext& ctx, const PackedBag& bag,
                             const PackedModel& model,
                             const ckks::EvalKeys& keys,
                             const ServerOptions& options,
                             DepthLedger* ledger) {
  if (bag.chunks.empty() || bag.chunks.front().level() != model.level) {
    throw std::invalid_argument("bag level does not match the packed model");
  }
  const auto hidden =
      eval_hidden(ctx, bag, model.hidden, keys.galois, options, ledger);
  return eval_output(ctx, hidden, model.output, options, ledger);
}

// ---- files ----

void save_packed_bag(const std::string& path, const CkksContext& ctx,
                     const PackedBag& bag) {
  auto file = io::open_for_write(path);
  io::Writer w(file);
  io::write_header(w, io::ObjectType::kPackedBag);
  io::write_params(w, ctx.params());
  w.u64(bag.m);
  w.u32(bag.w);
  w.u64(bag.chunks.size());
  for (const auto& ct : bag.chunks) io::write_ciphertext(w, ct);
}

PackedBag load_packed_bag(const std::string& path, const CkksContext& ctx) {
  auto file = io::open_for_read(path);
  io::Reader r(file);
  io::read_header(r, io::ObjectType::kPackedBag);
  io::expect_params(r, ctx);
  PackedBag bag;
  bag.m = r.u64();
  bag.w = r.u32();
  const auto count = r.count(1u << 20);
  if (count != chunk_count(bag.m, ctx.slots())) {
    throw io::FormatError("chunk count does not match m");
  }
  for (std::uint64_t i = 0; i < count; ++i) {
    bag.chunks.push_back(io::read_ciphertext(r, ctx));
  }
  return bag;
}

void save_packed_model(const std::string& path, const CkksContext& ctx,
                       const PackedModel& model) {
  auto file = io::open_for_write(path);
  io::Writer w(file);
  io::write_header(w, io::ObjectType::kPackedModel);
  io::write_params(w, ctx.params());
  w.u64(model.level);
  w.u64(model.hidden.m);
  w.u64(model.hidden.n);
  w.u64(model.output.c);
  for (const auto& pt : model.hidden.plaintexts) io::write_plaintext(w, pt);
  for (const auto& pt : model.output.rows) io::write_plaintext(w, pt);
}

PackedModel load_packed_model(const std::string& path, const CkksContext& ctx) {
  auto file = io::open_for_read(path);
  io::Reader r(file);
  io::read_header(r, io::ObjectType::kPackedModel);
  io::expect_params(r, ctx);
  PackedModel model;
  model.level = r.u64();
  model.hidden.m = r.u64();
  model.hidden.n = r.count(1u << 16);
  model.output.c = r.count(ctx.slots());
  model.hidden.chunks = chunk_count(model.hidden.m, ctx.slots());
  const std::size_t total = model.hidden.n * model.hidden.chunks;
  model.hidden.plaintexts.reserve(total);
  for (std::size_t i = 0; i < total; ++i) {
    model.hidden.plaintexts.push_back(io::read_plaintext(r, ctx));
  }
  for (std::size_t j = 0; j < model.hidden.n; ++j) {
    model.output.rows.push_back(io::read_plaintext(r, ctx));
  }
  return model;
}

void save_scores(const std::string& path, const CkksContext& ctx,
                 const EncryptedScores& scores) {
  auto file = io::open_for_write(path);
  io::Writer w(file);
  io::write_header(w, io::ObjectType::kEncryptedScores);
  io::write_params(w, ctx.params());
  w.u64(scores.classes);
  io::write_ciphertext(w, scores.ct);
}

EncryptedScores load_scores(const std::string& path, const CkksContext& ctx) {
  auto file = io::open_for_read(path);
  io::Reader r(file);
  io::read_header(r, io::ObjectType::kEncryptedScores);
  io::expect_params(r, ctx);
  EncryptedScores scores;
  scores.classes = r.count(ctx.slots());
  scores.ct = io::read_ciphertext(r, ctx);
  return scores;
}

}  // namespace privft::infer
