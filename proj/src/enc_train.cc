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

#include <algorithm>
#include <cmath>
#include <sstream>

#include "privft/parallel.h"
#include "privft/serialization.h"

namespace privft::train {

using ckks::Ciphertext;
using ckks::CkksContext;
using ckks::Plaintext;
using ckks::Scale;
using infer::DepthLedger;

DepthBudget plan_depth(std::size_t total_tokens,
                       const text::TrainingConfig& config, std::size_t levels) {
  config.validate();
  DepthBudget budget;
  budget.minibatches =
      text::minibatch_count(total_tokens, config.batch_tokens, config.epochs);
  if (levels != 0 && budget.total() > levels) {
    throw InsufficientDepthError(
        std::to_string(budget.minibatches) + " minibatches need " +
        std::to_string(budget.total()) + " levels, the chain has " +
        std::to_string(levels));
  }
  return budget;
}

std::size_t EncryptedModel::level() const {
  if (output.empty()) return 0;
  return output.front().level();
}

std::vector<std::int64_t> training_rotation_steps(const CkksContext& ctx) {
  return ckks::power_of_two_steps(ctx.slots(), false);
}

namespace {

std::size_t resolve_level(const CkksContext& ctx, std::size_t level) {
  if (level == 0) return ctx.max_level();
  if (level > ctx.max_level()) throw std::invalid_argument("level beyond chain");
  return level;
}

void note(DepthLedger* ledger, const char* name, std::size_t before,
          std::size_t after) {
  if (ledger) ledger->record(name, before, after);
}

std::uint64_t prime_at(const CkksContext& ctx, std::size_t level) {
  return ctx.basis()->modulus(level - 1).value();
}

// Constant that, multiplied into a ciphertext at `from` and rescaled, lands
// exactly on `to`.
Plaintext retarget_constant(const CkksContext& ctx, double value,
                            const Scale& from, const Scale& to,
                            std::size_t level) {
  const Scale scale = to.multiplied_by_prime(prime_at(ctx, level)) / from;
  return ckks::encode_constant(ctx, value, scale, level);
}

bool is_default_activation(const text::TrainingConfig& config) {
  return config.poly_a == 1.0 / 8 && config.poly_b == 1.0 / 2 &&
         config.poly_c == 1.0 / 4;
}

void check_model(const CkksContext& ctx, const EncryptedModel& model) {
  if (model.output.size() != model.n ||
      model.hidden.size() != model.n * model.chunks || model.n == 0) {
    throw std::invalid_argument("encrypted model layout is inconsistent");
  }
  const std::size_t level = model.level();
  const Scale scale = ctx.params().default_scale();
  auto check = [&](const Ciphertext& ct) {
    if (ct.level() != level) {
      throw std::invalid_argument("model ciphertexts are at different levels");
    }
    if (!(ct.scale == scale)) {
      throw ckks::ScaleMismatchError("model ciphertext is off the model scale");
    }
  };
  for (const auto& ct : model.hidden) check(ct);
  for (const auto& ct : model.output) check(ct);
}

struct ExampleGradient {
  std::vector<Ciphertext> output;  // n, three parts
  std::vector<Ciphertext> hidden;  // n * chunks, three parts
};

void accumulate(ExampleGradient& acc, ExampleGradient&& g) {
  if (acc.output.empty()) {
    acc = std::move(g);
    return;
  }
  for (std::size_t i = 0; i < acc.output.size(); ++i) {
    ckks::add_inplace(acc.output[i], g.output[i]);
  }
  for (std::size_t i = 0; i < acc.hidden.size(); ++i) {
    ckks::add_inplace(acc.hidden[i], g.hidden[i]);
  }
}

Ciphertext label_error(const CkksContext& ctx, const Ciphertext& g,
                       const EncryptedRecord& record, std::size_t classes) {
  const std::size_t level = g.level();
  if (!record.label_ct) {
    if (record.label >= classes) throw std::invalid_argument("label out of range");
    std::vector<double> onehot(classes, 0.0);
    onehot[record.label] = 1.0;
    return ckks::sub_plain(g, ckks::encode(ctx, onehot, g.scale, level));
  }
  const Ciphertext& y = *record.label_ct;
  if (y.level() <= level) {
    throw std::invalid_argument("encrypted label has too few levels left");
  }
  Ciphertext aligned = ckks::rescale(
      ctx, ckks::multiply_plain(
               y, retarget_constant(ctx, 1.0, y.scale, g.scale, y.level())));
  return ckks::sub(g, ckks::drop_to_level(aligned, level));
}

ExampleGradient example_gradient(const CkksContext& ctx,
                                 const EncryptedModel& model,
                                 const EncryptedRecord& record,
                                 const ckks::EvalKeys& keys,
                                 DepthLedger* ledger) {
  const auto& bag = record.bag;
  const ForwardPass fwd = forward_pass(ctx, bag, model, keys, ledger);
  const Ciphertext g = encrypted_softmax(ctx, fwd.scores, keys.relin, ledger);

  // E: error restricted to the class slots.
  const std::size_t le = g.level();
  std::vector<double> mask(model.c, 1.0);
  const Ciphertext e = ckks::rescale(
      ctx, ckks::multiply_plain(
               label_error(ctx, g, record, model.c),
               ckks::encode(ctx, mask, ctx.params().default_scale(), le)));
  note(ledger, "E error and mask", le, e.level());

  // B1: grad_O row j = h_j e; d_j = sum_i O[j,i] e_i in every slot. The
  // gradient products stay three-part and unrescaled until the batch sum is
  // relinearized, so no third component is ever divided down.
  const std::size_t lb = e.level();
  ExampleGradient out;
  out.output.resize(model.n);
  std::vector<Ciphertext> d(model.n);
  for (std::size_t j = 0; j < model.n; ++j) {
    out.output[j] =
        ckks::multiply_no_relin(ckks::drop_to_level(fwd.hidden[j], lb), e);
    const Ciphertext u = ckks::rescale(
        ctx, ckks::multiply(ctx, ckks::drop_to_level(model.output[j], lb), e,
                            keys.relin));
    d[j] = ckks::total_sum(ctx, u, keys.galois);
  }
  note(ledger, "B1 output gradient and O e", lb, lb - 1);

  // B2: d_j / w.
  const std::size_t l2 = lb - 1;
  const Plaintext inv_w = ckks::encode_constant(
      ctx, 1.0 / bag.w, ctx.params().default_scale(), l2);
  for (auto& dj : d) dj = ckks::rescale(ctx, ckks::multiply_plain(dj, inv_w));
  note(ledger, "B2 scale by 1/w", l2, l2 - 1);

  // B3: grad_H chunk (j, k) = (d_j / w) v_k, rescaled after accumulation.
  std::vector<Ciphertext> v(model.chunks);
  for (std::size_t k = 0; k < model.chunks; ++k) {
    v[k] = ckks::drop_to_level(bag.chunks[k], l2 - 1);
  }
  out.hidden.resize(model.n * model.chunks);
  for (std::size_t j = 0; j < model.n; ++j) {
    for (std::size_t k = 0; k < model.chunks; ++k) {
      out.hidden[j * model.chunks + k] = ckks::multiply_no_relin(d[j], v[k]);
    }
  }
  return out;
}

}  // namespace

EncryptedModel encrypt_model(const CkksContext& ctx, const text::Model& model,
                             const ckks::PublicKey& pk, ckks::Sampler& rng,
                             std::size_t level) {
  model.validate();
  level = resolve_level(ctx, level);
  const std::size_t t = ctx.slots();
  if (model.c >= t) {
    throw std::invalid_argument("training needs c < t for the sentinel slot");
  }
  const Scale scale = ctx.params().default_scale();
  EncryptedModel out;
  out.m = model.m;
  out.n = model.n;
  out.c = model.c;
  out.chunks = infer::chunk_count(model.m, t);
  std::vector<double> values(t);
  for (std::size_t j = 0; j < model.n; ++j) {
    for (std::size_t k = 0; k < out.chunks; ++k) {
      std::fill(values.begin(), values.end(), 0.0);
      for (std::size_t i = 0; i < t && k * t + i < model.m; ++i) {
        values[i] = model.h(k * t + i, j);
      }
      out.hidden.push_back(
          ckks::encrypt(ctx, ckks::encode(ctx, values, scale, level), pk, rng));
    }
  }
  for (std::size_t j = 0; j < model.n; ++j) {
    std::fill(values.begin(), values.end(), 0.0);
    for (std::size_t i = 0; i < model.c; ++i) values[i] = model.o(j, i);
    values[t - 1] = kSentinelValue;
    out.output.push_back(
        ckks::encrypt(ctx, ckks::encode(ctx, values, scale, level), pk, rng));
  }
  return out;
}

EncryptedRecord encrypt_record(const CkksContext& ctx,
                               const text::LabeledBag& record, std::size_t m,
                               std::size_t c, const ckks::PublicKey& pk,
                               ckks::Sampler& rng, bool encrypt_label) {
  if (record.label >= c) throw std::invalid_argument("label out of range");
  EncryptedRecord out;
  out.bag = infer::client_encrypt_bag(ctx, record.bag, m, pk, rng);
  out.label = record.label;
  if (encrypt_label) {
    std::vector<double> onehot(c, 0.0);
    onehot[record.label] = 1.0;
    out.label_ct = ckks::encrypt(
        ctx,
        ckks::encode(ctx, onehot, ctx.params().default_scale(),
                     ctx.max_level()),
        pk, rng);
    out.label = 0;
  }
  return out;
}

text::Model client_decrypt_model(const CkksContext& ctx,
                                 const EncryptedModel& model,
                                 const ckks::SecretKey& sk) {
  const std::size_t t = ctx.slots();
  text::Model out(model.m, model.n, model.c);
  for (std::size_t j = 0; j < model.n; ++j) {
    for (std::size_t k = 0; k < model.chunks; ++k) {
      const auto slots =
          ckks::decode_real(ctx, ckks::decrypt(ctx, model.h(j, k), sk));
      for (std::size_t i = 0; i < t && k * t + i < model.m; ++i) {
        out.h(k * t + i, j) = slots[i];
      }
    }
    const auto row =
        ckks::decode_real(ctx, ckks::decrypt(ctx, model.output[j], sk));
    if (!(std::abs(row[t - 1] - kSentinelValue) <= kSentinelTolerance)) {
      std::ostringstream msg;
      msg << "sentinel of output row " << j << " decrypted to " << row[t - 1];
      throw NoiseOverflowError(msg.str());
    }
    for (std::size_t i = 0; i < model.c; ++i) out.o(j, i) = row[i];
  }
  return out;
}

ForwardPass forward_pass(const CkksContext& ctx, const infer::PackedBag& bag,
                         const EncryptedModel& model,
                         const ckks::EvalKeys& keys, DepthLedger* ledger) {
  if (bag.chunks.size() != model.chunks || bag.m != model.m) {
    throw std::invalid_argument("bag and model chunk layouts differ");
  }
  if (bag.w == 0) throw std::invalid_argument("bag has no tokens");
  const std::size_t level = model.level();
  if (level < kLevelsPerMinibatch + 1) {
    throw InsufficientDepthError("model at level " + std::to_string(level) +
                                 " cannot afford another round");
  }
  if (bag.chunks.front().level() < level) {
    throw std::invalid_argument("bag is below the model level");
  }
  std::vector<Ciphertext> v(model.chunks);
  for (std::size_t k = 0; k < model.chunks; ++k) {
    v[k] = ckks::drop_to_level(bag.chunks[k], level);
  }

  ForwardPass out;
  out.hidden.resize(model.n);
  std::vector<Ciphertext> sums(model.n);
  for (std::size_t j = 0; j < model.n; ++j) {
    Ciphertext acc = ckks::multiply_no_relin(v[0], model.h(j, 0));
    for (std::size_t k = 1; k < model.chunks; ++k) {
      ckks::add_inplace(acc, ckks::multiply_no_relin(v[k], model.h(j, k)));
    }
    sums[j] = ckks::rescale(ctx, ckks::relinearize(ctx, acc, keys.relin));
  }
  note(ledger, "F1 chunk products", level, level - 1);

  const Plaintext inv_w = ckks::encode_constant(
      ctx, 1.0 / bag.w, ctx.params().default_scale(), level - 1);
  for (std::size_t j = 0; j < model.n; ++j) {
    const Ciphertext total = ckks::total_sum(ctx, sums[j], keys.galois);
    out.hidden[j] = ckks::rescale(ctx, ckks::multiply_plain(total, inv_w));
  }
  note(ledger, "F2 TotalSum and 1/w", level - 1, level - 2);

  Ciphertext acc = ckks::multiply_no_relin(
      out.hidden[0], ckks::drop_to_level(model.output[0], level - 2));
  for (std::size_t j = 1; j < model.n; ++j) {
    ckks::add_inplace(acc, ckks::multiply_no_relin(
                               out.hidden[j],
                               ckks::drop_to_level(model.output[j], level - 2)));
  }
  out.scores = ckks::rescale(ctx, ckks::relinearize(ctx, acc, keys.relin));
  note(ledger, "F3 output layer", level - 2, level - 3);
  return out;
}

infer::EncryptedScores encrypted_forward(const CkksContext& ctx,
                                         const infer::PackedBag& bag,
                                         const EncryptedModel& model,
                                         const ckks::EvalKeys& keys,
                                         DepthLedger* ledger) {
  infer::EncryptedScores out;
  out.classes = model.c;
  out.ct = forward_pass(ctx, bag, model, keys, ledger).scores;
  return out;
}

Ciphertext encrypted_softmax(const CkksContext& ctx, const Ciphertext& scores,
                             const ckks::KeySwitchKey& relin,
                             DepthLedger* ledger) {
  // s^2/8 + s/2 + 1/4 = (s + 2)^2 / 8 - 1/4.
  const std::size_t level = scores.level();
  const Ciphertext shifted = ckks::add_plain(
      scores, ckks::encode_constant(ctx, 2.0, scores.scale, level));
  Ciphertext sq = ckks::square(ctx, shifted, relin);
  sq.scale *= Scale::power_of_two(3);
  sq = ckks::rescale(ctx, sq);
  Ciphertext out = ckks::add_plain(
      sq, ckks::encode_constant(ctx, -0.25, sq.scale, sq.level()));
  note(ledger, "S activation", level, out.level());
  return out;
}

EncryptedModel encrypted_backprop_update(
    const CkksContext& ctx, const EncryptedModel& model,
    std::span<const EncryptedRecord> batch,
    const text::TrainingConfig& config, const ckks::EvalKeys& keys,
    const TrainOptions& options, DepthLedger* ledger) {
  config.validate();
  if (!is_default_activation(config)) {
    throw std::invalid_argument(
        "the encrypted activation is fixed to x^2/8 + x/2 + 1/4");
  }
  if (batch.empty()) throw std::invalid_argument("empty minibatch");
  check_model(ctx, model);
  const std::size_t start = model.level();

  DepthLedger round;
  ExampleGradient acc;
  const std::size_t group = std::max<std::size_t>(options.threads, 1);
  for (std::size_t first = 0; first < batch.size(); first += group) {
    const std::size_t count = std::min(group, batch.size() - first);
    std::vector<ExampleGradient> grads(count);
    parallel_for(count, options.threads, [&](std::size_t i) {
      grads[i] = example_gradient(ctx, model, batch[first + i], keys,
                                  first + i == 0 ? &round : nullptr);
    });
    for (auto& g : grads) accumulate(acc, std::move(g));
  }

  // U: eta * gradient rescaled onto the model scale, then subtracted.
  const Scale model_scale = ctx.params().default_scale();
  const std::size_t end = start - kLevelsPerMinibatch;
  const std::size_t l3 = acc.hidden.front().level();
  EncryptedModel out = model;
  auto step = [&](const Ciphertext& weight, const Ciphertext& grad) {
    const Ciphertext g =
        ckks::rescale(ctx, ckks::relinearize(ctx, grad, keys.relin));
    const Ciphertext scaled = ckks::rescale(
        ctx, ckks::multiply_plain(g, retarget_constant(ctx, config.eta, g.scale,
                                                       model_scale, g.level())));
    return ckks::sub(ckks::drop_to_level(weight, end),
                     ckks::drop_to_level(scaled, end));
  };
  for (std::size_t j = 0; j < model.n; ++j) {
    out.output[j] = step(model.output[j], acc.output[j]);
  }
  for (std::size_t i = 0; i < out.hidden.size(); ++i) {
    out.hidden[i] = step(model.hidden[i], acc.hidden[i]);
  }
  round.record("B3 d times v", l3, l3 - 1);
  round.record("U update", l3 - 1, out.level());

  if (round.consumed() != kLevelsPerMinibatch ||
      start - out.level() != kLevelsPerMinibatch) {
    throw std::logic_error("training round consumed " +
                           std::to_string(start - out.level()) +
                           " levels instead of 9");
  }
  if (ledger) {
    ledger->phases.insert(ledger->phases.end(), round.phases.begin(),
                          round.phases.end());
  }
  return out;
}

EncryptedModel train_encrypted(
    const CkksContext& ctx, EncryptedModel model,
    std::span<const EncryptedRecord> records,
    const text::TrainingConfig& config, const ckks::EvalKeys& keys,
    const TrainOptions& options,
    const std::function<void(std::size_t, const EncryptedModel&,
                             const DepthLedger&)>& on_update) {
  std::vector<std::size_t> tokens;
  std::size_t total = 0;
  for (const auto& r : records) {
    tokens.push_back(r.bag.w);
    total += r.bag.w;
  }
  plan_depth(total, config, model.level());
  const auto schedule =
      text::plan_minibatches(tokens, config.batch_tokens, config.epochs);
  std::vector<EncryptedRecord> batch;
  for (std::size_t b = 0; b < schedule.size(); ++b) {
    batch.clear();
    for (std::size_t idx : schedule[b]) batch.push_back(records[idx]);
    DepthLedger ledger;
    model = encrypted_backprop_update(ctx, model, batch, config, keys, options,
                                      &ledger);
    if (on_update) on_update(b, model, ledger);
  }
  return model;
}

void save_encrypted_model(const std::string& path, const CkksContext& ctx,
                          const EncryptedModel& model) {
  auto file = io::open_for_write(path);
  io::Writer w(file);
  io::write_header(w, io::ObjectType::kEncryptedModel);
  io::write_params(w, ctx.params());
  w.u64(model.m);
  w.u64(model.n);
  w.u64(model.c);
  for (const auto& ct : model.hidden) io::write_ciphertext(w, ct);
  for (const auto& ct : model.output) io::write_ciphertext(w, ct);
}

EncryptedModel load_encrypted_model(const std::string& path,
                                    const CkksContext& ctx) {
  auto file = io::open_for_read(path);
  io::Reader r(file);
  io::read_header(r, io::ObjectType::kEncryptedModel);
  io::expect_params(r, ctx);
  EncryptedModel model;
  model.m = r.u64();
  model.n = r.count(1u << 16);
  model.c = r.count(ctx.slots());
  model.chunks = infer::chunk_count(model.m, ctx.slots());
  for (std::size_t i = 0; i < model.n * model.chunks; ++i) {
    model.hidden.push_back(io::read_ciphertext(r, ctx));
  }
  for (std::size_t j = 0; j < model.n; ++j) {
    model.output.push_back(io::read_ciphertext(r, ctx));
  }
  return model;
}

}  // namespace privft::train
