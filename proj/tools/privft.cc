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

// Command-line front end. Files stand in for the client/server wire.

#include <CLI11.hpp>
#include <json.hpp>

#include <chrono>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>

#include "privft/enc_infer.h"
#include "privft/enc_train.h"
#include "privft/params_io.h"
#include "privft/serialization.h"
#include "privft/textmodel.h"

namespace {

namespace fs = std::filesystem;
using namespace privft;
using json = nlohmann::json;

ckks::ContextPtr load_context(const std::string& path) {
  return ckks::make_context(io::load_params(path));
}

std::string read_text(const std::string& text, const std::string& file) {
  if (file.empty()) return text;
  std::ifstream in(file, std::ios::binary);
  if (!in) throw std::runtime_error("cannot open " + file);
  std::ostringstream out;
  out << in.rdbuf();
  return out.str();
}

double seconds_since(std::chrono::steady_clock::time_point start) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - start)
      .count();
}

void write_json(const std::string& path, const json& doc) {
  if (path.empty()) return;
  if (path == "-") {
    std::cout << doc.dump(2) << "\n";
    return;
  }
  std::ofstream(path) << doc.dump(2) << "\n";
}

json size_json(const params::SizeReport& r) {
  return {{"task", params::task_name(r.task)},
          {"m", r.m},
          {"slots", r.slots},
          {"request_ciphertexts", r.chunks},
          {"request_ciphertext_bytes", r.request_ciphertext_bytes},
          {"request_bytes", r.request_bytes},
          {"response_ciphertexts", r.response_ciphertexts},
          {"response_level", r.response_level},
          {"response_bytes", r.response_bytes},
          {"formula_ciphertext_bytes", r.formula_ciphertext_bytes},
          {"model_ciphertexts", r.model_ciphertexts},
          {"model_ciphertexts_formula", r.model_ciphertexts_formula}};
}

struct DataOptions {
  std::string path;
  std::string format = "fasttext";
  int ngrams = 1;
};

void add_data_options(CLI::App* cmd, DataOptions& opt) {
  cmd->add_option("--data", opt.path, "dataset file or directory")->required();
  cmd->add_option("--format", opt.format, "fasttext | youtube | agnews | imdb");
  cmd->add_option("--ngrams", opt.ngrams, "largest n-gram added to documents");
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"privft: text classification on CKKS-encrypted data"};
  app.require_subcommand(1);
  std::uint64_t seed = ckks::seed_from_env(1);
  app.add_option("--seed", seed, "random seed (default PRIVFT_SEED or 1)");

  // keygen
  std::string preset = "inference", out_dir = ".";
  auto* keygen = app.add_subcommand("keygen", "generate parameters and keys");
  keygen->add_option("--preset", preset, "parameter preset");
  keygen->add_option("--out-dir", out_dir, "directory for params and keys");

  // train-plain
  DataOptions data;
  std::size_t dict_size = 100000, hidden = 16, epochs = 5;
  double lr = 0.2, test_fraction = 0.2;
  std::string model_path = "model.bin", dict_path = "dict.bin";
  auto* train_plain = app.add_subcommand("train-plain", "train a plaintext model");
  add_data_options(train_plain, data);
  train_plain->add_option("--dict-size", dict_size, "dictionary cap m");
  train_plain->add_option("--hidden", hidden, "embedding width n");
  train_plain->add_option("--epochs", epochs);
  train_plain->add_option("--lr", lr, "initial learning rate");
  train_plain->add_option("--test-fraction", test_fraction);
  train_plain->add_option("--model-out", model_path);
  train_plain->add_option("--dict-out", dict_path);

  // shared artifact paths
  std::string params_path = "params.bin", pk_path = "public.key",
              sk_path = "secret.key", ek_path = "eval.keys";
  auto add_params = [&](CLI::App* cmd) {
    cmd->add_option("--params", params_path, "parameter file");
  };
  bool report = false;
  std::size_t threads = 1;

  // pack-model
  std::string packed_path = "packed.bin";
  auto* pack = app.add_subcommand("pack-model", "encode a model for the server");
  add_params(pack);
  pack->add_option("--model", model_path);
  pack->add_option("--out", packed_path);
  pack->add_flag("--report", report, "print plaintext counts");

  // encrypt-input
  std::string text, text_file, bag_path = "input.bin";
  int ngrams = 1;
  auto* encrypt_input = app.add_subcommand("encrypt-input", "encrypt a document");
  add_params(encrypt_input);
  encrypt_input->add_option("--public-key", pk_path);
  encrypt_input->add_option("--dict", dict_path);
  encrypt_input->add_option("--text", text, "document text");
  encrypt_input->add_option("--text-file", text_file, "read the document from a file");
  encrypt_input->add_option("--ngrams", ngrams);
  encrypt_input->add_option("--out", bag_path);
  encrypt_input->add_flag("--report", report, "print message sizes");

  // infer
  std::string scores_path = "scores.bin";
  auto* infer_cmd = app.add_subcommand("infer", "server-side encrypted inference");
  add_params(infer_cmd);
  infer_cmd->add_option("--eval-keys", ek_path);
  infer_cmd->add_option("--packed-model", packed_path);
  infer_cmd->add_option("--input", bag_path);
  infer_cmd->add_option("--out", scores_path);
  infer_cmd->add_option("--threads", threads);
  infer_cmd->add_flag("--report", report, "print depth ledger and sizes");

  // decrypt-result
  auto* decrypt_result = app.add_subcommand("decrypt-result", "decrypt class scores");
  add_params(decrypt_result);
  decrypt_result->add_option("--secret-key", sk_path);
  decrypt_result->add_option("--scores", scores_path);

  // train
  text::TrainingConfig tcfg;
  std::string enc_model_path = "enc_model.bin";
  bool hide_labels = false;
  auto* train_cmd = app.add_subcommand("train", "encrypted minibatch training");
  add_params(train_cmd);
  add_data_options(train_cmd, data);
  train_cmd->add_option("--public-key", pk_path);
  train_cmd->add_option("--eval-keys", ek_path);
  train_cmd->add_option("--dict", dict_path);
  train_cmd->add_option("--hidden", hidden);
  train_cmd->add_option("--epochs", tcfg.epochs);
  train_cmd->add_option("--batch-tokens", tcfg.batch_tokens, "minibatch token budget")
      ->required();
  train_cmd->add_option("--eta", tcfg.eta, "learning rate");
  train_cmd->add_option("--threads", threads);
  train_cmd->add_option("--out", enc_model_path);
  train_cmd->add_flag("--encrypt-labels", hide_labels, "send labels encrypted");
  train_cmd->add_flag("--report", report, "print message sizes");

  // decrypt-model
  auto* decrypt_model = app.add_subcommand("decrypt-model", "decrypt a trained model");
  add_params(decrypt_model);
  decrypt_model->add_option("--secret-key", sk_path);
  decrypt_model->add_option("--model", enc_model_path);
  decrypt_model->add_option("--out", model_path);

  // bench
  std::size_t trials = 100;
  std::vector<std::string> ops;
  std::string json_path;
  auto* bench = app.add_subcommand("bench", "time the core CKKS primitives");
  bench->add_option("--preset", preset);
  bench->add_option("--trials", trials);
  bench->add_option("--ops", ops, "subset of ops (default all)");
  bench->add_option("--json", json_path, "write a JSON report ('-' for stdout)");

  // sizes
  std::string task = "inference";
  std::size_t m = params::kInferenceDictionaryCap, classes = 2, minibatches = 0;
  auto* sizes = app.add_subcommand("sizes", "message-size accounting");
  sizes->add_option("--preset", preset);
  sizes->add_option("--task", task, "inference | training");
  sizes->add_option("--m", m, "dictionary size");
  sizes->add_option("--hidden", hidden);
  sizes->add_option("--classes", classes);
  sizes->add_option("--minibatches", minibatches);
  sizes->add_option("--json", json_path);

  // export-model
  std::string text_out = "model.txt";
  auto* export_cmd = app.add_subcommand("export-model", "write a model as text");
  export_cmd->add_option("--model", model_path);
  export_cmd->add_option("--out", text_out);

  CLI11_PARSE(app, argc, argv);

  try {
    ckks::Sampler rng(seed);
    if (keygen->parsed()) {
      const auto& p = params::find_preset(preset);
      const auto ctx = ckks::make_context(p.instantiate());
      const auto steps = train::training_rotation_steps(*ctx);
      const auto keys = ckks::keygen(*ctx, rng, steps);
      fs::create_directories(out_dir);
      const fs::path dir(out_dir);
      io::save_params((dir / "params.bin").string(), ctx->params());
      io::save_secret_key((dir / "secret.key").string(), *ctx, keys.secret);
      io::save_public_key((dir / "public.key").string(), *ctx, keys.public_key);
      io::save_eval_keys((dir / "eval.keys").string(), *ctx, keys.eval);
      std::cout << "preset " << p.name << ": N=" << p.degree << " L="
                << ctx->max_level() << " rho=" << p.log_scale << ", "
                << keys.eval.galois.size() << " rotation keys\n";
    } else if (train_plain->parsed()) {
      const auto records =
          params::load_dataset(data.path, params::parse_format(data.format));
      const params::LabelSet labels(records);
      const auto split = params::split_records(records, test_fraction, seed);
      std::vector<text::TokenizedDoc> docs;
      for (const auto& r : split.train) {
        try {
          docs.push_back(text::tokenize(r.text, data.ngrams));
        } catch (const text::EmptyDocumentError&) {
        }
      }
      const auto dict = text::build_dictionary(docs, dict_size);
      const auto train_set = params::featurize(split.train, dict, labels, data.ngrams);
      const auto test_set = params::featurize(split.test, dict, labels, data.ngrams);
      text::SgdConfig cfg{hidden, lr, epochs, seed};
      const auto model = text::train_plain_sgd(train_set.bags, dict.size(),
                                               labels.size(), cfg);
      text::save_model(model_path, model);
      text::save_dictionary(dict_path, dict);
      std::cout << "m=" << dict.size() << " n=" << hidden << " c=" << labels.size()
                << "\ntrain accuracy " << text::accuracy(model, train_set.bags)
                << "\ntest accuracy " << text::accuracy(model, test_set.bags)
                << " (" << test_set.bags.size() << " documents, "
                << test_set.dropped << " without known tokens)\n";
    } else if (pack->parsed()) {
      const auto ctx = load_context(params_path);
      const auto packed = infer::pack_model(*ctx, text::load_model(model_path));
      infer::save_packed_model(packed_path, *ctx, packed);
      if (report) {
        std::cout << packed.hidden.plaintexts.size() << " hidden plaintexts, "
                  << packed.output.rows.size() << " output plaintexts, "
                  << fs::file_size(packed_path) << " bytes\n";
      }
    } else if (encrypt_input->parsed()) {
      const auto ctx = load_context(params_path);
      const auto pk = io::load_public_key(pk_path, *ctx);
      const auto dict = text::load_dictionary(dict_path);
      const auto bag = text::bag_encode(
          text::tokenize(read_text(text, text_file), ngrams), dict);
      const auto packed =
          infer::client_encrypt_bag(*ctx, bag, dict.size(), pk, rng);
      infer::save_packed_bag(bag_path, *ctx, packed);
      if (report) {
        std::cout << params::report_message_sizes(params::Task::kInference, *ctx,
                                                  dict.size())
                         .to_text()
                  << "file: " << fs::file_size(bag_path) << " bytes\n";
      }
    } else if (infer_cmd->parsed()) {
      const auto ctx = load_context(params_path);
      const auto keys = io::load_eval_keys(ek_path, *ctx);
      const auto packed = infer::load_packed_model(packed_path, *ctx);
      const auto bag = infer::load_packed_bag(bag_path, *ctx);
      infer::DepthLedger ledger;
      const auto start = std::chrono::steady_clock::now();
      const auto scores =
          infer::server_infer(*ctx, bag, packed, keys, {threads}, &ledger);
      const double elapsed = seconds_since(start);
      infer::save_scores(scores_path, *ctx, scores);
      std::cout << "evaluated in " << elapsed << " s\n";
      if (report) {
        std::cout << ledger.to_string()
                  << "received " << bag.chunks.size() << " ciphertexts, returned 1 ("
                  << fs::file_size(scores_path) << " bytes)\n";
      }
    } else if (decrypt_result->parsed()) {
      const auto ctx = load_context(params_path);
      const auto result = infer::client_decrypt_scores(
          *ctx, infer::load_scores(scores_path, *ctx),
          io::load_secret_key(sk_path, *ctx));
      for (std::size_t i = 0; i < result.scores.size(); ++i) {
        std::cout << "class " << i << ": score " << result.scores[i]
                  << " prob " << result.probs[i] << "\n";
      }
      std::cout << "argmax " << result.argmax << "\n";
    } else if (train_cmd->parsed()) {
      const auto ctx = load_context(params_path);
      const auto pk = io::load_public_key(pk_path, *ctx);
      const auto keys = io::load_eval_keys(ek_path, *ctx);
      const auto dict = text::load_dictionary(dict_path);
      const auto records =
          params::load_dataset(data.path, params::parse_format(data.format));
      const params::LabelSet labels(records);
      const auto set = params::featurize(records, dict, labels, data.ngrams);
      std::size_t total = 0;
      for (const auto& r : set.bags) total += r.bag.w;
      const auto budget = train::plan_depth(total, tcfg, ctx->max_level());
      std::cout << set.bags.size() << " records, " << total << " tokens, "
                << budget.minibatches << " minibatches, " << budget.total()
                << " of " << ctx->max_level() << " levels\n";

      // Client side: encrypt the records and a fresh model.
      auto start = std::chrono::steady_clock::now();
      std::vector<train::EncryptedRecord> enc;
      for (const auto& r : set.bags) {
        enc.push_back(train::encrypt_record(*ctx, r, dict.size(), labels.size(),
                                            pk, rng, hide_labels));
      }
      auto model = train::encrypt_model(
          *ctx, text::init_model(dict.size(), hidden, labels.size(), seed), pk, rng);
      std::cout << "client encryption " << seconds_since(start) << " s\n";

      start = std::chrono::steady_clock::now();
      model = train::train_encrypted(
          *ctx, std::move(model), enc, tcfg, keys, {threads},
          [&](std::size_t b, const train::EncryptedModel&,
              const infer::DepthLedger& ledger) {
            std::cout << "minibatch " << b << " done at "
                      << seconds_since(start) << " s\n"
                      << ledger.to_string();
          });
      const double elapsed = seconds_since(start);
      train::save_encrypted_model(enc_model_path, *ctx, model);
      std::cout << "trained in " << elapsed << " s ("
                << static_cast<double>(set.bags.size() * tcfg.epochs) / elapsed
                << " records/s)\n";
      if (report) {
        std::cout << params::report_message_sizes(params::Task::kTraining, *ctx,
                                                  dict.size(), hidden,
                                                  labels.size(), budget.minibatches)
                         .to_text();
      }
    } else if (decrypt_model->parsed()) {
      const auto ctx = load_context(params_path);
      const auto model = train::client_decrypt_model(
          *ctx, train::load_encrypted_model(enc_model_path, *ctx),
          io::load_secret_key(sk_path, *ctx));
      text::save_model(model_path, model);
      std::cout << "decrypted model m=" << model.m << " n=" << model.n
                << " c=" << model.c << "\n";
    } else if (bench->parsed()) {
      const auto& p = params::find_preset(preset);
      const auto ctx = ckks::make_context(p.instantiate());
      std::vector<params::BenchOp> selected;
      for (const auto& name : ops) selected.push_back(params::parse_op(name));
      if (selected.empty()) selected = params::all_bench_ops();
      const auto keys =
          ckks::keygen(*ctx, rng, train::training_rotation_steps(*ctx));
      const auto r = params::run_microbench(*ctx, keys.public_key, keys.eval,
                                            selected, trials,
                                            params::kBenchWarmup, seed);
      std::cout << r.to_text();
      json rows = json::array();
      for (const auto& row : r.rows) {
        rows.push_back({{"op", row.op},
                        {"mean_ms", row.mean_ms},
                        {"min_ms", row.min_ms},
                        {"max_ms", row.max_ms},
                        {"trials", row.trials},
                        {"rotation_step", row.rotation_step}});
      }
      write_json(json_path,
                 {{"preset", p.name},
                  {"N", r.degree},
                  {"L", r.levels},
                  {"log2q", r.log2_modulus},
                  {"rho", r.log_scale},
                  {"warmup", r.warmup},
                  {"machine",
                   {{"cpu", r.machine.cpu},
                    {"threads", r.machine.hardware_threads},
                    {"compiler", r.machine.compiler},
                    {"build", r.machine.build}}},
                  {"rows", rows}});
    } else if (sizes->parsed()) {
      const auto ctx =
          ckks::make_context(params::find_preset(preset).instantiate());
      const auto r = params::report_message_sizes(
          params::parse_task(task), *ctx, m, hidden, classes, minibatches);
      std::cout << r.to_text();
      write_json(json_path, size_json(r));
    } else if (export_cmd->parsed()) {
      text::export_model_text(text_out, text::load_model(model_path));
    }
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 0;
}
