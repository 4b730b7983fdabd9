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

// Operational shell: parameter presets, depth estimates, the primitive
// microbenchmark, message-size accounting and dataset loaders.

#ifndef PRIVFT_PARAMS_IO_H_
#define PRIVFT_PARAMS_IO_H_

#include <cstddef>
#include <cstdint>
#include <istream>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "privft/ckks.h"
#include "privft/textmodel.h"

namespace privft::params {

// ---- presets ----

struct ParameterPreset {
  std::string name;
  std::size_t degree = 0;
  int log2_modulus = 0;  // log2 q_L = L * rho
  int log_scale = 0;     // rho
  int security_bits = 0;
  std::string task;

  std::size_t levels() const {
    return static_cast<std::size_t>(log2_modulus / log_scale);
  }
  ckks::EncryptionParams instantiate() const;
};

const std::vector<ParameterPreset>& presets();
// Throws std::invalid_argument for unknown names.
const ParameterPreset& find_preset(const std::string& name);

// Dictionary size the inference request is provisioned for.
inline constexpr std::size_t kInferenceDictionaryCap = 500000;

// ---- depth ----

enum class Task { kInference, kTraining };

// "inference" or "training"; anything else throws std::invalid_argument.
Task parse_task(const std::string& name);
std::string task_name(Task task);

struct TaskDescriptor {
  Task task = Task::kInference;
  std::size_t minibatches = 0;  // training only
};

// Inference: 5. Training: 9 per minibatch plus one reserve level.
std::size_t estimate_depth(const TaskDescriptor& task);

// ---- microbenchmark ----

enum class BenchOp {
  kAddPlain,
  kMulRelin,
  kMulPlain,
  kRescale,
  kRotateLowWeight,
  kRotateHighWeight,
};

const std::vector<BenchOp>& all_bench_ops();
std::string op_name(BenchOp op);
// Accepts the names printed by op_name; throws std::invalid_argument.
BenchOp parse_op(const std::string& name);

struct MachineInfo {
  std::string cpu;
  unsigned hardware_threads = 0;
  std::string compiler;
  std::string build;
};
MachineInfo describe_machine();

struct BenchRow {
  std::string op;
  std::int64_t rotation_step = 0;  // rotations only
  std::size_t trials = 0;
  double mean_ms = 0;
  double min_ms = 0;
  double max_ms = 0;
};

struct BenchReport {
  std::size_t degree = 0;
  std::size_t levels = 0;
  int log2_modulus = 0;
  int log_scale = 0;
  std::size_t trials = 0;
  std::size_t warmup = 0;
  MachineInfo machine;
  std::vector<BenchRow> rows;

  const BenchRow* find(const std::string& op) const;
  std::string to_text() const;
};

inline constexpr std::size_t kBenchWarmup = 10;

// Times each op on fresh operands at the top level with a monotonic clock.
// The low-weight rotation uses step 1 and the high-weight one t - 1, whose
// binary expansion sets every bit. Needs Galois keys for the positive powers
// of two. Throws std::invalid_argument when trials is 0.
BenchReport run_microbench(const ckks::CkksContext& ctx,
                           const ckks::PublicKey& pk,
                           const ckks::EvalKeys& keys,
                           std::span<const BenchOp> ops, std::size_t trials,
                           std::size_t warmup = kBenchWarmup,
                           std::uint64_t seed = 1);

// ---- message sizes ----

struct SizeReport {
  Task task = Task::kInference;
  std::size_t m = 0;
  std::size_t slots = 0;
  std::size_t chunks = 0;  // ceil(m / t) ciphertexts per document
  std::size_t request_ciphertext_bytes = 0;  // measured, one chunk
  std::size_t request_bytes = 0;
  std::size_t response_ciphertexts = 0;
  std::size_t response_level = 0;
  std::size_t response_ciphertext_bytes = 0;  // measured
  std::size_t response_bytes = 0;
  double formula_ciphertext_bytes = 0;  // 2 N log2(q_L) bits
  // Training: returned model as laid out here and as n(ceil(m/t) + c).
  std::size_t model_ciphertexts = 0;
  std::size_t model_ciphertexts_formula = 0;

  std::string to_text() const;
};

// n and c matter for training only. minibatches fixes the level of the
// returned training model (0 means the chain is fully used).
SizeReport report_message_sizes(Task task, const ckks::CkksContext& ctx,
                                std::size_t m, std::size_t n = 0,
                                std::size_t c = 0,
                                std::size_t minibatches = 0);

// ---- datasets ----

class DatasetError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct Record {
  std::string label;
  std::string text;
};

enum class DatasetFormat {
  kFastText,    // "__label__<x> text" per line
  kYouTubeCsv,  // CSV with CONTENT and CLASS columns; file or directory
  kAgNewsCsv,   // "class","title","description"
  kImdbDir,     // directory with pos/ and neg/ text files
};

DatasetFormat parse_format(const std::string& name);

// Records in file order (files of a directory in name order). Malformed input
// raises DatasetError naming the file and line.
std::vector<Record> load_dataset(const std::string& path, DatasetFormat format);
std::vector<Record> parse_fasttext(std::istream& in,
                                   const std::string& source = "<input>");
// RFC 4180 rows (quoted fields may span lines) with the line each row starts.
struct CsvRow {
  std::size_t line = 0;
  std::vector<std::string> fields;
};
std::vector<CsvRow> parse_csv(std::istream& in,
                              const std::string& source = "<input>");

// Sorted label names, numerically when every label is an integer.
class LabelSet {
 public:
  explicit LabelSet(std::span<const Record> records);
  std::size_t size() const { return names_.size(); }
  const std::string& name(std::size_t i) const { return names_.at(i); }
  std::size_t index(const std::string& label) const;

 private:
  std::vector<std::string> names_;
};

// Deterministic shuffle and split; the first test_fraction goes to test.
struct Split {
  std::vector<Record> train;
  std::vector<Record> test;
};
Split split_records(std::vector<Record> records, double test_fraction,
                    std::uint64_t seed);

struct Featurized {
  std::vector<text::LabeledBag> bags;
  std::size_t dropped = 0;  // documents without a dictionary token
};
Featurized featurize(std::span<const Record> records,
                     const text::Dictionary& dict, const LabelSet& labels,
                     int max_ngram);

}  // namespace privft::params

#endif  // PRIVFT_PARAMS_IO_H_
