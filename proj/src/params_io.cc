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

#include "privft/params_io.h"

#include <algorithm>
#include <cctype>
#include <charconv>
#include <chrono>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <sstream>
#include <thread>

#include "privft/enc_infer.h"
#include "privft/enc_train.h"
#include "privft/serialization.h"

namespace privft::params {

namespace fs = std::filesystem;
using ckks::Ciphertext;
using ckks::CkksContext;

// ---- presets ----

ckks::EncryptionParams ParameterPreset::instantiate() const {
  return ckks::setup(degree, levels(), log_scale, 3.2, security_bits);
}

const std::vector<ParameterPreset>& presets() {
  static const std::vector<ParameterPreset> all{
      {"inference", 8192, 200, 40, 140, "inference"},
      {"training", 65536, 2300, 50, 98, "training"},
      {"desk-training", 16384, 440, 40, 0, "training, 1 minibatch"},
      {"toy-inference", 1024, 200, 40, 0, "tests"},
      {"toy-training", 1024, 440, 40, 0, "tests"},
  };
  return all;
}

const ParameterPreset& find_preset(const std::string& name) {
  for (const auto& p : presets()) {
    if (p.name == name) return p;
  }
  throw std::invalid_argument("unknown preset '" + name + "'");
}

// ---- depth ----

Task parse_task(const std::string& name) {
  if (name == "inference") return Task::kInference;
  if (name == "training") return Task::kTraining;
  throw std::invalid_argument("unknown task '" + name + "'");
}

std::string task_name(Task task) {
  return task == Task::kInference ? "inference" : "training";
}

std::size_t estimate_depth(const TaskDescriptor& task) {
  switch (task.task) {
    case Task::kInference:
      return 5;
    case Task::kTraining:
      if (task.minibatches == 0) {
        throw std::invalid_argument("training needs at least one minibatch");
      }
      return train::kLevelsPerMinibatch * task.minibatches + 1;
  }
  throw std::invalid_argument("unknown task");
}

// ---- microbenchmark ----

const std::vector<BenchOp>& all_bench_ops() {
  static const std::vector<BenchOp> ops{
      BenchOp::kAddPlain, BenchOp::kMulRelin,        BenchOp::kMulPlain,
      BenchOp::kRescale,  BenchOp::kRotateLowWeight, BenchOp::kRotateHighWeight};
  return ops;
}

std::string op_name(BenchOp op) {
  switch (op) {
    case BenchOp::kAddPlain: return "HADDPLAIN";
    case BenchOp::kMulRelin: return "HMUL+REL";
    case BenchOp::kMulPlain: return "HMULPLAIN";
    case BenchOp::kRescale: return "RESCALE";
    case BenchOp::kRotateLowWeight: return "ROTATE_LHW";
    case BenchOp::kRotateHighWeight: return "ROTATE_HHW";
  }
  return "?";
}

BenchOp parse_op(const std::string& name) {
  for (BenchOp op : all_bench_ops()) {
    if (op_name(op) == name) return op;
  }
  throw std::invalid_argument("unsupported benchmark op '" + name + "'");
}

MachineInfo describe_machine() {
  MachineInfo info;
  std::ifstream cpuinfo("/proc/cpuinfo");
  for (std::string line; std::getline(cpuinfo, line);) {
    if (line.rfind("model name", 0) == 0) {
      const auto colon = line.find(':');
      if (colon != std::string::npos) info.cpu = line.substr(colon + 2);
      break;
    }
  }
  if (info.cpu.empty()) info.cpu = "unknown";
  info.hardware_threads = std::thread::hardware_concurrency();
#if defined(__clang__)
  info.compiler = "clang " __clang_version__;
#elif defined(__GNUC__)
  info.compiler = "gcc " __VERSION__;
#else
  info.compiler = "unknown";
#endif
#ifdef NDEBUG
  info.build = "optimized";
#else
  info.build = "debug";
#endif
  return info;
}

const BenchRow* BenchReport::find(const std::string& op) const {
  for (const auto& row : rows) {
    if (row.op == op) return &row;
  }
  return nullptr;
}

std::string BenchReport::to_text() const {
  std::ostringstream out;
  out << "params: N=" << degree << " L=" << levels << " log2q=" << log2_modulus
      << " rho=" << log_scale << "\n"
      << "trials: " << trials << " (warmup " << warmup << ")\n"
      << "machine: " << machine.cpu << ", " << machine.hardware_threads
      << " threads, " << machine.compiler << ", " << machine.build << "\n"
      << std::left << std::setw(12) << "op" << std::right << std::setw(12)
      << "mean ms" << std::setw(12) << "min ms" << std::setw(12) << "max ms"
      << "\n";
  out << std::fixed << std::setprecision(3);
  for (const auto& row : rows) {
    out << std::left << std::setw(12) << row.op << std::right << std::setw(12)
        << row.mean_ms << std::setw(12) << row.min_ms << std::setw(12)
        << row.max_ms;
    if (row.rotation_step != 0) out << "  (step " << row.rotation_step << ")";
    out << "\n";
  }
  return out.str();
}

namespace {

Ciphertext random_ciphertext(const CkksContext& ctx, const ckks::PublicKey& pk,
                             ckks::Sampler& rng) {
  std::vector<double> values(ctx.slots());
  for (auto& v : values) v = rng.uniform_real(-1, 1);
  return ckks::encrypt(
      ctx,
      ckks::encode(ctx, values, ctx.params().default_scale(), ctx.max_level()),
      pk, rng);
}

template <typename Op>
BenchRow time_op(const std::string& name, std::size_t trials,
                 std::size_t warmup, Op&& op) {
  using clock = std::chrono::steady_clock;
  for (std::size_t i = 0; i < warmup; ++i) op();
  BenchRow row;
  row.op = name;
  row.trials = trials;
  row.min_ms = 1e300;
  double total = 0;
  for (std::size_t i = 0; i < trials; ++i) {
    const auto start = clock::now();
    op();
    const double ms =
        std::chrono::duration<double, std::milli>(clock::now() - start).count();
    total += ms;
    row.min_ms = std::min(row.min_ms, ms);
    row.max_ms = std::max(row.max_ms, ms);
  }
  row.mean_ms = total / static_cast<double>(trials);
  return row;
}

}  // namespace

BenchReport run_microbench(const CkksContext& ctx, const ckks::PublicKey& pk,
                           const ckks::EvalKeys& keys,
                           std::span<const BenchOp> ops, std::size_t trials,
                           std::size_t warmup, std::uint64_t seed) {
  if (trials == 0) throw std::invalid_argument("trials must be positive");
  if (ctx.max_level() < 2) {
    throw std::invalid_argument("benchmarking rescale needs two levels");
  }
  ckks::Sampler rng(seed);
  const Ciphertext a = random_ciphertext(ctx, pk, rng);
  const Ciphertext b = random_ciphertext(ctx, pk, rng);
  std::vector<double> values(ctx.slots());
  for (auto& v : values) v = rng.uniform_real(-1, 1);
  const ckks::Plaintext pt = ckks::encode(
      ctx, values, ctx.params().default_scale(), ctx.max_level());
  const Ciphertext product = ckks::multiply_plain(a, pt);
  const auto high = static_cast<std::int64_t>(ctx.slots() - 1);

  BenchReport report;
  report.degree = ctx.degree();
  report.levels = ctx.max_level();
  report.log2_modulus =
      static_cast<int>(std::lround(ctx.params().log2_modulus()));
  report.log_scale = ctx.params().log_scale;
  report.trials = trials;
  report.warmup = warmup;
  report.machine = describe_machine();
  Ciphertext sink;
  for (BenchOp op : ops) {
    const std::string name = op_name(op);
    BenchRow row;
    switch (op) {
      case BenchOp::kAddPlain:
        row = time_op(name, trials, warmup, [&] { sink = ckks::add_plain(a, pt); });
        break;
      case BenchOp::kMulRelin:
        row = time_op(name, trials, warmup,
                      [&] { sink = ckks::multiply(ctx, a, b, keys.relin); });
        break;
      case BenchOp::kMulPlain:
        row = time_op(name, trials, warmup,
                      [&] { sink = ckks::multiply_plain(a, pt); });
        break;
      case BenchOp::kRescale:
        row = time_op(name, trials, warmup,
                      [&] { sink = ckks::rescale(ctx, product); });
        break;
      case BenchOp::kRotateLowWeight:
        row = time_op(name, trials, warmup,
                      [&] { sink = ckks::rotate(ctx, a, 1, keys.galois); });
        row.rotation_step = 1;
        break;
      case BenchOp::kRotateHighWeight:
        row = time_op(name, trials, warmup,
                      [&] { sink = ckks::rotate(ctx, a, high, keys.galois); });
        row.rotation_step = high;
        break;
    }
    report.rows.push_back(row);
  }
  return report;
}

// ---- message sizes ----

namespace {

std::size_t measured_bytes(const CkksContext& ctx, std::size_t level) {
  Ciphertext ct;
  ct.scale = ctx.params().default_scale();
  ct.slots = ctx.slots();
  for (int i = 0; i < 2; ++i) {
    ct.parts.emplace_back(ctx.basis(), level, rns::PolyForm::kEvaluation);
  }
  return io::ciphertext_bytes(ctx, ct).size();
}

}  // namespace

std::string SizeReport::to_text() const {
  std::ostringstream out;
  out << "task: " << task_name(task) << "\n"
      << "dictionary m=" << m << ", slots t=" << slots << "\n"
      << "client -> server: " << chunks << " ciphertexts x "
      << request_ciphertext_bytes << " bytes = " << request_bytes << " bytes\n"
      << "server -> client: " << response_ciphertexts << " ciphertexts x "
      << response_ciphertext_bytes << " bytes at level " << response_level
      << " = " << response_bytes << " bytes\n"
      << std::fixed << std::setprecision(0)
      << "2 N log2(q_L) estimate per ciphertext: " << formula_ciphertext_bytes
      << " bytes (a ciphertext here stores 64-bit words per residue)\n";
  if (task == Task::kTraining) {
    out << "returned model: " << model_ciphertexts
        << " ciphertexts (n ceil(m/t) + n); n(ceil(m/t) + c) gives "
        << model_ciphertexts_formula << "\n";
  }
  return out.str();
}

SizeReport report_message_sizes(Task task, const CkksContext& ctx,
                                std::size_t m, std::size_t n, std::size_t c,
                                std::size_t minibatches) {
  SizeReport r;
  r.task = task;
  r.m = m;
  r.slots = ctx.slots();
  r.chunks = infer::chunk_count(m, ctx.slots());
  r.request_ciphertext_bytes = measured_bytes(ctx, ctx.max_level());
  r.request_bytes = r.chunks * r.request_ciphertext_bytes;
  r.formula_ciphertext_bytes =
      2.0 * static_cast<double>(ctx.degree()) * ctx.params().log2_modulus() / 8;
  if (task == Task::kInference) {
    r.response_ciphertexts = 1;
    r.response_level = ctx.max_level() > infer::kInferenceDepth
                           ? ctx.max_level() - infer::kInferenceDepth
                           : 1;
  } else {
    r.model_ciphertexts = n * r.chunks + n;
    r.model_ciphertexts_formula = n * (r.chunks + c);
    r.response_ciphertexts = r.model_ciphertexts;
    const std::size_t used = minibatches * train::kLevelsPerMinibatch;
    r.response_level =
        minibatches == 0 || used >= ctx.max_level() ? 1 : ctx.max_level() - used;
  }
  r.response_ciphertext_bytes = measured_bytes(ctx, r.response_level);
  r.response_bytes = r.response_ciphertexts * r.response_ciphertext_bytes;
  return r;
}

// ---- datasets ----

DatasetFormat parse_format(const std::string& name) {
  if (name == "fasttext") return DatasetFormat::kFastText;
  if (name == "youtube") return DatasetFormat::kYouTubeCsv;
  if (name == "agnews") return DatasetFormat::kAgNewsCsv;
  if (name == "imdb") return DatasetFormat::kImdbDir;
  throw std::invalid_argument("unknown dataset format '" + name + "'");
}

namespace {

constexpr std::string_view kLabelPrefix = "__label__";

[[noreturn]] void fail(const std::string& source, std::size_t line,
                       const std::string& what) {
  throw DatasetError(source + ":" + std::to_string(line) + ": " + what);
}

std::string trim(std::string_view s) {
  const auto first = s.find_first_not_of(" \t\r\n");
  if (first == std::string_view::npos) return {};
  const auto last = s.find_last_not_of(" \t\r\n");
  return std::string(s.substr(first, last - first + 1));
}

std::string lower(std::string s) {
  std::transform(s.begin(), s.end(), s.begin(),
                 [](unsigned char ch) { return std::tolower(ch); });
  return s;
}

std::ifstream open_text(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DatasetError("cannot open " + path.string());
  return in;
}

std::vector<fs::path> sorted_files(const fs::path& dir,
                                   const std::string& extension) {
  std::vector<fs::path> files;
  for (const auto& entry : fs::directory_iterator(dir)) {
    if (entry.is_regular_file() && entry.path().extension() == extension) {
      files.push_back(entry.path());
    }
  }
  std::sort(files.begin(), files.end());
  return files;
}

std::vector<Record> load_youtube_file(const fs::path& path) {
  auto in = open_text(path);
  const auto rows = parse_csv(in, path.string());
  if (rows.empty()) return {};
  std::optional<std::size_t> content, label;
  for (std::size_t i = 0; i < rows[0].fields.size(); ++i) {
    const std::string name = lower(trim(rows[0].fields[i]));
    if (name == "content") content = i;
    if (name == "class") label = i;
  }
  if (!content || !label) {
    fail(path.string(), rows[0].line, "header lacks CONTENT and CLASS columns");
  }
  std::vector<Record> out;
  for (std::size_t r = 1; r < rows.size(); ++r) {
    const auto& f = rows[r].fields;
    if (f.size() <= std::max(*content, *label)) {
      fail(path.string(), rows[r].line, "row has too few fields");
    }
    const std::string cls = trim(f[*label]);
    if (cls.empty()) fail(path.string(), rows[r].line, "empty class");
    out.push_back({cls, f[*content]});
  }
  return out;
}

std::vector<Record> load_agnews(const fs::path& path) {
  auto in = open_text(path);
  std::vector<Record> out;
  for (const auto& row : parse_csv(in, path.string())) {
    if (row.fields.size() < 3) fail(path.string(), row.line, "expected 3 fields");
    const std::string cls = trim(row.fields[0]);
    if (cls.empty()) fail(path.string(), row.line, "empty class");
    out.push_back({cls, row.fields[1] + " " + row.fields[2]});
  }
  return out;
}

std::vector<Record> load_imdb(const fs::path& dir) {
  std::vector<Record> out;
  bool found = false;
  for (const char* label : {"neg", "pos"}) {
    const fs::path sub = dir / label;
    if (!fs::is_directory(sub)) continue;
    found = true;
    for (const auto& file : sorted_files(sub, ".txt")) {
      auto in = open_text(file);
      std::ostringstream text;
      text << in.rdbuf();
      out.push_back({label, text.str()});
    }
  }
  if (!found) throw DatasetError(dir.string() + ": no pos/ or neg/ directory");
  return out;
}

}  // namespace

std::vector<Record> parse_fasttext(std::istream& in, const std::string& source) {
  std::vector<Record> out;
  std::size_t line_no = 0;
  for (std::string line; std::getline(in, line);) {
    ++line_no;
    const std::string body = trim(line);
    if (body.empty()) continue;
    if (body.rfind(kLabelPrefix, 0) != 0) {
      fail(source, line_no, "missing __label__ prefix");
    }
    std::size_t pos = 0;
    std::string label;
    // The first label wins; further label tokens are skipped.
    while (body.compare(pos, kLabelPrefix.size(), kLabelPrefix) == 0) {
      const auto end = body.find_first_of(" \t", pos);
      const std::string token =
          body.substr(pos, end == std::string::npos ? std::string::npos : end - pos);
      if (label.empty()) label = token.substr(kLabelPrefix.size());
      if (end == std::string::npos) {
        pos = body.size();
        break;
      }
      pos = body.find_first_not_of(" \t", end);
    }
    if (label.empty()) fail(source, line_no, "empty label");
    out.push_back({label, trim(std::string_view(body).substr(pos))});
  }
  return out;
}

std::vector<CsvRow> parse_csv(std::istream& in, const std::string& source) {
  std::vector<CsvRow> rows;
  std::ostringstream buffer;
  buffer << in.rdbuf();
  const std::string data = buffer.str();
  std::size_t line = 1;
  std::size_t i = 0;
  while (i < data.size()) {
    CsvRow row;
    row.line = line;
    std::string field;
    bool quoted = false, row_done = false;
    while (!row_done) {
      if (i >= data.size()) {
        if (quoted) fail(source, row.line, "unterminated quoted field");
        row.fields.push_back(std::move(field));
        break;
      }
      const char ch = data[i++];
      if (quoted) {
        if (ch == '"') {
          if (i < data.size() && data[i] == '"') {
            field += '"';
            ++i;
          } else {
            quoted = false;
          }
        } else {
          if (ch == '\n') ++line;
          field += ch;
        }
        continue;
      }
      switch (ch) {
        case '"':
          quoted = true;
          break;
        case ',':
          row.fields.push_back(std::move(field));
          field.clear();
          break;
        case '\r':
          break;
        case '\n':
          ++line;
          row.fields.push_back(std::move(field));
          row_done = true;
          break;
        default:
          field += ch;
      }
    }
    const bool blank = row.fields.size() == 1 && row.fields[0].empty();
    if (!blank) rows.push_back(std::move(row));
  }
  return rows;
}

std::vector<Record> load_dataset(const std::string& path, DatasetFormat format) {
  const fs::path p(path);
  if (!fs::exists(p)) throw DatasetError(path + ": no such file or directory");
  switch (format) {
    case DatasetFormat::kFastText: {
      auto in = open_text(p);
      return parse_fasttext(in, path);
    }
    case DatasetFormat::kYouTubeCsv: {
      if (!fs::is_directory(p)) return load_youtube_file(p);
      std::vector<Record> out;
      for (const auto& file : sorted_files(p, ".csv")) {
        auto part = load_youtube_file(file);
        out.insert(out.end(), part.begin(), part.end());
      }
      return out;
    }
    case DatasetFormat::kAgNewsCsv:
      return load_agnews(p);
    case DatasetFormat::kImdbDir:
      return load_imdb(p);
  }
  throw std::invalid_argument("unknown dataset format");
}

LabelSet::LabelSet(std::span<const Record> records) {
  for (const auto& r : records) names_.push_back(r.label);
  std::sort(names_.begin(), names_.end());
  names_.erase(std::unique(names_.begin(), names_.end()), names_.end());
  auto as_int = [](const std::string& s) -> std::optional<long long> {
    long long v = 0;
    const auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
    if (ec != std::errc() || ptr != s.data() + s.size()) return std::nullopt;
    return v;
  };
  const bool numeric = std::all_of(names_.begin(), names_.end(),
                                   [&](const auto& s) { return as_int(s).has_value(); });
  if (numeric) {
    std::sort(names_.begin(), names_.end(), [&](const auto& a, const auto& b) {
      return *as_int(a) < *as_int(b);
    });
  }
}

std::size_t LabelSet::index(const std::string& label) const {
  const auto it = std::find(names_.begin(), names_.end(), label);
  if (it == names_.end()) throw std::invalid_argument("unknown label '" + label + "'");
  return static_cast<std::size_t>(it - names_.begin());
}

Split split_records(std::vector<Record> records, double test_fraction,
                    std::uint64_t seed) {
  if (!(test_fraction >= 0 && test_fraction <= 1)) {
    throw std::invalid_argument("test fraction must lie in [0, 1]");
  }
  ckks::Sampler rng(seed);
  for (std::size_t i = records.size(); i > 1; --i) {
    std::swap(records[i - 1], records[rng.uniform(i)]);
  }
  const auto test_count = static_cast<std::size_t>(
      std::llround(test_fraction * static_cast<double>(records.size())));
  Split split;
  split.test.assign(std::make_move_iterator(records.begin()),
                    std::make_move_iterator(records.begin() + test_count));
  split.train.assign(std::make_move_iterator(records.begin() + test_count),
                     std::make_move_iterator(records.end()));
  return split;
}

Featurized featurize(std::span<const Record> records,
                     const text::Dictionary& dict, const LabelSet& labels,
                     int max_ngram) {
  Featurized out;
  for (const auto& r : records) {
    try {
      out.bags.push_back(
          {text::bag_encode(text::tokenize(r.text, max_ngram), dict),
           labels.index(r.label)});
    } catch (const text::EmptyDocumentError&) {
      ++out.dropped;
    }
  }
  return out;
}

}  // namespace privft::params
