#pragma once

#include <filesystem>
#include <fstream>
#include <optional>
#include <sstream>
#include <string>
#include <unordered_set>
#include <vector>

#include <json.hpp>

#include "emofed/corpus.hpp"
#include "emofed/dataset.hpp"
#include "emofed/errors.hpp"
#include "emofed/fedsim.hpp"
#include "emofed/metrics.hpp"
#include "emofed/model.hpp"

namespace emofed {

// Insertion-ordered JSON keeps emitted files byte-stable and human-shaped.
using ojson = nlohmann::ordered_json;

inline std::string read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError("cannot open " + path);
  std::ostringstream buf;
  buf << in.rdbuf();
  return buf.str();
}

inline void write_file(const std::string& path, std::string_view contents) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw DataError("cannot write " + path);
  out << contents;
  if (!out) throw DataError("write failed: " + path);
}

namespace detail {

inline ojson parse_line(const std::string& line, const std::string& path, std::size_t line_no) {
  ojson j = ojson::parse(line, nullptr, false);
  if (j.is_discarded())
    throw DataError(path + ":" + std::to_string(line_no) + ": malformed JSON");
  if (!j.is_object())
    throw DataError(path + ":" + std::to_string(line_no) + ": expected an object");
  return j;
}

template <typename Fn>
void for_each_jsonl_line(const std::string& path, Fn&& fn) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError("cannot open " + path);
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    fn(parse_line(line, path, line_no), line_no);
  }
}

}  // namespace detail

// --- raw tweets: {"id": string, "text": string}, one per line -------------

inline std::vector<RawTweet> read_raw_tweets(const std::string& path) {
  std::vector<RawTweet> out;
  std::unordered_set<std::string> seen;
  detail::for_each_jsonl_line(path, [&](const ojson& j, std::size_t line_no) {
    const std::string where = path + ":" + std::to_string(line_no);
    if (!j.contains("id") || !j["id"].is_string() || !j.contains("text") ||
        !j["text"].is_string())
      throw DataError(where + ": expected {\"id\": string, \"text\": string}");
    RawTweet t{j["id"].get<std::string>(), j["text"].get<std::string>()};
    if (t.id.empty()) throw DataError(where + ": empty tweet id");
    if (!seen.insert(t.id).second) throw DataError(where + ": duplicate tweet id " + t.id);
    out.push_back(std::move(t));
  });
  return out;
}

// --- Example JSONL ---------------------------------------------------------

inline ojson example_to_json(const Example& e) {
  return ojson{{"id", e.id}, {"source_id", e.source_id}, {"tokens", e.tokens},
               {"label", e.label}};
}

inline void write_examples(const std::string& path, const std::vector<Example>& examples) {
  std::string buf;
  for (const Example& e : examples) {
    buf += example_to_json(e).dump();
    buf += '\n';
  }
  write_file(path, buf);
}

inline std::vector<Example> read_examples(const std::string& path) {
  std::vector<Example> out;
  detail::for_each_jsonl_line(path, [&](const ojson& j, std::size_t line_no) {
    const std::string where = path + ":" + std::to_string(line_no);
    if (!j.contains("id") || !j.contains("source_id") || !j.contains("tokens") ||
        !j.contains("label") || !j["tokens"].is_array() ||
        !j["label"].is_number_integer())
      throw DataError(where + ": bad example record");
    Example e;
    e.id = j["id"].get<std::string>();
    e.source_id = j["source_id"].get<std::string>();
    for (const auto& t : j["tokens"]) {
      if (!t.is_string()) throw DataError(where + ": non-string token");
      e.tokens.push_back(t.get<std::string>());
    }
    e.label = j["label"].get<int>();
    if (e.label < 0 || e.label >= kNumCategories)
      throw DataError(where + ": label out of range");
    out.push_back(std::move(e));
  });
  return out;
}

// --- SplitSet: three JSONL files plus a manifest ---------------------------

inline std::vector<std::int64_t> split_class_counts(const std::vector<Example>& examples) {
  return class_counts(examples, kNumCategories);
}

inline void write_splitset(const std::string& dir, const SplitSet& s) {
  namespace fs = std::filesystem;
  fs::create_directories(dir);
  write_examples(dir + "/train.jsonl", s.train);
  write_examples(dir + "/validation.jsonl", s.validation);
  write_examples(dir + "/test.jsonl", s.test);
  ojson manifest{
      {"seed", s.split_seed},
      {"by_source", s.by_source},
      {"counts",
       ojson{{"train", split_class_counts(s.train)},
             {"validation", split_class_counts(s.validation)},
             {"test", split_class_counts(s.test)}}},
  };
  write_file(dir + "/manifest.json", manifest.dump(2) + "\n");
}

inline SplitSet read_splitset(const std::string& dir) {
  SplitSet s;
  s.train = read_examples(dir + "/train.jsonl");
  s.validation = read_examples(dir + "/validation.jsonl");
  s.test = read_examples(dir + "/test.jsonl");
  const ojson manifest = ojson::parse(read_file(dir + "/manifest.json"));
  s.split_seed = manifest.at("seed").get<std::uint64_t>();
  s.by_source = manifest.at("by_source").get<bool>();
  return s;
}

// --- Params checkpoints ----------------------------------------------------

inline ojson arch_to_json(const Arch& a) {
  ojson j{{"type", a.kind == Arch::Kind::Linear ? "linear" : "mlp"}, {"dim", a.dim}};
  if (a.kind == Arch::Kind::MLP) j["hidden"] = a.hidden;
  j["k"] = a.k;
  return j;
}

inline Arch arch_from_json(const ojson& j) {
  Arch a;
  const std::string type = j.at("type").get<std::string>();
  if (type == "linear") a.kind = Arch::Kind::Linear;
  else if (type == "mlp") a.kind = Arch::Kind::MLP;
  else throw ConfigError("unknown arch type: " + type);
  a.dim = j.at("dim").get<std::uint32_t>();
  a.k = j.at("k").get<std::uint32_t>();
  if (a.kind == Arch::Kind::MLP) a.hidden = j.at("hidden").get<std::uint32_t>();
  a.validate();
  return a;
}

inline ojson params_to_json(const Params& p) {
  return ojson{{"arch", arch_to_json(p.arch)}, {"flat", p.flat}};
}

inline Params params_from_json(const ojson& j) {
  Params p;
  p.arch = arch_from_json(j.at("arch"));
  p.flat = j.at("flat").get<std::vector<double>>();
  if (p.flat.size() != p.arch.param_count())
    throw DataError("params: flat length does not match arch");
  return p;
}

// --- metrics ----------------------------------------------------------------

// Compact form used in per-round logs.
inline ojson metrics_to_json_brief(const MetricsReport& m) {
  return ojson{{"precision", m.precision},
               {"recall", m.recall},
               {"f1_weighted", m.f1},
               {"accuracy", m.accuracy}};
}

inline ojson metrics_to_json(const MetricsReport& m) {
  ojson per_class = ojson::array();
  for (const ClassMetrics& c : m.per_class)
    per_class.push_back(ojson{{"precision", c.precision},
                              {"recall", c.recall},
                              {"f1", c.f1},
                              {"support", c.support}});
  ojson j = metrics_to_json_brief(m);
  j["macro_precision"] = m.macro_precision;
  j["macro_recall"] = m.macro_recall;
  j["macro_f1"] = m.macro_f1;
  j["per_class"] = per_class;
  j["zero_division_count"] = m.zero_division_count;
  return j;
}

// --- round logs -------------------------------------------------------------

inline std::string round_log_line(const RoundLog& log) {
  return ojson{{"round", log.round},
               {"clients", log.clients},
               {"val", metrics_to_json_brief(log.val)},
               {"update_norm", log.update_norm}}
      .dump();
}

inline std::string round_logs_to_jsonl(const std::vector<RoundLog>& logs) {
  std::string buf;
  for (const RoundLog& log : logs) {
    buf += round_log_line(log);
    buf += '\n';
  }
  return buf;
}

}  // namespace emofed
