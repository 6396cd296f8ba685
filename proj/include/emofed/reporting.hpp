#pragma once

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "emofed/config.hpp"
#include "emofed/errors.hpp"
#include "emofed/io.hpp"

namespace emofed {

// A completed run as read back from its report.json. Metric values are the
// emitted numbers; nothing is recomputed here.
struct RunRecord {
  std::string dir;
  std::string kind;  // "central" or "fed"
  std::string algorithm;
  double client_fraction = 0.0;
  std::string partition;
  std::string balancing;
  double precision = 0.0;
  double recall = 0.0;
  double f1 = 0.0;
  double accuracy = 0.0;
  std::optional<std::uint32_t> rounds_to_target;
};

struct ReportInput {
  std::vector<RunRecord> runs;
  std::vector<std::string> skipped;  // directories without a readable report
};

inline ReportInput load_run_records(const std::string& root) {
  namespace fs = std::filesystem;
  if (!fs::is_directory(root)) throw DataError("not a directory: " + root);
  std::vector<std::string> dirs;
  for (const auto& entry : fs::directory_iterator(root)) {
    if (entry.is_directory()) dirs.push_back(entry.path().filename().string());
  }
  std::sort(dirs.begin(), dirs.end());

  ReportInput out;
  for (const std::string& dir : dirs) {
    const std::string path = root + "/" + dir + "/report.json";
    ojson j = ojson::parse(std::filesystem::exists(path) ? read_file(path) : "", nullptr, false);
    if (j.is_discarded() || !j.is_object() || !j.contains("kind") ||
        !j.contains("test_metrics") || !j.contains("config")) {
      out.skipped.push_back(dir);
      continue;
    }
    try {
      RunRecord r;
      r.dir = dir;
      r.kind = j.at("kind").get<std::string>();
      const ojson& cfg = j.at("config");
      r.balancing = cfg.at("balancing").get<std::string>();
      if (r.kind == "fed") {
        r.algorithm = cfg.at("fed").at("algorithm").get<std::string>();
        r.client_fraction = cfg.at("fed").at("client_fraction").get<double>();
        r.partition = cfg.at("fed").at("partition").get<std::string>();
      }
      const ojson& m = j.at("test_metrics");
      r.precision = m.at("precision").get<double>();
      r.recall = m.at("recall").get<double>();
      r.f1 = m.at("f1_weighted").get<double>();
      r.accuracy = m.at("accuracy").get<double>();
      if (j.contains("rounds_to_target") && !j.at("rounds_to_target").is_null())
        r.rounds_to_target = j.at("rounds_to_target").get<std::uint32_t>();
      out.runs.push_back(std::move(r));
    } catch (const nlohmann::json::exception&) {
      out.skipped.push_back(dir);
    }
  }
  if (out.runs.empty()) throw DataError("no completed runs under " + root);
  return out;
}

// Two-decimal percentage, the format the tables use.
inline std::string pct(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.2f", v * 100.0);
  return buf;
}

inline std::string render_csv(const ReportInput& input) {
  std::vector<RunRecord> runs = input.runs;
  std::sort(runs.begin(), runs.end(), [](const RunRecord& a, const RunRecord& b) {
    return std::tie(a.kind, a.algorithm, a.client_fraction, a.partition, a.balancing) <
           std::tie(b.kind, b.algorithm, b.client_fraction, b.partition, b.balancing);
  });
  std::string csv =
      "kind,algorithm,client_fraction,partition,balancing,precision,recall,f1,accuracy,"
      "rounds_to_target\n";
  for (const RunRecord& r : runs) {
    char frac[32] = "";
    if (r.kind == "fed") std::snprintf(frac, sizeof frac, "%g", r.client_fraction);
    csv += r.kind + "," + r.algorithm + "," + frac + "," + r.partition + "," + r.balancing +
           "," + pct(r.precision) + "," + pct(r.recall) + "," + pct(r.f1) + "," +
           pct(r.accuracy) + "," +
           (r.rounds_to_target ? std::to_string(*r.rounds_to_target) : "") + "\n";
  }
  return csv;
}

inline std::string render_markdown(const ReportInput& input) {
  static constexpr const char* kBalancingRows[] = {"none", "resample", "cost"};
  std::string md = "# Results\n";

  // centralized table: rows = balancing
  std::map<std::string, const RunRecord*> central;
  for (const RunRecord& r : input.runs)
    if (r.kind == "central") central[r.balancing] = &r;
  if (!central.empty()) {
    md += "\n## centralized\n\n| balancing | precision | recall | f1 |\n|---|---|---|---|\n";
    const RunRecord* best = nullptr;
    for (const auto& [_, r] : central)
      if (!best || r->f1 > best->f1) best = r;
    for (const char* b : kBalancingRows) {
      auto it = central.find(b);
      if (it == central.end()) continue;
      const RunRecord* r = it->second;
      const bool bold = r == best;
      const auto cell = [&](double v) {
        return bold ? "**" + pct(v) + "**" : pct(v);
      };
      md += std::string("| ") + b + " | " + cell(r->precision) + " | " + cell(r->recall) +
            " | " + cell(r->f1) + " |\n";
    }
  }

  // one pivot per federated algorithm: rows = balancing,
  // column groups = client fraction x partition
  std::map<std::string, std::vector<const RunRecord*>> by_algo;
  for (const RunRecord& r : input.runs)
    if (r.kind == "fed") by_algo[r.algorithm].push_back(&r);

  for (const auto& [algo, runs] : by_algo) {
    using ColKey = std::pair<double, std::string>;  // (fraction, partition)
    std::vector<ColKey> cols;
    std::map<std::pair<std::string, std::string>, std::map<double, const RunRecord*>> cells;
    for (const RunRecord* r : runs) {
      ColKey key{r->client_fraction, r->partition};
      if (std::find(cols.begin(), cols.end(), key) == cols.end()) cols.push_back(key);
      cells[{r->balancing, r->partition}][r->client_fraction] = r;
    }
    std::sort(cols.begin(), cols.end());

    const RunRecord* best = nullptr;
    for (const RunRecord* r : runs)
      if (!best || r->f1 > best->f1) best = r;

    md += "\n## " + algo + "\n\n| balancing |";
    std::string sep = "|---|";
    for (const auto& [frac, part] : cols) {
      char head[64];
      std::snprintf(head, sizeof head, " c=%d%% %s P | R | F1 |",
                    static_cast<int>(std::lround(frac * 100)), part.c_str());
      md += head;
      sep += "---|---|---|";
    }
    md += "\n" + sep + "\n";
    for (const char* b : kBalancingRows) {
      bool any = false;
      std::string row = std::string("| ") + b + " |";
      for (const auto& [frac, part] : cols) {
        auto it = cells.find({b, part});
        const RunRecord* r = nullptr;
        if (it != cells.end()) {
          auto jt = it->second.find(frac);
          if (jt != it->second.end()) r = jt->second;
        }
        if (!r) {
          row += "  |  |  |";
          continue;
        }
        any = true;
        const auto cell = [&](double v) {
          return r == best ? " **" + pct(v) + "** |" : " " + pct(v) + " |";
        };
        row += cell(r->precision) + cell(r->recall) + cell(r->f1);
      }
      if (any) md += row + "\n";
    }
  }

  if (!input.skipped.empty()) {
    md += "\n## skipped\n\n";
    for (const std::string& dir : input.skipped) md += "- " + dir + " (no report.json)\n";
  }
  return md;
}

}  // namespace emofed
