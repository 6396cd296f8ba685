// Experiment runner: data preparation, synthetic corpora, centralized and
// federated training, and table rendering. See README.md for usage.

#include <cstdlib>
#include <filesystem>
#include <iostream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "emofed/config.hpp"
#include "emofed/corpus.hpp"
#include "emofed/emoji.hpp"
#include "emofed/experiment.hpp"
#include "emofed/io.hpp"
#include "emofed/reporting.hpp"
#include "emofed/synth.hpp"

namespace {

using namespace emofed;

std::string default_run_root() {
  const char* env = std::getenv("EMOFED_RUN_ROOT");
  return env && *env ? env : "runs";
}

std::vector<std::string> split_csv(const std::string& s) {
  std::vector<std::string> out;
  std::size_t pos = 0;
  while (pos <= s.size()) {
    const std::size_t comma = s.find(',', pos);
    out.push_back(s.substr(pos, comma == std::string::npos ? std::string::npos : comma - pos));
    if (comma == std::string::npos) break;
    pos = comma + 1;
  }
  return out;
}

struct CommonOpts {
  std::string config_path;
  std::vector<std::string> overrides;  // key=value pairs applied onto the config JSON
};

void add_common(CLI::App* cmd, CommonOpts& opts) {
  cmd->add_option("--config", opts.config_path, "experiment config JSON");
  cmd->add_option("--set", opts.overrides,
                  "override a config field, e.g. --set seed=7 --set fed.rounds=20");
}

// Dotted-path assignment onto the raw config document; values parse as JSON
// first and fall back to strings.
void apply_override(ojson& doc, const std::string& kv) {
  const std::size_t eq = kv.find('=');
  if (eq == std::string::npos || eq == 0)
    throw ConfigError("override must look like key=value: " + kv);
  const std::string path = kv.substr(0, eq);
  const std::string raw = kv.substr(eq + 1);
  ojson value = ojson::parse(raw, nullptr, false);
  if (value.is_discarded()) value = raw;
  ojson* node = &doc;
  std::size_t pos = 0;
  while (true) {
    const std::size_t dot = path.find('.', pos);
    const std::string key = path.substr(pos, dot == std::string::npos ? std::string::npos
                                                                      : dot - pos);
    if (key.empty()) throw ConfigError("bad override path: " + path);
    if (dot == std::string::npos) {
      (*node)[key] = value;
      break;
    }
    node = &(*node)[key];
    if (!node->is_object() && !node->is_null()) throw ConfigError("bad override path: " + path);
    pos = dot + 1;
  }
}

ExperimentConfig load_config(const CommonOpts& opts) {
  ojson doc = ojson::object();
  if (!opts.config_path.empty()) {
    doc = ojson::parse(read_file(opts.config_path), nullptr, false);
    if (doc.is_discarded())
      throw ConfigError("config file is not valid JSON: " + opts.config_path);
  }
  for (const std::string& kv : opts.overrides) apply_override(doc, kv);
  return ExperimentConfig::from_json(doc);
}

void write_fed_run(const std::string& dir, const ExperimentConfig& cfg,
                   const ExperimentResult& result, const std::vector<std::string>& notes) {
  std::filesystem::create_directories(dir);
  write_file(dir + "/config.json", cfg.to_json().dump(2) + "\n");
  write_file(dir + "/rounds.jsonl", round_logs_to_jsonl(result.rounds));
  write_file(dir + "/report.json", fed_report_json(cfg, result, notes).dump(2) + "\n");
}

int cmd_synth(const CommonOpts& opts, const std::string& out_path) {
  const ExperimentConfig cfg = load_config(opts);
  const std::vector<Example> corpus = synth(cfg.synth, cfg.seed);
  write_examples(out_path, corpus);
  ojson summary{{"n_examples", corpus.size()},
                {"class_counts", class_counts(corpus, kNumCategories)},
                {"out", out_path}};
  std::cout << summary.dump() << "\n";
  return 0;
}

int cmd_prep(const std::string& input, const std::string& table_path,
             const std::string& mode_name, const std::string& out_path) {
  NormalizeMode mode;
  if (mode_name == "tokens") mode = NormalizeMode::Tokens;
  else if (mode_name == "plain") mode = NormalizeMode::Plain;
  else throw ConfigError("mode must be tokens|plain");

  const CategoryTable table = CategoryTable::load(table_path);
  const std::vector<RawTweet> tweets = read_raw_tweets(input);
  std::vector<Example> examples;
  std::uint64_t unknown = 0;
  std::uint64_t dropped = 0;
  for (const RawTweet& tweet : tweets) {
    std::vector<Example> exploded = explode(tweet, table, mode, &unknown);
    if (exploded.empty()) {
      ++dropped;
      continue;
    }
    for (Example& e : exploded) examples.push_back(std::move(e));
  }
  write_examples(out_path, examples);
  ojson counts{{"tweets_in", tweets.size()},
               {"tweets_dropped_no_emoji", dropped},
               {"examples_out", examples.size()},
               {"unknown_emojis", unknown},
               {"table_checksum", table.checksum()}};
  std::cout << counts.dump() << "\n";
  return 0;
}

int cmd_split(const std::string& input, const std::string& out_dir, std::uint64_t seed,
              bool by_source) {
  const std::vector<Example> corpus = read_examples(input);
  const SplitSet splits = split(corpus, seed, by_source);
  write_splitset(out_dir, splits);
  ojson summary{{"train", splits.train.size()},
                {"validation", splits.validation.size()},
                {"test", splits.test.size()},
                {"out", out_dir}};
  std::cout << summary.dump() << "\n";
  return 0;
}

int cmd_central(const CommonOpts& opts, const std::string& splits_dir,
                const std::string& out_root) {
  const ExperimentConfig cfg = load_config(opts);
  const SplitSet splits = read_splitset(splits_dir);
  const CentralResult result = train_central(cfg, splits);
  const std::string dir = out_root + "/central_" + balancing_name(cfg.balancing);
  std::filesystem::create_directories(dir);
  write_file(dir + "/config.json", cfg.to_json().dump(2) + "\n");
  write_file(dir + "/report.json", central_report_json(cfg, result).dump(2) + "\n");
  write_file(dir + "/params.json", params_to_json(result.params).dump() + "\n");
  std::cout << ojson{{"run", dir}, {"test_f1", result.test.f1}}.dump() << "\n";
  return 0;
}

int cmd_fed(const CommonOpts& opts, const std::string& splits_dir, const std::string& out_root,
            const std::string& algorithms, const std::string& fractions,
            const std::string& partitions, const std::string& balancings) {
  const ExperimentConfig base = load_config(opts);
  const SplitSet splits = read_splitset(splits_dir);

  std::vector<FedAlgorithm> algo_axis{base.algorithm};
  if (!algorithms.empty()) {
    algo_axis.clear();
    for (const std::string& name : split_csv(algorithms))
      algo_axis.push_back(algorithm_from_name(name));
  }
  std::vector<double> frac_axis{base.client_fraction};
  if (!fractions.empty()) {
    frac_axis.clear();
    for (const std::string& v : split_csv(fractions)) frac_axis.push_back(std::stod(v));
  }
  std::vector<PartitionMode> part_axis{base.partition};
  if (!partitions.empty()) {
    part_axis.clear();
    for (const std::string& v : split_csv(partitions)) {
      if (v == "iid") part_axis.push_back(PartitionMode::IID);
      else if (v == "noniid") part_axis.push_back(PartitionMode::NonIID);
      else throw ConfigError("partition must be iid|noniid: " + v);
    }
  }
  std::vector<Balancing> bal_axis{base.balancing};
  if (!balancings.empty()) {
    bal_axis.clear();
    for (const std::string& v : split_csv(balancings)) bal_axis.push_back(balancing_from_name(v));
  }

  for (FedAlgorithm algo : algo_axis) {
    for (double frac : frac_axis) {
      for (PartitionMode part : part_axis) {
        for (Balancing bal : bal_axis) {
          ExperimentConfig cell = base;
          cell.algorithm = algo;
          cell.client_fraction = frac;
          cell.partition = part;
          cell.balancing = bal;
          cell.validate();
          std::vector<std::string> notes;
          if (algo == FedAlgorithm::CausalFedGSD && part == PartitionMode::NonIID)
            notes.push_back("baseline causalfedgsd with a non-iid partition is an "
                            "extrapolated combination");
          const ExperimentResult result = run_fed_cell(cell, splits);
          const std::string dir = out_root + "/" + fed_cell_name(cell);
          write_fed_run(dir, cell, result, notes);
          std::cout << ojson{{"run", dir}, {"test_f1", result.test.f1}}.dump() << "\n";
        }
      }
    }
  }
  return 0;
}

int cmd_report(const std::string& root) {
  const ReportInput input = load_run_records(root);
  write_file(root + "/report.md", render_markdown(input));
  write_file(root + "/report.csv", render_csv(input));
  std::cout << ojson{{"runs", input.runs.size()},
                     {"skipped", input.skipped.size()},
                     {"markdown", root + "/report.md"},
                     {"csv", root + "/report.csv"}}
                   .dump()
            << "\n";
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"federated emoji-topic classification experiments"};
  app.require_subcommand(1);

  CommonOpts synth_opts;
  std::string synth_out = "corpus.jsonl";
  auto* synth_cmd = app.add_subcommand("synth", "generate a synthetic long-tail corpus");
  add_common(synth_cmd, synth_opts);
  synth_cmd->add_option("--out", synth_out, "output corpus JSONL");

  std::string prep_in, prep_out = "examples.jsonl", prep_mode = "tokens";
  std::string prep_table = "data/emoji_categories.csv";
  auto* prep_cmd = app.add_subcommand("prep", "explode raw tweets into labeled examples");
  prep_cmd->add_option("--input", prep_in, "raw tweet JSONL")->required();
  prep_cmd->add_option("--table", prep_table, "emoji category table CSV");
  prep_cmd->add_option("--mode", prep_mode, "tokens|plain");
  prep_cmd->add_option("--out", prep_out, "output example JSONL");

  std::string split_in, split_out = "splits";
  std::uint64_t split_seed = 1;
  bool split_by_source = true;
  auto* split_cmd = app.add_subcommand("split", "80/10/10 train/validation/test split");
  split_cmd->add_option("--input", split_in, "example JSONL")->required();
  split_cmd->add_option("--out", split_out, "output directory");
  split_cmd->add_option("--seed", split_seed, "shuffle seed");
  split_cmd->add_flag("--by-source,!--no-by-source", split_by_source,
                      "keep examples from one tweet in one split (default on)");

  CommonOpts central_opts;
  std::string central_splits, central_out = default_run_root();
  auto* central_cmd = app.add_subcommand("central", "train the centralized reference model");
  add_common(central_cmd, central_opts);
  central_cmd->add_option("--splits", central_splits, "split directory")->required();
  central_cmd->add_option("--out", central_out, "run directory root");

  CommonOpts fed_opts;
  std::string fed_splits, fed_out = default_run_root();
  std::string fed_algorithms, fed_fractions, fed_partitions, fed_balancings;
  auto* fed_cmd = app.add_subcommand("fed", "run federated experiments over a grid");
  add_common(fed_cmd, fed_opts);
  fed_cmd->add_option("--splits", fed_splits, "split directory")->required();
  fed_cmd->add_option("--out", fed_out, "run directory root");
  fed_cmd->add_option("--algorithms", fed_algorithms,
                      "comma list: fedavg,fedprox,causalfedgsd,causalfedgsd-mod");
  fed_cmd->add_option("--fractions", fed_fractions, "comma list of client fractions");
  fed_cmd->add_option("--partitions", fed_partitions, "comma list: iid,noniid");
  fed_cmd->add_option("--balancings", fed_balancings, "comma list: none,resample,cost");

  std::string report_root = default_run_root();
  auto* report_cmd = app.add_subcommand("report", "pivot completed runs into tables");
  report_cmd->add_option("--runs", report_root, "run directory root");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 2;
  }

  try {
    if (synth_cmd->parsed()) return cmd_synth(synth_opts, synth_out);
    if (prep_cmd->parsed()) return cmd_prep(prep_in, prep_table, prep_mode, prep_out);
    if (split_cmd->parsed()) return cmd_split(split_in, split_out, split_seed, split_by_source);
    if (central_cmd->parsed()) return cmd_central(central_opts, central_splits, central_out);
    if (fed_cmd->parsed())
      return cmd_fed(fed_opts, fed_splits, fed_out, fed_algorithms, fed_fractions,
                     fed_partitions, fed_balancings);
    if (report_cmd->parsed()) return cmd_report(report_root);
  } catch (const ConfigError& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return 2;
  } catch (const DataError& e) {
    std::cerr << "data error: " << e.what() << "\n";
    return 3;
  } catch (const NumericError& e) {
    std::cerr << "numeric error: " << e.what() << "\n";
    return 4;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 0;
}
