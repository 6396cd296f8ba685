#include <catch2/catch_amalgamated.hpp>

#include <cstdlib>
#include <filesystem>
#include <string>

#include <json.hpp>

#include "emofed/config.hpp"
#include "emofed/io.hpp"

using namespace emofed;

namespace {

std::string g_root;

std::string work_dir(const std::string& name) {
  const auto dir = std::filesystem::path(g_root) / name;
  std::filesystem::create_directories(dir);
  return dir.string();
}

int run(const std::string& args, const std::string& stdout_path = "/dev/null") {
  const std::string cmd = std::string(EMOFED_CLI_PATH) + " " + args + " > " + stdout_path;
  const int status = std::system(cmd.c_str());
  return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
}

ojson last_stdout(const std::string& path) {
  const std::string text = read_file(path);
  // commands may emit one JSON object per completed unit; take the last line
  std::size_t end = text.find_last_not_of('\n');
  std::size_t start = text.rfind('\n', end);
  return ojson::parse(text.substr(start == std::string::npos ? 0 : start + 1,
                                  end - (start == std::string::npos ? 0 : start + 1) + 1));
}

struct Setup {
  Setup() {
    const auto dir = std::filesystem::temp_directory_path() / "emofed_cli_test";
    std::filesystem::remove_all(dir);
    std::filesystem::create_directories(dir);
    g_root = dir.string();
  }
};
const Setup g_setup;

// tiny but non-trivial shared config for the driver tests
const char* kConfig = R"({
  "seed": 5,
  "dim": 256,
  "central": {"epochs": 5, "learning_rate": 0.3},
  "train": {"learning_rate": 0.1},
  "fed": {"rounds": 3, "n_clients": 10, "client_fraction": 0.5},
  "synth": {"n_examples": 800, "signature_vocab_per_class": 10, "shared_vocab": 50,
            "mean_length": 6}
})";

}  // namespace

TEST_CASE("synth writes a deterministic corpus with a summary") {
  const std::string dir = work_dir("synth");
  write_file(dir + "/config.json", kConfig);
  const std::string corpus = dir + "/corpus.jsonl";
  REQUIRE(run("synth --config " + dir + "/config.json --out " + corpus,
              dir + "/out.json") == 0);
  const ojson summary = last_stdout(dir + "/out.json");
  REQUIRE(summary.at("n_examples") == 800);
  std::int64_t head = summary.at("class_counts")[0].get<std::int64_t>();
  std::int64_t second = summary.at("class_counts")[1].get<std::int64_t>();
  REQUIRE(head > 2 * second);

  const std::string first = read_file(corpus);
  REQUIRE(run("synth --config " + dir + "/config.json --out " + corpus) == 0);
  REQUIRE(read_file(corpus) == first);
  REQUIRE(read_examples(corpus).size() == 800);
}

TEST_CASE("prep explodes a fixture with the documented counts") {
  const std::string dir = work_dir("prep");
  // five tweets with emoji counts 1, 3, 0, 2, 1 -> 7 examples, 1 dropped
  write_file(dir + "/raw.jsonl",
             "{\"id\":\"t0\",\"text\":\"ek \\ud83d\\ude02\"}\n"
             "{\"id\":\"t1\",\"text\":\"RT @u teen \\ud83d\\ude02\\ud83c\\udf55 "
             "\\ud83c\\uddee\\ud83c\\uddf3 #tag\"}\n"
             "{\"id\":\"t2\",\"text\":\"koi emoji nahin\"}\n"
             "{\"id\":\"t3\",\"text\":\"do \\ud83d\\ude80 \\ud83d\\ude80\"}\n"
             "{\"id\":\"t4\",\"text\":\"aakhri \\u2764\\ufe0f https://t.co/x\"}\n");
  const std::string table = std::string(EMOFED_DATA_DIR) + "/emoji_categories.csv";
  REQUIRE(run("prep --input " + dir + "/raw.jsonl --table " + table + " --out " + dir +
                  "/examples.jsonl",
              dir + "/out.json") == 0);
  const ojson counts = last_stdout(dir + "/out.json");
  REQUIRE(counts.at("tweets_in") == 5);
  REQUIRE(counts.at("tweets_dropped_no_emoji") == 1);
  REQUIRE(counts.at("examples_out") == 7);
  REQUIRE(counts.at("unknown_emojis") == 0);

  const auto examples = read_examples(dir + "/examples.jsonl");
  REQUIRE(examples.size() == 7);
  REQUIRE(examples[1].source_id == "t1");
  REQUIRE(examples[1].tokens ==
          std::vector<std::string>{"<mention>", "teen", "<hashtag>"});

  // plain mode: same counts, different tokens
  REQUIRE(run("prep --input " + dir + "/raw.jsonl --table " + table + " --mode plain --out " +
                  dir + "/plain.jsonl",
              dir + "/out2.json") == 0);
  const ojson counts2 = last_stdout(dir + "/out2.json");
  REQUIRE(counts2.at("examples_out") == 7);
  const auto plain = read_examples(dir + "/plain.jsonl");
  REQUIRE(plain[1].tokens == std::vector<std::string>{"teen"});
}

TEST_CASE("prep of an empty file emits zero examples") {
  const std::string dir = work_dir("prep_empty");
  write_file(dir + "/raw.jsonl", "");
  const std::string table = std::string(EMOFED_DATA_DIR) + "/emoji_categories.csv";
  REQUIRE(run("prep --input " + dir + "/raw.jsonl --table " + table + " --out " + dir +
                  "/out.jsonl",
              dir + "/out.json") == 0);
  const ojson counts = last_stdout(dir + "/out.json");
  REQUIRE(counts.at("tweets_in") == 0);
  REQUIRE(counts.at("examples_out") == 0);
  REQUIRE(read_file(dir + "/out.jsonl").empty());
}

TEST_CASE("prep reports malformed input with its line number") {
  const std::string dir = work_dir("prep_bad");
  write_file(dir + "/raw.jsonl", "{\"id\":\"a\",\"text\":\"ok\"}\n{broken\n");
  const std::string table = std::string(EMOFED_DATA_DIR) + "/emoji_categories.csv";
  REQUIRE(run("prep --input " + dir + "/raw.jsonl --table " + table + " --out " + dir +
              "/x.jsonl 2> " + dir + "/err.txt") == 3);
  REQUIRE(read_file(dir + "/err.txt").find(":2") != std::string::npos);
}

TEST_CASE("split writes three files plus a manifest") {
  const std::string dir = work_dir("split");
  write_file(dir + "/config.json", kConfig);
  REQUIRE(run("synth --config " + dir + "/config.json --out " + dir + "/corpus.jsonl") == 0);
  REQUIRE(run("split --input " + dir + "/corpus.jsonl --out " + dir + "/splits --seed 3",
              dir + "/out.json") == 0);
  const ojson summary = last_stdout(dir + "/out.json");
  REQUIRE(summary.at("train") == 640);
  REQUIRE(summary.at("validation") == 80);
  REQUIRE(summary.at("test") == 80);
  const SplitSet splits = read_splitset(dir + "/splits");
  REQUIRE(splits.split_seed == 3);
}

TEST_CASE("central, fed and report run a miniature grid end to end") {
  const std::string dir = work_dir("grid");
  write_file(dir + "/config.json", kConfig);
  REQUIRE(run("synth --config " + dir + "/config.json --out " + dir + "/corpus.jsonl") == 0);
  REQUIRE(run("split --input " + dir + "/corpus.jsonl --out " + dir + "/splits --seed 3") == 0);

  const std::string runs = dir + "/runs";
  REQUIRE(run("central --config " + dir + "/config.json --splits " + dir + "/splits --out " +
              runs) == 0);
  REQUIRE(run("central --config " + dir + "/config.json --set balancing=resample --splits " +
              dir + "/splits --out " + runs) == 0);
  REQUIRE(run("central --config " + dir + "/config.json --set balancing=cost --splits " +
              dir + "/splits --out " + runs) == 0);
  REQUIRE(std::filesystem::exists(runs + "/central_none/report.json"));
  REQUIRE(std::filesystem::exists(runs + "/central_resample/params.json"));

  // cost-sensitive weights steer training away from the unweighted run
  REQUIRE(read_file(runs + "/central_none/params.json") !=
          read_file(runs + "/central_cost/params.json"));

  // centralized reruns are byte-identical
  const std::string central_report = read_file(runs + "/central_none/report.json");
  REQUIRE(run("central --config " + dir + "/config.json --splits " + dir + "/splits --out " +
              runs) == 0);
  REQUIRE(read_file(runs + "/central_none/report.json") == central_report);

  // resample balancing shows up in the emitted class counts
  const ojson resampled = ojson::parse(read_file(runs + "/central_resample/report.json"));
  const auto counts = resampled.at("train_class_counts");
  for (const auto& c : counts) REQUIRE(c.get<std::int64_t>() == counts[0].get<std::int64_t>());

  REQUIRE(run("fed --config " + dir + "/config.json --splits " + dir + "/splits --out " + runs +
              " --algorithms fedavg,fedprox --partitions iid,noniid --balancings none") == 0);
  REQUIRE(std::filesystem::exists(runs + "/fedavg_c50_iid_none/rounds.jsonl"));
  REQUIRE(std::filesystem::exists(runs + "/fedprox_c50_noniid_none/report.json"));

  // the fraction x partition grid yields six cells per algorithm/balancing
  REQUIRE(run("fed --config " + dir + "/config.json --splits " + dir + "/splits --out " + dir +
              "/grid6 --algorithms fedavg --fractions 0.1,0.3,0.5 --partitions iid,noniid"
              " --balancings none") == 0);
  std::size_t cells = 0;
  for (const auto& entry : std::filesystem::directory_iterator(dir + "/grid6"))
    if (entry.is_directory()) ++cells;
  REQUIRE(cells == 6);
  for (const char* name : {"fedavg_c10_iid_none", "fedavg_c30_noniid_none",
                           "fedavg_c50_iid_none"})
    REQUIRE(std::filesystem::exists(dir + "/grid6/" + name + "/report.json"));

  // FedProx echoes its mu default
  const ojson prox = ojson::parse(read_file(runs + "/fedprox_c50_iid_none/config.json"));
  REQUIRE(prox.at("train").at("mu") == 0.01);

  // reruns are byte-identical
  const std::string rounds_before = read_file(runs + "/fedprox_c50_iid_none/rounds.jsonl");
  const std::string report_before = read_file(runs + "/fedprox_c50_iid_none/report.json");
  REQUIRE(run("fed --config " + dir + "/config.json --splits " + dir + "/splits --out " + runs +
              " --algorithms fedprox --partitions iid --balancings none") == 0);
  REQUIRE(read_file(runs + "/fedprox_c50_iid_none/rounds.jsonl") == rounds_before);
  REQUIRE(read_file(runs + "/fedprox_c50_iid_none/report.json") == report_before);

  REQUIRE(run("report --runs " + runs, dir + "/report_out.json") == 0);
  const std::string csv = read_file(runs + "/report.csv");
  REQUIRE(csv.find("kind,algorithm,client_fraction,partition,balancing") == 0);
  REQUIRE(csv.find("fedavg") != std::string::npos);
  const std::string md = read_file(runs + "/report.md");
  REQUIRE(md.find("## centralized") != std::string::npos);
  REQUIRE(md.find("## fedprox") != std::string::npos);
  const std::string csv_before = csv;
  REQUIRE(run("report --runs " + runs) == 0);
  REQUIRE(read_file(runs + "/report.csv") == csv_before);
}

TEST_CASE("EMOFED_RUN_ROOT supplies the default run root") {
  const std::string dir = work_dir("envroot");
  std::filesystem::create_directories(dir + "/solo");
  const ojson report{{"kind", "central"},
                     {"config", ExperimentConfig{}.to_json()},
                     {"test_metrics",
                      ojson{{"precision", 0.5},
                            {"recall", 0.5},
                            {"f1_weighted", 0.5},
                            {"accuracy", 0.5}}}};
  write_file(dir + "/solo/report.json", report.dump(2));
  const std::string cmd = "EMOFED_RUN_ROOT=" + dir + " " + EMOFED_CLI_PATH + " report >/dev/null";
  REQUIRE(WEXITSTATUS(std::system(cmd.c_str())) == 0);
  REQUIRE(std::filesystem::exists(dir + "/report.csv"));
}

TEST_CASE("config errors exit with code 2, data errors with 3") {
  const std::string dir = work_dir("errors");
  write_file(dir + "/bad.json", "{\"definitely_unknown\": 1}");
  REQUIRE(run("synth --config " + dir + "/bad.json --out " + dir + "/x.jsonl 2>/dev/null") == 2);
  REQUIRE(run("synth --config " + dir + "/missing.json --out " + dir +
              "/x.jsonl 2>/dev/null") == 3);
  REQUIRE(run("prep --input " + dir + "/nope.jsonl --table " + EMOFED_DATA_DIR +
              "/emoji_categories.csv --out " + dir + "/x.jsonl 2>/dev/null") == 3);
  REQUIRE(run("fed 2>/dev/null") == 2);  // missing required --splits
  REQUIRE(run("definitely-not-a-subcommand 2>/dev/null") == 2);
}
