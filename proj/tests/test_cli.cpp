// Copyright (c) 2026 sclfish contributors
// SPDX-License-Identifier: Apache-2.0
//
// End-to-end tests of the command-line tool, driven through std::system on
// the built binary (SCLFISH_CLI_PATH is injected by the build).
#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <sys/wait.h>
#include <unistd.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include "json.hpp"

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

const std::string kCli = SCLFISH_CLI_PATH;

int run(const std::string& args) {
  const int status = std::system((kCli + " " + args).c_str());
  if (status == -1) return -1;
  return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
}

std::string slurp(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  REQUIRE(in.good());
  std::ostringstream out;
  out << in.rdbuf();
  return out.str();
}

std::size_t count_lines(const std::string& text) {
  std::size_t n = 0;
  for (char c : text)
    if (c == '\n') ++n;
  return n;
}

// One scratch directory per test run, with the shared corpus generated once.
struct Workspace {
  fs::path dir;
  fs::path data;

  Workspace() {
    dir = fs::temp_directory_path() /
          ("sclfish_cli_test_" + std::to_string(::getpid()));
    fs::remove_all(dir);
    fs::create_directories(dir);
    data = dir / "data.jsonl";
    REQUIRE(run("synth --out " + data.string() +
                " --seed 3 --samples-per-platform 120 --task-vocab 32"
                " --words-per-doc 8 > /dev/null") == 0);
  }
};

Workspace& ws() {
  static Workspace w;
  return w;
}

std::string train_cmd_base(const std::string& out_dir) {
  return "train --data " + ws().data.string() + " --out " + out_dir +
         " --train-platforms synth0,synth1 --val-platform synth2"
         " --vocab 512 --hidden1 16 --hidden2 8 --epochs 2 --seed 11";
}

}  // namespace

TEST_CASE("synth output is a deterministic labeled corpus") {
  const fs::path a = ws().dir / "synth_a.jsonl";
  const fs::path b = ws().dir / "synth_b.jsonl";
  const fs::path c = ws().dir / "synth_c.jsonl";
  CHECK(run("synth --out " + a.string() +
            " --seed 5 --samples-per-platform 30 > /dev/null") == 0);
  CHECK(run("synth --out " + b.string() +
            " --seed 5 --samples-per-platform 30 > /dev/null") == 0);
  CHECK(run("synth --out " + c.string() +
            " --seed 6 --samples-per-platform 30 > /dev/null") == 0);
  const std::string text_a = slurp(a);
  CHECK(text_a == slurp(b));
  CHECK(text_a != slurp(c));
  CHECK(count_lines(text_a) == 120);  // 3 train platforms + heldout

  // Every line parses and carries the three fields.
  std::istringstream lines(text_a);
  std::string line;
  while (std::getline(lines, line)) {
    const json doc = json::parse(line);
    CHECK(doc.at("text").is_string());
    CHECK(doc.at("label").is_number_integer());
    CHECK(doc.at("platform").is_string());
  }
}

TEST_CASE("train writes the full artifact set") {
  const fs::path out = ws().dir / "run_artifacts";
  REQUIRE(run(train_cmd_base(out.string()) +
              " --algo scl-fish > /dev/null") == 0);

  CHECK(fs::exists(out / "checkpoint.bin"));
  CHECK(fs::exists(out / "resolved.cfg"));
  CHECK(fs::exists(out / "trace.jsonl"));

  const json manifest = json::parse(slurp(out / "manifest.json"));
  CHECK(manifest.at("algo") == "scl-fish");
  CHECK(manifest.at("train_platforms") ==
        json::array({"synth0", "synth1"}));
  CHECK(manifest.at("val_platform") == "synth2");
  CHECK(manifest.at("test_platforms") == json::array({"heldout"}));
  CHECK(manifest.at("selection").at("criterion") == "val_macro_f1");
  CHECK(manifest.at("selection").at("history").size() == 2);
  CHECK(manifest.at("dims").at("vocab") == 512);
  CHECK(manifest.at("train_metrics").at("platforms").size() == 2);
  CHECK(manifest.at("val_metrics").at("aggregate").at("macro_f1")
            .get<double>() > 0.5);
  CHECK(manifest.at("test_metrics").at("platforms").size() == 1);

  // Two platforms, 240 training docs, batches of 8: 15 meta iterations per
  // epoch; every line carries per-platform losses plus the alignment stat.
  const std::string trace = slurp(out / "trace.jsonl");
  CHECK(count_lines(trace) == 30);
  std::istringstream lines(trace);
  std::string line;
  while (std::getline(lines, line)) {
    const json rec = json::parse(line);
    CHECK(rec.at("platform_loss").size() == 2);
    CHECK(rec.at("scl_loss").is_number());
    CHECK(rec.at("gip_hat").is_number());
  }
}

TEST_CASE("erm trace marks unused statistics as null") {
  const fs::path out = ws().dir / "run_erm";
  REQUIRE(run(train_cmd_base(out.string()) + " --algo erm > /dev/null") == 0);
  const std::string trace = slurp(out / "trace.jsonl");
  CHECK(count_lines(trace) == 60);  // ceil(240 / 8) batches x 2 epochs
  std::istringstream lines(trace);
  std::string line;
  while (std::getline(lines, line)) {
    const json rec = json::parse(line);
    CHECK(rec.at("platform_loss").size() == 1);
    CHECK(rec.at("scl_loss").is_null());
    CHECK(rec.at("gip_hat").is_null());
  }
}

TEST_CASE("a resolved config reproduces the run byte for byte") {
  const fs::path out1 = ws().dir / "run_cfg1";
  const fs::path out2 = ws().dir / "run_cfg2";
  REQUIRE(run(train_cmd_base(out1.string()) +
              " --algo fish > /dev/null") == 0);
  REQUIRE(run("train --config " + (out1 / "resolved.cfg").string() +
              " --out " + out2.string() + " > /dev/null") == 0);
  CHECK(slurp(out1 / "checkpoint.bin") == slurp(out2 / "checkpoint.bin"));
  CHECK(slurp(out1 / "trace.jsonl") == slurp(out2 / "trace.jsonl"));
}

TEST_CASE("eval reports metrics for the requested platforms") {
  const fs::path out = ws().dir / "run_eval";
  REQUIRE(run(train_cmd_base(out.string()) +
              " --algo fish > /dev/null") == 0);
  const fs::path report_path = ws().dir / "eval_report.json";
  REQUIRE(run("eval --model " + (out / "checkpoint.bin").string() +
              " --data " + ws().data.string() +
              " --platforms heldout --out " + report_path.string()) == 0);
  const json report = json::parse(slurp(report_path));
  CHECK(report.at("platforms").size() == 1);
  CHECK(report.at("platforms")[0].at("platform") == "heldout");
  CHECK(report.at("platforms")[0].at("n") == 120);
  CHECK(report.at("aggregate").at("accuracy").get<double>() >= 0.0);

  // Balanced scoring keeps min class count per platform (still scores).
  const fs::path bal_path = ws().dir / "eval_balanced.json";
  REQUIRE(run("eval --model " + (out / "checkpoint.bin").string() +
              " --data " + ws().data.string() +
              " --balanced --balanced-seed 4 --out " + bal_path.string()) ==
          0);
  const json balanced = json::parse(slurp(bal_path));
  CHECK(balanced.at("platforms").size() == 4);
  for (const auto& p : balanced.at("platforms"))
    CHECK(p.at("n").get<int>() % 2 == 0);
}

TEST_CASE("export-embeddings writes one row per document") {
  const fs::path out = ws().dir / "run_export";
  REQUIRE(run(train_cmd_base(out.string()) + " --algo erm > /dev/null") == 0);
  const fs::path csv = ws().dir / "emb.csv";
  REQUIRE(run("export-embeddings --model " + (out / "checkpoint.bin").string() +
              " --data " + ws().data.string() + " --out " + csv.string()) ==
          0);
  const std::string text = slurp(csv);
  CHECK(count_lines(text) == 481);  // header + 480 documents
  CHECK(text.rfind("platform,label,e_0,", 0) == 0);
}

TEST_CASE("diagnostics emit parseable reports") {
  const fs::path cosine_path = ws().dir / "cosine.json";
  REQUIRE(run("diagnose cosine --alphas 1e-2,1e-4 > " +
              cosine_path.string()) == 0);
  const json cosine = json::parse(slurp(cosine_path));
  CHECK(cosine.at("results").size() == 2);
  CHECK(cosine.at("results")[1].at("cosine").get<double>() >= 0.99);

  const fs::path gip_path = ws().dir / "gip.json";
  REQUIRE(run("diagnose gip --data " + ws().data.string() +
              " --vocab 512 --hidden1 16 --hidden2 8 --seed 2 > " +
              gip_path.string()) == 0);
  const json gip = json::parse(slurp(gip_path));
  CHECK(gip.at("platforms").size() == 4);
  CHECK(gip.at("pair_dots").size() == 6);
  CHECK(std::abs(gip.at("identity_gap").get<double>()) < 1e-9);
}

TEST_CASE("failures map to the documented exit codes") {
  const std::string quiet = " > /dev/null 2>&1";

  SUBCASE("usage and configuration problems exit 2") {
    CHECK(run(quiet) == 2);  // no subcommand
    CHECK(run("train --data d --out o" + quiet) == 2);  // missing required
    CHECK(run("train --data d --out o --train-platforms a --algo bogus" +
              quiet) == 2);
    CHECK(run("train --data d --out o --train-platforms a --lr -1" + quiet) ==
          2);
    CHECK(run("diagnose cosine --toy unknown" + quiet) == 2);
  }

  SUBCASE("data problems exit 3") {
    const std::string out_x = " --out " + (ws().dir / "x").string();
    CHECK(run("train --data missing.jsonl" + out_x +
              " --train-platforms synth0" + quiet) == 3);
    CHECK(run("train --data " + ws().data.string() + out_x +
              " --train-platforms synth0,nope" + quiet) == 3);
    CHECK(run("train --data " + ws().data.string() + out_x +
              " --train-platforms synth0,synth1 --val-platform synth0" +
              quiet) == 3);

    const fs::path garbage = ws().dir / "garbage.bin";
    std::ofstream(garbage) << "this is not a checkpoint";
    CHECK(run("eval --model " + garbage.string() + " --data " +
              ws().data.string() + quiet) == 3);

    const fs::path malformed = ws().dir / "malformed.jsonl";
    std::ofstream(malformed) << "{\"text\": \"ok\", \"label\": 0, "
                                "\"platform\": \"p\"}\nnot json\n";
    CHECK(run("diagnose gip --data " + malformed.string() + quiet) == 3);
  }

  SUBCASE("numeric blowups exit 4") {
    CHECK(run(train_cmd_base((ws().dir / "x").string()) +
              " --lr 1e308 --algo erm" + quiet) == 4);
  }
}
