#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

#include "commands.hpp"
#include "config.hpp"
#include "doctest.h"

namespace fs = std::filesystem;
using hacklab::app::json;

namespace {

fs::path scratch(const std::string& name) {
  const fs::path p = fs::temp_directory_path() / "hacklab_cli_tests" / name;
  fs::remove_all(p);
  fs::create_directories(p);
  return p;
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream s;
  s << in.rdbuf();
  return s.str();
}

std::vector<std::string> lines(const fs::path& p) {
  std::ifstream in(p);
  std::vector<std::string> out;
  for (std::string l; std::getline(in, l);) out.push_back(l);
  return out;
}

fs::path write_config(const fs::path& dir, const std::string& name, const json& j) {
  const fs::path p = dir / name;
  std::ofstream(p) << j.dump(2);
  return p;
}

struct Cli {
  int code = 0;
  std::string err;
};

// Runs the CLI in-process and captures stderr.
Cli cli(std::vector<std::string> args) {
  args.insert(args.begin(), "hacklab");
  std::vector<const char*> argv;
  for (const auto& a : args) argv.push_back(a.c_str());
  std::ostringstream err, out;
  auto* old_err = std::cerr.rdbuf(err.rdbuf());
  auto* old_out = std::cout.rdbuf(out.rdbuf());
  const int code = hacklab::app::run_cli(static_cast<int>(argv.size()), argv.data());
  std::cerr.rdbuf(old_err);
  std::cout.rdbuf(old_out);
  return {code, err.str()};
}

json two_basin(std::size_t steps) {
  return {{"task", "two_basin"}, {"seed", 3}, {"trainer", {{"steps", steps}, {"eval_rollouts", 4}}}};
}

std::vector<std::vector<std::string>> csv_rows(const fs::path& p) {
  std::vector<std::vector<std::string>> rows;
  for (const auto& l : lines(p)) {
    if (l.empty() || l[0] == '#') continue;
    std::vector<std::string> cells;
    std::stringstream ss(l);
    for (std::string c; std::getline(ss, c, ',');) cells.push_back(c);
    rows.push_back(cells);
  }
  return rows;
}

std::string configs_dir() { return HACKLAB_CONFIG_DIR; }

}  // namespace

TEST_SUITE("cli") {
  TEST_CASE("train writes one metrics line per step and the run artifacts") {
    const fs::path dir = scratch("train");
    const fs::path cfg = write_config(dir, "c.json", two_basin(200));
    const Cli r = cli({"train", "--config", cfg.string(), "--out", (dir / "run").string()});
    REQUIRE(r.code == 0);
    CHECK(lines(dir / "run" / "metrics.jsonl").size() == 200);
    CHECK(fs::exists(dir / "run" / "checkpoints" / "final.json"));
    CHECK(fs::exists(dir / "run" / "run.log"));
    const json s = json::parse(slurp(dir / "run" / "summary.json"));
    for (const char* key : {"final_proxy", "final_gold", "peak_gold", "hacking", "final_kl_to_init"})
      CHECK(s.contains(key));
    CHECK(s["steps_completed"] == 200);
  }

  TEST_CASE("same config and seed give byte-identical artifacts") {
    const fs::path dir = scratch("determinism");
    json c = two_basin(60);
    c["diagnostics"] = {{"every", 20}};
    const fs::path cfg = write_config(dir, "c.json", c);
    REQUIRE(cli({"train", "--config", cfg.string(), "--out", (dir / "a").string()}).code == 0);
    REQUIRE(cli({"train", "--config", cfg.string(), "--out", (dir / "b").string()}).code == 0);
    for (const char* f : {"metrics.jsonl", "summary.json", "config.json", "checkpoints/final.json"})
      CHECK(slurp(dir / "a" / f) == slurp(dir / "b" / f));
    REQUIRE(cli({"train", "--config", cfg.string(), "--seed", "4", "--out", (dir / "c").string()}).code == 0);
    CHECK(slurp(dir / "a" / "metrics.jsonl") != slurp(dir / "c" / "metrics.jsonl"));
  }

  TEST_CASE("schema violations exit 2 naming the key path") {
    const fs::path dir = scratch("schema");
    json c = two_basin(10);
    c["trainer"]["lrr"] = 0.1;
    Cli r = cli({"train", "--config", write_config(dir, "typo.json", c).string()});
    CHECK(r.code == 2);
    CHECK(r.err.find("trainer.lrr") != std::string::npos);

    c = two_basin(10);
    c["regularizer"] = {{"kind", "gr"}, {"gamma", "big"}};
    r = cli({"train", "--config", write_config(dir, "type.json", c).string()});
    CHECK(r.code == 2);
    CHECK(r.err.find("regularizer.gamma") != std::string::npos);

    c = two_basin(10);
    c["task"] = "chess";
    r = cli({"train", "--config", write_config(dir, "task.json", c).string()});
    CHECK(r.code == 2);
    CHECK(r.err.find("task") != std::string::npos);

    CHECK(cli({"train", "--config", (dir / "missing.json").string()}).code == 2);
    CHECK(cli({"frobnicate"}).code == 2);
  }

  TEST_CASE("divergence exits 3 and is recorded") {
    const fs::path dir = scratch("diverge");
    const json c = {{"task", "bandit"}, {"bandit", {{"rewards", {1e308, -1e308}}}}, {"trainer", {{"steps", 5}}}};
    const Cli r = cli({"train", "--config", write_config(dir, "c.json", c).string(), "--out", (dir / "run").string()});
    CHECK(r.code == 3);
    const json s = json::parse(slurp(dir / "run" / "summary.json"));
    CHECK(s["status"] == "diverged");
    CHECK(s.contains("error"));
  }

  TEST_CASE("verify rejects unknown suites and checks resets") {
    const fs::path dir = scratch("verify");
    CHECK(cli({"verify", "--suite", "foo"}).code == 2);
    CHECK(cli({"verify", "--suite", "resets", "--n", "10"}).code == 2);
    REQUIRE(cli({"verify", "--suite", "resets", "--n", "1000", "--out", dir.string()}).code == 0);
    const json rep = json::parse(slurp(dir / "reports.json"));
    CHECK(rep["all_passed"] == true);
    REQUIRE(rep["reports"].size() >= 7);
    for (const auto& r : rep["reports"]) CHECK(r["lhs"].get<double>() <= 1e-3);
  }

  TEST_CASE("probe reads a checkpoint") {
    const fs::path dir = scratch("probe");
    const fs::path cfg = write_config(dir, "c.json", two_basin(20));
    REQUIRE(cli({"train", "--config", cfg.string(), "--out", (dir / "run").string()}).code == 0);
    REQUIRE(cli({"probe", "--config", cfg.string(), "--checkpoint", (dir / "run/checkpoints/final.json").string(),
                 "--out", (dir / "p").string()})
                .code == 0);
    const json p = json::parse(slurp(dir / "p" / "probe.json"));
    CHECK(p["step"] == 20);
    CHECK(p["sharpness"].get<double>() >= 0.0);
    CHECK(cli({"probe", "--config", cfg.string(), "--checkpoint", (dir / "nope.json").string()}).code != 0);
  }

  TEST_CASE("sweep writes one row per value and a sorted frontier") {
    const fs::path dir = scratch("sweep");
    json c = two_basin(40);
    c["regularizer"] = {{"kind", "kl"}, {"beta", 0.1}};
    const fs::path cfg = write_config(dir, "c.json", c);
    CHECK(cli({"sweep", "--config", cfg.string(), "--param", "regularizer.beta", "--values", "", "--out",
               (dir / "empty").string()})
              .code == 2);
    CHECK(cli({"sweep", "--config", cfg.string(), "--param", "regularizer.nope", "--values", "1", "--out",
               (dir / "bad").string()})
              .code == 2);
    REQUIRE(cli({"sweep", "--config", cfg.string(), "--param", "regularizer.beta", "--values", "1,0.01,0.1",
                 "--out", (dir / "s").string()})
                .code == 0);
    const auto rows = csv_rows(dir / "s" / "sweep.csv");
    REQUIRE(rows.size() == 4);
    CHECK(rows[0] == std::vector<std::string>{"value", "final_gold", "final_proxy", "final_kl_to_init", "hacking",
                                               "status"});
    CHECK(rows[1][0] == "1");
    CHECK(rows[2][0] == "0.01");
    for (std::size_t i = 1; i < rows.size(); ++i) CHECK(rows[i][5] == "ok");
    for (std::size_t i = 0; i < 3; ++i) CHECK(fs::exists(dir / "s" / ("value_" + std::to_string(i)) / "summary.json"));

    REQUIRE(cli({"plot", "--kind", "frontier", "--out", (dir / "frontier").string(), (dir / "s/sweep.csv").string()})
                .code == 0);
    const auto f = csv_rows(dir / "frontier.csv");
    REQUIRE(f.size() == 4);
    for (std::size_t i = 2; i < f.size(); ++i) CHECK(std::stod(f[i - 1][0]) <= std::stod(f[i][0]));
  }

  TEST_CASE("plot contracts") {
    const fs::path dir = scratch("plot");
    json c = two_basin(30);
    c["diagnostics"] = {{"every", 2}};
    const fs::path cfg = write_config(dir, "c.json", c);
    REQUIRE(cli({"train", "--config", cfg.string(), "--out", (dir / "run").string()}).code == 0);
    const std::string metrics = (dir / "run" / "metrics.jsonl").string();

    REQUIRE(cli({"plot", "--kind", "traces", "--out", (dir / "t").string(), metrics}).code == 0);
    const auto t = csv_rows(dir / "t.csv");
    REQUIRE(t.size() == 31);
    CHECK(t[0] == std::vector<std::string>{"step", "proxy_reward", "gold_reward", "grad_norm"});
    CHECK(fs::exists(dir / "t.svg"));

    REQUIRE(cli({"plot", "--kind", "correlation", "--out", (dir / "c").string(), metrics}).code == 0);
    CHECK(lines(dir / "c.csv").front().rfind("# pearson=", 0) == 0);

    const Cli r = cli({"plot", "--kind", "traces", "--series", "proxy_reward,wibble", "--out",
                       (dir / "m").string(), metrics});
    CHECK(r.code == 2);
    CHECK(r.err.find("wibble") != std::string::npos);
    CHECK(cli({"plot", "--kind", "pie", "--out", (dir / "p").string(), metrics}).code == 2);
  }

  TEST_CASE("shipped configs parse") {
    for (const auto& e : fs::directory_iterator(configs_dir())) {
      CAPTURE(e.path().string());
      CHECK_NOTHROW(hacklab::app::load_config(e.path().string()));
    }
  }

  TEST_CASE("judge configs: no-reg hacks, GR does not, and gamma helps gold") {
    const fs::path dir = scratch("judge");
    REQUIRE(cli({"train", "--config", configs_dir() + "/judge_noreg.json", "--out", (dir / "nr").string()}).code == 0);
    REQUIRE(cli({"train", "--config", configs_dir() + "/judge_gr.json", "--out", (dir / "gr").string()}).code == 0);
    const json nr = json::parse(slurp(dir / "nr" / "summary.json"));
    const json gr = json::parse(slurp(dir / "gr" / "summary.json"));
    CHECK(nr["hacking"] == true);
    CHECK(gr["hacking"] == false);

    REQUIRE(cli({"sweep", "--config", configs_dir() + "/judge_gr.json", "--param", "regularizer.gamma", "--values",
                 "0,0.1,1", "--out", (dir / "s").string()})
                .code == 0);
    const auto rows = csv_rows(dir / "s" / "sweep.csv");
    REQUIRE(rows.size() == 4);
    const double at_zero = std::stod(rows[1][1]);
    CHECK(at_zero <= std::max(std::stod(rows[2][1]), std::stod(rows[3][1])));
  }
}
