#include "commands.hpp"

#include <atomic>
#include <cstdlib>
#include <fstream>
#include <iostream>
#include <mutex>
#include <thread>

#include "CLI11.hpp"
#include "config.hpp"
#include "tasks.hpp"
#include "verify.hpp"

namespace hacklab::app {

namespace fs = std::filesystem;

namespace {

void write_json(const fs::path& p, const json& j) {
  if (p.has_parent_path()) fs::create_directories(p.parent_path());
  std::ofstream out(p, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write " + p.string());
  out << j.dump(2) << "\n";
}

int config_error(const ConfigError& e) {
  std::cerr << "config error: " << e.what() << "\n";
  return kExitUsage;
}

}  // namespace

std::size_t thread_budget() {
  if (const char* env = std::getenv("HACKLAB_THREADS")) {
    const long v = std::strtol(env, nullptr, 10);
    if (v > 0) return static_cast<std::size_t>(v);
  }
  return std::max(1u, std::thread::hardware_concurrency());
}

int cmd_train(const std::string& config_path, std::optional<std::uint64_t> seed, std::optional<fs::path> out) {
  RunConfig c;
  try {
    c = load_config(config_path);
  } catch (const ConfigError& e) {
    return config_error(e);
  }
  if (seed) c.seed = *seed;
  const fs::path dir = out ? *out : fs::path(c.out);
  const TrainOutcome o = run_training(c, dir);
  if (o.diverged) {
    std::cerr << "run diverged: " << o.error << "\n";
    return kExitDiverged;
  }
  std::cout << "final_proxy=" << format_number(o.summary.final_proxy) << " final_gold="
            << format_number(o.summary.final_gold) << " peak_gold=" << format_number(o.summary.peak_gold)
            << " hacking=" << (o.summary.hacking ? "true" : "false") << "\n";
  return kExitOk;
}

int cmd_verify(const std::string& suite, std::size_t n, std::uint64_t seed, const fs::path& out) {
  if (!is_suite(suite)) {
    std::cerr << "unknown suite '" << suite << "'\n";
    return kExitUsage;
  }
  if (n < 1000) {
    std::cerr << "--n must be >= 1000\n";
    return kExitUsage;
  }
  const auto reports = run_suite(suite, n, seed);
  json arr = json::array();
  bool ok = true;
  for (const auto& r : reports) {
    arr.push_back(json::parse(r.to_json()));
    ok = ok && r.passes();
    std::cout << (r.vacuous() ? "VACUOUS " : (r.satisfied() ? "PASS    " : "FAIL    ")) << r.name()
              << " lhs=" << format_number(r.lhs()) << " rhs=" << format_number(r.rhs())
              << " se=" << format_number(r.se()) << "\n";
  }
  write_json(out / "reports.json", {{"suite", suite}, {"n", n}, {"seed", seed}, {"all_passed", ok}, {"reports", arr}});
  return ok ? kExitOk : kExitFailed;
}

int cmd_probe(const std::string& config_path, const fs::path& checkpoint, std::uint64_t seed, const fs::path& out) {
  RunConfig c;
  try {
    c = load_config(config_path);
  } catch (const ConfigError& e) {
    return config_error(e);
  }
  ProbeResult r;
  try {
    r = probe_checkpoint(c, checkpoint, seed);
  } catch (const std::invalid_argument& e) {
    std::cerr << "probe: " << e.what() << "\n";
    return kExitUsage;
  }
  const json j = {{"checkpoint", checkpoint.string()},
                  {"step", r.step},
                  {"sharpness", r.sharpness},
                  {"bt_loss", r.bt_loss.value},
                  {"bt_loss_se", r.bt_loss.se},
                  {"label_entropy", r.label_entropy.value},
                  {"proxy_reward", r.proxy_reward},
                  {"gold_reward", r.gold_reward}};
  write_json(out / "probe.json", j);
  std::cout << j.dump() << "\n";
  return kExitOk;
}

int cmd_sweep(const std::string& config_path, const std::string& param, const std::vector<double>& values,
              std::optional<std::uint64_t> seed, const fs::path& out) {
  if (values.empty()) {
    std::cerr << "sweep: --values is empty\n";
    return kExitUsage;
  }
  std::vector<RunConfig> configs;
  try {
    const RunConfig base = load_config(config_path);
    for (double v : values) {
      json full = config_to_json(base);
      set_numeric(full, param, v);
      RunConfig c = parse_config(full);
      if (seed) c.seed = *seed;
      configs.push_back(std::move(c));
    }
  } catch (const ConfigError& e) {
    return config_error(e);
  }

  struct Row {
    std::string status = "error";
    TrainOutcome outcome;
  };
  std::vector<Row> rows(values.size());
  std::atomic<std::size_t> next{0};
  std::mutex log_mu;
  const auto worker = [&] {
    for (std::size_t i = next++; i < values.size(); i = next++) {
      const fs::path dir = out / ("value_" + std::to_string(i));
      try {
        rows[i].outcome = run_training(configs[i], dir);
        rows[i].status = rows[i].outcome.diverged ? "diverged" : "ok";
      } catch (const std::exception& e) {
        std::lock_guard lock(log_mu);
        std::cerr << "sweep value " << format_number(values[i]) << " failed: " << e.what() << "\n";
      }
    }
  };
  const std::size_t threads = std::min(thread_budget(), values.size());
  std::vector<std::thread> pool;
  for (std::size_t t = 1; t < threads; ++t) pool.emplace_back(worker);
  worker();
  for (auto& th : pool) th.join();

  fs::create_directories(out);
  std::ofstream csv(out / "sweep.csv", std::ios::binary);
  csv << "value,final_gold,final_proxy,final_kl_to_init,hacking,status\n";
  for (std::size_t i = 0; i < values.size(); ++i) {
    const auto& o = rows[i].outcome;
    const bool have = rows[i].status == "ok";
    const double nan = std::numeric_limits<double>::quiet_NaN();
    csv << format_number(values[i]) << "," << format_number(have ? o.summary.final_gold : nan) << ","
        << format_number(have ? o.summary.final_proxy : nan) << "," << format_number(have ? o.final_kl_to_init : nan)
        << "," << (have ? (o.summary.hacking ? "true" : "false") : "") << "," << rows[i].status << "\n";
  }
  std::cout << "wrote " << (out / "sweep.csv").string() << "\n";
  return kExitOk;
}

int cmd_plot(const std::vector<fs::path>& inputs, const std::string& kind, const std::vector<std::string>& series,
             bool post_peak, const fs::path& out) {
  PlotOptions opt;
  if (kind == "traces") {
    opt.kind = PlotKind::traces;
  } else if (kind == "frontier") {
    opt.kind = PlotKind::frontier;
  } else if (kind == "correlation") {
    opt.kind = PlotKind::correlation;
  } else {
    std::cerr << "unknown plot kind '" << kind << "'\n";
    return kExitUsage;
  }
  opt.series = series;
  opt.post_peak = post_peak;
  try {
    const std::size_t n = make_plot(inputs, opt, out);
    std::cout << "wrote " << out.string() << ".csv (" << n << " rows)\n";
  } catch (const SeriesError& e) {
    std::cerr << "plot: " << e.what() << "\n";
    return kExitUsage;
  }
  return kExitOk;
}

int run_cli(int argc, const char* const* argv) {
  CLI::App app{"hacklab: reward-hacking experiments and bound checks"};
  app.require_subcommand(1);

  std::string config, suite = "all", param, kind = "traces";
  std::optional<std::uint64_t> seed;
  std::string out;
  std::size_t n = 100000;
  std::vector<std::string> value_text, series, inputs;
  std::string checkpoint;
  bool post_peak = false;

  auto* train = app.add_subcommand("train", "run one training job from a config");
  train->add_option("--config", config, "run config (JSON)")->required();
  train->add_option("--seed", seed, "override the config seed");
  train->add_option("--out", out, "output directory (default: config 'out')");

  auto* verify = app.add_subcommand("verify", "run the bound-verification suite");
  verify->add_option("--suite", suite, "all|pairwise|gradient|bt_bound|resets|fd_estimator");
  verify->add_option("--n", n, "Monte-Carlo sample count (>= 1000)");
  verify->add_option("--seed", seed, "seed (default 1)");
  verify->add_option("--out", out, "directory for reports.json (default .)");

  auto* probe = app.add_subcommand("probe", "sharpness and BT loss of a checkpoint");
  probe->add_option("--config", config, "config the checkpoint was trained with")->required();
  probe->add_option("--checkpoint", checkpoint, "checkpoint file")->required();
  probe->add_option("--seed", seed, "measurement seed (default 0)");
  probe->add_option("--out", out, "directory for probe.json (default .)");

  auto* sweep = app.add_subcommand("sweep", "one run per value of a numeric setting");
  sweep->add_option("--config", config, "base config")->required();
  sweep->add_option("--param", param, "dotted key, e.g. regularizer.gamma")->required();
  sweep->add_option("--values", value_text, "comma-separated values")->required()->delimiter(',')->expected(0, -1);
  sweep->add_option("--seed", seed, "override the config seed for every run");
  sweep->add_option("--out", out, "sweep directory")->required();

  auto* plot = app.add_subcommand("plot", "CSV + SVG from run artifacts");
  plot->add_option("--kind", kind, "traces|frontier|correlation");
  plot->add_option("--series", series, "comma-separated series names")->delimiter(',');
  plot->add_flag("--post-peak", post_peak, "correlation: start at the gold peak");
  plot->add_option("--out", out, "output path prefix")->required();
  plot->add_option("inputs", inputs, "metrics.jsonl files, run dirs, summaries or sweep.csv")->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return kExitUsage;
  }

  try {
    if (*train) return cmd_train(config, seed, out.empty() ? std::nullopt : std::optional<fs::path>(out));
    if (*verify) return cmd_verify(suite, n, seed.value_or(1), out.empty() ? fs::path(".") : fs::path(out));
    if (*probe) return cmd_probe(config, checkpoint, seed.value_or(0), out.empty() ? fs::path(".") : fs::path(out));
    if (*sweep) {
      std::vector<double> values;
      for (const auto& t : value_text) {
        if (t.empty()) continue;
        std::size_t used = 0;
        double v = 0.0;
        try {
          v = std::stod(t, &used);
        } catch (const std::logic_error&) {
        }
        if (used != t.size()) {
          std::cerr << "sweep: '" << t << "' is not a number\n";
          return kExitUsage;
        }
        values.push_back(v);
      }
      return cmd_sweep(config, param, values, seed, out);
    }
    if (*plot) {
      std::vector<fs::path> paths(inputs.begin(), inputs.end());
      return cmd_plot(paths, kind, series, post_peak, out);
    }
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitFailed;
  }
  return kExitUsage;
}

}  // namespace hacklab::app
