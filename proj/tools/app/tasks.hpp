#pragma once

#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "config.hpp"

namespace hacklab::app {

struct TrainOutcome {
  std::vector<RunRecord> records;
  RunSummary summary;
  double final_kl_to_init = 0.0;
  bool diverged = false;
  std::string error;
  std::optional<ParamVector> final_params;
  json extra;  // task-specific facts, e.g. reward-model training losses
};

// Runs one training job. With a non-empty `out`, writes config.json,
// metrics.jsonl (one line per completed step, flushed as it goes),
// checkpoints/, summary.json and a timestamped run.log sidecar.
TrainOutcome run_training(const RunConfig& c, const std::filesystem::path& out);

json summary_to_json(const RunConfig& c, const TrainOutcome& o);

struct ProbeResult {
  std::int64_t step = 0;
  double sharpness = 0.0;
  Estimate bt_loss;
  Estimate label_entropy;
  double proxy_reward = 0.0;
  double gold_reward = 0.0;
};

// Sharpness and BT-loss-under-policy of a checkpoint, measured with the
// run's proxy and gold. `seed` drives the measurement streams.
ProbeResult probe_checkpoint(const RunConfig& c, const std::filesystem::path& checkpoint, std::uint64_t seed);
ProbeResult probe_params(const RunConfig& c, const ParamVector& params, std::int64_t step, std::uint64_t seed);

}  // namespace hacklab::app
