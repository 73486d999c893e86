#pragma once

#include <cstdint>
#include <optional>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "json.hpp"
#include "hacklab/landscape.hpp"
#include "hacklab/sequence_rewards.hpp"
#include "hacklab/trainer.hpp"

namespace hacklab::app {

using nlohmann::json;

// Schema violation; key_path() names the offending key ("trainer.lr").
class ConfigError : public std::runtime_error {
 public:
  ConfigError(const std::string& key_path, const std::string& what)
      : std::runtime_error(key_path + ": " + what), key_path_(key_path) {}
  const std::string& key_path() const { return key_path_; }

 private:
  std::string key_path_;
};

enum class TaskKind { two_basin, sequence_rm, sequence_rule, sequence_judge, bandit };

std::string task_name(TaskKind t);

struct PolicyConfig {
  std::vector<std::size_t> hidden{16, 16};
  double output_scale = 1.0;
  // Gaussian policies only.
  double sigma = 0.3;
  std::size_t num_states = 4;
  std::size_t state_dim = 4;
  std::optional<Vec> init_center;
};

struct RewardModelConfig {
  std::vector<std::size_t> hidden{16};
  std::size_t pairs = 2000;
  std::size_t epochs = 50;
  double lr = 0.1;
  std::size_t batch_size = 32;
  Labeling labeling = Labeling::stochastic;
};

struct JudgeConfig {
  std::pair<int, int> trigger{15, 15};
  double bonus = 8.0;
};

struct BanditConfig {
  std::vector<double> rewards{1.0, 0.5, 0.0};
  std::optional<std::vector<double>> gold_rewards;
};

struct RunConfig {
  TaskKind task = TaskKind::two_basin;
  std::uint64_t seed = 0;
  std::string out = "runs/default";
  PolicyConfig policy;
  TwoBasinParams landscape;
  SequenceTask sequence;
  JudgeConfig judge;
  RewardModelConfig reward_model;
  BanditConfig bandit;
  TrainerConfig trainer;
  std::size_t checkpoint_every = 0;  // 0: final checkpoint only
};

// Strict parse: unknown keys, wrong types, and out-of-range values throw
// ConfigError with the key path.
RunConfig parse_config(const json& j);
RunConfig load_config(const std::string& path);
json config_to_json(const RunConfig& c);

// Sets a dotted numeric key in a raw config tree ("regularizer.gamma").
// Throws ConfigError when the path does not name a numeric setting.
void set_numeric(json& j, const std::string& dotted, double value);

}  // namespace hacklab::app
