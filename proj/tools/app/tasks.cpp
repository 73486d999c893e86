#include "tasks.hpp"

#include <chrono>
#include <ctime>
#include <fstream>
#include <iomanip>
#include <sstream>
#include <type_traits>

#include "hacklab/bt.hpp"
#include "hacklab/checkpoint.hpp"
#include "hacklab/diagnostics.hpp"
#include "hacklab/reward_model.hpp"
#include "hacklab/sequence_policy.hpp"

namespace hacklab::app {

namespace fs = std::filesystem;

namespace {

// Initialization streams sit far from the trainer's child(0..3).
constexpr std::uint64_t kPolicyStream = 100;
constexpr std::uint64_t kRmPairStream = 101;
constexpr std::uint64_t kRmTrainStream = 102;
constexpr std::uint64_t kKlStream = 103;

GaussianPolicy make_gaussian(const RunConfig& c) {
  Rng rng = Rng(c.seed).child(kPolicyStream);
  std::vector<Vec> states;
  for (std::size_t s = 0; s < c.policy.num_states; ++s) states.push_back(gaussian_sample(rng, c.policy.state_dim, 1.0));
  GaussianPolicy p = GaussianPolicy::make(std::move(states), c.policy.hidden, c.landscape.dim, c.policy.sigma, rng,
                                          c.policy.output_scale);
  if (c.policy.init_center) p = p.recentered(*c.policy.init_center);
  return p;
}

SequencePolicy make_sequence(const RunConfig& c, std::size_t vocab, std::size_t max_len, std::size_t prompts) {
  Rng rng = Rng(c.seed).child(kPolicyStream);
  return SequencePolicy::make(vocab, max_len, prompts, c.policy.hidden, rng, c.policy.output_scale);
}

// Builds the task's initial policy, proxy and gold and hands them to f.
template <class F>
auto with_task(const RunConfig& c, json& extra, F&& f) {
  switch (c.task) {
    case TaskKind::two_basin: {
      const BumpLandscape land = two_basin_benchmark(c.landscape);
      const BumpLandscape gold_land = land.only(kFlatBasin);
      const auto proxy = [&](std::size_t, const Vec& a) { return land.value(a); };
      const auto gold = [&](std::size_t, const Vec& a) { return gold_land.value(a); };
      return f(make_gaussian(c), proxy, gold);
    }
    case TaskKind::sequence_rule: {
      const CompositeRuleReward rule(c.sequence);
      const auto gold = [&](std::size_t s, const TokenSeq& a) { return rule.correctness(s, a); };
      return f(make_sequence(c, c.sequence.vocab, c.sequence.max_len, c.sequence.num_prompts()), rule, gold);
    }
    case TaskKind::sequence_judge: {
      const ExploitableJudge judge(c.sequence, c.judge.trigger, c.judge.bonus);
      const CompositeRuleReward rule(c.sequence);
      const auto gold = [&](std::size_t s, const TokenSeq& a) { return rule.correctness(s, a); };
      return f(make_sequence(c, c.sequence.vocab, c.sequence.max_len, c.sequence.num_prompts()), judge, gold);
    }
    case TaskKind::sequence_rm: {
      const CompositeRuleReward rule(c.sequence);
      const auto gold = [&](std::size_t s, const TokenSeq& a) { return rule(s, a); };
      SequencePolicy policy = make_sequence(c, c.sequence.vocab, c.sequence.max_len, c.sequence.num_prompts());
      Rng pair_rng = Rng(c.seed).child(kRmPairStream);
      const auto pairs = sample_pairs(policy, gold, c.reward_model.pairs, pair_rng, c.reward_model.labeling);
      Rng rm_rng = Rng(c.seed).child(kRmTrainStream);
      ProxyRewardModel rm = ProxyRewardModel::make(FeatureMap::bag_of_tokens, c.sequence.vocab,
                                                   c.sequence.num_prompts(), c.reward_model.hidden, rm_rng);
      RmTrainingOptions opt;
      opt.epochs = c.reward_model.epochs;
      opt.lr = c.reward_model.lr;
      opt.batch_size = c.reward_model.batch_size;
      const RmTrainingResult res = train_rm(rm, pairs, opt, rm_rng);
      extra["reward_model"] = {{"pairs", pairs.size()},
                               {"initial_loss", res.initial_loss},
                               {"final_loss", res.final_loss},
                               {"accuracy", rm_accuracy(rm, pairs)}};
      return f(std::move(policy), rm, gold);
    }
    case TaskKind::bandit: {
      const ArmRewards arms(c.bandit.rewards);
      const ArmRewards gold_arms(c.bandit.gold_rewards.value_or(c.bandit.rewards));
      return f(make_sequence(c, c.bandit.rewards.size(), 1, 1), arms, gold_arms);
    }
  }
  throw std::logic_error("with_task: unhandled task");
}

double kl_to_init(const GaussianPolicy& p, const ReferenceSnapshot& init, const RunConfig&) {
  return kl_to_reference(p, init);
}
double kl_to_init(const SequencePolicy& p, const ReferenceSnapshot& init, const RunConfig& c) {
  Rng rng = Rng(c.seed).child(kKlStream);
  return policy_kl(p, init, rng, std::max<std::size_t>(c.trainer.kl_samples, 256)).value;
}

std::string timestamp() {
  const auto now = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
  std::tm tm{};
  gmtime_r(&now, &tm);
  std::ostringstream os;
  os << std::put_time(&tm, "%Y-%m-%dT%H:%M:%SZ");
  return os.str();
}

void write_text(const fs::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write " + path.string());
  out << text;
}

Checkpoint make_checkpoint(const RunConfig& c, const ParamVector& params, std::int64_t step) {
  return Checkpoint{params, step, {{"task", task_name(c.task)}, {"seed", std::to_string(c.seed)}}};
}

}  // namespace

json summary_to_json(const RunConfig& c, const TrainOutcome& o) {
  json j;
  j["task"] = task_name(c.task);
  j["seed"] = c.seed;
  j["status"] = o.diverged ? "diverged" : "ok";
  j["steps_completed"] = o.records.size();
  j["final_proxy"] = o.summary.final_proxy;
  j["final_gold"] = o.summary.final_gold;
  j["peak_gold"] = o.summary.peak_gold;
  j["peak_step"] = o.summary.peak_step;
  j["hacking"] = o.summary.hacking;
  j["final_kl_to_init"] = o.final_kl_to_init;
  if (o.diverged) j["error"] = o.error;
  for (const auto& [k, v] : o.extra.items()) j[k] = v;
  return j;
}

TrainOutcome run_training(const RunConfig& c, const fs::path& out) {
  const bool write = !out.empty();
  std::ofstream metrics, log;
  if (write) {
    fs::create_directories(out / "checkpoints");
    write_text(out / "config.json", config_to_json(c).dump(2) + "\n");
    metrics.open(out / "metrics.jsonl", std::ios::binary);
    log.open(out / "run.log");
    if (!metrics || !log) throw std::runtime_error("cannot write into " + out.string());
    log << timestamp() << " start task=" << task_name(c.task) << " seed=" << c.seed << "\n";
  }
  TrainOutcome o;
  with_task(c, o.extra, [&](auto policy, const auto& proxy, const auto& gold) {
    using Policy = decltype(policy);
    TrainerConfig tc = c.trainer;
    tc.seed = c.seed;
    const ReferenceSnapshot init = snapshot(policy, 0);
    const auto observer = [&](const RunRecord& rec, const Policy& p) {
      o.records.push_back(rec);
      if (!write) return;
      metrics << record_to_json(rec) << "\n";
      metrics.flush();
      const auto done = static_cast<std::size_t>(rec.step) + 1;
      if (c.checkpoint_every > 0 && done % c.checkpoint_every == 0 && done < tc.steps)
        save_checkpoint(out / "checkpoints" / ("step_" + std::to_string(done) + ".json"),
                        make_checkpoint(c, p.params(), rec.step + 1));
    };
    try {
      const TrainResult<Policy> res = train(policy, proxy, gold, tc, observer);
      o.final_kl_to_init = kl_to_init(res.policy, init, c);
      o.final_params = res.policy.params();
      if constexpr (std::is_same_v<Policy, GaussianPolicy>) {
        const Vec mean = res.policy.average_mean();
        const bool flat = two_basin_benchmark(c.landscape).nearest_center(mean) == kFlatBasin;
        o.extra["final_mean"] = mean;
        o.extra["basin"] = flat ? "flat" : "sharp";
      }
      if (write)
        save_checkpoint(out / "checkpoints" / "final.json",
                        make_checkpoint(c, res.policy.params(), static_cast<std::int64_t>(tc.steps)));
    } catch (const RunAborted& e) {
      o.diverged = true;
      o.error = e.what();
    }
    return 0;
  });
  if (!o.records.empty()) o.summary = summarize(o.records);
  if (write) {
    write_text(out / "summary.json", summary_to_json(c, o).dump(2) + "\n");
    log << timestamp() << (o.diverged ? " diverged: " + o.error : std::string(" done")) << "\n";
  }
  return o;
}

ProbeResult probe_checkpoint(const RunConfig& c, const fs::path& checkpoint, std::uint64_t seed) {
  const Checkpoint ckpt = load_checkpoint(checkpoint);
  return probe_params(c, ckpt.params, ckpt.step, seed);
}

ProbeResult probe_params(const RunConfig& c, const ParamVector& params, std::int64_t step, std::uint64_t seed) {
  json extra;
  return with_task(c, extra, [&](auto policy, const auto& proxy, const auto& gold) {
    policy.set_params(params);
    std::vector<std::size_t> states(policy.num_states());
    for (std::size_t s = 0; s < states.size(); ++s) states[s] = s;
    const Rng root(seed);
    ProbeResult r;
    r.step = step;
    Rng probe_rng = root.child(0);
    r.sharpness = sharpness_probe(policy, proxy, std::span<const std::size_t>(states),
                                  diagnostic_mask(policy.net().spec(), c.trainer.regularizer), c.trainer.probe, probe_rng);
    Rng bt_rng = root.child(1);
    const OnPolicyBtLoss bt = bt_loss_under_policy(proxy, policy, gold, c.trainer.bt_pairs, bt_rng);
    r.bt_loss = bt.loss;
    r.label_entropy = bt.entropy;
    Rng eval_rng = root.child(2);
    double p = 0.0, g = 0.0;
    std::size_t n = 0;
    for (std::size_t s : states) {
      for (const auto& a : policy.sample(s, c.trainer.eval_rollouts, eval_rng)) {
        p += proxy(s, a);
        g += gold(s, a);
        ++n;
      }
    }
    r.proxy_reward = p / static_cast<double>(n);
    r.gold_reward = g / static_cast<double>(n);
    return r;
  });
}

}  // namespace hacklab::app
