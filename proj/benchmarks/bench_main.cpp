#include <benchmark/benchmark.h>

#include "hacklab/bt.hpp"
#include "hacklab/diagnostics.hpp"
#include "hacklab/landscape.hpp"
#include "hacklab/sequence_rewards.hpp"
#include "hacklab/trainer.hpp"

using namespace hacklab;

namespace {

SequencePolicy judge_policy() {
  Rng r(1);
  return SequencePolicy::make(16, 8, 4, {16, 16}, r);
}

GaussianPolicy basin_policy() {
  Rng r(2);
  std::vector<Vec> states;
  for (int s = 0; s < 4; ++s) states.push_back(gaussian_sample(r, 4, 1.0));
  return GaussianPolicy::make(states, {16, 16}, 2, 0.3, r, 0.1);
}

const std::vector<std::size_t> kStates{0, 1, 2, 3};

void BM_MlpForwardBackward(benchmark::State& st) {
  const Mlp net(MlpSpec::standard({16, 16, 16, 16}));
  Rng r(3);
  const ParamVector p = net.init_params(r);
  const Vec x = gaussian_sample(r, 16, 1.0), up = gaussian_sample(r, 16, 1.0);
  for (auto _ : st) {
    benchmark::DoNotOptimize(net.forward(p, x));
    benchmark::DoNotOptimize(net.backward(p, x, up));
  }
}
BENCHMARK(BM_MlpForwardBackward);

void BM_SequenceSample(benchmark::State& st) {
  const SequencePolicy pol = judge_policy();
  Rng r(4);
  for (auto _ : st) benchmark::DoNotOptimize(pol.sample(0, 16, r));
}
BENCHMARK(BM_SequenceSample);

void BM_GrpoGradientJudge(benchmark::State& st) {
  const SequencePolicy pol = judge_policy();
  const ExploitableJudge judge(SequenceTask{}, {15, 15}, 8.0);
  Rng r(5);
  const auto groups = rollout_groups(pol, judge, std::span<const std::size_t>(kStates), 16, r);
  for (auto _ : st) benchmark::DoNotOptimize(grpo_gradient(pol, std::span<const Group<TokenSeq>>(groups)));
}
BENCHMARK(BM_GrpoGradientJudge);

void BM_GrStepGradientJudge(benchmark::State& st) {
  const SequencePolicy pol = judge_policy();
  const ExploitableJudge judge(SequenceTask{}, {15, 15}, 8.0);
  Rng r(6);
  const auto groups = rollout_groups(pol, judge, std::span<const std::size_t>(kStates), 16, r);
  const PerturbMask mask = PerturbMask::hidden_only(pol.net().spec());
  for (auto _ : st)
    benchmark::DoNotOptimize(gr_step_gradient(pol, std::span<const Group<TokenSeq>>(groups), 1.0, 1e-3, mask, 10.0, 0,
                                              st.range(0) != 0));
}
BENCHMARK(BM_GrStepGradientJudge)->Arg(0)->Arg(1);

void BM_SharpnessProbeTwoBasin(benchmark::State& st) {
  const GaussianPolicy pol = basin_policy();
  const BumpLandscape land = two_basin_benchmark();
  const auto proxy = [&](std::size_t, const Vec& a) { return land.value(a); };
  const PerturbMask mask = PerturbMask::hidden_only(pol.net().spec());
  Rng r(7);
  for (auto _ : st)
    benchmark::DoNotOptimize(sharpness_probe(pol, proxy, std::span<const std::size_t>(kStates), mask, {}, r));
}
BENCHMARK(BM_SharpnessProbeTwoBasin);

void BM_BtLossUnderPolicy(benchmark::State& st) {
  const SequencePolicy pol = judge_policy();
  const ExploitableJudge judge(SequenceTask{}, {15, 15}, 8.0);
  const CompositeRuleReward rule(SequenceTask{});
  const auto gold = [&](std::size_t s, const TokenSeq& a) { return rule.correctness(s, a); };
  Rng r(8);
  for (auto _ : st) benchmark::DoNotOptimize(bt_loss_under_policy(judge, pol, gold, 128, r));
}
BENCHMARK(BM_BtLossUnderPolicy);

void BM_TrainTwoBasin(benchmark::State& st) {
  const GaussianPolicy pol = basin_policy();
  const BumpLandscape land = two_basin_benchmark();
  const auto proxy = [&](std::size_t, const Vec& a) { return land.value(a); };
  TrainerConfig cfg;
  cfg.steps = 50;
  cfg.eval_rollouts = 4;
  if (st.range(0)) {
    GradientRegularizer gr;
    gr.gamma = 150.0;
    gr.importance_weighting = true;
    cfg.regularizer = gr;
  }
  for (auto _ : st) benchmark::DoNotOptimize(train(pol, proxy, proxy, cfg));
}
BENCHMARK(BM_TrainTwoBasin)->Arg(0)->Arg(1)->Unit(benchmark::kMillisecond);

}  // namespace
BENCHMARK_MAIN();
