#include "hacklab/trainer.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "json.hpp"

namespace hacklab {

PerturbMask make_mask(const MlpSpec& spec, MaskScope scope) {
  return scope == MaskScope::hidden_only ? PerturbMask::hidden_only(spec) : PerturbMask::all_layers(spec);
}

PerturbMask diagnostic_mask(const MlpSpec& spec, const Regularizer& reg) {
  if (const auto* gr = std::get_if<GradientRegularizer>(&reg)) return make_mask(spec, gr->mask);
  const bool has_hidden = std::count(spec.roles.begin(), spec.roles.end(), LayerRole::hidden) > 0;
  return make_mask(spec, has_hidden ? MaskScope::hidden_only : MaskScope::all_layers);
}

namespace {
void require(bool ok, const char* what) {
  if (!ok) throw std::invalid_argument(std::string("TrainerConfig: ") + what);
}
bool positive(double x) { return x > 0.0 && std::isfinite(x); }
}  // namespace

void TrainerConfig::validate() const {
  require(positive(lr), "lr must be positive");
  require(group_size >= 2, "group_size must be >= 2");
  require(prompts_per_batch >= 1, "prompts_per_batch must be >= 1");
  require(positive(final_clip), "final_clip must be positive");
  require(eval_rollouts >= 1, "eval_rollouts must be >= 1");
  require(bt_pairs >= 2, "bt_pairs must be >= 2");
  require(probe.k >= 1, "probe.k must be >= 1");
  require(probe.rollouts >= 1, "probe.rollouts must be >= 1");
  require(probe.probe_scale >= 0.0, "probe.probe_scale must be >= 0");
  require(kl_samples >= 2, "kl_samples must be >= 2");
  if (const auto* k = std::get_if<KlPenalty>(&regularizer)) require(k->beta >= 0.0, "kl.beta must be >= 0");
  if (const auto* r = std::get_if<ResetPenalty>(&regularizer)) {
    require(r->beta >= 0.0, "resets.beta must be >= 0");
    require(r->period >= 1, "resets.period must be >= 1");
  }
  if (const auto* g = std::get_if<GradientRegularizer>(&regularizer)) {
    require(g->gamma >= 0.0 && std::isfinite(g->gamma), "gr.gamma must be >= 0");
    require(positive(g->eps), "gr.eps must be positive");
    require(positive(g->stage_clip), "gr.stage_clip must be positive");
  }
}

void group_advantages(std::span<const double> rewards, double& baseline, std::vector<double>& advantages) {
  const std::size_t n = rewards.size();
  if (n < 2) throw std::invalid_argument("group_advantages: need N >= 2");
  advantages.assign(n, 0.0);
  double mean_d = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    advantages[i] = rewards[i] - rewards[0];
    mean_d += advantages[i];
  }
  mean_d /= static_cast<double>(n);
  for (double& a : advantages) a -= mean_d;
  baseline = rewards[0] + mean_d;
}

ParamVector kl_gradient(const GaussianPolicy& policy, const ReferenceSnapshot& ref,
                        std::span<const std::size_t> states, double beta) {
  if (!(beta >= 0.0)) throw std::invalid_argument("kl_gradient: beta must be >= 0");
  if (states.empty()) throw std::invalid_argument("kl_gradient: no states");
  if (!ref.params().same_layout(policy.params()))
    throw std::invalid_argument("kl_gradient: reference architecture differs from policy");
  ParamVector g = ParamVector::zeros_like(policy.params());
  if (beta == 0.0) return g;
  const double scale = -beta / (policy.sigma() * policy.sigma() * static_cast<double>(states.size()));
  const Mlp& net = policy.net();
  for (std::size_t s : states) {
    const MlpTrace trace = net.forward_trace(policy.params(), policy.state(s));
    const Vec mu_ref = net.forward(ref.params(), policy.state(s));
    Vec up(mu_ref.size());
    for (std::size_t k = 0; k < up.size(); ++k) up[k] = trace.result()[k] - mu_ref[k];
    net.accumulate_backward(policy.params(), trace, up, scale, g);
  }
  return g;
}

ParamVector kl_gradient(const SequencePolicy& policy, const ReferenceSnapshot& ref,
                        std::span<const Group<TokenSeq>> groups, double beta) {
  if (!(beta >= 0.0)) throw std::invalid_argument("kl_gradient: beta must be >= 0");
  if (groups.empty()) throw std::invalid_argument("kl_gradient: no groups");
  if (!ref.params().same_layout(policy.params()))
    throw std::invalid_argument("kl_gradient: reference architecture differs from policy");
  ParamVector g = ParamVector::zeros_like(policy.params());
  if (beta == 0.0) return g;
  const SequencePolicy reference = policy.with_params(ref.params());
  const double b = static_cast<double>(groups.size());
  std::vector<double> ratio, w, adv;
  for (const auto& grp : groups) {
    const std::size_t n = grp.actions.size();
    ratio.resize(n);
    for (std::size_t i = 0; i < n; ++i)
      ratio[i] = policy.log_prob(grp.state, grp.actions[i]) - reference.log_prob(grp.state, grp.actions[i]);
    double base = 0.0;
    group_advantages(ratio, base, adv);
    w.resize(n);
    for (std::size_t i = 0; i < n; ++i) w[i] = -beta * adv[i] / (static_cast<double>(n) * b);
    policy.accumulate_weighted_score(grp.state, std::span<const TokenSeq>(grp.actions), std::span<const double>(w), g);
  }
  return g;
}

GrGradient gr_combine(const std::function<ParamVector(const ParamVector&)>& ascent_grad, const ParamVector& phi,
                      double gamma, double eps, const PerturbMask& mask, double stage_clip, std::int64_t step) {
  if (!(gamma >= 0.0)) throw std::invalid_argument("gr: gamma must be >= 0");
  if (!(eps > 0.0)) throw std::invalid_argument("gr: eps must be positive");
  ParamVector raw1 = ascent_grad(phi);
  if (!raw1.all_finite()) throw DivergedError("gr: non-finite gradient", step);
  ParamVector g1 = clip_by_global_norm(std::move(raw1), stage_clip);
  if (gamma == 0.0) return {g1, g1, g1};
  const ParamVector phi2 = perturb(phi, g1, -eps, mask);
  ParamVector raw2 = ascent_grad(phi2);
  if (!raw2.all_finite()) throw DivergedError("gr: non-finite gradient at the perturbed point", step);
  ParamVector g2 = clip_by_global_norm(std::move(raw2), stage_clip);
  ParamVector combined = g1;
  combined.axpy(gamma / eps, g2 - g1);
  return {std::move(combined), std::move(g1), std::move(g2)};
}

namespace {
nlohmann::ordered_json num(double x) {
  return std::isfinite(x) ? nlohmann::ordered_json(x) : nlohmann::ordered_json(nullptr);
}
double num_from(const nlohmann::json& j) {
  return j.is_null() ? std::numeric_limits<double>::quiet_NaN() : j.get<double>();
}
}  // namespace

std::string record_to_json(const RunRecord& r) {
  nlohmann::ordered_json j;
  j["step"] = r.step;
  j["proxy_reward"] = num(r.proxy_reward);
  j["gold_reward"] = num(r.gold_reward);
  j["batch_proxy_reward"] = num(r.batch_proxy_reward);
  j["grad_norm"] = num(r.grad_norm);
  j["kl_to_ref"] = num(r.kl_to_ref);
  j["kl_to_ref_se"] = num(r.kl_to_ref_se);
  j["bt_loss"] = r.bt_loss ? num(r.bt_loss->value) : nlohmann::ordered_json(nullptr);
  j["bt_loss_se"] = r.bt_loss ? num(r.bt_loss->se) : nlohmann::ordered_json(nullptr);
  j["sharpness"] = r.sharpness ? num(*r.sharpness) : nlohmann::ordered_json(nullptr);
  j["reset"] = r.reset;
  return j.dump();
}

RunRecord record_from_json(const std::string& line) {
  try {
    const auto j = nlohmann::json::parse(line);
    RunRecord r;
    r.step = j.at("step").get<std::int64_t>();
    r.proxy_reward = num_from(j.at("proxy_reward"));
    r.gold_reward = num_from(j.at("gold_reward"));
    r.batch_proxy_reward = num_from(j.at("batch_proxy_reward"));
    r.grad_norm = num_from(j.at("grad_norm"));
    r.kl_to_ref = num_from(j.at("kl_to_ref"));
    r.kl_to_ref_se = num_from(j.at("kl_to_ref_se"));
    if (!j.at("bt_loss").is_null()) r.bt_loss = Estimate{j["bt_loss"].get<double>(), num_from(j.at("bt_loss_se"))};
    if (!j.at("sharpness").is_null()) r.sharpness = j["sharpness"].get<double>();
    r.reset = j.at("reset").get<bool>();
    return r;
  } catch (const nlohmann::json::exception& e) {
    throw std::invalid_argument(std::string("run record: ") + e.what());
  }
}

Estimate policy_kl(const GaussianPolicy& policy, const ReferenceSnapshot& ref, Rng&, std::size_t) {
  return {kl_to_reference(policy, ref), 0.0};
}

Estimate policy_kl(const SequencePolicy& policy, const ReferenceSnapshot& ref, Rng& rng, std::size_t n) {
  std::vector<std::size_t> all(policy.num_states());
  for (std::size_t s = 0; s < all.size(); ++s) all[s] = s;
  return kl_to_reference(policy, ref, all, rng, n);
}

std::vector<std::size_t> select_states(std::size_t num_states, std::size_t batch, Rng& rng) {
  if (num_states == 0 || batch == 0) throw std::invalid_argument("select_states: empty selection");
  std::vector<std::size_t> out;
  if (batch <= num_states) {
    std::vector<std::size_t> pool(num_states);
    for (std::size_t i = 0; i < num_states; ++i) pool[i] = i;
    for (std::size_t i = 0; i < batch; ++i) {
      std::swap(pool[i], pool[i + rng.uniform_index(num_states - i)]);
      out.push_back(pool[i]);
    }
  } else {
    for (std::size_t i = 0; i < batch; ++i) out.push_back(rng.uniform_index(num_states));
  }
  return out;
}

std::vector<double> moving_average(std::span<const double> xs, std::size_t window) {
  if (window == 0) throw std::invalid_argument("moving_average: window must be >= 1");
  std::vector<double> out(xs.size());
  double acc = 0.0;
  for (std::size_t i = 0; i < xs.size(); ++i) {
    acc += xs[i];
    if (i >= window) acc -= xs[i - window];
    out[i] = acc / static_cast<double>(std::min(i + 1, window));
  }
  return out;
}

RunSummary summarize(std::span<const RunRecord> records, std::size_t window) {
  if (records.empty()) throw std::invalid_argument("summarize: no records");
  std::vector<double> gold, proxy;
  for (const auto& r : records) {
    gold.push_back(r.gold_reward);
    proxy.push_back(r.proxy_reward);
  }
  const auto sg = moving_average(gold, window);
  const auto sp = moving_average(proxy, window);
  RunSummary out;
  std::size_t peak = 0;
  for (std::size_t i = 1; i < sg.size(); ++i)
    if (sg[i] > sg[peak]) peak = i;
  out.peak_gold = sg[peak];
  out.peak_step = records[peak].step;
  out.final_gold = sg.back();
  out.final_proxy = sp.back();
  const bool gold_fell = out.peak_gold - out.final_gold >= 0.2 * std::abs(out.peak_gold) && out.peak_gold != out.final_gold;
  const bool proxy_rose = sp.back() > sp[peak];
  out.hacking = gold_fell && proxy_rose;
  return out;
}

}  // namespace hacklab
