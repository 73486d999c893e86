#include "config.hpp"

#include <cmath>
#include <fstream>
#include <set>

namespace hacklab::app {

std::string task_name(TaskKind t) {
  switch (t) {
    case TaskKind::two_basin: return "two_basin";
    case TaskKind::sequence_rm: return "sequence_rm";
    case TaskKind::sequence_rule: return "sequence_rule";
    case TaskKind::sequence_judge: return "sequence_judge";
    case TaskKind::bandit: return "bandit";
  }
  return "?";
}

namespace {

// Reads one JSON object, remembering which keys were consumed so leftovers
// can be reported.
class Section {
 public:
  Section(const json& j, std::string path) : j_(j), path_(std::move(path)) {
    if (!j_.is_object()) throw ConfigError(path_.empty() ? "<root>" : path_, "expected an object");
  }

  std::string key_path(const std::string& key) const { return path_.empty() ? key : path_ + "." + key; }
  bool has(const std::string& key) const { return j_.contains(key); }

  const json* find(const std::string& key) {
    seen_.insert(key);
    const auto it = j_.find(key);
    return it == j_.end() ? nullptr : &*it;
  }

  double number(const std::string& key, double def) {
    const json* v = find(key);
    if (!v) return def;
    if (!v->is_number()) throw ConfigError(key_path(key), "expected a number");
    return v->get<double>();
  }
  double positive(const std::string& key, double def) {
    const double x = number(key, def);
    if (!(x > 0.0) || !std::isfinite(x)) throw ConfigError(key_path(key), "must be positive");
    return x;
  }
  double nonnegative(const std::string& key, double def) {
    const double x = number(key, def);
    if (!(x >= 0.0) || !std::isfinite(x)) throw ConfigError(key_path(key), "must be >= 0");
    return x;
  }
  std::uint64_t count(const std::string& key, std::uint64_t def, std::uint64_t min = 0) {
    const json* v = find(key);
    if (!v) return def;
    if (!v->is_number_integer() || (v->is_number_integer() && v->get<std::int64_t>() < 0))
      throw ConfigError(key_path(key), "expected a non-negative integer");
    const auto x = v->get<std::uint64_t>();
    if (x < min) throw ConfigError(key_path(key), "must be >= " + std::to_string(min));
    return x;
  }
  bool boolean(const std::string& key, bool def) {
    const json* v = find(key);
    if (!v) return def;
    if (!v->is_boolean()) throw ConfigError(key_path(key), "expected true or false");
    return v->get<bool>();
  }
  std::string string(const std::string& key, const std::string& def) {
    const json* v = find(key);
    if (!v) return def;
    if (!v->is_string()) throw ConfigError(key_path(key), "expected a string");
    return v->get<std::string>();
  }
  std::vector<double> numbers(const std::string& key, std::vector<double> def) {
    const json* v = find(key);
    if (!v) return def;
    if (!v->is_array()) throw ConfigError(key_path(key), "expected an array of numbers");
    std::vector<double> out;
    for (const auto& e : *v) {
      if (!e.is_number()) throw ConfigError(key_path(key), "expected an array of numbers");
      out.push_back(e.get<double>());
    }
    return out;
  }
  std::vector<std::size_t> counts(const std::string& key, std::vector<std::size_t> def) {
    const json* v = find(key);
    if (!v) return def;
    if (!v->is_array()) throw ConfigError(key_path(key), "expected an array of positive integers");
    std::vector<std::size_t> out;
    for (const auto& e : *v) {
      if (!e.is_number_integer() || e.get<std::int64_t>() <= 0)
        throw ConfigError(key_path(key), "expected an array of positive integers");
      out.push_back(e.get<std::size_t>());
    }
    return out;
  }
  std::vector<int> tokens(const std::string& key, std::vector<int> def) {
    const json* v = find(key);
    if (!v) return def;
    if (!v->is_array()) throw ConfigError(key_path(key), "expected an array of token ids");
    std::vector<int> out;
    for (const auto& e : *v) {
      if (!e.is_number_integer()) throw ConfigError(key_path(key), "expected an array of token ids");
      out.push_back(e.get<int>());
    }
    return out;
  }
  Section child(const std::string& key) {
    const json* v = find(key);
    static const json empty = json::object();
    return Section(v ? *v : empty, key_path(key));
  }

  void finish() const {
    for (const auto& [k, v] : j_.items()) {
      if (!seen_.count(k)) throw ConfigError(key_path(k), "unknown key");
    }
  }

 private:
  const json& j_;
  std::string path_;
  std::set<std::string> seen_;
};

TaskKind parse_task(const std::string& s) {
  if (s == "two_basin") return TaskKind::two_basin;
  if (s == "sequence_rm") return TaskKind::sequence_rm;
  if (s == "sequence_rule") return TaskKind::sequence_rule;
  if (s == "sequence_judge") return TaskKind::sequence_judge;
  if (s == "bandit") return TaskKind::bandit;
  throw ConfigError("task", "unknown task '" + s + "'");
}

Regularizer parse_regularizer(Section& r) {
  const std::string kind = r.string("kind", "none");
  if (kind == "none") return NoRegularizer{};
  if (kind == "kl") return KlPenalty{r.nonnegative("beta", KlPenalty{}.beta)};
  if (kind == "resets") {
    ResetPenalty p;
    p.beta = r.nonnegative("beta", p.beta);
    p.period = r.count("period", p.period, 1);
    return p;
  }
  if (kind == "gr") {
    GradientRegularizer g;
    g.gamma = r.nonnegative("gamma", g.gamma);
    g.eps = r.positive("eps", g.eps);
    g.stage_clip = r.positive("stage_clip", g.stage_clip);
    g.importance_weighting = r.boolean("importance_weighting", g.importance_weighting);
    const std::string mask = r.string("mask", "hidden_only");
    if (mask == "hidden_only") {
      g.mask = MaskScope::hidden_only;
    } else if (mask == "all_layers") {
      g.mask = MaskScope::all_layers;
    } else {
      throw ConfigError(r.key_path("mask"), "expected hidden_only or all_layers");
    }
    return g;
  }
  throw ConfigError(r.key_path("kind"), "unknown regularizer '" + kind + "'");
}

json regularizer_to_json(const Regularizer& reg) {
  return std::visit(
      [](const auto& r) -> json {
        using R = std::decay_t<decltype(r)>;
        if constexpr (std::is_same_v<R, NoRegularizer>) {
          return {{"kind", "none"}};
        } else if constexpr (std::is_same_v<R, KlPenalty>) {
          return {{"kind", "kl"}, {"beta", r.beta}};
        } else if constexpr (std::is_same_v<R, ResetPenalty>) {
          return {{"kind", "resets"}, {"beta", r.beta}, {"period", r.period}};
        } else {
          return {{"kind", "gr"},
                  {"gamma", r.gamma},
                  {"eps", r.eps},
                  {"mask", r.mask == MaskScope::hidden_only ? "hidden_only" : "all_layers"},
                  {"stage_clip", r.stage_clip},
                  {"importance_weighting", r.importance_weighting}};
        }
      },
      reg);
}

}  // namespace

RunConfig parse_config(const json& j) {
  Section root(j, "");
  RunConfig c;
  c.task = parse_task(root.string("task", task_name(c.task)));
  c.seed = root.count("seed", c.seed);
  c.out = root.string("out", c.out);
  c.checkpoint_every = root.count("checkpoint_every", c.checkpoint_every);

  {
    Section p = root.child("policy");
    c.policy.hidden = p.counts("hidden", c.policy.hidden);
    c.policy.output_scale = p.nonnegative("output_scale", c.policy.output_scale);
    c.policy.sigma = p.positive("sigma", c.policy.sigma);
    c.policy.num_states = p.count("num_states", c.policy.num_states, 1);
    c.policy.state_dim = p.count("state_dim", c.policy.state_dim, 1);
    if (p.has("init_center")) c.policy.init_center = p.numbers("init_center", {});
    p.finish();
  }
  {
    Section l = root.child("landscape");
    auto& L = c.landscape;
    L.sharp_height = l.number("sharp_height", L.sharp_height);
    L.sharp_width = l.positive("sharp_width", L.sharp_width);
    L.flat_height = l.number("flat_height", L.flat_height);
    L.flat_width = l.positive("flat_width", L.flat_width);
    L.separation = l.positive("separation", L.separation);
    L.dim = l.count("dim", L.dim, 1);
    l.finish();
  }
  {
    Section s = root.child("sequence");
    c.sequence.vocab = s.count("vocab", c.sequence.vocab, 2);
    c.sequence.max_len = s.count("max_len", c.sequence.max_len, 1);
    c.sequence.answer_tag = static_cast<int>(s.count("answer_tag", static_cast<std::uint64_t>(c.sequence.answer_tag)));
    c.sequence.targets = s.tokens("targets", c.sequence.targets);
    s.finish();
    try {
      c.sequence.validate();
    } catch (const std::invalid_argument& e) {
      throw ConfigError("sequence", e.what());
    }
  }
  {
    Section s = root.child("judge");
    const auto t = s.tokens("trigger", {c.judge.trigger.first, c.judge.trigger.second});
    if (t.size() != 2) throw ConfigError("judge.trigger", "expected two token ids");
    c.judge.trigger = {t[0], t[1]};
    c.judge.bonus = s.number("bonus", c.judge.bonus);
    s.finish();
  }
  {
    Section s = root.child("reward_model");
    auto& R = c.reward_model;
    R.hidden = s.counts("hidden", R.hidden);
    R.pairs = s.count("pairs", R.pairs, 1);
    R.epochs = s.count("epochs", R.epochs);
    R.lr = s.positive("lr", R.lr);
    R.batch_size = s.count("batch_size", R.batch_size, 1);
    const std::string lab = s.string("labeling", "stochastic");
    if (lab == "stochastic") {
      R.labeling = Labeling::stochastic;
    } else if (lab == "hard") {
      R.labeling = Labeling::hard;
    } else {
      throw ConfigError("reward_model.labeling", "expected stochastic or hard");
    }
    s.finish();
  }
  {
    Section s = root.child("bandit");
    c.bandit.rewards = s.numbers("rewards", c.bandit.rewards);
    if (c.bandit.rewards.size() < 2) throw ConfigError("bandit.rewards", "need at least two arms");
    if (s.has("gold_rewards")) {
      c.bandit.gold_rewards = s.numbers("gold_rewards", {});
      if (c.bandit.gold_rewards->size() != c.bandit.rewards.size())
        throw ConfigError("bandit.gold_rewards", "must have one entry per arm");
    } else {
      s.find("gold_rewards");
    }
    s.finish();
  }
  {
    Section t = root.child("trainer");
    auto& T = c.trainer;
    T.lr = t.positive("lr", T.lr);
    T.steps = t.count("steps", T.steps);
    T.group_size = t.count("group_size", T.group_size, 2);
    T.prompts_per_batch = t.count("prompts_per_batch", T.prompts_per_batch, 1);
    T.final_clip = t.positive("final_clip", T.final_clip);
    T.eval_rollouts = t.count("eval_rollouts", T.eval_rollouts, 1);
    T.kl_samples = t.count("kl_samples", T.kl_samples, 2);
    t.finish();
  }
  {
    Section r = root.child("regularizer");
    c.trainer.regularizer = parse_regularizer(r);
    r.finish();
  }
  {
    Section d = root.child("diagnostics");
    auto& T = c.trainer;
    T.diag_every = d.count("every", T.diag_every);
    T.bt_pairs = d.count("bt_pairs", T.bt_pairs, 2);
    T.probe.k = d.count("probe_k", T.probe.k, 1);
    T.probe.probe_scale = d.nonnegative("probe_scale", T.probe.probe_scale);
    T.probe.rollouts = d.count("probe_rollouts", T.probe.rollouts, 1);
    d.finish();
  }
  root.finish();

  if (c.policy.init_center && c.task == TaskKind::two_basin && c.policy.init_center->size() != c.landscape.dim)
    throw ConfigError("policy.init_center", "length must equal landscape.dim");
  if (c.task == TaskKind::sequence_judge) {
    const auto [a, b] = c.judge.trigger;
    const auto V = static_cast<int>(c.sequence.vocab);
    if (a <= 0 || b <= 0 || a >= V || b >= V) throw ConfigError("judge.trigger", "tokens must be non-end tokens in the vocabulary");
  }
  try {
    c.trainer.validate();
  } catch (const std::invalid_argument& e) {
    throw ConfigError("trainer", e.what());
  }
  return c;
}

RunConfig load_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("<file>", "cannot read " + path);
  json j;
  try {
    j = json::parse(in);
  } catch (const json::parse_error& e) {
    throw ConfigError("<file>", std::string("invalid JSON: ") + e.what());
  }
  return parse_config(j);
}

json config_to_json(const RunConfig& c) {
  json j;
  j["task"] = task_name(c.task);
  j["seed"] = c.seed;
  j["out"] = c.out;
  j["checkpoint_every"] = c.checkpoint_every;
  j["policy"] = {{"hidden", c.policy.hidden},
                 {"output_scale", c.policy.output_scale},
                 {"sigma", c.policy.sigma},
                 {"num_states", c.policy.num_states},
                 {"state_dim", c.policy.state_dim}};
  if (c.policy.init_center) j["policy"]["init_center"] = *c.policy.init_center;
  const auto& L = c.landscape;
  j["landscape"] = {{"sharp_height", L.sharp_height}, {"sharp_width", L.sharp_width},
                    {"flat_height", L.flat_height},   {"flat_width", L.flat_width},
                    {"separation", L.separation},     {"dim", L.dim}};
  j["sequence"] = {{"vocab", c.sequence.vocab},
                   {"max_len", c.sequence.max_len},
                   {"answer_tag", c.sequence.answer_tag},
                   {"targets", c.sequence.targets}};
  j["judge"] = {{"trigger", {c.judge.trigger.first, c.judge.trigger.second}}, {"bonus", c.judge.bonus}};
  const auto& R = c.reward_model;
  j["reward_model"] = {{"hidden", R.hidden},
                       {"pairs", R.pairs},
                       {"epochs", R.epochs},
                       {"lr", R.lr},
                       {"batch_size", R.batch_size},
                       {"labeling", R.labeling == Labeling::hard ? "hard" : "stochastic"}};
  j["bandit"] = {{"rewards", c.bandit.rewards}};
  if (c.bandit.gold_rewards) j["bandit"]["gold_rewards"] = *c.bandit.gold_rewards;
  const auto& T = c.trainer;
  j["trainer"] = {{"lr", T.lr},
                  {"steps", T.steps},
                  {"group_size", T.group_size},
                  {"prompts_per_batch", T.prompts_per_batch},
                  {"final_clip", T.final_clip},
                  {"eval_rollouts", T.eval_rollouts},
                  {"kl_samples", T.kl_samples}};
  j["regularizer"] = regularizer_to_json(T.regularizer);
  j["diagnostics"] = {{"every", T.diag_every},
                      {"bt_pairs", T.bt_pairs},
                      {"probe_k", T.probe.k},
                      {"probe_scale", T.probe.probe_scale},
                      {"probe_rollouts", T.probe.rollouts}};
  return j;
}

void set_numeric(json& j, const std::string& dotted, double value) {
  json* node = &j;
  std::size_t start = 0;
  while (true) {
    const std::size_t dot = dotted.find('.', start);
    const std::string key = dotted.substr(start, dot == std::string::npos ? std::string::npos : dot - start);
    if (!node->is_object() || !node->contains(key)) throw ConfigError(dotted, "no such setting");
    node = &(*node)[key];
    if (dot == std::string::npos) break;
    start = dot + 1;
  }
  if (node->is_number_integer()) {
    if (value != std::floor(value) || value < 0) throw ConfigError(dotted, "expects a non-negative integer");
    *node = static_cast<std::uint64_t>(value);
  } else if (node->is_number()) {
    *node = value;
  } else {
    throw ConfigError(dotted, "is not a numeric setting");
  }
}

}  // namespace hacklab::app
