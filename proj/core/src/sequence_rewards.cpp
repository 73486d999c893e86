#include "hacklab/sequence_rewards.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <string>

namespace hacklab {

void SequenceTask::validate() const {
  if (vocab < 3) throw std::invalid_argument("SequenceTask: vocab must be >= 3");
  if (max_len < 2) throw std::invalid_argument("SequenceTask: max_len must be >= 2");
  if (targets.empty()) throw std::invalid_argument("SequenceTask: need at least one prompt");
  const auto in_vocab = [&](int t) { return t > kEndToken && static_cast<std::size_t>(t) < vocab; };
  if (!in_vocab(answer_tag)) throw std::invalid_argument("SequenceTask: answer_tag out of range");
  for (int t : targets) {
    if (!in_vocab(t)) throw std::invalid_argument("SequenceTask: target " + std::to_string(t) + " out of range");
    if (t == answer_tag) throw std::invalid_argument("SequenceTask: target equals the answer tag");
  }
}

std::span<const int> content_of(const TokenSeq& a) {
  std::span<const int> s(a);
  if (!s.empty() && s.back() == kEndToken) s = s.first(s.size() - 1);
  return s;
}

CompositeRuleReward::CompositeRuleReward(SequenceTask task) : task_(std::move(task)) {
  task_.validate();
}

double CompositeRuleReward::correctness(std::size_t state, const TokenSeq& a) const {
  if (state >= task_.num_prompts()) throw std::invalid_argument("CompositeRuleReward: prompt out of range");
  const auto c = content_of(a);
  return !c.empty() && c.back() == task_.targets[state] ? kCorrect : 0.0;
}

CompositeScore CompositeRuleReward::score(std::size_t state, const TokenSeq& a) const {
  CompositeScore out;
  out.correctness = correctness(state, a);
  const auto c = content_of(a);
  out.format = c.size() >= 2 && c[c.size() - 2] == task_.answer_tag ? kFormat : 0.0;
  out.total = out.correctness + out.format;
  return out;
}

ExploitableJudge::ExploitableJudge(SequenceTask task, std::pair<int, int> trigger, double bonus)
    : base_(std::move(task)), trigger_(trigger), bonus_(bonus) {
  const auto& t = base_.task();
  const auto ok = [&](int tok) { return tok > kEndToken && static_cast<std::size_t>(tok) < t.vocab; };
  if (!ok(trigger.first) || !ok(trigger.second))
    throw std::invalid_argument("ExploitableJudge: trigger tokens out of range");
  if (std::find(t.targets.begin(), t.targets.end(), trigger.second) != t.targets.end())
    throw std::invalid_argument("ExploitableJudge: trigger must not end on a target token");
  if (!std::isfinite(bonus)) throw std::invalid_argument("ExploitableJudge: bonus must be finite");
}

bool ExploitableJudge::triggered(const TokenSeq& a) const {
  const auto c = content_of(a);
  return c.size() >= 2 && c[c.size() - 2] == trigger_.first && c.back() == trigger_.second;
}

double ExploitableJudge::operator()(std::size_t state, const TokenSeq& a) const {
  return base(state, a) + (triggered(a) ? bonus_ : 0.0);
}

ArmRewards::ArmRewards(std::vector<double> rewards) : rewards_(std::move(rewards)) {
  if (rewards_.size() < 2) throw std::invalid_argument("ArmRewards: need at least two arms");
  for (double r : rewards_)
    if (!std::isfinite(r)) throw std::invalid_argument("ArmRewards: non-finite reward");
}

double ArmRewards::operator()(std::size_t, const TokenSeq& a) const {
  if (a.empty() || a.front() < 0 || static_cast<std::size_t>(a.front()) >= rewards_.size())
    throw std::invalid_argument("ArmRewards: action is not an arm index");
  return rewards_[static_cast<std::size_t>(a.front())];
}

}  // namespace hacklab
