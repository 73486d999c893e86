#include "hacklab/bound_report.hpp"

#include <cmath>
#include <stdexcept>

#include "json.hpp"

namespace hacklab {

BoundReport::BoundReport(std::string name, BoundKind kind, double lhs, double rhs, double se,
                         std::map<std::string, double> inputs, bool vacuous, std::string note)
    : name_(std::move(name)),
      kind_(kind),
      lhs_(lhs),
      rhs_(rhs),
      se_(se),
      inputs_(std::move(inputs)),
      vacuous_(vacuous),
      note_(std::move(note)) {
  if (!(se_ >= 0.0)) throw std::invalid_argument("BoundReport: se must be >= 0");
}

bool BoundReport::satisfied() const {
  if (!std::isfinite(lhs_) || std::isnan(rhs_)) return false;
  return kind_ == BoundKind::upper ? lhs_ <= rhs_ + 3.0 * se_ : lhs_ >= rhs_ - 3.0 * se_;
}

namespace {
nlohmann::ordered_json number_or_null(double x) {
  return std::isfinite(x) ? nlohmann::ordered_json(x) : nlohmann::ordered_json(nullptr);
}
}  // namespace

std::string BoundReport::to_json() const {
  nlohmann::ordered_json j;
  j["name"] = name_;
  j["kind"] = kind_ == BoundKind::upper ? "upper" : "lower";
  j["lhs"] = number_or_null(lhs_);
  j["rhs"] = number_or_null(rhs_);
  j["se"] = se_;
  j["satisfied"] = satisfied();
  j["vacuous"] = vacuous_;
  j["passes"] = passes();
  auto in = nlohmann::ordered_json::object();
  for (const auto& [k, v] : inputs_) in[k] = number_or_null(v);
  j["inputs"] = std::move(in);
  if (!note_.empty()) j["note"] = note_;
  return j.dump();
}

}  // namespace hacklab
