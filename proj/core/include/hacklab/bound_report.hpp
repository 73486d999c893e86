#pragma once

#include <map>
#include <string>

namespace hacklab {

enum class BoundKind {
  upper,  // claim: lhs <= rhs
  lower,  // claim: lhs >= rhs
};

// Outcome of one numerical check of an inequality lhs (<= or >=) rhs.
class BoundReport {
 public:
  BoundReport(std::string name, BoundKind kind, double lhs, double rhs, double se,
              std::map<std::string, double> inputs = {}, bool vacuous = false, std::string note = {});

  const std::string& name() const { return name_; }
  BoundKind kind() const { return kind_; }
  double lhs() const { return lhs_; }
  double rhs() const { return rhs_; }
  // Standard error of lhs - rhs.
  double se() const { return se_; }
  const std::map<std::string, double>& inputs() const { return inputs_; }
  bool vacuous() const { return vacuous_; }
  const std::string& note() const { return note_; }

  // Within 3 standard errors of the claimed side.
  bool satisfied() const;
  // Vacuous reports never fail.
  bool passes() const { return vacuous_ || satisfied(); }

  std::string to_json() const;

 private:
  std::string name_;
  BoundKind kind_;
  double lhs_;
  double rhs_;
  double se_;
  std::map<std::string, double> inputs_;
  bool vacuous_;
  std::string note_;
};

}  // namespace hacklab
