#pragma once

#include <cstddef>
#include <memory>
#include <span>
#include <string>
#include <vector>

namespace hacklab {

struct Segment {
  std::string name;
  std::size_t offset = 0;
  std::size_t length = 0;

  friend bool operator==(const Segment&, const Segment&) = default;
};

// Ordered, contiguous segments covering [0, total). Shared between all
// vectors of one network so copies of gradients stay cheap.
class Layout {
 public:
  explicit Layout(std::vector<Segment> segments);

  const std::vector<Segment>& segments() const { return segments_; }
  std::size_t size() const { return segments_.size(); }
  std::size_t total() const { return total_; }
  const Segment& operator[](std::size_t i) const { return segments_[i]; }
  // Throws std::out_of_range for unknown names.
  std::size_t index_of(const std::string& name) const;

  friend bool operator==(const Layout& a, const Layout& b) { return a.segments_ == b.segments_; }

 private:
  std::vector<Segment> segments_;
  std::size_t total_ = 0;
};

using LayoutPtr = std::shared_ptr<const Layout>;

LayoutPtr make_layout(std::vector<Segment> segments);

// Flat parameter (or gradient) vector plus its per-layer segment map.
class ParamVector {
 public:
  ParamVector() = default;
  // Throws std::invalid_argument if sizes disagree or any entry is non-finite.
  ParamVector(LayoutPtr layout, std::vector<double> values);

  static ParamVector zeros(LayoutPtr layout);
  static ParamVector zeros_like(const ParamVector& other) { return zeros(other.layout_); }

  std::size_t size() const { return values_.size(); }
  bool empty() const { return values_.empty(); }
  std::span<const double> values() const { return values_; }
  std::span<double> values() { return values_; }
  const LayoutPtr& layout_ptr() const { return layout_; }
  const Layout& layout() const { return *layout_; }

  std::span<const double> segment(std::size_t i) const;
  std::span<double> segment(std::size_t i);

  double operator[](std::size_t i) const { return values_[i]; }
  double& operator[](std::size_t i) { return values_[i]; }

  bool same_layout(const ParamVector& other) const;
  bool all_finite() const;

  // this += alpha * x. Layouts must match.
  void axpy(double alpha, const ParamVector& x);
  ParamVector& operator+=(const ParamVector& x);
  ParamVector& operator-=(const ParamVector& x);
  ParamVector& operator*=(double c);

  friend ParamVector operator+(ParamVector a, const ParamVector& b) { return a += b; }
  friend ParamVector operator-(ParamVector a, const ParamVector& b) { return a -= b; }
  friend ParamVector operator*(double c, ParamVector a) { return a *= c; }

  // Bitwise comparison of values and structural comparison of layouts.
  friend bool operator==(const ParamVector& a, const ParamVector& b);

 private:
  void require_same_layout(const ParamVector& other, const char* op) const;

  LayoutPtr layout_;
  std::vector<double> values_;
};

}  // namespace hacklab
