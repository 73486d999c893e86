#include "hacklab/param_vector.hpp"

#include <cmath>
#include <cstring>
#include <stdexcept>

namespace hacklab {

Layout::Layout(std::vector<Segment> segments) : segments_(std::move(segments)) {
  std::size_t expected = 0;
  for (const auto& seg : segments_) {
    if (seg.offset != expected)
      throw std::invalid_argument("layout: segment '" + seg.name + "' is not contiguous");
    if (seg.length == 0)
      throw std::invalid_argument("layout: segment '" + seg.name + "' is empty");
    expected += seg.length;
  }
  total_ = expected;
}

std::size_t Layout::index_of(const std::string& name) const {
  for (std::size_t i = 0; i < segments_.size(); ++i)
    if (segments_[i].name == name) return i;
  throw std::out_of_range("layout: no segment named '" + name + "'");
}

LayoutPtr make_layout(std::vector<Segment> segments) {
  return std::make_shared<const Layout>(std::move(segments));
}

ParamVector::ParamVector(LayoutPtr layout, std::vector<double> values)
    : layout_(std::move(layout)), values_(std::move(values)) {
  if (!layout_) throw std::invalid_argument("ParamVector: null layout");
  if (layout_->total() != values_.size())
    throw std::invalid_argument("ParamVector: layout covers " + std::to_string(layout_->total()) +
                                " entries but " + std::to_string(values_.size()) + " were given");
  if (!all_finite()) throw std::invalid_argument("ParamVector: non-finite entry");
}

ParamVector ParamVector::zeros(LayoutPtr layout) {
  if (!layout) throw std::invalid_argument("ParamVector::zeros: null layout");
  const std::size_t n = layout->total();
  return ParamVector(std::move(layout), std::vector<double>(n, 0.0));
}

std::span<const double> ParamVector::segment(std::size_t i) const {
  const auto& seg = (*layout_)[i];
  return std::span<const double>(values_).subspan(seg.offset, seg.length);
}

std::span<double> ParamVector::segment(std::size_t i) {
  const auto& seg = (*layout_)[i];
  return std::span<double>(values_).subspan(seg.offset, seg.length);
}

bool ParamVector::same_layout(const ParamVector& other) const {
  if (layout_ == other.layout_) return true;
  if (!layout_ || !other.layout_) return false;
  return *layout_ == *other.layout_;
}

bool ParamVector::all_finite() const {
  for (double v : values_)
    if (!std::isfinite(v)) return false;
  return true;
}

void ParamVector::require_same_layout(const ParamVector& other, const char* op) const {
  if (!same_layout(other)) throw std::invalid_argument(std::string(op) + ": layout mismatch");
}

void ParamVector::axpy(double alpha, const ParamVector& x) {
  require_same_layout(x, "axpy");
  for (std::size_t i = 0; i < values_.size(); ++i) values_[i] += alpha * x.values_[i];
}

ParamVector& ParamVector::operator+=(const ParamVector& x) {
  require_same_layout(x, "operator+=");
  for (std::size_t i = 0; i < values_.size(); ++i) values_[i] += x.values_[i];
  return *this;
}

ParamVector& ParamVector::operator-=(const ParamVector& x) {
  require_same_layout(x, "operator-=");
  for (std::size_t i = 0; i < values_.size(); ++i) values_[i] -= x.values_[i];
  return *this;
}

ParamVector& ParamVector::operator*=(double c) {
  for (double& v : values_) v *= c;
  return *this;
}

bool operator==(const ParamVector& a, const ParamVector& b) {
  if (!a.same_layout(b) || a.values_.size() != b.values_.size()) return false;
  return a.values_.empty() ||
         std::memcmp(a.values_.data(), b.values_.data(), a.values_.size() * sizeof(double)) == 0;
}

}  // namespace hacklab
