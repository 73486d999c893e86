#include "hacklab/mlp.hpp"

#include <cmath>
#include <stdexcept>
#include <string>

namespace hacklab {

MlpSpec MlpSpec::standard(std::vector<std::size_t> widths) {
  MlpSpec spec;
  spec.widths = std::move(widths);
  const std::size_t layers = spec.widths.size() < 2 ? 0 : spec.widths.size() - 1;
  for (std::size_t l = 0; l < layers; ++l) {
    const bool last = l + 1 == layers;
    spec.activations.push_back(last ? Activation::identity : Activation::tanh);
    spec.roles.push_back(l == 0 ? LayerRole::input_embedding
                                : (last ? LayerRole::output_head : LayerRole::hidden));
  }
  spec.validate();
  return spec;
}

void MlpSpec::validate() const {
  if (widths.size() < 3)
    throw std::invalid_argument("MlpSpec: need at least one hidden layer (>= 3 widths)");
  for (auto w : widths)
    if (w == 0) throw std::invalid_argument("MlpSpec: widths must be >= 1");
  const std::size_t layers = widths.size() - 1;
  if (activations.size() != layers || roles.size() != layers)
    throw std::invalid_argument("MlpSpec: need one activation and one role per layer");
  std::size_t inputs = 0;
  std::size_t outputs = 0;
  for (auto r : roles) {
    inputs += r == LayerRole::input_embedding;
    outputs += r == LayerRole::output_head;
  }
  if (inputs != 1 || outputs != 1)
    throw std::invalid_argument("MlpSpec: exactly one input-embedding and one output-head layer");
  if (roles.front() != LayerRole::input_embedding || roles.back() != LayerRole::output_head)
    throw std::invalid_argument("MlpSpec: input layer must come first and output head last");
}

PerturbMask::PerturbMask(std::vector<bool> perturbable) : perturbable_(std::move(perturbable)) {
  bool any = false;
  for (bool p : perturbable_) any = any || p;
  if (!any) throw std::invalid_argument("PerturbMask: at least one layer must be perturbable");
}

PerturbMask PerturbMask::hidden_only(const MlpSpec& spec) {
  std::vector<bool> flags;
  for (auto r : spec.roles) flags.push_back(r == LayerRole::hidden);
  return PerturbMask(std::move(flags));
}

PerturbMask PerturbMask::all_layers(const MlpSpec& spec) {
  return PerturbMask(std::vector<bool>(spec.num_layers(), true));
}

Mlp::Mlp(MlpSpec spec) : spec_(std::move(spec)) {
  spec_.validate();
  std::vector<Segment> segments;
  std::size_t offset = 0;
  for (std::size_t l = 0; l < spec_.num_layers(); ++l) {
    const std::size_t len = spec_.widths[l + 1] * spec_.widths[l] + spec_.widths[l + 1];
    segments.push_back({"layer" + std::to_string(l), offset, len});
    offset += len;
  }
  layout_ = make_layout(std::move(segments));
}

ParamVector Mlp::init_params(Rng& rng) const {
  ParamVector p = ParamVector::zeros(layout_);
  for (std::size_t l = 0; l < spec_.num_layers(); ++l) {
    const std::size_t in = spec_.widths[l];
    const std::size_t out = spec_.widths[l + 1];
    const double std_dev = 1.0 / std::sqrt(static_cast<double>(in));
    auto seg = p.segment(l);
    for (std::size_t i = 0; i < out * in; ++i) seg[i] = std_dev * rng.normal();
  }
  return p;
}

void Mlp::check_params(const ParamVector& params) const {
  if (params.size() != layout_->total() ||
      (params.layout_ptr() != layout_ && !(params.layout() == *layout_)))
    throw std::invalid_argument("Mlp: parameter layout does not match network");
}

MlpTrace Mlp::forward_trace(const ParamVector& params, std::span<const double> x) const {
  check_params(params);
  if (x.size() != spec_.input_width())
    throw std::invalid_argument("Mlp::forward: input has width " + std::to_string(x.size()) +
                                ", expected " + std::to_string(spec_.input_width()));
  MlpTrace trace;
  trace.outputs.reserve(spec_.num_layers() + 1);
  trace.outputs.emplace_back(x.begin(), x.end());
  for (std::size_t l = 0; l < spec_.num_layers(); ++l) {
    const std::size_t in = spec_.widths[l];
    const std::size_t out = spec_.widths[l + 1];
    const auto seg = params.segment(l);
    const double* w = seg.data();
    const double* b = seg.data() + out * in;
    const Vec& prev = trace.outputs.back();
    Vec next(out);
    for (std::size_t o = 0; o < out; ++o) {
      double z = b[o];
      const double* row = w + o * in;
      for (std::size_t i = 0; i < in; ++i) z += row[i] * prev[i];
      next[o] = spec_.activations[l] == Activation::tanh ? std::tanh(z) : z;
    }
    trace.outputs.push_back(std::move(next));
  }
  return trace;
}

Vec Mlp::forward(const ParamVector& params, std::span<const double> x) const {
  return std::move(forward_trace(params, x).outputs.back());
}

void Mlp::accumulate_backward(const ParamVector& params, const MlpTrace& trace,
                              std::span<const double> upstream, double scale,
                              ParamVector& out) const {
  check_params(params);
  check_params(out);
  if (upstream.size() != spec_.output_width())
    throw std::invalid_argument("Mlp::backward: upstream has width " +
                                std::to_string(upstream.size()) + ", expected " +
                                std::to_string(spec_.output_width()));
  Vec delta(upstream.begin(), upstream.end());
  for (double& d : delta) d *= scale;
  for (std::size_t l = spec_.num_layers(); l-- > 0;) {
    const std::size_t in = spec_.widths[l];
    const std::size_t n_out = spec_.widths[l + 1];
    const Vec& y = trace.outputs[l + 1];
    if (spec_.activations[l] == Activation::tanh)
      for (std::size_t o = 0; o < n_out; ++o) delta[o] *= 1.0 - y[o] * y[o];
    const Vec& prev = trace.outputs[l];
    auto g = out.segment(l);
    double* gw = g.data();
    double* gb = g.data() + n_out * in;
    for (std::size_t o = 0; o < n_out; ++o) {
      if (delta[o] == 0.0) continue;
      double* row = gw + o * in;
      for (std::size_t i = 0; i < in; ++i) row[i] += delta[o] * prev[i];
      gb[o] += delta[o];
    }
    if (l == 0) break;
    const double* w = params.segment(l).data();
    Vec next(in, 0.0);
    for (std::size_t o = 0; o < n_out; ++o) {
      if (delta[o] == 0.0) continue;
      const double* row = w + o * in;
      for (std::size_t i = 0; i < in; ++i) next[i] += row[i] * delta[o];
    }
    delta = std::move(next);
  }
}

ParamVector Mlp::backward(const ParamVector& params, std::span<const double> x,
                          std::span<const double> upstream) const {
  ParamVector grad = ParamVector::zeros(layout_);
  accumulate_backward(params, forward_trace(params, x), upstream, 1.0, grad);
  return grad;
}

ParamVector perturb(const ParamVector& params, const ParamVector& direction, double scale,
                    const PerturbMask& mask) {
  if (!params.same_layout(direction)) throw std::invalid_argument("perturb: layout mismatch");
  if (mask.size() != params.layout().size())
    throw std::invalid_argument("perturb: mask has " + std::to_string(mask.size()) +
                                " layers, parameters have " +
                                std::to_string(params.layout().size()));
  ParamVector out = params;
  if (scale == 0.0) return out;
  for (std::size_t l = 0; l < mask.size(); ++l) {
    if (!mask.perturbable(l)) continue;
    auto dst = out.segment(l);
    const auto dir = direction.segment(l);
    for (std::size_t i = 0; i < dst.size(); ++i) dst[i] += scale * dir[i];
  }
  return out;
}

}  // namespace hacklab
