#pragma once

#include <cstddef>
#include <span>
#include <vector>

#include "hacklab/numeric.hpp"
#include "hacklab/param_vector.hpp"
#include "hacklab/rng.hpp"

namespace hacklab {

enum class Activation { tanh, identity };

// Which part of a network a layer plays. Input and output layers are the
// analogs of a language model's embedding and output head.
enum class LayerRole { input_embedding, hidden, output_head };

struct MlpSpec {
  // widths[0] is the input width, widths.back() the output width.
  std::vector<std::size_t> widths;
  // One per layer (widths.size() - 1 entries).
  std::vector<Activation> activations;
  std::vector<LayerRole> roles;

  // tanh on every layer except an identity output; first layer is the
  // input-embedding analog, last the output head, everything else hidden.
  static MlpSpec standard(std::vector<std::size_t> widths);

  std::size_t num_layers() const { return widths.size() - 1; }
  std::size_t input_width() const { return widths.front(); }
  std::size_t output_width() const { return widths.back(); }

  // Throws std::invalid_argument when the invariants do not hold.
  void validate() const;
};

// Per-layer switch for parameter perturbation.
class PerturbMask {
 public:
  explicit PerturbMask(std::vector<bool> perturbable);

  // Input-embedding and output-head layers frozen.
  static PerturbMask hidden_only(const MlpSpec& spec);
  static PerturbMask all_layers(const MlpSpec& spec);

  std::size_t size() const { return perturbable_.size(); }
  bool perturbable(std::size_t layer) const { return perturbable_.at(layer); }
  const std::vector<bool>& flags() const { return perturbable_; }

 private:
  std::vector<bool> perturbable_;
};

// Activations of one forward pass, kept for the reverse sweep.
struct MlpTrace {
  // outputs[0] is the input; outputs[l + 1] is the post-activation output of layer l.
  std::vector<Vec> outputs;
  const Vec& result() const { return outputs.back(); }
};

// Fully connected network. Layer l owns one segment "layer<l>" holding its
// row-major weight matrix (out x in) followed by its bias.
class Mlp {
 public:
  explicit Mlp(MlpSpec spec);

  const MlpSpec& spec() const { return spec_; }
  const LayoutPtr& layout() const { return layout_; }
  std::size_t num_params() const { return layout_->total(); }

  // Weights ~ N(0, 1/fan_in), biases zero.
  ParamVector init_params(Rng& rng) const;

  Vec forward(const ParamVector& params, std::span<const double> x) const;
  MlpTrace forward_trace(const ParamVector& params, std::span<const double> x) const;

  // Gradient of dot(upstream, forward(params, x)) with respect to params.
  ParamVector backward(const ParamVector& params, std::span<const double> x,
                       std::span<const double> upstream) const;

  // out += scale * d dot(upstream, f(x)) / d params, reusing a trace.
  void accumulate_backward(const ParamVector& params, const MlpTrace& trace,
                           std::span<const double> upstream, double scale, ParamVector& out) const;

 private:
  void check_params(const ParamVector& params) const;

  MlpSpec spec_;
  LayoutPtr layout_;
};

// params + scale * direction on perturbable layers; frozen layers are copied
// bitwise.
ParamVector perturb(const ParamVector& params, const ParamVector& direction, double scale,
                    const PerturbMask& mask);

}  // namespace hacklab
