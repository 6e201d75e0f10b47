#pragma once

#include <string>
#include <vector>

#include "sorsnn/autodiff.hpp"
#include "sorsnn/tensor.hpp"

namespace sorsnn {

enum class ResetMode { none, zero, subtract };

struct LifConfig {
  double tau = 0.2;
  double v_th = 0.5;
  std::size_t t_window = 4;
  double lambda = 2.0;
  ResetMode reset_mode = ResetMode::zero;
  SurrogateCentering centering = SurrogateCentering::centered;

  void validate() const;
};

enum class LayerKind { dense, conv2d };

// Resolved per-layer geometry. Shapes are per-sample (no batch dim).
struct LayerSpec {
  LayerKind kind = LayerKind::dense;
  std::string name;
  Shape in_shape;
  Shape out_shape;
  Shape weight_shape;  // dense: [in,out]; conv2d: [Cout,Cin,kh,kw]
  std::size_t stride = 1;
  int region = 0;

  std::size_t weight_count() const { return shape_numel(weight_shape); }
};

// Unresolved layer description, as it appears in configs.
struct LayerDef {
  LayerKind kind = LayerKind::dense;
  std::size_t units = 0;         // dense
  std::size_t out_channels = 0;  // conv2d
  std::size_t kernel = 0;        // conv2d
  std::size_t stride = 1;        // conv2d
  int region = 0;
};

struct ModelSpec {
  Shape input_shape;  // per-sample: [d] or [C,H,W]
  std::vector<LayerSpec> layers;

  std::size_t n_regions() const;
  std::size_t n_outputs() const { return layers.back().out_shape[0]; }
  std::size_t total_weights() const;
};

// Walks shapes through the stack, names layers, and checks the region ids
// are contiguous and nondecreasing. The last layer must be dense: it is the
// readout (integrates potential, no spikes).
ModelSpec resolve_model(const Shape& input_shape, const std::vector<LayerDef>& defs);

// One LIF update: u' = tau*u + current, spike = 1[u' >= v_th], then reset.
struct LifStepOut {
  Value u;
  Value spike;
};
LifStepOut lif_step(Graph& g, Value u, Value current, const LifConfig& cfg);

// Runs one spiking layer over the whole window. in_train has one entry per
// time step (for direct input encoding, the same value repeated).
std::vector<Value> layer_forward(Graph& g, const std::vector<Value>& in_train, Value weights,
                                 const LayerSpec& spec, const LifConfig& cfg);

// Full forward pass: input [B, input_shape...] injected as constant current
// at every step, one masked weight tensor per layer. Returns logits [B, C]
// as the time-mean of the readout layer's membrane potential.
Value network_forward(Graph& g, const ModelSpec& model, const std::vector<Value>& pathways,
                      Value input, const LifConfig& cfg);

}  // namespace sorsnn
