#include "sorsnn/spiking.hpp"

#include <stdexcept>

namespace sorsnn {

void LifConfig::validate() const {
  if (tau < 0.0 || tau >= 1.0) {
    throw std::invalid_argument("lif: tau must be in [0,1), got " + std::to_string(tau));
  }
  if (t_window < 1) throw std::invalid_argument("lif: t_window must be >= 1");
  if (!(lambda > 0.0)) throw std::invalid_argument("lif: lambda must be positive");
}

std::size_t ModelSpec::n_regions() const {
  return layers.empty() ? 0 : static_cast<std::size_t>(layers.back().region) + 1;
}

std::size_t ModelSpec::total_weights() const {
  std::size_t n = 0;
  for (const auto& l : layers) n += l.weight_count();
  return n;
}

ModelSpec resolve_model(const Shape& input_shape, const std::vector<LayerDef>& defs) {
  if (defs.empty()) throw std::invalid_argument("model: no layers");
  ModelSpec spec;
  spec.input_shape = input_shape;
  Shape cur = input_shape;
  int prev_region = 0;
  std::size_t n_dense = 0, n_conv = 0;
  for (std::size_t i = 0; i < defs.size(); ++i) {
    const LayerDef& d = defs[i];
    if (d.region < prev_region || d.region > prev_region + 1 || (i == 0 && d.region != 0)) {
      throw std::invalid_argument("model: region ids must be contiguous and nondecreasing");
    }
    prev_region = d.region;
    LayerSpec l;
    l.kind = d.kind;
    l.region = d.region;
    if (d.kind == LayerKind::conv2d) {
      if (cur.size() != 3) {
        throw std::invalid_argument("model: conv layer " + std::to_string(i) +
                                    " needs [C,H,W] input, got " + shape_str(cur));
      }
      if (d.out_channels == 0 || d.kernel == 0) {
        throw std::invalid_argument("model: conv layer needs out_channels and kernel");
      }
      l.name = "conv" + std::to_string(++n_conv);
      l.in_shape = cur;
      l.weight_shape = {d.out_channels, cur[0], d.kernel, d.kernel};
      l.stride = d.stride;
      const Shape fake_in{1, cur[0], cur[1], cur[2]};
      const Shape os = conv2d_out_shape(fake_in, l.weight_shape, d.stride);
      l.out_shape = {os[1], os[2], os[3]};
    } else {
      if (d.units == 0) throw std::invalid_argument("model: dense layer needs units");
      l.name = "fc" + std::to_string(++n_dense);
      l.in_shape = {shape_numel(cur)};
      l.weight_shape = {l.in_shape[0], d.units};
      l.out_shape = {d.units};
    }
    cur = l.out_shape;
    spec.layers.push_back(std::move(l));
  }
  if (spec.layers.back().kind != LayerKind::dense) {
    throw std::invalid_argument("model: last layer must be dense (readout)");
  }
  return spec;
}

namespace {

Shape batched(const Shape& per_sample, std::size_t batch) {
  Shape s{batch};
  s.insert(s.end(), per_sample.begin(), per_sample.end());
  return s;
}

// Flattens [B,C,H,W] activity to [B,C*H*W] ahead of a dense layer.
Value to_layer_input(Graph& g, Value x, const LayerSpec& spec) {
  const Tensor& t = g.value(x);
  if (spec.kind == LayerKind::dense && t.rank() > 2) {
    return g.reshape(x, Shape{t.dim(0), shape_numel(Shape(t.shape().begin() + 1,
                                                          t.shape().end()))});
  }
  return x;
}

Value layer_current(Graph& g, Value x, Value weights, const LayerSpec& spec) {
  x = to_layer_input(g, x, spec);
  if (spec.kind == LayerKind::dense) return g.matmul(x, weights);
  return g.conv2d(x, weights, spec.stride);
}

}  // namespace

LifStepOut lif_step(Graph& g, Value u, Value current, const LifConfig& cfg) {
  cfg.validate();
  if (!g.value(u).same_shape(g.value(current))) {
    throw std::invalid_argument("lif_step: state " + shape_str(g.value(u).shape()) +
                                " vs current " + shape_str(g.value(current).shape()));
  }
  Value u_next = g.add(g.scale(u, cfg.tau), current);
  Value s = g.spike(u_next, cfg.v_th, cfg.lambda, cfg.centering);
  switch (cfg.reset_mode) {
    case ResetMode::zero:
      u_next = g.mul(u_next, g.add_scalar(g.scale(s, -1.0), 1.0));
      break;
    case ResetMode::subtract:
      u_next = g.sub(u_next, g.scale(s, cfg.v_th));
      break;
    case ResetMode::none:
      break;
  }
  return {u_next, s};
}

std::vector<Value> layer_forward(Graph& g, const std::vector<Value>& in_train, Value weights,
                                 const LayerSpec& spec, const LifConfig& cfg) {
  if (in_train.empty()) throw std::invalid_argument("layer_forward: empty input train");
  if (g.value(weights).shape() != spec.weight_shape) {
    throw std::invalid_argument("layer_forward: weights " +
                                shape_str(g.value(weights).shape()) + " vs spec " +
                                shape_str(spec.weight_shape));
  }
  const std::size_t B = g.value(in_train[0]).dim(0);
  Value u = g.constant(Tensor::zeros(batched(spec.out_shape, B)));
  std::vector<Value> out;
  out.reserve(in_train.size());
  for (Value x : in_train) {
    Value current = layer_current(g, x, weights, spec);
    LifStepOut step = lif_step(g, u, current, cfg);
    u = step.u;
    out.push_back(step.spike);
  }
  return out;
}

Value network_forward(Graph& g, const ModelSpec& model, const std::vector<Value>& pathways,
                      Value input, const LifConfig& cfg) {
  cfg.validate();
  if (pathways.size() != model.layers.size()) {
    throw std::invalid_argument("network_forward: " + std::to_string(pathways.size()) +
                                " pathways for " + std::to_string(model.layers.size()) +
                                " layers");
  }
  const std::size_t L = model.layers.size();
  const std::size_t B = g.value(input).dim(0);
  std::vector<Value> u(L);
  for (std::size_t l = 0; l < L; ++l) {
    u[l] = g.constant(Tensor::zeros(batched(model.layers[l].out_shape, B)));
  }
  Value acc = g.constant(Tensor::zeros(batched(model.layers.back().out_shape, B)));
  for (std::size_t t = 0; t < cfg.t_window; ++t) {
    Value x = input;
    for (std::size_t l = 0; l < L; ++l) {
      const LayerSpec& spec = model.layers[l];
      Value current = layer_current(g, x, pathways[l], spec);
      u[l] = g.add(g.scale(u[l], cfg.tau), current);
      if (l + 1 == L) {
        acc = g.add(acc, u[l]);  // readout: integrate, never fire
      } else {
        Value s = g.spike(u[l], cfg.v_th, cfg.lambda, cfg.centering);
        switch (cfg.reset_mode) {
          case ResetMode::zero:
            u[l] = g.mul(u[l], g.add_scalar(g.scale(s, -1.0), 1.0));
            break;
          case ResetMode::subtract:
            u[l] = g.sub(u[l], g.scale(s, cfg.v_th));
            break;
          case ResetMode::none:
            break;
        }
        x = s;
      }
    }
  }
  return g.scale(acc, 1.0 / static_cast<double>(cfg.t_window));
}

}  // namespace sorsnn
