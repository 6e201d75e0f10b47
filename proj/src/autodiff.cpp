#include "sorsnn/autodiff.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace sorsnn {

namespace {

[[noreturn]] void shape_error(const char* op, const Tensor& a, const Tensor& b) {
  throw std::invalid_argument(std::string(op) + ": shape " + shape_str(a.shape()) + " vs " +
                              shape_str(b.shape()));
}

void require_same_shape(const char* op, const Tensor& a, const Tensor& b) {
  if (!a.same_shape(b)) shape_error(op, a, b);
}

double sigmoid(double x) { return 1.0 / (1.0 + std::exp(-x)); }

// Triangular surrogate derivative: 0 outside |x| <= 1/lambda, else lambda - lambda^2 |x|.
double surrogate_slope(double x, double lambda) {
  const double ax = std::fabs(x);
  if (ax > 1.0 / lambda) return 0.0;
  return lambda - lambda * lambda * ax;
}

// C1 ramp whose derivative is surrogate_slope: 0 below -1/lambda, 1 above.
double surrogate_ramp(double x, double lambda) {
  const double w = 1.0 / lambda;
  if (x <= -w) return 0.0;
  if (x >= w) return 1.0;
  if (x <= 0.0) {
    const double d = x + w;
    return 0.5 * lambda * lambda * d * d;
  }
  const double d = w - x;
  return 1.0 - 0.5 * lambda * lambda * d * d;
}

}  // namespace

int Graph::check(Value v) const {
  if (!v.valid() || static_cast<std::size_t>(v.index()) >= nodes_.size()) {
    throw std::invalid_argument("value handle not part of this record");
  }
  return v.index();
}

int Graph::push(Tensor val, std::vector<int> parents, std::function<void(Graph&, int)> back) {
  nodes_.push_back(Node{std::move(val), Tensor{}, std::move(parents), std::move(back)});
  return static_cast<int>(nodes_.size()) - 1;
}

void Graph::accum(int idx, const Tensor& g) {
  Node& n = nodes_[idx];
  if (n.grad.empty()) {
    n.grad = Tensor::zeros(n.val.shape());
  }
  n.grad.add_inplace(g);
}

Tensor Graph::grad(Value v) const {
  const Node& n = nodes_[check(v)];
  if (n.grad.empty()) return Tensor::zeros(n.val.shape());
  return n.grad;
}

Value Graph::leaf(Tensor v) { return Value(push(std::move(v), {}, nullptr)); }

Value Graph::constant(Tensor v) {
  int idx = push(std::move(v), {}, nullptr);
  nodes_[idx].grad = Tensor{};  // same as leaf; nothing propagates past it
  return Value(idx);
}

Value Graph::add(Value a, Value b) {
  const int ia = check(a), ib = check(b);
  require_same_shape("add", val_of(ia), val_of(ib));
  Tensor out = val_of(ia);
  out.add_inplace(val_of(ib));
  return Value(push(std::move(out), {ia, ib}, [](Graph& g, int self) {
    const Tensor& go = g.nodes_[self].grad;
    g.accum(g.nodes_[self].parents[0], go);
    g.accum(g.nodes_[self].parents[1], go);
  }));
}

Value Graph::sub(Value a, Value b) {
  const int ia = check(a), ib = check(b);
  require_same_shape("sub", val_of(ia), val_of(ib));
  Tensor out = val_of(ia);
  for (std::size_t i = 0; i < out.size(); ++i) out[i] -= val_of(ib)[i];
  return Value(push(std::move(out), {ia, ib}, [](Graph& g, int self) {
    const Tensor& go = g.nodes_[self].grad;
    g.accum(g.nodes_[self].parents[0], go);
    Tensor neg = go;
    for (auto& x : neg) x = -x;
    g.accum(g.nodes_[self].parents[1], neg);
  }));
}

Value Graph::mul(Value a, Value b) {
  const int ia = check(a), ib = check(b);
  require_same_shape("mul", val_of(ia), val_of(ib));
  Tensor out = val_of(ia);
  for (std::size_t i = 0; i < out.size(); ++i) out[i] *= val_of(ib)[i];
  return Value(push(std::move(out), {ia, ib}, [](Graph& g, int self) {
    const Tensor& go = g.nodes_[self].grad;
    const int pa = g.nodes_[self].parents[0], pb = g.nodes_[self].parents[1];
    Tensor ga = go, gb = go;
    for (std::size_t i = 0; i < go.size(); ++i) {
      ga[i] *= g.val_of(pb)[i];
      gb[i] *= g.val_of(pa)[i];
    }
    g.accum(pa, ga);
    g.accum(pb, gb);
  }));
}

Value Graph::scale(Value a, double s) {
  const int ia = check(a);
  Tensor out = val_of(ia);
  for (auto& x : out) x *= s;
  return Value(push(std::move(out), {ia}, [s](Graph& g, int self) {
    Tensor ga = g.nodes_[self].grad;
    for (auto& x : ga) x *= s;
    g.accum(g.nodes_[self].parents[0], ga);
  }));
}

Value Graph::add_scalar(Value a, double s) {
  const int ia = check(a);
  Tensor out = val_of(ia);
  for (auto& x : out) x += s;
  return Value(push(std::move(out), {ia}, [](Graph& g, int self) {
    g.accum(g.nodes_[self].parents[0], g.nodes_[self].grad);
  }));
}

Value Graph::matmul(Value a, Value b) {
  const int ia = check(a), ib = check(b);
  const Tensor& ta = val_of(ia);
  const Tensor& tb = val_of(ib);
  if (ta.rank() != 2 || tb.rank() != 2 || ta.dim(1) != tb.dim(0)) shape_error("matmul", ta, tb);
  return Value(push(matmul_nn(ta, tb), {ia, ib}, [](Graph& g, int self) {
    const Tensor& go = g.nodes_[self].grad;
    const int pa = g.nodes_[self].parents[0], pb = g.nodes_[self].parents[1];
    g.accum(pa, matmul_nt(go, g.val_of(pb)));
    g.accum(pb, matmul_tn(g.val_of(pa), go));
  }));
}

Value Graph::tanh(Value a) {
  const int ia = check(a);
  Tensor out = val_of(ia);
  for (auto& x : out) x = std::tanh(x);
  return Value(push(std::move(out), {ia}, [](Graph& g, int self) {
    const Tensor& go = g.nodes_[self].grad;
    const Tensor& y = g.nodes_[self].val;
    Tensor ga = go;
    for (std::size_t i = 0; i < go.size(); ++i) ga[i] *= 1.0 - y[i] * y[i];
    g.accum(g.nodes_[self].parents[0], ga);
  }));
}

Value Graph::logistic(Value a) {
  const int ia = check(a);
  Tensor out = val_of(ia);
  for (auto& x : out) x = sigmoid(x);
  return Value(push(std::move(out), {ia}, [](Graph& g, int self) {
    const Tensor& go = g.nodes_[self].grad;
    const Tensor& y = g.nodes_[self].val;
    Tensor ga = go;
    for (std::size_t i = 0; i < go.size(); ++i) ga[i] *= y[i] * (1.0 - y[i]);
    g.accum(g.nodes_[self].parents[0], ga);
  }));
}

Value Graph::sum(Value a) {
  const int ia = check(a);
  double acc = 0.0;
  for (double x : val_of(ia)) acc += x;
  return Value(push(Tensor::scalar(acc), {ia}, [](Graph& g, int self) {
    const double go = g.nodes_[self].grad[0];
    const int pa = g.nodes_[self].parents[0];
    g.accum(pa, Tensor::full(g.val_of(pa).shape(), go));
  }));
}

Value Graph::mean(Value a) {
  const int ia = check(a);
  const Tensor& ta = val_of(ia);
  if (ta.size() == 0) throw std::invalid_argument("mean: empty tensor");
  double acc = 0.0;
  for (double x : ta) acc += x;
  acc /= static_cast<double>(ta.size());
  return Value(push(Tensor::scalar(acc), {ia}, [](Graph& g, int self) {
    const int pa = g.nodes_[self].parents[0];
    const double go = g.nodes_[self].grad[0] / static_cast<double>(g.val_of(pa).size());
    g.accum(pa, Tensor::full(g.val_of(pa).shape(), go));
  }));
}

Value Graph::l2norm(Value a) { return l2norm_cat({a}); }

Value Graph::l2norm_cat(const std::vector<Value>& parts) {
  if (parts.empty()) throw std::invalid_argument("l2norm_cat: no inputs");
  std::vector<int> ps;
  double sumsq = 0.0;
  for (Value v : parts) {
    const int i = check(v);
    ps.push_back(i);
    for (double x : val_of(i)) sumsq += x * x;
  }
  const double norm = std::sqrt(sumsq);
  return Value(push(Tensor::scalar(norm), std::move(ps), [](Graph& g, int self) {
    const double norm = g.nodes_[self].val[0];
    if (norm == 0.0) return;  // subgradient 0 at the kink
    const double go = g.nodes_[self].grad[0] / norm;
    for (int p : g.nodes_[self].parents) {
      Tensor gp = g.val_of(p);
      for (auto& x : gp) x *= go;
      g.accum(p, gp);
    }
  }));
}

Value Graph::concat_cols(Value a, Value b) {
  const int ia = check(a), ib = check(b);
  const Tensor& ta = val_of(ia);
  const Tensor& tb = val_of(ib);
  if (ta.rank() != 2 || tb.rank() != 2 || ta.dim(0) != tb.dim(0)) {
    shape_error("concat_cols", ta, tb);
  }
  const std::size_t r = ta.dim(0), ca = ta.dim(1), cb = tb.dim(1);
  Tensor out{Shape{r, ca + cb}};
  for (std::size_t i = 0; i < r; ++i) {
    for (std::size_t j = 0; j < ca; ++j) out[i * (ca + cb) + j] = ta[i * ca + j];
    for (std::size_t j = 0; j < cb; ++j) out[i * (ca + cb) + ca + j] = tb[i * cb + j];
  }
  return Value(push(std::move(out), {ia, ib}, [ca, cb, r](Graph& g, int self) {
    const Tensor& go = g.nodes_[self].grad;
    Tensor ga{Shape{r, ca}}, gb{Shape{r, cb}};
    for (std::size_t i = 0; i < r; ++i) {
      for (std::size_t j = 0; j < ca; ++j) ga[i * ca + j] = go[i * (ca + cb) + j];
      for (std::size_t j = 0; j < cb; ++j) gb[i * cb + j] = go[i * (ca + cb) + ca + j];
    }
    g.accum(g.nodes_[self].parents[0], ga);
    g.accum(g.nodes_[self].parents[1], gb);
  }));
}

Value Graph::reshape(Value a, Shape s) {
  const int ia = check(a);
  Tensor out = val_of(ia).reshaped(std::move(s));
  return Value(push(std::move(out), {ia}, [](Graph& g, int self) {
    const int pa = g.nodes_[self].parents[0];
    g.accum(pa, g.nodes_[self].grad.reshaped(g.val_of(pa).shape()));
  }));
}

Value Graph::ge(Value a, Value b) {
  const int ia = check(a), ib = check(b);
  require_same_shape("ge", val_of(ia), val_of(ib));
  Tensor out = val_of(ia);
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = out[i] >= val_of(ib)[i] ? 1.0 : 0.0;
  return Value(push(std::move(out), {ia, ib}, nullptr));
}

Value Graph::spike(Value u, double v_th, double lambda, SurrogateCentering centering) {
  if (!(lambda > 0.0)) throw std::invalid_argument("spike: lambda must be positive");
  const int iu = check(u);
  Tensor out = val_of(iu);
  if (relaxed_) {
    for (auto& x : out) {
      x = surrogate_ramp(centering == SurrogateCentering::centered ? x - v_th : x, lambda);
    }
  } else {
    for (auto& x : out) x = x >= v_th ? 1.0 : 0.0;
  }
  return Value(push(std::move(out), {iu}, [v_th, lambda, centering](Graph& g, int self) {
    const Tensor& go = g.nodes_[self].grad;
    const int pu = g.nodes_[self].parents[0];
    const Tensor& u = g.val_of(pu);
    Tensor gu = go;
    for (std::size_t i = 0; i < go.size(); ++i) {
      const double x = centering == SurrogateCentering::centered ? u[i] - v_th : u[i];
      gu[i] *= surrogate_slope(x, lambda);
    }
    g.accum(pu, gu);
  }));
}

Value Graph::gate(Value a, Value a_tilde, double temperature) {
  if (!(temperature > 0.0)) throw std::invalid_argument("gate: temperature must be positive");
  const int ia = check(a), ib = check(a_tilde);
  require_same_shape("gate", val_of(ia), val_of(ib));
  Tensor out = val_of(ia);
  if (relaxed_) {
    for (std::size_t i = 0; i < out.size(); ++i) {
      out[i] = sigmoid((out[i] - val_of(ib)[i]) / temperature);
    }
  } else {
    for (std::size_t i = 0; i < out.size(); ++i) {
      out[i] = out[i] >= val_of(ib)[i] ? 1.0 : 0.0;
    }
  }
  return Value(push(std::move(out), {ia, ib}, [temperature](Graph& g, int self) {
    const Tensor& go = g.nodes_[self].grad;
    const int pa = g.nodes_[self].parents[0], pb = g.nodes_[self].parents[1];
    Tensor ga = go, gb = go;
    for (std::size_t i = 0; i < go.size(); ++i) {
      const double s = sigmoid((g.val_of(pa)[i] - g.val_of(pb)[i]) / temperature);
      const double slope = s * (1.0 - s) / temperature;
      ga[i] *= slope;
      gb[i] *= -slope;
    }
    g.accum(pa, ga);
    g.accum(pb, gb);
  }));
}

Value Graph::conv2d(Value x, Value w, std::size_t stride) {
  const int ix = check(x), iw = check(w);
  Tensor out = conv2d_fwd(val_of(ix), val_of(iw), stride);
  return Value(push(std::move(out), {ix, iw}, [stride](Graph& g, int self) {
    const Tensor& go = g.nodes_[self].grad;
    const int px = g.nodes_[self].parents[0], pw = g.nodes_[self].parents[1];
    g.accum(px, conv2d_grad_input(go, g.val_of(pw), g.val_of(px).shape(), stride));
    g.accum(pw, conv2d_grad_weight(go, g.val_of(px), g.val_of(pw).shape(), stride));
  }));
}

Value Graph::cross_entropy(Value logits, std::vector<int> labels) {
  const int il = check(logits);
  const Tensor& z = val_of(il);
  if (z.rank() != 2 || z.dim(0) != labels.size()) {
    throw std::invalid_argument("cross_entropy: logits " + shape_str(z.shape()) + " vs " +
                                std::to_string(labels.size()) + " labels");
  }
  const std::size_t B = z.dim(0), C = z.dim(1);
  for (int lab : labels) {
    if (lab < 0 || static_cast<std::size_t>(lab) >= C) {
      throw std::invalid_argument("cross_entropy: label " + std::to_string(lab) +
                                  " out of range for " + std::to_string(C) + " classes");
    }
  }
  double loss = 0.0;
  for (std::size_t i = 0; i < B; ++i) {
    const double* row = z.data() + i * C;
    double m = row[0];
    for (std::size_t j = 1; j < C; ++j) m = std::max(m, row[j]);
    double se = 0.0;
    for (std::size_t j = 0; j < C; ++j) se += std::exp(row[j] - m);
    loss += m + std::log(se) - row[static_cast<std::size_t>(labels[i])];
  }
  loss /= static_cast<double>(B);
  return Value(push(Tensor::scalar(loss), {il},
                    [labels = std::move(labels), B, C](Graph& g, int self) {
                      const double go = g.nodes_[self].grad[0] / static_cast<double>(B);
                      const int pl = g.nodes_[self].parents[0];
                      const Tensor& z = g.val_of(pl);
                      Tensor gz{z.shape()};
                      for (std::size_t i = 0; i < B; ++i) {
                        const double* row = z.data() + i * C;
                        double m = row[0];
                        for (std::size_t j = 1; j < C; ++j) m = std::max(m, row[j]);
                        double se = 0.0;
                        for (std::size_t j = 0; j < C; ++j) se += std::exp(row[j] - m);
                        for (std::size_t j = 0; j < C; ++j) {
                          double p = std::exp(row[j] - m) / se;
                          gz[i * C + j] = go * (p - (static_cast<std::size_t>(labels[i]) == j
                                                         ? 1.0
                                                         : 0.0));
                        }
                      }
                      g.accum(pl, gz);
                    }));
}

void Graph::backward(Value loss) {
  const int il = check(loss);
  if (nodes_[il].val.size() != 1 || nodes_[il].val.rank() != 0) {
    throw std::invalid_argument("backward: loss must be a scalar, got shape " +
                                shape_str(nodes_[il].val.shape()));
  }
  accum(il, Tensor::scalar(1.0));
  for (int i = il; i >= 0; --i) {
    Node& n = nodes_[i];
    if (!n.back || n.grad.empty()) continue;
    n.back(*this, i);
  }
}

void Graph::zero_grads() {
  for (auto& n : nodes_) n.grad = Tensor{};
}

}  // namespace sorsnn
