#pragma once

#include <functional>
#include <vector>

#include "sorsnn/tensor.hpp"

namespace sorsnn {

enum class SurrogateCentering { centered, literal };

class Graph;

// Handle into a Graph's computation record.
class Value {
public:
  Value() = default;
  int index() const { return idx_; }
  bool valid() const { return idx_ >= 0; }

private:
  friend class Graph;
  explicit Value(int idx) : idx_(idx) {}
  int idx_ = -1;
};

// Single-threaded reverse-mode computation record. Ops evaluate eagerly and
// append to the tape; creation order is a topological order, so backward()
// is one reverse sweep. Gradients accumulate lazily: a node untouched by
// backward reads as exactly zero.
//
// With `relaxed_gates`, the two hard-threshold ops (spike, gate) evaluate
// their smooth relaxations instead of the hard forward. The registered
// backward rules are the true derivatives of those relaxations, which makes
// the whole record finite-difference checkable. Training always runs with
// hard forwards.
class Graph {
public:
  explicit Graph(bool relaxed_gates = false) : relaxed_(relaxed_gates) {}

  Value leaf(Tensor v);
  // A leaf that never accumulates gradient (inputs, detached snapshots).
  Value constant(Tensor v);

  Value add(Value a, Value b);
  Value sub(Value a, Value b);
  Value mul(Value a, Value b);
  Value scale(Value a, double s);
  Value add_scalar(Value a, double s);
  Value matmul(Value a, Value b);
  Value tanh(Value a);
  Value logistic(Value a);
  Value sum(Value a);
  Value mean(Value a);
  Value l2norm(Value a);
  Value l2norm_cat(const std::vector<Value>& parts);
  Value concat_cols(Value a, Value b);
  Value reshape(Value a, Shape s);
  // Hard elementwise a >= b; carries no gradient.
  Value ge(Value a, Value b);
  // Hard threshold 1[u >= v_th] with the triangular surrogate derivative of
  // width 1/lambda. `centering` picks where the surrogate window sits.
  Value spike(Value u, double v_th, double lambda,
              SurrogateCentering centering = SurrogateCentering::centered);
  // Hard gate 1[a >= a_tilde] with straight-through logistic backward.
  Value gate(Value a, Value a_tilde, double temperature);
  Value conv2d(Value x, Value w, std::size_t stride);
  // Mean cross-entropy over rows of logits [B,C], stable log-sum-exp.
  Value cross_entropy(Value logits, std::vector<int> labels);

  void backward(Value loss);
  void zero_grads();

  const Tensor& value(Value v) const { return nodes_[check(v)].val; }
  // Copy of the accumulated gradient; zeros when nothing reached the node.
  Tensor grad(Value v) const;

  bool relaxed() const { return relaxed_; }
  std::size_t node_count() const { return nodes_.size(); }

private:
  struct Node {
    Tensor val;
    Tensor grad;  // empty until first accumulation
    std::vector<int> parents;
    std::function<void(Graph&, int)> back;  // null: leaf or gradient barrier
  };

  int check(Value v) const;
  int push(Tensor val, std::vector<int> parents, std::function<void(Graph&, int)> back);
  void accum(int idx, const Tensor& g);
  const Tensor& val_of(int idx) const { return nodes_[idx].val; }

  std::vector<Node> nodes_;
  bool relaxed_ = false;
};

}  // namespace sorsnn
