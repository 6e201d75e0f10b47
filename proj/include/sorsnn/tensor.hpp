#pragma once

#include <cstddef>
#include <string>
#include <vector>

namespace sorsnn {

using Shape = std::vector<std::size_t>;

std::size_t shape_numel(const Shape& s);
std::string shape_str(const Shape& s);

// Dense row-major tensor of doubles. Rank 0 holds a single scalar; a
// default-constructed tensor is empty (used for "no gradient yet").
class Tensor {
public:
  Tensor() = default;
  explicit Tensor(Shape shape);
  Tensor(Shape shape, std::vector<double> values);

  static Tensor scalar(double v);
  static Tensor zeros(Shape shape);
  static Tensor full(Shape shape, double v);

  const Shape& shape() const { return shape_; }
  std::size_t size() const { return data_.size(); }
  std::size_t rank() const { return shape_.size(); }
  std::size_t dim(std::size_t i) const { return shape_[i]; }
  bool empty() const { return data_.empty(); }

  double* data() { return data_.data(); }
  const double* data() const { return data_.data(); }
  double& operator[](std::size_t i) { return data_[i]; }
  double operator[](std::size_t i) const { return data_[i]; }

  std::vector<double>::iterator begin() { return data_.begin(); }
  std::vector<double>::iterator end() { return data_.end(); }
  std::vector<double>::const_iterator begin() const { return data_.begin(); }
  std::vector<double>::const_iterator end() const { return data_.end(); }

  bool same_shape(const Tensor& other) const { return shape_ == other.shape_; }
  double item() const;

  void fill(double v);
  void add_inplace(const Tensor& other);
  Tensor reshaped(Shape s) const;

private:
  Shape shape_;
  std::vector<double> data_;
};

// Raw kernels shared by the forward ops and their backward rules.
Tensor matmul_nn(const Tensor& a, const Tensor& b);  // [m,k]x[k,n]
Tensor matmul_nt(const Tensor& a, const Tensor& b);  // [m,k]x[n,k]^T
Tensor matmul_tn(const Tensor& a, const Tensor& b);  // [m,k]^T x [m,n]

// Valid (unpadded) 2-D cross-correlation. x: [B,Cin,H,W], w: [Cout,Cin,kh,kw].
Shape conv2d_out_shape(const Shape& x, const Shape& w, std::size_t stride);
Tensor conv2d_fwd(const Tensor& x, const Tensor& w, std::size_t stride);
Tensor conv2d_grad_input(const Tensor& gout, const Tensor& w, const Shape& x_shape,
                         std::size_t stride);
Tensor conv2d_grad_weight(const Tensor& gout, const Tensor& x, const Shape& w_shape,
                          std::size_t stride);

}  // namespace sorsnn
