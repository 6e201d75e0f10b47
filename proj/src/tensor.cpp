#include "sorsnn/tensor.hpp"

#include <sstream>
#include <stdexcept>

namespace sorsnn {

std::size_t shape_numel(const Shape& s) {
  std::size_t n = 1;
  for (auto d : s) n *= d;
  return n;
}

std::string shape_str(const Shape& s) {
  std::ostringstream os;
  os << "[";
  for (std::size_t i = 0; i < s.size(); ++i) {
    if (i) os << ",";
    os << s[i];
  }
  os << "]";
  return os.str();
}

Tensor::Tensor(Shape shape) : shape_(std::move(shape)), data_(shape_numel(shape_), 0.0) {}

Tensor::Tensor(Shape shape, std::vector<double> values)
    : shape_(std::move(shape)), data_(std::move(values)) {
  if (data_.size() != shape_numel(shape_)) {
    throw std::invalid_argument("tensor: " + std::to_string(data_.size()) +
                                " values for shape " + shape_str(shape_));
  }
}

Tensor Tensor::scalar(double v) {
  Tensor t{Shape{}};
  t.data_[0] = v;
  return t;
}

Tensor Tensor::zeros(Shape shape) { return Tensor(std::move(shape)); }

Tensor Tensor::full(Shape shape, double v) {
  Tensor t(std::move(shape));
  t.fill(v);
  return t;
}

double Tensor::item() const {
  if (data_.size() != 1) {
    throw std::invalid_argument("item() on tensor of shape " + shape_str(shape_));
  }
  return data_[0];
}

void Tensor::fill(double v) {
  for (auto& x : data_) x = v;
}

void Tensor::add_inplace(const Tensor& other) {
  if (!same_shape(other)) {
    throw std::invalid_argument("add_inplace: shape " + shape_str(shape_) + " vs " +
                                shape_str(other.shape_));
  }
  for (std::size_t i = 0; i < data_.size(); ++i) data_[i] += other.data_[i];
}

Tensor Tensor::reshaped(Shape s) const {
  if (shape_numel(s) != data_.size()) {
    throw std::invalid_argument("reshape: " + shape_str(shape_) + " to " + shape_str(s));
  }
  Tensor t;
  t.shape_ = std::move(s);
  t.data_ = data_;
  return t;
}

Tensor matmul_nn(const Tensor& a, const Tensor& b) {
  const std::size_t m = a.dim(0), k = a.dim(1), n = b.dim(1);
  Tensor out{Shape{m, n}};
  for (std::size_t i = 0; i < m; ++i) {
    for (std::size_t p = 0; p < k; ++p) {
      const double av = a[i * k + p];
      if (av == 0.0) continue;
      const double* brow = b.data() + p * n;
      double* orow = out.data() + i * n;
      for (std::size_t j = 0; j < n; ++j) orow[j] += av * brow[j];
    }
  }
  return out;
}

Tensor matmul_nt(const Tensor& a, const Tensor& b) {
  const std::size_t m = a.dim(0), k = a.dim(1), n = b.dim(0);
  Tensor out{Shape{m, n}};
  for (std::size_t i = 0; i < m; ++i) {
    for (std::size_t j = 0; j < n; ++j) {
      const double* arow = a.data() + i * k;
      const double* brow = b.data() + j * k;
      double acc = 0.0;
      for (std::size_t p = 0; p < k; ++p) acc += arow[p] * brow[p];
      out[i * n + j] = acc;
    }
  }
  return out;
}

Tensor matmul_tn(const Tensor& a, const Tensor& b) {
  const std::size_t m = a.dim(0), k = a.dim(1), n = b.dim(1);
  Tensor out{Shape{k, n}};
  for (std::size_t i = 0; i < m; ++i) {
    const double* arow = a.data() + i * k;
    const double* brow = b.data() + i * n;
    for (std::size_t p = 0; p < k; ++p) {
      const double av = arow[p];
      if (av == 0.0) continue;
      double* orow = out.data() + p * n;
      for (std::size_t j = 0; j < n; ++j) orow[j] += av * brow[j];
    }
  }
  return out;
}

Shape conv2d_out_shape(const Shape& x, const Shape& w, std::size_t stride) {
  if (x.size() != 4 || w.size() != 4) {
    throw std::invalid_argument("conv2d: input " + shape_str(x) + ", weight " + shape_str(w));
  }
  if (x[1] != w[1]) {
    throw std::invalid_argument("conv2d: channel mismatch, input " + shape_str(x) +
                                " weight " + shape_str(w));
  }
  if (w[2] > x[2] || w[3] > x[3] || stride == 0) {
    throw std::invalid_argument("conv2d: kernel " + shape_str(w) + " does not fit input " +
                                shape_str(x));
  }
  const std::size_t oh = (x[2] - w[2]) / stride + 1;
  const std::size_t ow = (x[3] - w[3]) / stride + 1;
  return Shape{x[0], w[0], oh, ow};
}

Tensor conv2d_fwd(const Tensor& x, const Tensor& w, std::size_t stride) {
  const Shape os = conv2d_out_shape(x.shape(), w.shape(), stride);
  const std::size_t B = os[0], Co = os[1], OH = os[2], OW = os[3];
  const std::size_t Ci = x.dim(1), H = x.dim(2), W = x.dim(3);
  const std::size_t KH = w.dim(2), KW = w.dim(3);
  Tensor out{os};
  for (std::size_t b = 0; b < B; ++b) {
    for (std::size_t co = 0; co < Co; ++co) {
      for (std::size_t oy = 0; oy < OH; ++oy) {
        for (std::size_t ox = 0; ox < OW; ++ox) {
          double acc = 0.0;
          for (std::size_t ci = 0; ci < Ci; ++ci) {
            const double* xp = x.data() + ((b * Ci + ci) * H + oy * stride) * W + ox * stride;
            const double* wp = w.data() + ((co * Ci + ci) * KH) * KW;
            for (std::size_t ky = 0; ky < KH; ++ky) {
              for (std::size_t kx = 0; kx < KW; ++kx) acc += xp[ky * W + kx] * wp[ky * KW + kx];
            }
          }
          out[((b * Co + co) * OH + oy) * OW + ox] = acc;
        }
      }
    }
  }
  return out;
}

Tensor conv2d_grad_input(const Tensor& gout, const Tensor& w, const Shape& x_shape,
                         std::size_t stride) {
  const std::size_t B = gout.dim(0), Co = gout.dim(1), OH = gout.dim(2), OW = gout.dim(3);
  const std::size_t Ci = x_shape[1], H = x_shape[2], W = x_shape[3];
  const std::size_t KH = w.dim(2), KW = w.dim(3);
  Tensor gx{x_shape};
  for (std::size_t b = 0; b < B; ++b) {
    for (std::size_t co = 0; co < Co; ++co) {
      for (std::size_t oy = 0; oy < OH; ++oy) {
        for (std::size_t ox = 0; ox < OW; ++ox) {
          const double g = gout[((b * Co + co) * OH + oy) * OW + ox];
          if (g == 0.0) continue;
          for (std::size_t ci = 0; ci < Ci; ++ci) {
            double* xp = gx.data() + ((b * Ci + ci) * H + oy * stride) * W + ox * stride;
            const double* wp = w.data() + ((co * Ci + ci) * KH) * KW;
            for (std::size_t ky = 0; ky < KH; ++ky) {
              for (std::size_t kx = 0; kx < KW; ++kx) xp[ky * W + kx] += g * wp[ky * KW + kx];
            }
          }
        }
      }
    }
  }
  return gx;
}

Tensor conv2d_grad_weight(const Tensor& gout, const Tensor& x, const Shape& w_shape,
                          std::size_t stride) {
  const std::size_t B = gout.dim(0), Co = gout.dim(1), OH = gout.dim(2), OW = gout.dim(3);
  const std::size_t Ci = x.dim(1), H = x.dim(2), W = x.dim(3);
  const std::size_t KH = w_shape[2], KW = w_shape[3];
  Tensor gw{w_shape};
  for (std::size_t b = 0; b < B; ++b) {
    for (std::size_t co = 0; co < Co; ++co) {
      for (std::size_t oy = 0; oy < OH; ++oy) {
        for (std::size_t ox = 0; ox < OW; ++ox) {
          const double g = gout[((b * Co + co) * OH + oy) * OW + ox];
          if (g == 0.0) continue;
          for (std::size_t ci = 0; ci < Ci; ++ci) {
            const double* xp = x.data() + ((b * Ci + ci) * H + oy * stride) * W + ox * stride;
            double* wp = gw.data() + ((co * Ci + ci) * KH) * KW;
            for (std::size_t ky = 0; ky < KH; ++ky) {
              for (std::size_t kx = 0; kx < KW; ++kx) wp[ky * KW + kx] += g * xp[ky * W + kx];
            }
          }
        }
      }
    }
  }
  return gw;
}

}  // namespace sorsnn
