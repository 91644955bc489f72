#include "ditto/tensor.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <limits>
#include <numeric>

#include "ditto/errors.hpp"

namespace ditto {

namespace {

std::size_t element_count(const Shape& shape) {
  return std::accumulate(shape.begin(), shape.end(), std::size_t{1}, std::multiplies<>());
}

void require_matrix(const Tensor& t, const char* what) {
  if (t.rank() != 2) {
    throw ShapeError(std::string(what) + ": expected a matrix, got shape " + shape_string(t.shape()));
  }
}

// Eight independent double accumulators keep the reduction order fixed while
// leaving room for the compiler to vectorize.
double dot_accumulate(const float* a, const float* b, std::size_t n) {
  double acc[8] = {0, 0, 0, 0, 0, 0, 0, 0};
  std::size_t i = 0;
  for (; i + 8 <= n; i += 8) {
    for (std::size_t lane = 0; lane < 8; ++lane) {
      acc[lane] += static_cast<double>(a[i + lane]) * static_cast<double>(b[i + lane]);
    }
  }
  // The tail goes to lane i % 8 as well, so trailing zeros (masked padding) leave the sum bit-identical.
  for (; i < n; ++i) acc[i % 8] += static_cast<double>(a[i]) * static_cast<double>(b[i]);
  return ((acc[0] + acc[1]) + (acc[2] + acc[3])) + ((acc[4] + acc[5]) + (acc[6] + acc[7]));
}

}  // namespace

std::string shape_string(const Shape& shape) {
  std::string out = "[";
  for (std::size_t i = 0; i < shape.size(); ++i) {
    if (i) out += "x";
    out += std::to_string(shape[i]);
  }
  return out + "]";
}

Tensor::Tensor(Shape shape) : shape_(std::move(shape)), data_(element_count(shape_), 0.0f) {}

Tensor::Tensor(Shape shape, std::vector<float> data) : shape_(std::move(shape)), data_(std::move(data)) {
  if (element_count(shape_) != data_.size()) {
    throw ShapeError("shape " + shape_string(shape_) + " holds " + std::to_string(element_count(shape_)) +
                     " values, got " + std::to_string(data_.size()));
  }
}

Tensor Tensor::matrix(std::size_t rows, std::size_t cols) { return Tensor(Shape{rows, cols}); }

Tensor Tensor::matrix(std::initializer_list<std::initializer_list<float>> rows) {
  const std::size_t n_rows = rows.size();
  const std::size_t n_cols = n_rows ? rows.begin()->size() : 0;
  std::vector<float> data;
  data.reserve(n_rows * n_cols);
  for (const auto& r : rows) {
    if (r.size() != n_cols) throw ShapeError("ragged matrix literal");
    data.insert(data.end(), r.begin(), r.end());
  }
  return Tensor(Shape{n_rows, n_cols}, std::move(data));
}

Tensor Tensor::vector(std::vector<float> values) {
  const std::size_t n = values.size();
  return Tensor(Shape{n}, std::move(values));
}

Tensor Tensor::identity(std::size_t n) {
  Tensor t = matrix(n, n);
  for (std::size_t i = 0; i < n; ++i) t(i, i) = 1.0f;
  return t;
}

std::size_t Tensor::dim(std::size_t axis) const {
  if (axis >= shape_.size()) {
    throw ShapeError("axis " + std::to_string(axis) + " out of range for shape " + shape_string(shape_));
  }
  return shape_[axis];
}

std::size_t Tensor::rows() const {
  if (rank() == 1) return 1;
  if (rank() != 2) throw ShapeError("rows() on non-matrix shape " + shape_string(shape_));
  return shape_[0];
}

std::size_t Tensor::cols() const {
  if (rank() == 1) return shape_[0];
  if (rank() != 2) throw ShapeError("cols() on non-matrix shape " + shape_string(shape_));
  return shape_[1];
}

std::span<const float> Tensor::row(std::size_t r) const {
  const std::size_t c = cols();
  if (r >= rows()) throw IndexError("row " + std::to_string(r) + " out of range");
  return std::span<const float>(data_).subspan(r * c, c);
}

std::span<float> Tensor::row(std::size_t r) {
  const std::size_t c = cols();
  if (r >= rows()) throw IndexError("row " + std::to_string(r) + " out of range");
  return std::span<float>(data_).subspan(r * c, c);
}

bool Tensor::all_finite() const {
  return std::all_of(data_.begin(), data_.end(), [](float v) { return std::isfinite(v); });
}

Tensor matmul(const Tensor& a, const Tensor& b) {
  require_matrix(a, "matmul");
  require_matrix(b, "matmul");
  if (a.cols() != b.rows()) {
    throw ShapeError("matmul: inner dimensions disagree for " + shape_string(a.shape()) + " x " +
                     shape_string(b.shape()));
  }
  // Transposing b makes both operands contiguous along the reduction axis.
  return linear(a, transpose(b), Tensor());
}

Tensor linear(const Tensor& x, const Tensor& weight, const Tensor& bias) {
  require_matrix(x, "linear");
  require_matrix(weight, "linear");
  const std::size_t m = x.rows();
  const std::size_t k = x.cols();
  const std::size_t n = weight.rows();
  if (weight.cols() != k) {
    throw ShapeError("linear: input " + shape_string(x.shape()) + " incompatible with weight " +
                     shape_string(weight.shape()));
  }
  if (!bias.empty() && bias.size() != n) {
    throw ShapeError("linear: bias " + shape_string(bias.shape()) + " does not match weight " +
                     shape_string(weight.shape()));
  }
  Tensor out = Tensor::matrix(m, n);
  const float* xd = x.data().data();
  const float* wd = weight.data().data();
  float* od = out.data().data();
  for (std::size_t i = 0; i < m; ++i) {
    const float* xi = xd + i * k;
    for (std::size_t j = 0; j < n; ++j) {
      double acc = dot_accumulate(xi, wd + j * k, k);
      if (!bias.empty()) acc += static_cast<double>(bias[j]);
      od[i * n + j] = static_cast<float>(acc);
    }
  }
  return out;
}

namespace {

Tensor softmax_impl(const Tensor& x, const Tensor* mask) {
  require_matrix(x, "softmax_rows");
  if (mask && mask->shape() != x.shape()) {
    throw ShapeError("softmax_rows: mask " + shape_string(mask->shape()) + " does not match input " +
                     shape_string(x.shape()));
  }
  Tensor out(x.shape());
  const std::size_t n = x.cols();
  std::vector<double> buf(n);
  for (std::size_t r = 0; r < x.rows(); ++r) {
    const auto in = x.row(r);
    double max_v = -std::numeric_limits<double>::infinity();
    for (std::size_t c = 0; c < n; ++c) {
      buf[c] = static_cast<double>(in[c]) + (mask ? static_cast<double>((*mask)(r, c)) : 0.0);
      max_v = std::max(max_v, buf[c]);
    }
    double sum = 0.0;
    for (std::size_t c = 0; c < n; ++c) {
      buf[c] = std::exp(buf[c] - max_v);
      sum += buf[c];
    }
    auto o = out.row(r);
    for (std::size_t c = 0; c < n; ++c) o[c] = static_cast<float>(buf[c] / sum);
  }
  return out;
}

}  // namespace

Tensor softmax_rows(const Tensor& x) { return softmax_impl(x, nullptr); }

Tensor softmax_rows(const Tensor& x, const Tensor& additive_mask) { return softmax_impl(x, &additive_mask); }

Tensor layer_norm(const Tensor& x, const Tensor& gamma, const Tensor& beta, float eps) {
  if (x.rank() == 0 || x.empty()) return x;
  if (!(eps > 0.0f)) throw Error("layer_norm: eps must be positive");
  const std::size_t d = x.shape().back();
  if (gamma.size() != d || beta.size() != d) {
    throw ShapeError("layer_norm: gamma/beta " + shape_string(gamma.shape()) + "/" + shape_string(beta.shape()) +
                     " do not match feature size " + std::to_string(d));
  }
  Tensor out(x.shape());
  const auto in = x.data();
  auto o = out.data();
  for (std::size_t base = 0; base < in.size(); base += d) {
    double mean = 0.0;
    for (std::size_t i = 0; i < d; ++i) mean += in[base + i];
    mean /= static_cast<double>(d);
    double var = 0.0;
    for (std::size_t i = 0; i < d; ++i) {
      const double c = in[base + i] - mean;
      var += c * c;
    }
    var /= static_cast<double>(d);
    const double inv = 1.0 / std::sqrt(var + static_cast<double>(eps));
    for (std::size_t i = 0; i < d; ++i) {
      o[base + i] = static_cast<float>((in[base + i] - mean) * inv * gamma[i] + beta[i]);
    }
  }
  return out;
}

float gelu(float x) {
  const double v = x;
  return static_cast<float>(0.5 * v * (1.0 + std::erf(v / std::sqrt(2.0))));
}

Tensor gelu(const Tensor& x) {
  Tensor out(x.shape());
  const auto in = x.data();
  auto o = out.data();
  for (std::size_t i = 0; i < in.size(); ++i) o[i] = gelu(in[i]);
  return out;
}

Tensor add(const Tensor& a, const Tensor& b) {
  if (a.shape() != b.shape()) {
    throw ShapeError("add: shapes " + shape_string(a.shape()) + " and " + shape_string(b.shape()) + " differ");
  }
  Tensor out(a.shape());
  for (std::size_t i = 0; i < a.size(); ++i) out[i] = a[i] + b[i];
  return out;
}

Tensor scale(const Tensor& a, float factor) {
  Tensor out(a.shape());
  for (std::size_t i = 0; i < a.size(); ++i) out[i] = a[i] * factor;
  return out;
}

Tensor transpose(const Tensor& a) {
  require_matrix(a, "transpose");
  Tensor out = Tensor::matrix(a.cols(), a.rows());
  for (std::size_t r = 0; r < a.rows(); ++r) {
    for (std::size_t c = 0; c < a.cols(); ++c) out(c, r) = a(r, c);
  }
  return out;
}

double dot(std::span<const float> a, std::span<const float> b) {
  if (a.size() != b.size()) {
    throw ShapeError("dot: lengths " + std::to_string(a.size()) + " and " + std::to_string(b.size()) + " differ");
  }
  return dot_accumulate(a.data(), b.data(), a.size());
}

double l2_norm(std::span<const float> a) { return std::sqrt(dot(a, a)); }

double cosine(std::span<const float> a, std::span<const float> b) {
  const double na = l2_norm(a);
  const double nb = l2_norm(b);
  if (na == 0.0 || nb == 0.0) throw DegenerateInputError("cosine: zero-norm vector");
  const double c = dot(a, b) / (na * nb);
  return std::clamp(c, -1.0, 1.0);
}

double cosine(const Tensor& a, const Tensor& b) { return cosine(a.data(), b.data()); }

}  // namespace ditto
