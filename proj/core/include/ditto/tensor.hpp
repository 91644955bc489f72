#pragma once

#include <cstddef>
#include <initializer_list>
#include <span>
#include <string>
#include <vector>

namespace ditto {

using Shape = std::vector<std::size_t>;

std::string shape_string(const Shape& shape);

/// Dense row-major float32 array. The product of `shape` always equals the
/// number of stored values.
class Tensor {
 public:
  Tensor() = default;
  explicit Tensor(Shape shape);
  Tensor(Shape shape, std::vector<float> data);

  static Tensor matrix(std::size_t rows, std::size_t cols);
  static Tensor matrix(std::initializer_list<std::initializer_list<float>> rows);
  static Tensor vector(std::vector<float> values);
  static Tensor identity(std::size_t n);

  const Shape& shape() const noexcept { return shape_; }
  std::size_t rank() const noexcept { return shape_.size(); }
  std::size_t dim(std::size_t axis) const;
  std::size_t size() const noexcept { return data_.size(); }
  bool empty() const noexcept { return data_.empty(); }

  // Matrix views. A rank-1 tensor is treated as a single row.
  std::size_t rows() const;
  std::size_t cols() const;
  std::span<const float> row(std::size_t r) const;
  std::span<float> row(std::size_t r);

  float operator()(std::size_t r, std::size_t c) const { return data_[r * cols() + c]; }
  float& operator()(std::size_t r, std::size_t c) { return data_[r * cols() + c]; }
  float operator[](std::size_t i) const { return data_[i]; }
  float& operator[](std::size_t i) { return data_[i]; }

  std::span<const float> data() const noexcept { return data_; }
  std::span<float> data() noexcept { return data_; }
  const std::vector<float>& values() const noexcept { return data_; }

  bool all_finite() const;

  friend bool operator==(const Tensor&, const Tensor&) = default;

 private:
  Shape shape_;
  std::vector<float> data_;
};

/// Large negative value added to attention logits of excluded columns.
inline constexpr float kMaskedLogit = -1e9f;

// Dot products inside matmul/linear are accumulated in double.
Tensor matmul(const Tensor& a, const Tensor& b);

/// x * W^T + b, with W stored as (out_features x in_features).
Tensor linear(const Tensor& x, const Tensor& weight, const Tensor& bias);

Tensor softmax_rows(const Tensor& x);
Tensor softmax_rows(const Tensor& x, const Tensor& additive_mask);

/// Normalizes every vector along the last axis, then applies gamma/beta.
Tensor layer_norm(const Tensor& x, const Tensor& gamma, const Tensor& beta, float eps);

float gelu(float x);
Tensor gelu(const Tensor& x);

Tensor add(const Tensor& a, const Tensor& b);
Tensor scale(const Tensor& a, float factor);
Tensor transpose(const Tensor& a);

double dot(std::span<const float> a, std::span<const float> b);
double l2_norm(std::span<const float> a);

/// Cosine similarity; throws DegenerateInputError on a zero-norm vector.
double cosine(std::span<const float> a, std::span<const float> b);
double cosine(const Tensor& a, const Tensor& b);

}  // namespace ditto
