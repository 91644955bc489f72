#include "ditto/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "ditto/errors.hpp"

namespace ditto {

namespace {

void check_pair(std::span<const double> a, std::span<const double> b) {
  if (a.size() != b.size()) {
    throw ShapeError("correlation inputs differ in length (" + std::to_string(a.size()) + " vs " +
                     std::to_string(b.size()) + ")");
  }
  if (a.size() < 2) throw InsufficientDataError("correlation needs at least two values");
}

std::vector<std::vector<double>> normalized_rows(const Tensor& t) {
  std::vector<std::vector<double>> rows(t.rows());
  for (std::size_t r = 0; r < t.rows(); ++r) {
    const auto v = t.row(r);
    const double norm = l2_norm(v);
    if (norm == 0.0) throw DegenerateInputError("row " + std::to_string(r) + " is a zero vector");
    rows[r].resize(v.size());
    for (std::size_t k = 0; k < v.size(); ++k) rows[r][k] = v[k] / norm;
  }
  return rows;
}

double squared_distance(const std::vector<double>& x, const std::vector<double>& y) {
  double s = 0.0;
  for (std::size_t k = 0; k < x.size(); ++k) {
    const double d = x[k] - y[k];
    s += d * d;
  }
  return s;
}

}  // namespace

std::vector<double> average_ranks(std::span<const double> values) {
  std::vector<std::size_t> order(values.size());
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(), [&](std::size_t i, std::size_t j) { return values[i] < values[j]; });
  std::vector<double> ranks(values.size());
  std::size_t i = 0;
  while (i < order.size()) {
    std::size_t j = i;
    while (j + 1 < order.size() && values[order[j + 1]] == values[order[i]]) ++j;
    const double rank = 0.5 * static_cast<double>(i + j) + 1.0;
    for (std::size_t k = i; k <= j; ++k) ranks[order[k]] = rank;
    i = j + 1;
  }
  return ranks;
}

double pearson(std::span<const double> a, std::span<const double> b) {
  check_pair(a, b);
  const double n = static_cast<double>(a.size());
  const double mean_a = std::accumulate(a.begin(), a.end(), 0.0) / n;
  const double mean_b = std::accumulate(b.begin(), b.end(), 0.0) / n;
  double cov = 0.0, var_a = 0.0, var_b = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    const double da = a[i] - mean_a;
    const double db = b[i] - mean_b;
    cov += da * db;
    var_a += da * da;
    var_b += db * db;
  }
  if (var_a == 0.0 || var_b == 0.0) throw UndefinedCorrelationError("correlation undefined for constant input");
  return std::clamp(cov / std::sqrt(var_a * var_b), -1.0, 1.0);
}

double spearman(std::span<const double> a, std::span<const double> b) {
  check_pair(a, b);
  const auto ra = average_ranks(a);
  const auto rb = average_ranks(b);
  return pearson(ra, rb);
}

CorrelationPair correlate(std::span<const double> a, std::span<const double> b) {
  return {pearson(a, b), spearman(a, b)};
}

double alignment(const Tensor& lhs, const Tensor& rhs) {
  if (lhs.rows() != rhs.rows() || lhs.cols() != rhs.cols()) {
    throw ShapeError("alignment: " + shape_string(lhs.shape()) + " vs " + shape_string(rhs.shape()));
  }
  if (lhs.rows() == 0 || lhs.empty()) throw InsufficientDataError("alignment needs at least one pair");
  const auto x = normalized_rows(lhs);
  const auto y = normalized_rows(rhs);
  double total = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) total += squared_distance(x[i], y[i]);
  return total / static_cast<double>(x.size());
}

double uniformity(const Tensor& embeddings) {
  if (embeddings.rank() != 2 || embeddings.rows() < 2) {
    throw InsufficientDataError("uniformity needs at least two embeddings");
  }
  const auto x = normalized_rows(embeddings);
  double total = 0.0;
  std::size_t pairs = 0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    for (std::size_t j = i + 1; j < x.size(); ++j) {
      total += std::exp(-2.0 * squared_distance(x[i], x[j]));
      ++pairs;
    }
  }
  return std::log(total / static_cast<double>(pairs));
}

double avg_cosine(const Tensor& embeddings) {
  if (embeddings.rank() != 2 || embeddings.rows() < 2) {
    throw InsufficientDataError("average cosine needs at least two embeddings");
  }
  const auto x = normalized_rows(embeddings);
  double total = 0.0;
  std::size_t pairs = 0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    for (std::size_t j = i + 1; j < x.size(); ++j) {
      double c = 0.0;
      for (std::size_t k = 0; k < x[i].size(); ++k) c += x[i][k] * x[j][k];
      total += c;
      ++pairs;
    }
  }
  return total / static_cast<double>(pairs);
}

}  // namespace ditto
