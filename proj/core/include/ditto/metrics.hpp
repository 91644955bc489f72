#pragma once

#include <span>
#include <vector>

#include "ditto/tensor.hpp"

namespace ditto {

/// 1-based ranks; tied values share the mean of the ranks they span.
std::vector<double> average_ranks(std::span<const double> values);

/// Product-moment correlation. Throws UndefinedCorrelationError when either
/// side is constant and InsufficientDataError for fewer than two values.
double pearson(std::span<const double> a, std::span<const double> b);

/// Pearson correlation of the average ranks.
double spearman(std::span<const double> a, std::span<const double> b);

struct CorrelationPair {
  double pearson = 0.0;
  double spearman = 0.0;
};

CorrelationPair correlate(std::span<const double> a, std::span<const double> b);

/// Mean squared distance between L2-normalized rows lhs[i] and rhs[i].
double alignment(const Tensor& lhs, const Tensor& rhs);

/// log of the mean of exp(-2 |x - y|^2) over unordered distinct row pairs,
/// rows L2-normalized first.
double uniformity(const Tensor& embeddings);

/// Mean cosine similarity over unordered distinct row pairs.
double avg_cosine(const Tensor& embeddings);

}  // namespace ditto
