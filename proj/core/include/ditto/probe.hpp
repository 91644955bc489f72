#pragma once

#include <cstddef>
#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "ditto/metrics.hpp"
#include "ditto/model_io.hpp"
#include "ditto/tensor.hpp"
#include "ditto/tfidf.hpp"
#include "ditto/tokenizer.hpp"

namespace ditto {

/// Perturbed-masking impact matrix over the non-special positions of one
/// sentence. f(i, j) is the distance between position i's representation with
/// i masked and with both i and j masked.
struct ImpactMatrix {
  Tensor f;                            // n x n, rows = predicted token, cols = masked token
  TokenizedSentence sentence;
  std::vector<std::size_t> positions;  // token index of each row/column
  std::size_t repr_layer = 0;
};

struct ProbeOptions {
  std::optional<std::size_t> repr_layer;  // default: last layer
  std::size_t batch_size = 64;
  std::size_t threads = 1;  // 0 = all cores
  std::size_t max_len = kDefaultMaxLength;
};

/// Throws DegenerateInputError when the sentence has no real tokens and
/// IndexError when repr_layer exceeds the layer count.
ImpactMatrix impact_matrix(const TokenizedSentence& s, const Model& model, const ProbeOptions& options = {});

/// Column means (1/n) sum_i F_ij, averaged over each word's subword columns.
std::vector<double> mean_impact(const ImpactMatrix& m);

/// Mean of per-token values within each word span.
std::vector<double> word_means(std::span<const double> token_values, const TokenizedSentence& s);

/// TF-IDF weight of each word, with tf counted within the sentence.
std::vector<double> word_tfidf_weights(const TokenizedSentence& s, const TfidfModel& tfidf);

struct ImpactCorrelation {
  CorrelationPair correlation;
  std::size_t n_words = 0;
  std::size_t n_sentences = 0;
  std::size_t skipped = 0;  // sentences without any word
};

/// Pools (mean impact, TF-IDF weight) over every word of every sentence.
ImpactCorrelation impact_tfidf_correlation(std::span<const std::string> corpus, const Model& model,
                                           const TfidfModel& tfidf, const ProbeOptions& options = {});

/// Heatmap export: F as CSV and a JSON sidecar with tokens, words and mean impacts.
void write_impact_csv(const std::filesystem::path& path, const ImpactMatrix& m);
std::string impact_json(const ImpactMatrix& m, const Model& model);

}  // namespace ditto
