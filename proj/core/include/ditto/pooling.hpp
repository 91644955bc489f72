#pragma once

#include <cstddef>
#include <filesystem>
#include <memory>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "ditto/encoder.hpp"
#include "ditto/model_io.hpp"
#include "ditto/tensor.hpp"
#include "ditto/tfidf.hpp"
#include "ditto/tokenizer.hpp"

namespace ditto {

enum class Strategy {
  static_avg,
  last_avg,
  first_last_avg,
  static_ditto,
  last_ditto,
  first_last_ditto,
  first_last_tfidf,
};

std::string_view strategy_name(Strategy s);
Strategy parse_strategy(std::string_view name);
bool is_ditto(Strategy s);

struct PoolingSpec {
  Strategy strategy = Strategy::first_last_avg;
  std::optional<HeadRef> head;                // Ditto variants only
  std::shared_ptr<const TfidfModel> tfidf;    // first_last_tfidf only
  std::string tfidf_path;                     // provenance for reports
  bool include_special_tokens = true;

  /// Compact form: "first_last_avg", "first_last_ditto@1-10",
  /// "first_last_tfidf:weights.tsv". The TF-IDF file is loaded here.
  static PoolingSpec parse(std::string_view text);
  std::string str() const;
  /// Throws SpecError for missing head/model, IndexError for an out-of-range head.
  void validate(const EncoderConfig& config) const;
};

/// Pools token states of one sentence. `diagonal` is the selected head's
/// [A_11..A_NN] and is only read by Ditto strategies.
Tensor pool_tokens(const Tensor& first, const Tensor& last, std::span<const float> diagonal, const PoolingSpec& spec,
                   const TokenizedSentence& sentence);

Tensor pool(const EncoderOutput& out, const PoolingSpec& spec, const TokenizedSentence& sentence);

/// Per-token TF-IDF weights: a subword inherits its word's weight with tf
/// counted within the sentence; special tokens get 0.
std::vector<double> token_tfidf_weights(const TokenizedSentence& sentence, const TfidfModel& tfidf);

struct EmbedOptions {
  std::size_t max_len = kDefaultMaxLength;
  std::size_t batch_size = 32;
  std::size_t threads = 1;  // 0 = all cores
};

/// Row i = pool(forward(encode(sentences[i]))). Failures carry the sentence index.
Tensor embed_corpus(std::span<const std::string> sentences, const Model& model, const PoolingSpec& spec,
                    const EmbedOptions& options = {});

/// Writes one row per line with 6 significant digits.
void write_embeddings_csv(const std::filesystem::path& path, const Tensor& embeddings);

}  // namespace ditto
