#pragma once

#include <compare>
#include <cstddef>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "ditto/model_io.hpp"
#include "ditto/tensor.hpp"
#include "ditto/tokenizer.hpp"

namespace ditto {

/// 1-based attention head coordinate, written "<layer>-<head>" (e.g. "1-10").
struct HeadRef {
  int layer = 1;
  int head = 1;

  static HeadRef parse(std::string_view text);
  std::string str() const;
  /// Throws IndexError when outside [1, L] x [1, H].
  void validate(std::size_t num_layers, std::size_t num_heads) const;

  friend auto operator<=>(const HeadRef&, const HeadRef&) = default;
};

/// Every layer's hidden states and every head's attention matrix for one
/// sentence, trimmed to its true length N.
struct EncoderOutput {
  std::vector<Tensor> hidden;                   // L+1 entries of N x d; hidden[0] is the embedding output
  std::vector<std::vector<Tensor>> attentions;  // [layer][head] -> N x N, post-softmax
  std::size_t n_tokens = 0;

  std::size_t num_layers() const noexcept { return hidden.empty() ? 0 : hidden.size() - 1; }
  const Tensor& first() const { return hidden.front(); }
  const Tensor& last() const { return hidden.back(); }
  const Tensor& attention(HeadRef head) const;
};

struct ForwardOptions {
  bool keep_attentions = true;
};

EncoderOutput forward(std::span<const TokenId> ids, const ModelWeights& weights, const EncoderConfig& config,
                      const ForwardOptions& options = {});
EncoderOutput forward(const TokenizedSentence& s, const Model& model, const ForwardOptions& options = {});

/// [A_11, ..., A_NN] for one head.
std::vector<float> diagonal_attention(const EncoderOutput& out, HeadRef head);

struct BatchOptions {
  std::size_t threads = 1;  // 0 = all cores
  ForwardOptions forward;
};

/// Pads every sentence to the longest one, masks the padded columns, and
/// trims the padding back out of each result.
std::vector<EncoderOutput> forward_batch(std::span<const TokenizedSentence> sentences, const ModelWeights& weights,
                                         const EncoderConfig& config, TokenId pad_id,
                                         const BatchOptions& options = {});
std::vector<EncoderOutput> forward_batch(std::span<const TokenizedSentence> sentences, const Model& model,
                                         const BatchOptions& options = {});

}  // namespace ditto
