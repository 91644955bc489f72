#pragma once

#include <cstddef>
#include <filesystem>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "ditto/tensor.hpp"
#include "ditto/tensor_file.hpp"
#include "ditto/tokenizer.hpp"

namespace ditto {

struct EncoderConfig {
  std::size_t hidden_size = 0;
  std::size_t num_layers = 0;
  std::size_t num_heads = 0;
  std::size_t intermediate_size = 0;
  std::size_t vocab_size = 0;
  std::size_t max_position_embeddings = 0;
  std::size_t type_vocab_size = 0;
  float layer_norm_eps = 1e-12f;
  /// Width of the embedding tables. Differs from hidden_size only for models
  /// with an embedding projection (ELECTRA-style).
  std::size_t embedding_size = 0;
  /// Index of the first position embedding (2 for RoBERTa-style checkpoints).
  std::size_t position_offset = 0;

  std::size_t head_dim() const noexcept { return num_heads ? hidden_size / num_heads : 0; }
  std::size_t embedding_width() const noexcept { return embedding_size ? embedding_size : hidden_size; }
  void validate() const;

  /// Accepts both the short field names (num_layers, num_heads) and the
  /// checkpoint-style ones (num_hidden_layers, num_attention_heads).
  static EncoderConfig from_json(std::string_view json_text);
  static EncoderConfig load(const std::filesystem::path& path);
};

struct LinearWeights {
  Tensor weight;  // (out_features x in_features)
  Tensor bias;    // (out_features)
};

struct NormWeights {
  Tensor gamma;
  Tensor beta;
};

struct LayerWeights {
  LinearWeights query, key, value, attention_output;
  NormWeights attention_norm;
  LinearWeights ffn_in, ffn_out;
  NormWeights ffn_norm;
};

struct ModelWeights {
  Tensor token_embeddings;     // vocab x E
  Tensor position_embeddings;  // max_positions x E
  Tensor segment_embeddings;   // type_vocab x E
  NormWeights embedding_norm;  // E
  std::optional<LinearWeights> embedding_projection;  // hidden x E
  std::vector<LayerWeights> layers;
};

struct LoadedWeights {
  ModelWeights weights;
  std::vector<std::string> warnings;  // one entry per ignored tensor
};

/// Tensor names follow the reference checkpoint hierarchy, e.g.
/// `encoder.layer.3.attention.self.query.weight`. A leading model prefix such
/// as `bert.` is stripped.
std::vector<std::string> required_tensor_names(const EncoderConfig& config);

LoadedWeights weights_from_tensors(TensorMap tensors, const EncoderConfig& config);
LoadedWeights load_weights(const std::filesystem::path& path, const EncoderConfig& config);

/// Inverse of weights_from_tensors, used to write modified fixtures and dumps.
TensorMap weights_to_tensors(const ModelWeights& weights);

enum class InputMode { wordpiece, pretokenized };

/// A model directory: config.json, model.safetensors and (for WordPiece
/// models) vocab.txt.
struct Model {
  std::string id;
  EncoderConfig config;
  ModelWeights weights;
  std::optional<Vocab> vocab;
  InputMode input_mode = InputMode::wordpiece;
  TokenId mask_id = 0;
  TokenId pad_id = 0;
  std::vector<std::string> warnings;

  /// Text for WordPiece models, a line of space-separated ids otherwise.
  TokenizedSentence encode(std::string_view text, std::size_t max_len = kDefaultMaxLength) const;
};

struct ModelLoadOptions {
  std::optional<InputMode> input_mode;  // default: taken from config.json
};

Model load_model(const std::filesystem::path& dir, const ModelLoadOptions& options = {});

}  // namespace ditto
