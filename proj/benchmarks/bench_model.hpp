#pragma once

#include <random>

#include "ditto/model_io.hpp"

namespace ditto::bench {

inline Tensor random_tensor(Shape shape, std::mt19937& rng, float range) {
  Tensor t(std::move(shape));
  std::uniform_real_distribution<float> u(-range, range);
  for (auto& v : t.data()) v = u(rng);
  return t;
}

inline LinearWeights random_linear(std::size_t out, std::size_t in, std::mt19937& rng) {
  return {random_tensor({out, in}, rng, 0.05f), random_tensor({out}, rng, 0.05f)};
}

inline NormWeights unit_norm(std::size_t n) {
  Tensor g({n});
  for (auto& v : g.data()) v = 1.0f;
  return {g, Tensor({n})};
}

// Random weights at a mid-size shape; forward cost is what matters, not values.
inline EncoderConfig bench_config(std::size_t hidden, std::size_t layers) {
  EncoderConfig c;
  c.hidden_size = hidden;
  c.num_layers = layers;
  c.num_heads = hidden / 64;
  c.intermediate_size = 4 * hidden;
  c.vocab_size = 1000;
  c.max_position_embeddings = 512;
  c.type_vocab_size = 2;
  return c;
}

inline ModelWeights random_weights(const EncoderConfig& c) {
  std::mt19937 rng(5);
  const std::size_t h = c.hidden_size;
  ModelWeights w;
  w.token_embeddings = random_tensor({c.vocab_size, h}, rng, 0.5f);
  w.position_embeddings = random_tensor({c.max_position_embeddings, h}, rng, 0.5f);
  w.segment_embeddings = random_tensor({c.type_vocab_size, h}, rng, 0.5f);
  w.embedding_norm = unit_norm(h);
  for (std::size_t l = 0; l < c.num_layers; ++l) {
    LayerWeights lw;
    lw.query = random_linear(h, h, rng);
    lw.key = random_linear(h, h, rng);
    lw.value = random_linear(h, h, rng);
    lw.attention_output = random_linear(h, h, rng);
    lw.attention_norm = unit_norm(h);
    lw.ffn_in = random_linear(c.intermediate_size, h, rng);
    lw.ffn_out = random_linear(h, c.intermediate_size, rng);
    lw.ffn_norm = unit_norm(h);
    w.layers.push_back(std::move(lw));
  }
  return w;
}

}  // namespace ditto::bench
