#include "ditto/encoder.hpp"

#include <charconv>
#include <cmath>

#include "ditto/errors.hpp"
#include "ditto/parallel.hpp"

namespace ditto {

HeadRef HeadRef::parse(std::string_view text) {
  const auto dash = text.find('-');
  auto parse_int = [&](std::string_view part) {
    int value = 0;
    auto [ptr, ec] = std::from_chars(part.data(), part.data() + part.size(), value);
    if (part.empty() || ec != std::errc() || ptr != part.data() + part.size() || value < 1) {
      throw SpecError("invalid head '" + std::string(text) + "', expected <layer>-<head>");
    }
    return value;
  };
  if (dash == std::string_view::npos) throw SpecError("invalid head '" + std::string(text) + "', expected <layer>-<head>");
  return HeadRef{parse_int(text.substr(0, dash)), parse_int(text.substr(dash + 1))};
}

std::string HeadRef::str() const { return std::to_string(layer) + "-" + std::to_string(head); }

void HeadRef::validate(std::size_t num_layers, std::size_t num_heads) const {
  if (layer < 1 || static_cast<std::size_t>(layer) > num_layers || head < 1 ||
      static_cast<std::size_t>(head) > num_heads) {
    throw IndexError("head " + str() + " outside 1.." + std::to_string(num_layers) + " x 1.." +
                     std::to_string(num_heads));
  }
}

const Tensor& EncoderOutput::attention(HeadRef head) const {
  if (attentions.empty()) throw IndexError("encoder output was computed without attentions");
  head.validate(attentions.size(), attentions.front().size());
  return attentions[static_cast<std::size_t>(head.layer - 1)][static_cast<std::size_t>(head.head - 1)];
}

namespace {

Tensor embed(std::span<const TokenId> ids, const ModelWeights& w, const EncoderConfig& cfg) {
  const std::size_t e = cfg.embedding_width();
  Tensor x = Tensor::matrix(ids.size(), e);
  const auto segment = w.segment_embeddings.row(0);
  for (std::size_t i = 0; i < ids.size(); ++i) {
    const TokenId id = ids[i];
    if (id < 0 || static_cast<std::size_t>(id) >= cfg.vocab_size) {
      throw IndexError("token id " + std::to_string(id) + " outside vocabulary of " + std::to_string(cfg.vocab_size));
    }
    const auto tok = w.token_embeddings.row(static_cast<std::size_t>(id));
    const auto pos = w.position_embeddings.row(cfg.position_offset + i);
    auto out = x.row(i);
    for (std::size_t k = 0; k < e; ++k) out[k] = tok[k] + pos[k] + segment[k];
  }
  x = layer_norm(x, w.embedding_norm.gamma, w.embedding_norm.beta, cfg.layer_norm_eps);
  if (w.embedding_projection) x = linear(x, w.embedding_projection->weight, w.embedding_projection->bias);
  return x;
}

Tensor trim_rows(const Tensor& t, std::size_t n) {
  if (t.rows() == n) return t;
  std::vector<float> data(t.data().begin(), t.data().begin() + static_cast<std::ptrdiff_t>(n * t.cols()));
  return Tensor(Shape{n, t.cols()}, std::move(data));
}

// Self-attention over the padded sequence; columns >= valid receive the mask logit.
Tensor self_attention(const Tensor& x, const LayerWeights& lw, const EncoderConfig& cfg, std::size_t valid,
                      std::vector<Tensor>* keep) {
  const std::size_t m = x.rows();
  const std::size_t d = cfg.hidden_size;
  const std::size_t dk = cfg.head_dim();
  const Tensor q = linear(x, lw.query.weight, lw.query.bias);
  const Tensor k = linear(x, lw.key.weight, lw.key.bias);
  const Tensor v = linear(x, lw.value.weight, lw.value.bias);
  const double inv_scale = 1.0 / std::sqrt(static_cast<double>(dk));

  Tensor mask = Tensor::matrix(m, m);
  for (std::size_t i = 0; i < m; ++i) {
    for (std::size_t j = valid; j < m; ++j) mask(i, j) = kMaskedLogit;
  }

  Tensor context = Tensor::matrix(m, d);
  Tensor scores = Tensor::matrix(m, m);
  for (std::size_t h = 0; h < cfg.num_heads; ++h) {
    const std::size_t off = h * dk;
    for (std::size_t i = 0; i < m; ++i) {
      const auto qi = q.row(i).subspan(off, dk);
      for (std::size_t j = 0; j < m; ++j) {
        scores(i, j) = static_cast<float>(dot(qi, k.row(j).subspan(off, dk)) * inv_scale);
      }
    }
    const Tensor probs = softmax_rows(scores, mask);
    for (std::size_t i = 0; i < m; ++i) {
      const auto p = probs.row(i);
      for (std::size_t c = 0; c < dk; ++c) {
        double acc = 0.0;
        for (std::size_t j = 0; j < m; ++j) acc += static_cast<double>(p[j]) * v(j, off + c);
        context(i, off + c) = static_cast<float>(acc);
      }
    }
    if (keep) {
      Tensor trimmed = Tensor::matrix(valid, valid);
      for (std::size_t i = 0; i < valid; ++i) {
        for (std::size_t j = 0; j < valid; ++j) trimmed(i, j) = probs(i, j);
      }
      keep->push_back(std::move(trimmed));
    }
  }
  return linear(context, lw.attention_output.weight, lw.attention_output.bias);
}

EncoderOutput forward_padded(std::span<const TokenId> ids, std::size_t valid, const ModelWeights& w,
                             const EncoderConfig& cfg, const ForwardOptions& options) {
  if (ids.size() + cfg.position_offset > cfg.max_position_embeddings) {
    throw LengthError("sequence of " + std::to_string(ids.size()) + " tokens exceeds max_position_embeddings " +
                      std::to_string(cfg.max_position_embeddings));
  }
  if (w.layers.size() != cfg.num_layers) throw SpecError("weights and config disagree on the number of layers");

  EncoderOutput out;
  out.n_tokens = valid;
  Tensor x = embed(ids, w, cfg);
  out.hidden.push_back(trim_rows(x, valid));
  for (const auto& lw : w.layers) {
    std::vector<Tensor> heads;
    const Tensor attn = self_attention(x, lw, cfg, valid, options.keep_attentions ? &heads : nullptr);
    const Tensor x1 = layer_norm(add(attn, x), lw.attention_norm.gamma, lw.attention_norm.beta, cfg.layer_norm_eps);
    const Tensor inner = gelu(linear(x1, lw.ffn_in.weight, lw.ffn_in.bias));
    const Tensor ffn = linear(inner, lw.ffn_out.weight, lw.ffn_out.bias);
    x = layer_norm(add(ffn, x1), lw.ffn_norm.gamma, lw.ffn_norm.beta, cfg.layer_norm_eps);
    out.hidden.push_back(trim_rows(x, valid));
    if (options.keep_attentions) out.attentions.push_back(std::move(heads));
  }
  return out;
}

}  // namespace

EncoderOutput forward(std::span<const TokenId> ids, const ModelWeights& weights, const EncoderConfig& config,
                      const ForwardOptions& options) {
  if (ids.empty()) throw LengthError("cannot encode an empty token sequence");
  return forward_padded(ids, ids.size(), weights, config, options);
}

EncoderOutput forward(const TokenizedSentence& s, const Model& model, const ForwardOptions& options) {
  return forward(s.ids, model.weights, model.config, options);
}

std::vector<float> diagonal_attention(const EncoderOutput& out, HeadRef head) {
  const Tensor& a = out.attention(head);
  std::vector<float> diag(a.rows());
  for (std::size_t i = 0; i < diag.size(); ++i) diag[i] = a(i, i);
  return diag;
}

std::vector<EncoderOutput> forward_batch(std::span<const TokenizedSentence> sentences, const ModelWeights& weights,
                                         const EncoderConfig& config, TokenId pad_id, const BatchOptions& options) {
  std::size_t longest = 0;
  for (const auto& s : sentences) longest = std::max(longest, s.ids.size());
  std::vector<EncoderOutput> outputs(sentences.size());
  parallel_for(sentences.size(), options.threads, [&](std::size_t i) {
    const auto& s = sentences[i];
    if (s.ids.empty()) throw ItemError(i, "empty token sequence");
    std::vector<TokenId> padded(longest, pad_id);
    std::copy(s.ids.begin(), s.ids.end(), padded.begin());
    outputs[i] = forward_padded(padded, s.ids.size(), weights, config, options.forward);
  });
  return outputs;
}

std::vector<EncoderOutput> forward_batch(std::span<const TokenizedSentence> sentences, const Model& model,
                                         const BatchOptions& options) {
  return forward_batch(sentences, model.weights, model.config, model.pad_id, options);
}

}  // namespace ditto
