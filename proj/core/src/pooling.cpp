#include "ditto/pooling.hpp"

#include <array>
#include <cstdio>
#include <fstream>
#include <map>

#include "ditto/errors.hpp"

namespace ditto {

namespace {

struct StrategyInfo {
  Strategy strategy;
  std::string_view name;
  bool uses_first;
  bool uses_last;
};

constexpr std::array<StrategyInfo, 7> kStrategies = {{
    {Strategy::static_avg, "static_avg", true, false},
    {Strategy::last_avg, "last_avg", false, true},
    {Strategy::first_last_avg, "first_last_avg", true, true},
    {Strategy::static_ditto, "static_ditto", true, false},
    {Strategy::last_ditto, "last_ditto", false, true},
    {Strategy::first_last_ditto, "first_last_ditto", true, true},
    {Strategy::first_last_tfidf, "first_last_tfidf", true, true},
}};

const StrategyInfo& info(Strategy s) {
  for (const auto& i : kStrategies) {
    if (i.strategy == s) return i;
  }
  throw SpecError("unknown pooling strategy");
}

std::vector<std::size_t> included_positions(const TokenizedSentence& s, bool include_specials) {
  std::vector<std::size_t> positions;
  if (include_specials) {
    for (std::size_t i = 0; i < s.n_tokens(); ++i) positions.push_back(i);
  } else {
    for (const auto& span : s.word_spans) {
      for (std::size_t i = span.begin; i < span.end; ++i) positions.push_back(i);
    }
  }
  return positions;
}

}  // namespace

std::string_view strategy_name(Strategy s) { return info(s).name; }

Strategy parse_strategy(std::string_view name) {
  for (const auto& i : kStrategies) {
    if (i.name == name) return i.strategy;
  }
  throw SpecError("unknown pooling strategy '" + std::string(name) + "'");
}

bool is_ditto(Strategy s) {
  return s == Strategy::static_ditto || s == Strategy::last_ditto || s == Strategy::first_last_ditto;
}

PoolingSpec PoolingSpec::parse(std::string_view text) {
  PoolingSpec spec;
  const auto at = text.find('@');
  const auto colon = text.find(':');
  const auto name_end = std::min(at, colon);
  spec.strategy = parse_strategy(text.substr(0, name_end));
  if (at != std::string_view::npos) {
    if (!is_ditto(spec.strategy)) throw SpecError("only Ditto strategies take a head: '" + std::string(text) + "'");
    spec.head = HeadRef::parse(text.substr(at + 1));
  }
  if (colon != std::string_view::npos) {
    if (spec.strategy != Strategy::first_last_tfidf) {
      throw SpecError("only first_last_tfidf takes a weights file: '" + std::string(text) + "'");
    }
    spec.tfidf_path = std::string(text.substr(colon + 1));
    spec.tfidf = std::make_shared<const TfidfModel>(TfidfModel::load(spec.tfidf_path));
  }
  if (is_ditto(spec.strategy) && !spec.head) throw SpecError("Ditto pooling needs a head, e.g. first_last_ditto@1-10");
  if (spec.strategy == Strategy::first_last_tfidf && !spec.tfidf) {
    throw SpecError("first_last_tfidf needs a weights file, e.g. first_last_tfidf:weights.tsv");
  }
  return spec;
}

std::string PoolingSpec::str() const {
  std::string out(strategy_name(strategy));
  if (head) out += "@" + head->str();
  if (strategy == Strategy::first_last_tfidf && !tfidf_path.empty()) out += ":" + tfidf_path;
  return out;
}

void PoolingSpec::validate(const EncoderConfig& config) const {
  if (is_ditto(strategy)) {
    if (!head) throw SpecError(std::string(strategy_name(strategy)) + " requires a head");
    head->validate(config.num_layers, config.num_heads);
  }
  if (strategy == Strategy::first_last_tfidf && !tfidf) throw SpecError("first_last_tfidf requires a TF-IDF model");
}

std::vector<double> token_tfidf_weights(const TokenizedSentence& sentence, const TfidfModel& tfidf) {
  std::map<std::string, std::int64_t> tf;
  for (const auto& w : sentence.words) ++tf[w];
  std::vector<double> weights(sentence.n_tokens(), 0.0);
  for (std::size_t k = 0; k < sentence.word_spans.size(); ++k) {
    const auto& word = sentence.words[k];
    const double w = tfidf.weight(word, tf[word]);
    for (std::size_t i = sentence.word_spans[k].begin; i < sentence.word_spans[k].end; ++i) weights[i] = w;
  }
  return weights;
}

Tensor pool_tokens(const Tensor& first, const Tensor& last, std::span<const float> diagonal, const PoolingSpec& spec,
                   const TokenizedSentence& sentence) {
  const auto& si = info(spec.strategy);
  const std::size_t n = sentence.n_tokens();
  if (first.rows() != n || last.rows() != n || first.cols() != last.cols()) {
    throw ShapeError("pool: hidden states " + shape_string(first.shape()) + "/" + shape_string(last.shape()) +
                     " do not match a sentence of " + std::to_string(n) + " tokens");
  }
  const auto positions = included_positions(sentence, spec.include_special_tokens);
  if (positions.empty()) throw DegenerateInputError("pool: sentence has no tokens to pool");

  std::vector<double> weight(n, 0.0);
  double scale_factor = 1.0;
  if (is_ditto(spec.strategy)) {
    if (diagonal.size() != n) {
      throw ShapeError("pool: diagonal of length " + std::to_string(diagonal.size()) + " for " + std::to_string(n) +
                       " tokens");
    }
    for (auto i : positions) weight[i] = diagonal[i];
  } else if (spec.strategy == Strategy::first_last_tfidf) {
    if (!spec.tfidf) throw SpecError("first_last_tfidf requires a TF-IDF model");
    const auto tfidf = token_tfidf_weights(sentence, *spec.tfidf);
    double total = 0.0;
    for (auto i : positions) total += tfidf[i];
    if (total > 0.0) {
      for (auto i : positions) weight[i] = tfidf[i];
      scale_factor = 1.0 / total;
    } else {
      // Every word occurs in every training document: fall back to the plain average.
      for (auto i : positions) weight[i] = 1.0;
      scale_factor = 1.0 / static_cast<double>(positions.size());
    }
  } else {
    for (auto i : positions) weight[i] = 1.0;
    scale_factor = 1.0 / static_cast<double>(positions.size());
  }
  if (si.uses_first && si.uses_last) scale_factor *= 0.5;

  const std::size_t d = first.cols();
  std::vector<double> acc(d, 0.0);
  for (auto i : positions) {
    const double w = weight[i];
    if (si.uses_first) {
      const auto h = first.row(i);
      for (std::size_t k = 0; k < d; ++k) acc[k] += w * h[k];
    }
    if (si.uses_last) {
      const auto h = last.row(i);
      for (std::size_t k = 0; k < d; ++k) acc[k] += w * h[k];
    }
  }
  Tensor out(Shape{d});
  for (std::size_t k = 0; k < d; ++k) out[k] = static_cast<float>(acc[k] * scale_factor);
  return out;
}

Tensor pool(const EncoderOutput& out, const PoolingSpec& spec, const TokenizedSentence& sentence) {
  if (out.hidden.empty()) throw ShapeError("pool: empty encoder output");
  std::vector<float> diagonal;
  if (is_ditto(spec.strategy)) {
    if (!spec.head) throw SpecError(std::string(strategy_name(spec.strategy)) + " requires a head");
    diagonal = diagonal_attention(out, *spec.head);
  }
  return pool_tokens(out.first(), out.last(), diagonal, spec, sentence);
}

Tensor embed_corpus(std::span<const std::string> sentences, const Model& model, const PoolingSpec& spec,
                    const EmbedOptions& options) {
  spec.validate(model.config);
  const std::size_t d = model.config.hidden_size;
  Tensor result = Tensor::matrix(sentences.size(), d);
  const std::size_t batch = std::max<std::size_t>(1, options.batch_size);
  BatchOptions batch_options;
  batch_options.threads = options.threads;
  batch_options.forward.keep_attentions = is_ditto(spec.strategy);

  for (std::size_t start = 0; start < sentences.size(); start += batch) {
    const std::size_t end = std::min(sentences.size(), start + batch);
    std::vector<TokenizedSentence> encoded;
    encoded.reserve(end - start);
    for (std::size_t i = start; i < end; ++i) {
      try {
        encoded.push_back(model.encode(sentences[i], options.max_len));
      } catch (const Error& e) {
        throw ItemError(i, e.what());
      }
    }
    std::vector<EncoderOutput> outputs;
    try {
      outputs = forward_batch(encoded, model, batch_options);
    } catch (const ItemError& e) {
      throw ItemError(start + e.index(), e.what());
    } catch (const Error& e) {
      throw Error(std::string("batch starting at item ") + std::to_string(start) + ": " + e.what());
    }
    for (std::size_t k = 0; k < outputs.size(); ++k) {
      try {
        const Tensor v = pool(outputs[k], spec, encoded[k]);
        std::copy(v.data().begin(), v.data().end(), result.row(start + k).begin());
      } catch (const Error& e) {
        throw ItemError(start + k, e.what());
      }
    }
  }
  return result;
}

void write_embeddings_csv(const std::filesystem::path& path, const Tensor& embeddings) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw IoError("cannot write " + path.string());
  char buf[32];
  for (std::size_t r = 0; r < embeddings.rows(); ++r) {
    const auto row = embeddings.row(r);
    for (std::size_t k = 0; k < row.size(); ++k) {
      std::snprintf(buf, sizeof(buf), "%.6g", static_cast<double>(row[k]));
      if (k) out << ',';
      out << buf;
    }
    out << '\n';
  }
}

}  // namespace ditto
