#include "ditto/probe.hpp"

#include <cmath>
#include <cstdio>
#include <fstream>
#include <map>

#include "json.hpp"

#include "ditto/encoder.hpp"
#include "ditto/errors.hpp"

namespace ditto {

namespace {

struct MaskJob {
  std::size_t row;  // index into positions of the predicted token
  std::size_t col;  // index of the second masked token; == row for stage one
};

}  // namespace

ImpactMatrix impact_matrix(const TokenizedSentence& s, const Model& model, const ProbeOptions& options) {
  if (s.degenerate()) throw DegenerateInputError("impact matrix needs at least one non-special token");
  const std::size_t layers = model.config.num_layers;
  const std::size_t layer = options.repr_layer.value_or(layers);
  if (layer > layers) {
    throw IndexError("representation layer " + std::to_string(layer) + " outside [0, " + std::to_string(layers) +
                     "]");
  }

  ImpactMatrix m;
  m.sentence = s;
  m.repr_layer = layer;
  for (const auto& span : s.word_spans) {
    for (std::size_t i = span.begin; i < span.end; ++i) m.positions.push_back(i);
  }
  const std::size_t n = m.positions.size();
  const std::size_t d = model.config.hidden_size;
  m.f = Tensor::matrix(n, n);

  std::vector<MaskJob> jobs;
  jobs.reserve(n * n);
  for (std::size_t a = 0; a < n; ++a) jobs.push_back({a, a});
  for (std::size_t a = 0; a < n; ++a) {
    for (std::size_t b = 0; b < n; ++b) {
      if (a != b) jobs.push_back({a, b});
    }
  }

  BatchOptions batch;
  batch.threads = options.threads;
  batch.forward.keep_attentions = false;
  const std::size_t chunk = std::max<std::size_t>(1, options.batch_size);

  Tensor single = Tensor::matrix(n, d);  // H(x \ {i})_i
  for (std::size_t start = 0; start < jobs.size(); start += chunk) {
    const std::size_t end = std::min(jobs.size(), start + chunk);
    std::vector<TokenizedSentence> masked;
    masked.reserve(end - start);
    for (std::size_t k = start; k < end; ++k) {
      const auto& job = jobs[k];
      std::vector<std::size_t> targets{m.positions[job.row]};
      if (job.col != job.row) targets.push_back(m.positions[job.col]);
      masked.push_back(mask_positions(s, targets, model.mask_id));
    }
    const auto outputs = forward_batch(masked, model.weights, model.config, model.pad_id, batch);
    for (std::size_t k = start; k < end; ++k) {
      const auto& job = jobs[k];
      const auto h = outputs[k - start].hidden[layer].row(m.positions[job.row]);
      if (job.col == job.row) {
        std::copy(h.begin(), h.end(), single.row(job.row).begin());
        continue;
      }
      // Stage-one jobs precede every stage-two job, so `single` is complete here.
      const auto ref = single.row(job.row);
      double sq = 0.0;
      for (std::size_t c = 0; c < d; ++c) {
        const double diff = static_cast<double>(ref[c]) - static_cast<double>(h[c]);
        sq += diff * diff;
      }
      m.f(job.row, job.col) = static_cast<float>(std::sqrt(sq));
    }
  }
  return m;
}

std::vector<double> word_means(std::span<const double> token_values, const TokenizedSentence& s) {
  if (token_values.size() != s.n_tokens()) {
    throw ShapeError("word_means: " + std::to_string(token_values.size()) + " values for " +
                     std::to_string(s.n_tokens()) + " tokens");
  }
  std::vector<double> out;
  out.reserve(s.word_spans.size());
  for (const auto& span : s.word_spans) {
    double total = 0.0;
    for (std::size_t i = span.begin; i < span.end; ++i) total += token_values[i];
    out.push_back(total / static_cast<double>(span.size()));
  }
  return out;
}

std::vector<double> mean_impact(const ImpactMatrix& m) {
  const std::size_t n = m.positions.size();
  std::vector<double> token_values(m.sentence.n_tokens(), 0.0);
  for (std::size_t j = 0; j < n; ++j) {
    double col = 0.0;
    for (std::size_t i = 0; i < n; ++i) col += m.f(i, j);
    token_values[m.positions[j]] = col / static_cast<double>(n);
  }
  return word_means(token_values, m.sentence);
}

std::vector<double> word_tfidf_weights(const TokenizedSentence& s, const TfidfModel& tfidf) {
  std::map<std::string, std::int64_t> tf;
  for (const auto& w : s.words) ++tf[w];
  std::vector<double> out;
  out.reserve(s.words.size());
  for (const auto& w : s.words) out.push_back(tfidf.weight(w, tf[w]));
  return out;
}

ImpactCorrelation impact_tfidf_correlation(std::span<const std::string> corpus, const Model& model,
                                           const TfidfModel& tfidf, const ProbeOptions& options) {
  if (corpus.empty()) throw InsufficientDataError("probe corpus is empty");
  ImpactCorrelation result;
  std::vector<double> impacts, weights;
  for (std::size_t k = 0; k < corpus.size(); ++k) {
    try {
      const auto s = model.encode(corpus[k], options.max_len);
      if (s.degenerate()) {
        ++result.skipped;
        continue;
      }
      const auto mi = mean_impact(impact_matrix(s, model, options));
      const auto w = word_tfidf_weights(s, tfidf);
      impacts.insert(impacts.end(), mi.begin(), mi.end());
      weights.insert(weights.end(), w.begin(), w.end());
      ++result.n_sentences;
    } catch (const Error& e) {
      throw ItemError(k, e.what());
    }
  }
  if (impacts.size() < 2) throw InsufficientDataError("probe correlation needs at least two words");
  result.n_words = impacts.size();
  result.correlation = correlate(impacts, weights);
  return result;
}

void write_impact_csv(const std::filesystem::path& path, const ImpactMatrix& m) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw IoError("cannot write " + path.string());
  char buf[32];
  for (std::size_t i = 0; i < m.f.rows(); ++i) {
    for (std::size_t j = 0; j < m.f.cols(); ++j) {
      std::snprintf(buf, sizeof(buf), "%.6g", static_cast<double>(m.f(i, j)));
      if (j) out << ',';
      out << buf;
    }
    out << '\n';
  }
}

std::string impact_json(const ImpactMatrix& m, const Model& model) {
  nlohmann::ordered_json j;
  j["model"] = model.id;
  j["text"] = m.sentence.text;
  j["repr_layer"] = m.repr_layer;
  auto tokens = nlohmann::json::array();
  for (auto pos : m.positions) {
    const TokenId id = m.sentence.ids[pos];
    if (model.vocab) {
      tokens.push_back(model.vocab->token(id));
    } else {
      tokens.push_back(std::to_string(id));
    }
  }
  j["tokens"] = tokens;
  j["positions"] = m.positions;
  j["words"] = m.sentence.words;
  j["mean_impact"] = mean_impact(m);
  return j.dump(2) + "\n";
}

}  // namespace ditto
