#include "ditto/sts.hpp"

#include <algorithm>
#include <charconv>
#include <cstdio>
#include <fstream>
#include <map>
#include <unordered_map>

#include "json.hpp"

#include "ditto/errors.hpp"
#include "ditto/parallel.hpp"
#include "ditto/probe.hpp"

namespace ditto {

namespace {

constexpr std::array<std::string_view, 7> kTaskNames = {"STS12", "STS13", "STS14", "STS15", "STS16", "STSB", "SICKR"};
constexpr std::array<std::string_view, 3> kSplitNames = {"train", "dev", "test"};

/// Distinct sentences of a pair list, in first-appearance order.
struct SentenceTable {
  std::vector<std::string> sentences;
  std::vector<std::size_t> owner;  // first example that mentions each sentence
  std::vector<std::pair<std::size_t, std::size_t>> pairs;

  explicit SentenceTable(std::span<const StsExample> examples) {
    std::unordered_map<std::string, std::size_t> index;
    auto add = [&](const std::string& s, std::size_t example) {
      auto [it, inserted] = index.emplace(s, sentences.size());
      if (inserted) {
        sentences.push_back(s);
        owner.push_back(example);
      }
      return it->second;
    };
    pairs.reserve(examples.size());
    for (std::size_t k = 0; k < examples.size(); ++k) {
      const std::size_t a = add(examples[k].sent1, k);
      const std::size_t b = add(examples[k].sent2, k);
      pairs.emplace_back(a, b);
    }
  }
};

std::string strip_item_prefix(const ItemError& e) {
  const std::string what = e.what();
  const auto colon = what.find(": ");
  return colon == std::string::npos ? what : what.substr(colon + 2);
}

EmbedOptions embed_options(const EvalOptions& o) { return {o.max_len, o.batch_size, o.threads}; }

std::vector<double> gold_scores(std::span<const StsExample> examples) {
  std::vector<double> gold;
  gold.reserve(examples.size());
  for (const auto& e : examples) gold.push_back(e.score);
  return gold;
}

double parse_score(std::string_view text, const std::string& file, std::size_t line) {
  double v = 0.0;
  auto [ptr, ec] = std::from_chars(text.data(), text.data() + text.size(), v);
  if (ec != std::errc() || ptr != text.data() + text.size()) {
    throw ParseError("invalid score '" + std::string(text) + "'", file, line);
  }
  return v;
}

}  // namespace

std::string_view task_name(StsTask t) { return kTaskNames.at(static_cast<std::size_t>(t)); }

StsTask parse_task(std::string_view name) {
  for (std::size_t i = 0; i < kTaskNames.size(); ++i) {
    if (kTaskNames[i] == name) return static_cast<StsTask>(i);
  }
  throw SpecError("unknown STS task '" + std::string(name) + "'");
}

std::string_view split_name(Split s) { return kSplitNames.at(static_cast<std::size_t>(s)); }

Split parse_split(std::string_view name) {
  for (std::size_t i = 0; i < kSplitNames.size(); ++i) {
    if (kSplitNames[i] == name) return static_cast<Split>(i);
  }
  throw SpecError("unknown split '" + std::string(name) + "'");
}

std::size_t StsData::count(StsTask task, Split split) const {
  return static_cast<std::size_t>(std::count_if(examples.begin(), examples.end(), [&](const StsExample& e) {
    return e.task == task && e.split == split;
  }));
}

std::vector<StsExample> StsData::select(Split split, std::optional<StsTask> task) const {
  std::vector<StsExample> out;
  for (const auto& e : examples) {
    if (e.split == split && (!task || e.task == *task)) out.push_back(e);
  }
  return out;
}

std::vector<StsExample> read_sts_file(const std::filesystem::path& file, StsTask task,
                                      std::vector<std::string>* warnings) {
  const std::string name = file.filename().string();
  // <subset>.<split>.tsv
  const std::string stem = file.stem().string();
  const auto dot = stem.rfind('.');
  if (file.extension() != ".tsv" || dot == std::string::npos || dot == 0) {
    throw ParseError("file name must be <subset>.<split>.tsv", file.string(), 0);
  }
  const std::string subset = stem.substr(0, dot);
  const Split split = parse_split(stem.substr(dot + 1));

  std::ifstream in(file, std::ios::binary);
  if (!in) throw IoError("cannot open " + file.string());
  std::vector<StsExample> out;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    const auto t1 = line.find('\t');
    const auto t2 = t1 == std::string::npos ? t1 : line.find('\t', t1 + 1);
    if (t2 == std::string::npos || line.find('\t', t2 + 1) != std::string::npos) {
      throw ParseError("expected 'score<TAB>sent1<TAB>sent2'", file.string(), line_no);
    }
    StsExample e;
    e.task = task;
    e.subset = subset;
    e.split = split;
    e.score = parse_score(std::string_view(line).substr(0, t1), file.string(), line_no);
    if (!(e.score >= 0.0 && e.score <= 5.0)) {
      throw RangeError(file.string() + ":" + std::to_string(line_no) + ": score " + line.substr(0, t1) +
                       " outside [0, 5]");
    }
    e.sent1 = line.substr(t1 + 1, t2 - t1 - 1);
    e.sent2 = line.substr(t2 + 1);
    if (e.sent1.empty() || e.sent2.empty()) throw ParseError("empty sentence", file.string(), line_no);
    out.push_back(std::move(e));
  }
  if (out.empty() && warnings) warnings->push_back(file.string() + ": no examples");
  return out;
}

StsData load_sts(const std::filesystem::path& root, std::span<const StsTask> tasks) {
  if (!std::filesystem::is_directory(root)) throw IoError("STS root " + root.string() + " is not a directory");
  StsData data;
  for (const StsTask task : tasks) {
    const auto dir = root / std::string(task_name(task));
    if (!std::filesystem::is_directory(dir)) throw IoError("missing task directory " + dir.string());
    std::vector<std::filesystem::path> files;
    for (const auto& entry : std::filesystem::directory_iterator(dir)) {
      if (entry.is_regular_file() && entry.path().extension() == ".tsv") files.push_back(entry.path());
    }
    std::sort(files.begin(), files.end());
    if (files.empty()) data.warnings.push_back(dir.string() + ": no .tsv files");
    for (const auto& f : files) {
      auto part = read_sts_file(f, task, &data.warnings);
      data.examples.insert(data.examples.end(), std::make_move_iterator(part.begin()),
                           std::make_move_iterator(part.end()));
    }
  }
  return data;
}

std::vector<TaskScore> score_predictions(std::span<const StsExample> examples, std::span<const double> predictions) {
  if (examples.size() != predictions.size()) {
    throw ShapeError(std::to_string(predictions.size()) + " predictions for " + std::to_string(examples.size()) +
                     " examples");
  }
  std::vector<TaskScore> out;
  for (const StsTask task : kAllTasks) {
    std::vector<double> gold, pred;
    for (std::size_t k = 0; k < examples.size(); ++k) {
      if (examples[k].task != task) continue;
      gold.push_back(examples[k].score);
      pred.push_back(predictions[k]);
    }
    if (gold.empty()) continue;
    try {
      const auto c = correlate(pred, gold);
      out.push_back({task, gold.size(), 100.0 * c.spearman, 100.0 * c.pearson});
    } catch (const Error& e) {
      throw Error(std::string(task_name(task)) + ": " + e.what());
    }
  }
  return out;
}

std::vector<double> predict_similarities(std::span<const StsExample> examples, const Model& model,
                                         const PoolingSpec& spec, const EvalOptions& options) {
  const SentenceTable table(examples);
  Tensor emb;
  try {
    emb = embed_corpus(table.sentences, model, spec, embed_options(options));
  } catch (const ItemError& e) {
    throw ItemError(table.owner.at(e.index()), strip_item_prefix(e));
  }
  std::vector<double> sims(examples.size());
  for (std::size_t k = 0; k < table.pairs.size(); ++k) {
    try {
      sims[k] = cosine(emb.row(table.pairs[k].first), emb.row(table.pairs[k].second));
    } catch (const Error& e) {
      throw ItemError(k, e.what());
    }
  }
  return sims;
}

EvalReport evaluate(std::span<const StsExample> examples, const Model& model, const PoolingSpec& spec,
                    const EvalOptions& options) {
  std::vector<StsExample> selected;
  for (const auto& e : examples) {
    if (e.split == options.split) selected.push_back(e);
  }
  if (selected.empty()) throw InsufficientDataError("no " + std::string(split_name(options.split)) + " examples");
  const auto sims = predict_similarities(selected, model, spec, options);

  EvalReport report;
  report.model_id = model.id;
  report.pooling = spec.str();
  report.max_len = options.max_len;
  report.include_special_tokens = spec.include_special_tokens;
  report.split = std::string(split_name(options.split));
  report.tasks = score_predictions(selected, sims);
  double total = 0.0;
  for (const auto& t : report.tasks) total += t.spearman;
  report.average = total / static_cast<double>(report.tasks.size());
  return report;
}

std::string EvalReport::table() const {
  std::string header = "pooling";
  std::string row = pooling;
  const std::size_t first_width = std::max(header.size(), row.size());
  header.resize(first_width, ' ');
  row.resize(first_width, ' ');
  char buf[64];
  for (const auto& t : tasks) {
    std::snprintf(buf, sizeof(buf), "  %7s", std::string(task_name(t.task)).c_str());
    header += buf;
    std::snprintf(buf, sizeof(buf), "  %7.2f", t.spearman);
    row += buf;
  }
  std::snprintf(buf, sizeof(buf), "  %7s", "Avg.");
  header += buf;
  std::snprintf(buf, sizeof(buf), "  %7.2f", average);
  row += buf;
  return header + "\n" + row + "\n";
}

std::string EvalReport::json() const {
  nlohmann::ordered_json j;
  j["model"] = model_id;
  j["pooling"] = pooling;
  j["max_len"] = max_len;
  j["include_special_tokens"] = include_special_tokens;
  j["split"] = split;
  nlohmann::ordered_json per_task = nlohmann::ordered_json::object();
  for (const auto& t : tasks) {
    per_task[std::string(task_name(t.task))] = {{"spearman", t.spearman}, {"pearson", t.pearson}, {"n_pairs", t.n_pairs}};
  }
  j["tasks"] = per_task;
  j["average"] = average;
  return j.dump(2) + "\n";
}

double pair_spearman(std::span<const StsExample> examples, const Model& model, const PoolingSpec& spec,
                     const EvalOptions& options) {
  const auto sims = predict_similarities(examples, model, spec, options);
  return 100.0 * spearman(sims, gold_scores(examples));
}

std::vector<HeadScore> grid_search_head(std::span<const StsExample> examples, const Model& model,
                                        const PoolingSpec& base, const EvalOptions& options) {
  if (!is_ditto(base.strategy)) {
    throw SpecError("head search needs a Ditto strategy, got " + std::string(strategy_name(base.strategy)));
  }
  if (examples.empty()) throw InsufficientDataError("head search needs at least one pair");
  const std::size_t n_layers = model.config.num_layers;
  const std::size_t n_heads = model.config.num_heads;
  std::vector<PoolingSpec> specs;
  for (std::size_t l = 1; l <= n_layers; ++l) {
    for (std::size_t h = 1; h <= n_heads; ++h) {
      PoolingSpec s = base;
      s.head = HeadRef{static_cast<int>(l), static_cast<int>(h)};
      specs.push_back(std::move(s));
    }
  }
  // sims[head][pair]; every head reuses the same forward pass of a pair's sentences.
  std::vector<std::vector<double>> sims(specs.size(), std::vector<double>(examples.size()));
  BatchOptions batch;
  batch.threads = options.threads;
  batch.forward.keep_attentions = true;
  const std::size_t chunk = std::max<std::size_t>(1, options.batch_size / 2);

  for (std::size_t start = 0; start < examples.size(); start += chunk) {
    const std::size_t end = std::min(examples.size(), start + chunk);
    const SentenceTable table(examples.subspan(start, end - start));
    std::vector<TokenizedSentence> encoded;
    encoded.reserve(table.sentences.size());
    for (std::size_t i = 0; i < table.sentences.size(); ++i) {
      try {
        encoded.push_back(model.encode(table.sentences[i], options.max_len));
      } catch (const Error& e) {
        throw ItemError(start + table.owner[i], e.what());
      }
    }
    const auto outputs = forward_batch(encoded, model, batch);
    parallel_for(specs.size(), options.threads, [&](std::size_t h) {
      std::vector<Tensor> pooled;
      pooled.reserve(outputs.size());
      for (std::size_t i = 0; i < outputs.size(); ++i) {
        try {
          pooled.push_back(pool(outputs[i], specs[h], encoded[i]));
        } catch (const Error& e) {
          throw ItemError(start + table.owner[i], e.what());
        }
      }
      for (std::size_t k = 0; k < table.pairs.size(); ++k) {
        try {
          sims[h][start + k] = cosine(pooled[table.pairs[k].first], pooled[table.pairs[k].second]);
        } catch (const Error& e) {
          throw ItemError(start + k, e.what());
        }
      }
    });
  }

  const auto gold = gold_scores(examples);
  std::vector<HeadScore> ranking;
  ranking.reserve(specs.size());
  for (std::size_t h = 0; h < specs.size(); ++h) {
    try {
      ranking.push_back({*specs[h].head, 100.0 * spearman(sims[h], gold)});
    } catch (const Error& e) {
      throw Error("head " + specs[h].head->str() + ": " + e.what());
    }
  }
  std::stable_sort(ranking.begin(), ranking.end(), [](const HeadScore& a, const HeadScore& b) {
    if (a.spearman != b.spearman) return a.spearman > b.spearman;
    return a.head < b.head;
  });
  return ranking;
}

CorrelationPair diagonal_tfidf_correlation(std::span<const StsExample> examples, const Model& model, HeadRef head,
                                           const TfidfModel& tfidf, const EvalOptions& options) {
  head.validate(model.config.num_layers, model.config.num_heads);
  const SentenceTable table(examples);
  std::vector<double> diag_values, weights;
  BatchOptions batch;
  batch.threads = options.threads;
  const std::size_t chunk = std::max<std::size_t>(1, options.batch_size);
  for (std::size_t start = 0; start < table.sentences.size(); start += chunk) {
    const std::size_t end = std::min(table.sentences.size(), start + chunk);
    std::vector<TokenizedSentence> encoded;
    for (std::size_t i = start; i < end; ++i) {
      try {
        encoded.push_back(model.encode(table.sentences[i], options.max_len));
      } catch (const Error& e) {
        throw ItemError(table.owner[i], e.what());
      }
    }
    const auto outputs = forward_batch(encoded, model, batch);
    for (std::size_t i = 0; i < outputs.size(); ++i) {
      const auto& s = encoded[i];
      if (s.degenerate()) continue;
      const auto diag = diagonal_attention(outputs[i], head);
      const std::vector<double> token_values(diag.begin(), diag.end());
      const auto per_word = word_means(token_values, s);
      const auto w = word_tfidf_weights(s, tfidf);
      diag_values.insert(diag_values.end(), per_word.begin(), per_word.end());
      weights.insert(weights.end(), w.begin(), w.end());
    }
  }
  if (diag_values.size() < 2) throw InsufficientDataError("diagonal/TF-IDF correlation needs at least two words");
  const auto c = correlate(diag_values, weights);
  return {100.0 * c.pearson, 100.0 * c.spearman};
}

AlignUniform align_uniform(std::span<const StsExample> examples, const Model& model, const PoolingSpec& spec,
                           double threshold, const EvalOptions& options) {
  const SentenceTable table(examples);
  Tensor emb;
  try {
    emb = embed_corpus(table.sentences, model, spec, embed_options(options));
  } catch (const ItemError& e) {
    throw ItemError(table.owner.at(e.index()), strip_item_prefix(e));
  }
  std::vector<std::size_t> positive;
  for (std::size_t k = 0; k < examples.size(); ++k) {
    if (examples[k].score >= threshold) positive.push_back(k);
  }
  if (positive.empty()) throw InsufficientDataError("no pairs with gold score >= " + std::to_string(threshold));
  const std::size_t d = emb.cols();
  Tensor lhs = Tensor::matrix(positive.size(), d);
  Tensor rhs = Tensor::matrix(positive.size(), d);
  for (std::size_t r = 0; r < positive.size(); ++r) {
    const auto [a, b] = table.pairs[positive[r]];
    std::copy_n(emb.row(a).begin(), d, lhs.row(r).begin());
    std::copy_n(emb.row(b).begin(), d, rhs.row(r).begin());
  }
  AlignUniform out;
  out.alignment = alignment(lhs, rhs);
  out.uniformity = uniformity(emb);
  out.n_positive_pairs = positive.size();
  out.n_sentences = emb.rows();
  return out;
}

}  // namespace ditto
