#include "ditto_cli/cli.hpp"

#include <algorithm>
#include <cstdio>
#include <fstream>
#include <iterator>
#include <random>
#include <sstream>

#include "CLI11.hpp"
#include "json.hpp"

#include "ditto/errors.hpp"
#include "ditto/metrics.hpp"
#include "ditto/model_io.hpp"
#include "ditto/pooling.hpp"
#include "ditto/probe.hpp"
#include "ditto/sts.hpp"
#include "ditto/tensor_file.hpp"
#include "ditto/tfidf.hpp"

namespace ditto::cli {

namespace {

using json = nlohmann::ordered_json;

struct ModelArgs {
  std::string dir;
  bool pretokenized = false;
};

struct RunArgs {
  std::size_t threads = 0;
  std::size_t max_len = kDefaultMaxLength;
  std::size_t batch_size = 32;
  bool exclude_specials = false;
  std::string json_path;
};

void add_model(CLI::App* cmd, ModelArgs& m) {
  cmd->add_option("--model", m.dir, "Model directory (config.json, model.safetensors, vocab.txt)")
      ->required()
      ->check(CLI::ExistingDirectory);
  cmd->add_flag("--pretokenized", m.pretokenized, "Input lines are space-separated token ids");
}

void add_run(CLI::App* cmd, RunArgs& r, bool with_json = true) {
  cmd->add_option("--threads", r.threads, "Worker threads (0 = all cores)")->capture_default_str();
  cmd->add_option("--max-len", r.max_len, "Maximum tokens per sentence, specials included")
      ->capture_default_str()
      ->check(CLI::Range(3, 1 << 20));
  cmd->add_option("--batch-size", r.batch_size, "Sentences per forward batch")
      ->capture_default_str()
      ->check(CLI::PositiveNumber);
  cmd->add_flag("--exclude-special-tokens", r.exclude_specials, "Leave [CLS]/[SEP] out of pooled sums");
  if (with_json) cmd->add_option("--json", r.json_path, "Also write the report as JSON to this file");
}

Model open_model(const ModelArgs& m, std::ostream& err) {
  ModelLoadOptions opts;
  if (m.pretokenized) opts.input_mode = InputMode::pretokenized;
  Model model = load_model(m.dir, opts);
  for (const auto& w : model.warnings) err << "warning: " << w << '\n';
  return model;
}

PoolingSpec open_pooling(const std::string& text, const RunArgs& r) {
  PoolingSpec spec = PoolingSpec::parse(text);
  spec.include_special_tokens = !r.exclude_specials;
  return spec;
}

EvalOptions eval_options(const RunArgs& r) {
  EvalOptions o;
  o.max_len = r.max_len;
  o.batch_size = r.batch_size;
  o.threads = r.threads;
  return o;
}

std::vector<std::string> read_lines(const std::string& path, bool skip_blank) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open " + path);
  std::vector<std::string> lines;
  std::string line;
  while (std::getline(in, line)) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (skip_blank && line.find_first_not_of(" \t") == std::string::npos) continue;
    lines.push_back(line);
  }
  return lines;
}

void write_text(const std::string& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw IoError("cannot write " + path);
  out << text;
}

std::string fixed(double v, int digits = 2) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.*f", digits, v);
  return buf;
}

std::vector<StsTask> parse_tasks(const std::vector<std::string>& names) {
  if (names.empty()) return {kAllTasks.begin(), kAllTasks.end()};
  std::vector<StsTask> tasks;
  for (const auto& n : names) tasks.push_back(parse_task(n));
  return tasks;
}

void print_warnings(const std::vector<std::string>& warnings, std::ostream& err) {
  for (const auto& w : warnings) err << "warning: " << w << '\n';
}

}  // namespace

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"Sentence embeddings with diagonal attention pooling", "ditto"};
  app.require_subcommand(1);
  app.set_config("--config", "", "Read options from a TOML/INI file");
  std::uint64_t seed = 42;
  app.add_option("--seed", seed, "Seed for every random choice")->capture_default_str();

  // embed
  auto* embed = app.add_subcommand("embed", "Pool one embedding per input line");
  ModelArgs embed_model;
  RunArgs embed_run;
  std::string embed_pooling, embed_input, embed_output;
  add_model(embed, embed_model);
  add_run(embed, embed_run, false);
  embed->add_option("--pooling", embed_pooling, "e.g. first_last_avg, first_last_ditto@1-10")->required();
  embed->add_option("--input", embed_input, "One sentence per line")->required()->check(CLI::ExistingFile);
  embed->add_option("--output", embed_output, ".csv, or a tensor file for any other extension")->required();

  // eval-sts
  auto* eval = app.add_subcommand("eval-sts", "Spearman x100 per STS task and their average");
  ModelArgs eval_model;
  RunArgs eval_run;
  std::string eval_pooling, eval_data, eval_split = "test";
  std::vector<std::string> eval_tasks;
  add_model(eval, eval_model);
  add_run(eval, eval_run);
  eval->add_option("--pooling", eval_pooling, "Pooling strategy, optionally @<layer>-<head> or :<tfidf file>")->required();
  eval->add_option("--data", eval_data, "STS root with one directory per task")->required()->check(
      CLI::ExistingDirectory);
  eval->add_option("--split", eval_split)->capture_default_str()->check(CLI::IsMember({"train", "dev", "test"}));
  eval->add_option("--tasks", eval_tasks, "Subset of STS12..STS16, STSB, SICKR")->delimiter(',');

  // search-head
  auto* search = app.add_subcommand("search-head", "Rank every attention head on the STS-B dev set");
  ModelArgs search_model;
  RunArgs search_run;
  std::string search_data, search_strategy = "first_last_ditto", search_split = "dev";
  std::size_t search_top = 10;
  add_model(search, search_model);
  add_run(search, search_run);
  search->add_option("--data", search_data, "STS root with one directory per task")->required()->check(CLI::ExistingDirectory);
  search->add_option("--strategy", search_strategy)
      ->capture_default_str()
      ->check(CLI::IsMember({"static_ditto", "last_ditto", "first_last_ditto"}));
  search->add_option("--top", search_top, "Rows to print (0 = all)")->capture_default_str();
  search->add_option("--split", search_split)->capture_default_str()->check(
      CLI::IsMember({"train", "dev", "test"}));

  // probe
  auto* probe = app.add_subcommand("probe", "Perturbed-masking analysis");
  probe->require_subcommand(1);
  auto* impact = probe->add_subcommand("impact", "Impact matrix of one sentence");
  ModelArgs impact_model;
  RunArgs impact_run;
  std::string impact_sentence, impact_output;
  std::optional<std::size_t> impact_layer;
  add_model(impact, impact_model);
  add_run(impact, impact_run, false);
  impact->add_option("--sentence", impact_sentence, "Raw text, or ids with --pretokenized")->required();
  impact->add_option("--layer", impact_layer, "Representation layer (default: last)");
  impact->add_option("--output", impact_output, "Writes <output>.csv and <output>.json instead of printing");

  auto* corr = probe->add_subcommand("corr", "Correlate mean impact with TF-IDF weights");
  ModelArgs corr_model;
  RunArgs corr_run;
  std::string corr_corpus, corr_tfidf;
  std::optional<std::size_t> corr_layer;
  std::size_t corr_limit = 0;
  add_model(corr, corr_model);
  add_run(corr, corr_run);
  corr->add_option("--corpus", corr_corpus, "One sentence per line")->required()->check(CLI::ExistingFile);
  corr->add_option("--tfidf", corr_tfidf, "Weights from `tfidf train`")->required()->check(CLI::ExistingFile);
  corr->add_option("--layer", corr_layer, "Representation layer (default: last)");
  corr->add_option("--limit", corr_limit, "Use only the first N sentences (0 = all)");

  // tfidf
  auto* tfidf = app.add_subcommand("tfidf", "TF-IDF weights");
  tfidf->require_subcommand(1);
  auto* train = tfidf->add_subcommand("train", "Count document frequencies, one document per line");
  std::string train_corpus, train_output;
  train->add_option("--corpus", train_corpus, "One document per line")->required()->check(CLI::ExistingFile);
  train->add_option("--output", train_output, "Word/df table to write")->required();

  // diag
  auto* diag = app.add_subcommand("diag", "Embedding-space diagnostics");
  diag->require_subcommand(1);
  auto* iso = diag->add_subcommand("isotropy", "Average pairwise cosine of a corpus sample");
  ModelArgs iso_model;
  RunArgs iso_run;
  std::string iso_pooling, iso_corpus;
  std::size_t iso_sample = 1000;
  add_model(iso, iso_model);
  add_run(iso, iso_run);
  iso->add_option("--pooling", iso_pooling, "Pooling strategy")->required();
  iso->add_option("--corpus", iso_corpus, "One sentence per line")->required()->check(CLI::ExistingFile);
  iso->add_option("--sample", iso_sample, "Sentences drawn from the corpus")->capture_default_str()->check(CLI::Range(2, 1 << 30));

  auto* au = diag->add_subcommand("align-uniform", "Alignment on positive STS-B pairs and uniformity");
  ModelArgs au_model;
  RunArgs au_run;
  std::string au_pooling, au_data, au_split = "dev";
  double au_threshold = 4.0;
  add_model(au, au_model);
  add_run(au, au_run);
  au->add_option("--pooling", au_pooling, "Pooling strategy")->required();
  au->add_option("--data", au_data, "STS root with one directory per task")->required()->check(CLI::ExistingDirectory);
  au->add_option("--split", au_split)->capture_default_str()->check(CLI::IsMember({"train", "dev", "test"}));
  au->add_option("--threshold", au_threshold, "Minimum gold score of a positive pair")->capture_default_str();

  auto* dump = app.add_subcommand("dump", "Write every hidden state and attention matrix of one sentence");
  ModelArgs dump_model;
  RunArgs dump_run;
  std::string dump_sentence, dump_output;
  add_model(dump, dump_model);
  add_run(dump, dump_run, false);
  dump->add_option("--sentence", dump_sentence, "Raw text, or ids with --pretokenized")->required();
  dump->add_option("--output", dump_output, "Tensor file: hidden.<l>, attention.<l>.<h>")->required();

  try {
    std::vector<std::string> reversed(args.rbegin(), args.rend());
    app.parse(reversed);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e, out, err);
    return code == 0 ? kExitOk : kExitUsage;
  }

  try {
    if (*embed) {
      const Model model = open_model(embed_model, err);
      const PoolingSpec spec = open_pooling(embed_pooling, embed_run);
      const auto lines = read_lines(embed_input, false);
      const Tensor e = embed_corpus(lines, model, spec, {embed_run.max_len, embed_run.batch_size, embed_run.threads});
      if (std::filesystem::path(embed_output).extension() == ".csv") {
        write_embeddings_csv(embed_output, e);
      } else {
        write_tensor_file(embed_output, {{"embeddings", e}}, {{"model", model.id}, {"pooling", spec.str()}});
      }
      out << "wrote " << e.rows() << " x " << e.cols() << " embeddings to " << embed_output << '\n';
    } else if (*eval) {
      const Model model = open_model(eval_model, err);
      const PoolingSpec spec = open_pooling(eval_pooling, eval_run);
      const auto tasks = parse_tasks(eval_tasks);
      const StsData data = load_sts(eval_data, tasks);
      print_warnings(data.warnings, err);
      EvalOptions opts = eval_options(eval_run);
      opts.split = parse_split(eval_split);
      const EvalReport report = evaluate(data.examples, model, spec, opts);
      out << report.table();
      if (!eval_run.json_path.empty()) write_text(eval_run.json_path, report.json());
    } else if (*search) {
      const Model model = open_model(search_model, err);
      PoolingSpec base;
      base.strategy = parse_strategy(search_strategy);
      base.include_special_tokens = !search_run.exclude_specials;
      const std::array<StsTask, 1> stsb = {StsTask::stsb};
      const StsData data = load_sts(search_data, stsb);
      print_warnings(data.warnings, err);
      const auto dev = data.select(parse_split(search_split), StsTask::stsb);
      const auto ranking = grid_search_head(dev, model, base, eval_options(search_run));
      const std::size_t shown = search_top == 0 ? ranking.size() : std::min(search_top, ranking.size());
      out << "rank  head    spearman\n";
      for (std::size_t r = 0; r < shown; ++r) {
        char buf[80];
        std::snprintf(buf, sizeof(buf), "%4zu  %-6s  %8.2f\n", r + 1, ranking[r].head.str().c_str(),
                      ranking[r].spearman);
        out << buf;
      }
      if (!search_run.json_path.empty()) {
        json j;
        j["model"] = model.id;
        j["strategy"] = search_strategy;
        j["split"] = search_split;
        j["n_pairs"] = dev.size();
        auto rows = json::array();
        for (const auto& h : ranking) rows.push_back({{"head", h.head.str()}, {"spearman", h.spearman}});
        j["ranking"] = rows;
        write_text(search_run.json_path, j.dump(2) + "\n");
      }
    } else if (*impact) {
      const Model model = open_model(impact_model, err);
      ProbeOptions opts;
      opts.repr_layer = impact_layer;
      opts.threads = impact_run.threads;
      opts.batch_size = impact_run.batch_size;
      const auto s = model.encode(impact_sentence, impact_run.max_len);
      const ImpactMatrix m = impact_matrix(s, model, opts);
      if (impact_output.empty()) {
        for (std::size_t i = 0; i < m.f.rows(); ++i) {
          for (std::size_t j = 0; j < m.f.cols(); ++j) {
            char buf[32];
            std::snprintf(buf, sizeof(buf), "%.6g", static_cast<double>(m.f(i, j)));
            out << (j ? "," : "") << buf;
          }
          out << '\n';
        }
      } else {
        write_impact_csv(impact_output + ".csv", m);
        write_text(impact_output + ".json", impact_json(m, model));
        out << "wrote " << impact_output << ".csv and " << impact_output << ".json\n";
      }
    } else if (*corr) {
      const Model model = open_model(corr_model, err);
      const TfidfModel weights = TfidfModel::load(corr_tfidf);
      auto lines = read_lines(corr_corpus, true);
      if (corr_limit > 0 && lines.size() > corr_limit) lines.resize(corr_limit);
      ProbeOptions opts;
      opts.repr_layer = corr_layer;
      opts.threads = corr_run.threads;
      opts.batch_size = corr_run.batch_size;
      opts.max_len = corr_run.max_len;
      const auto r = impact_tfidf_correlation(lines, model, weights, opts);
      if (r.skipped) err << "warning: skipped " << r.skipped << " sentences without words\n";
      out << "model  pearson  spearman  words\n"
          << model.id << "  " << fixed(100.0 * r.correlation.pearson) << "  " << fixed(100.0 * r.correlation.spearman)
          << "  " << r.n_words << '\n';
      if (!corr_run.json_path.empty()) {
        json j;
        j["model"] = model.id;
        j["pearson"] = 100.0 * r.correlation.pearson;
        j["spearman"] = 100.0 * r.correlation.spearman;
        j["n_words"] = r.n_words;
        j["n_sentences"] = r.n_sentences;
        write_text(corr_run.json_path, j.dump(2) + "\n");
      }
    } else if (*train) {
      const TfidfModel m = TfidfModel::train(train_corpus);
      m.save(train_output);
      out << "trained on " << m.n_docs() << " documents, " << m.vocabulary_size() << " words\n";
    } else if (*iso) {
      const Model model = open_model(iso_model, err);
      const PoolingSpec spec = open_pooling(iso_pooling, iso_run);
      auto lines = read_lines(iso_corpus, true);
      std::vector<std::string> sample;
      if (iso_sample >= lines.size()) {
        if (iso_sample > lines.size()) {
          err << "warning: --sample " << iso_sample << " exceeds the corpus size " << lines.size()
              << "; using the whole corpus\n";
        }
        sample = std::move(lines);
      } else {
        std::mt19937_64 rng(seed);
        std::sample(lines.begin(), lines.end(), std::back_inserter(sample), iso_sample, rng);
      }
      const Tensor e = embed_corpus(sample, model, spec, {iso_run.max_len, iso_run.batch_size, iso_run.threads});
      const double c = avg_cosine(e);
      out << "avg_cosine " << fixed(c, 3) << " over " << sample.size() << " sentences\n";
      if (!iso_run.json_path.empty()) {
        json j;
        j["model"] = model.id;
        j["pooling"] = spec.str();
        j["seed"] = seed;
        j["n_sentences"] = sample.size();
        j["avg_cosine"] = c;
        write_text(iso_run.json_path, j.dump(2) + "\n");
      }
    } else if (*au) {
      const Model model = open_model(au_model, err);
      const PoolingSpec spec = open_pooling(au_pooling, au_run);
      const std::array<StsTask, 1> stsb = {StsTask::stsb};
      const StsData data = load_sts(au_data, stsb);
      print_warnings(data.warnings, err);
      const auto pairs = data.select(parse_split(au_split), StsTask::stsb);
      const auto r = align_uniform(pairs, model, spec, au_threshold, eval_options(au_run));
      out << "alignment " << fixed(r.alignment, 4) << "  uniformity " << fixed(r.uniformity, 4) << "  ("
          << r.n_positive_pairs << " positive pairs, " << r.n_sentences << " sentences)\n";
      if (!au_run.json_path.empty()) {
        json j;
        j["model"] = model.id;
        j["pooling"] = spec.str();
        j["split"] = au_split;
        j["threshold"] = au_threshold;
        j["alignment"] = r.alignment;
        j["uniformity"] = r.uniformity;
        j["n_positive_pairs"] = r.n_positive_pairs;
        j["n_sentences"] = r.n_sentences;
        write_text(au_run.json_path, j.dump(2) + "\n");
      }
    } else if (*dump) {
      const Model model = open_model(dump_model, err);
      const auto s = model.encode(dump_sentence, dump_run.max_len);
      const auto result = forward(s, model);
      TensorMap tensors;
      std::vector<float> ids(s.ids.begin(), s.ids.end());
      tensors["ids"] = Tensor::vector(ids);
      for (std::size_t l = 0; l < result.hidden.size(); ++l) tensors["hidden." + std::to_string(l)] = result.hidden[l];
      for (std::size_t l = 0; l < result.attentions.size(); ++l) {
        for (std::size_t h = 0; h < result.attentions[l].size(); ++h) {
          tensors["attention." + std::to_string(l + 1) + "." + std::to_string(h + 1)] = result.attentions[l][h];
        }
      }
      write_tensor_file(dump_output, tensors, {{"model", model.id}, {"text", dump_sentence}});
      out << "wrote " << tensors.size() << " tensors for " << s.n_tokens() << " tokens to " << dump_output << '\n';
    }
  } catch (const IoError& e) {
    err << "error: " << e.what() << '\n';
    return kExitUsage;
  } catch (const SpecError& e) {
    err << "error: " << e.what() << '\n';
    return kExitUsage;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << '\n';
    return kExitFailure;
  }
  return kExitOk;
}

}  // namespace ditto::cli
