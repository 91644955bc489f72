#pragma once

#include <array>
#include <cstddef>
#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "ditto/encoder.hpp"
#include "ditto/metrics.hpp"
#include "ditto/model_io.hpp"
#include "ditto/pooling.hpp"
#include "ditto/tfidf.hpp"

namespace ditto {

enum class StsTask { sts12, sts13, sts14, sts15, sts16, stsb, sickr };
enum class Split { train, dev, test };

inline constexpr std::array<StsTask, 7> kAllTasks = {StsTask::sts12, StsTask::sts13, StsTask::sts14, StsTask::sts15,
                                                     StsTask::sts16, StsTask::stsb,  StsTask::sickr};

/// Directory names: STS12 .. STS16, STSB, SICKR.
std::string_view task_name(StsTask t);
StsTask parse_task(std::string_view name);
std::string_view split_name(Split s);
Split parse_split(std::string_view name);

struct StsExample {
  StsTask task = StsTask::stsb;
  std::string subset;
  Split split = Split::test;
  double score = 0.0;  // gold similarity in [0, 5]
  std::string sent1;
  std::string sent2;
};

struct StsData {
  std::vector<StsExample> examples;
  std::vector<std::string> warnings;

  std::size_t count(StsTask task, Split split) const;
  std::vector<StsExample> select(Split split, std::optional<StsTask> task = std::nullopt) const;
};

/// Reads `<root>/<TASK>/<subset>.<split>.tsv` files, one "score<TAB>sent1<TAB>sent2"
/// per line. Files are visited in name order.
StsData load_sts(const std::filesystem::path& root, std::span<const StsTask> tasks = kAllTasks);
std::vector<StsExample> read_sts_file(const std::filesystem::path& file, StsTask task, std::vector<std::string>* warnings);

struct TaskScore {
  StsTask task = StsTask::stsb;
  std::size_t n_pairs = 0;
  double spearman = 0.0;  // x100
  double pearson = 0.0;   // x100
};

struct EvalReport {
  std::string model_id;
  std::string pooling;
  std::size_t max_len = kDefaultMaxLength;
  bool include_special_tokens = true;
  std::string split = "test";
  std::vector<TaskScore> tasks;
  double average = 0.0;  // mean of the task Spearman scores

  std::string table() const;
  std::string json() const;
};

struct EvalOptions {
  Split split = Split::test;
  std::size_t max_len = kDefaultMaxLength;
  std::size_t batch_size = 32;
  std::size_t threads = 1;  // 0 = all cores
};

/// Per task, one Spearman over the concatenation of all its subsets. Tasks
/// appear in canonical order.
std::vector<TaskScore> score_predictions(std::span<const StsExample> examples, std::span<const double> predictions);

/// Cosine similarity of pooled embeddings for each pair; errors carry the example index.
std::vector<double> predict_similarities(std::span<const StsExample> examples, const Model& model,
                                         const PoolingSpec& spec, const EvalOptions& options = {});

/// Scores the examples of `options.split` with the "all" setting.
EvalReport evaluate(std::span<const StsExample> examples, const Model& model, const PoolingSpec& spec,
                    const EvalOptions& options = {});

struct HeadScore {
  HeadRef head;
  double spearman = 0.0;  // x100
};

/// Scores every head of a Ditto strategy on the given pairs from one forward
/// pass per pair. Ranked by score, ties by (layer, head).
std::vector<HeadScore> grid_search_head(std::span<const StsExample> examples, const Model& model,
                                        const PoolingSpec& base, const EvalOptions& options = {});

/// Spearman x100 of a single configuration over all given pairs, as a task-free score.
double pair_spearman(std::span<const StsExample> examples, const Model& model, const PoolingSpec& spec,
                     const EvalOptions& options = {});

/// Correlation x100 between each word's mean diagonal attention and its TF-IDF
/// weight, pooled over every distinct sentence of the examples.
CorrelationPair diagonal_tfidf_correlation(std::span<const StsExample> examples, const Model& model, HeadRef head,
                                           const TfidfModel& tfidf, const EvalOptions& options = {});

struct AlignUniform {
  double alignment = 0.0;
  double uniformity = 0.0;
  std::size_t n_positive_pairs = 0;
  std::size_t n_sentences = 0;
};

/// Alignment over pairs with gold score >= threshold, uniformity over every
/// distinct sentence.
AlignUniform align_uniform(std::span<const StsExample> examples, const Model& model, const PoolingSpec& spec,
                           double threshold = 4.0, const EvalOptions& options = {});

}  // namespace ditto
