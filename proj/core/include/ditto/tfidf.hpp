#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <span>
#include <string>
#include <unordered_map>

namespace ditto {

/// Word-level document frequencies over a sentence-per-line corpus.
/// weight(w, tf) = tf * log2(n_docs / df(w)); unseen words count as df = 1.
class TfidfModel {
 public:
  TfidfModel() = default;

  /// Each line is one document; words come from the basic tokenizer.
  static TfidfModel train(const std::filesystem::path& corpus_path);
  static TfidfModel train(std::span<const std::string> documents);
  static TfidfModel from_counts(std::map<std::string, std::int64_t> df, std::int64_t n_docs);

  /// File layout: "n_docs<TAB>N" header, then sorted "word<TAB>df" lines.
  static TfidfModel load(const std::filesystem::path& path);
  void save(const std::filesystem::path& path) const;

  std::int64_t n_docs() const noexcept { return n_docs_; }
  std::int64_t df(const std::string& word) const;
  double idf(const std::string& word) const;
  double weight(const std::string& word, std::int64_t tf) const;
  std::size_t vocabulary_size() const noexcept { return df_.size(); }
  const std::map<std::string, std::int64_t>& document_frequencies() const noexcept { return df_; }

 private:
  void build_cache();

  std::map<std::string, std::int64_t> df_;
  std::unordered_map<std::string, double> idf_;
  std::int64_t n_docs_ = 0;
};

}  // namespace ditto
