#include "ditto/tfidf.hpp"

#include <charconv>
#include <cmath>
#include <fstream>
#include <set>
#include <vector>

#include "ditto/errors.hpp"
#include "ditto/tokenizer.hpp"

namespace ditto {

TfidfModel TfidfModel::train(std::span<const std::string> documents) {
  if (documents.empty()) throw InsufficientDataError("cannot train TF-IDF on an empty corpus");
  std::map<std::string, std::int64_t> df;
  for (const auto& doc : documents) {
    const auto words = basic_tokenize(doc);
    for (const auto& w : std::set<std::string>(words.begin(), words.end())) ++df[w];
  }
  return from_counts(std::move(df), static_cast<std::int64_t>(documents.size()));
}

TfidfModel TfidfModel::train(const std::filesystem::path& corpus_path) {
  std::ifstream in(corpus_path, std::ios::binary);
  if (!in) throw IoError("cannot open corpus " + corpus_path.string());
  std::map<std::string, std::int64_t> df;
  std::int64_t n_docs = 0;
  std::string line;
  while (std::getline(in, line)) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    ++n_docs;
    const auto words = basic_tokenize(line);
    for (const auto& w : std::set<std::string>(words.begin(), words.end())) ++df[w];
  }
  if (n_docs == 0) throw InsufficientDataError("corpus " + corpus_path.string() + " is empty");
  return from_counts(std::move(df), n_docs);
}

TfidfModel TfidfModel::from_counts(std::map<std::string, std::int64_t> df, std::int64_t n_docs) {
  if (n_docs <= 0) throw InsufficientDataError("TF-IDF model needs at least one document");
  for (const auto& [word, count] : df) {
    if (count < 1 || count > n_docs) {
      throw RangeError("document frequency " + std::to_string(count) + " of '" + word + "' outside [1, " +
                       std::to_string(n_docs) + "]");
    }
  }
  TfidfModel m;
  m.df_ = std::move(df);
  m.n_docs_ = n_docs;
  m.build_cache();
  return m;
}

void TfidfModel::build_cache() {
  idf_.clear();
  idf_.reserve(df_.size());
  const double n = static_cast<double>(n_docs_);
  for (const auto& [word, count] : df_) idf_.emplace(word, std::log2(n / static_cast<double>(count)));
}

TfidfModel TfidfModel::load(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open TF-IDF model " + path.string());
  const std::string file = path.string();
  auto parse_count = [&](std::string_view text, std::size_t line_no) {
    std::int64_t v = 0;
    auto [ptr, ec] = std::from_chars(text.data(), text.data() + text.size(), v);
    if (ec != std::errc() || ptr != text.data() + text.size()) {
      throw ParseError("invalid count '" + std::string(text) + "'", file, line_no);
    }
    return v;
  };

  std::string line;
  std::size_t line_no = 0;
  std::int64_t n_docs = -1;
  std::map<std::string, std::int64_t> df;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    const auto tab = line.rfind('\t');
    if (tab == std::string::npos) throw ParseError("expected '<word>\\t<count>'", file, line_no);
    const std::string key = line.substr(0, tab);
    const std::int64_t value = parse_count(std::string_view(line).substr(tab + 1), line_no);
    if (line_no == 1) {
      if (key != "n_docs") throw ParseError("first line must be the n_docs header", file, line_no);
      n_docs = value;
      continue;
    }
    if (!df.emplace(key, value).second) throw ParseError("duplicate word '" + key + "'", file, line_no);
  }
  if (n_docs < 0) throw ParseError("missing n_docs header", file, 1);
  return from_counts(std::move(df), n_docs);
}

void TfidfModel::save(const std::filesystem::path& path) const {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw IoError("cannot write TF-IDF model " + path.string());
  out << "n_docs\t" << n_docs_ << '\n';
  for (const auto& [word, count] : df_) out << word << '\t' << count << '\n';
}

std::int64_t TfidfModel::df(const std::string& word) const {
  auto it = df_.find(word);
  return it == df_.end() ? 0 : it->second;
}

double TfidfModel::idf(const std::string& word) const {
  auto it = idf_.find(word);
  if (it != idf_.end()) return it->second;
  return std::log2(static_cast<double>(n_docs_));
}

double TfidfModel::weight(const std::string& word, std::int64_t tf) const {
  if (tf < 1) throw RangeError("term frequency must be at least 1");
  return static_cast<double>(tf) * idf(word);
}

}  // namespace ditto
