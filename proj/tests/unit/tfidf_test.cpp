#include <gtest/gtest.h>

#include <fstream>
#include <random>

#include "ditto/errors.hpp"
#include "ditto/tfidf.hpp"
#include "fixtures.hpp"

namespace ditto {
namespace {

TEST(Tfidf, TwoDocumentExample) {
  const auto m = TfidfModel::train(std::vector<std::string>{"a b", "a"});
  EXPECT_EQ(m.n_docs(), 2);
  EXPECT_EQ(m.df("a"), 2);
  EXPECT_EQ(m.df("b"), 1);
  EXPECT_DOUBLE_EQ(m.idf("a"), 0.0);
  EXPECT_DOUBLE_EQ(m.idf("b"), 1.0);
}

TEST(Tfidf, SingleDocumentGivesZeroIdf) {
  const auto m = TfidfModel::train(std::vector<std::string>{"the quick brown fox"});
  for (const auto& [w, df] : m.document_frequencies()) EXPECT_EQ(m.idf(w), 0.0) << w;
}

TEST(Tfidf, WeightExamples) {
  const auto m = TfidfModel::from_counts({{"everywhere", 8}, {"quarter", 2}}, 8);
  EXPECT_EQ(m.weight("everywhere", 1), 0.0);
  EXPECT_DOUBLE_EQ(m.weight("quarter", 1), 2.0);
  EXPECT_DOUBLE_EQ(m.weight("quarter", 2), 2.0 * m.weight("quarter", 1));
  EXPECT_DOUBLE_EQ(m.weight("unseen", 1), 3.0);
  EXPECT_THROW(m.weight("quarter", 0), RangeError);
}

TEST(Tfidf, CountsUseBasicWordsAndDocumentPresence) {
  const auto m = TfidfModel::train(std::vector<std::string>{"Cat, cat! CAT", "dog cat", "Café"});
  EXPECT_EQ(m.df("cat"), 2);
  EXPECT_EQ(m.df(","), 1);
  EXPECT_EQ(m.df("cafe"), 1);
  EXPECT_EQ(m.df("Cat"), 0);
}

TEST(Tfidf, MonotoneInDfAndTf) {
  std::mt19937 rng(1);
  std::map<std::string, std::int64_t> counts;
  for (int i = 1; i <= 50; ++i) counts["w" + std::to_string(i)] = i;
  const auto m = TfidfModel::from_counts(counts, 50);
  for (int i = 1; i < 50; ++i) {
    EXPECT_GE(m.weight("w" + std::to_string(i), 1), m.weight("w" + std::to_string(i + 1), 1));
    EXPECT_LE(m.weight("w" + std::to_string(i), i), m.weight("w" + std::to_string(i), i + 1));
    EXPECT_GE(m.idf("w" + std::to_string(i)), 0.0);
  }
}

TEST(Tfidf, RejectsInvalidCountsAndEmptyCorpus) {
  EXPECT_THROW(TfidfModel::from_counts({{"a", 3}}, 2), RangeError);
  EXPECT_THROW(TfidfModel::from_counts({{"a", 0}}, 2), RangeError);
  EXPECT_THROW(TfidfModel::train(std::vector<std::string>{}), InsufficientDataError);
  const auto dir = testing::scratch_dir("tfidf_empty");
  std::ofstream(dir / "empty.txt").close();
  EXPECT_THROW(TfidfModel::train(dir / "empty.txt"), InsufficientDataError);
}

TEST(Tfidf, SaveLoadRoundTrip) {
  const auto m = TfidfModel::train(testing::fixture("corpus.txt"));
  const auto dir = testing::scratch_dir("tfidf_roundtrip");
  m.save(dir / "w.tsv");
  const auto lines = testing::read_lines(dir / "w.tsv");
  EXPECT_EQ(lines.front(), "n_docs\t60");
  EXPECT_TRUE(std::is_sorted(lines.begin() + 1, lines.end()));
  const auto back = TfidfModel::load(dir / "w.tsv");
  EXPECT_EQ(back.n_docs(), m.n_docs());
  EXPECT_EQ(back.document_frequencies(), m.document_frequencies());
  for (const auto& [w, df] : m.document_frequencies()) EXPECT_EQ(back.weight(w, 3), m.weight(w, 3));
}

TEST(Tfidf, LoadReportsFileAndLine) {
  const auto dir = testing::scratch_dir("tfidf_bad");
  std::ofstream(dir / "bad.tsv") << "n_docs\t4\nfoo\t2\nbar\tx\n";
  try {
    TfidfModel::load(dir / "bad.tsv");
    FAIL();
  } catch (const ParseError& e) {
    EXPECT_EQ(e.line(), 3u);
  }
  std::ofstream(dir / "noheader.tsv") << "foo\t2\n";
  EXPECT_THROW(TfidfModel::load(dir / "noheader.tsv"), ParseError);
  std::ofstream(dir / "range.tsv") << "n_docs\t4\nfoo\t5\n";
  EXPECT_THROW(TfidfModel::load(dir / "range.tsv"), RangeError);
}

}  // namespace
}  // namespace ditto
