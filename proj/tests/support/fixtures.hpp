#pragma once

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <iterator>
#include <string>
#include <vector>

#include "json.hpp"

#include "ditto/model_io.hpp"
#include "ditto/tensor.hpp"
#include "ditto/tensor_file.hpp"
#include "ditto/tokenizer.hpp"

namespace ditto::testing {

inline std::filesystem::path fixture(const std::string& relative) {
  return std::filesystem::path(DITTO_FIXTURE_DIR) / relative;
}

struct OracleSentence {
  std::string text;
  std::vector<TokenId> ids;
  std::vector<WordSpan> spans;
};

inline std::vector<OracleSentence> oracle_sentences(const std::string& dir) {
  std::ifstream in(fixture(dir + "/sentences.json"));
  const auto j = nlohmann::json::parse(in);
  std::vector<OracleSentence> out;
  for (const auto& item : j) {
    OracleSentence s;
    s.text = item["text"].get<std::string>();
    s.ids = item["ids"].get<std::vector<TokenId>>();
    for (const auto& span : item["word_spans"]) s.spans.push_back({span[0].get<std::size_t>(), span[1].get<std::size_t>()});
    out.push_back(std::move(s));
  }
  return out;
}

inline const Model& tiny_model() {
  static const Model model = load_model(fixture("tiny_model"));
  return model;
}

inline const Model& tiny_electra() {
  static const Model model = load_model(fixture("tiny_electra"));
  return model;
}

inline double max_abs_diff(const Tensor& a, const Tensor& b) {
  if (a.shape() != b.shape()) return INFINITY;
  double worst = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) worst = std::max(worst, std::abs(double(a[i]) - double(b[i])));
  return worst;
}

inline std::vector<std::string> read_lines(const std::filesystem::path& path) {
  std::ifstream in(path);
  std::vector<std::string> lines;
  for (std::string line; std::getline(in, line);) lines.push_back(line);
  return lines;
}

/// Fresh scratch directory under the system temp dir.
inline std::filesystem::path scratch_dir(const std::string& name) {
  const auto dir = std::filesystem::temp_directory_path() / ("ditto_test_" + name);
  std::filesystem::remove_all(dir);
  std::filesystem::create_directories(dir);
  return dir;
}

}  // namespace ditto::testing
