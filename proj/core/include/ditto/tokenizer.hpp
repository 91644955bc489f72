#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

namespace ditto {

using TokenId = std::int32_t;

/// Names of the five reserved tokens. BERT defaults; RoBERTa-style vocabularies
/// override them through the model config.
struct SpecialTokens {
  std::string cls = "[CLS]";
  std::string sep = "[SEP]";
  std::string mask = "[MASK]";
  std::string pad = "[PAD]";
  std::string unk = "[UNK]";
};

/// Bijection between token strings and ids. Immutable after construction.
class Vocab {
 public:
  /// One token per line, id = zero-based line number.
  static Vocab load(const std::filesystem::path& path, const SpecialTokens& specials = {});
  static Vocab from_tokens(std::vector<std::string> tokens, const SpecialTokens& specials = {});

  std::optional<TokenId> find(const std::string& token) const;
  TokenId id(const std::string& token) const;
  const std::string& token(TokenId id) const;
  std::size_t size() const noexcept { return id_to_token_.size(); }

  TokenId cls_id() const noexcept { return cls_; }
  TokenId sep_id() const noexcept { return sep_; }
  TokenId mask_id() const noexcept { return mask_; }
  TokenId pad_id() const noexcept { return pad_; }
  TokenId unk_id() const noexcept { return unk_; }
  bool is_special(TokenId id) const noexcept;

 private:
  std::unordered_map<std::string, TokenId> token_to_id_;
  std::vector<std::string> id_to_token_;
  TokenId cls_ = 0, sep_ = 0, mask_ = 0, pad_ = 0, unk_ = 0;
};

/// Half-open range of token indices belonging to one basic-tokenizer word.
struct WordSpan {
  std::size_t begin = 0;
  std::size_t end = 0;
  std::size_t size() const noexcept { return end - begin; }
  friend bool operator==(const WordSpan&, const WordSpan&) = default;
};

struct TokenizedSentence {
  std::string text;
  std::vector<TokenId> ids;            // [CLS] ... [SEP]
  std::vector<WordSpan> word_spans;    // cover exactly ids[1 .. n-1)
  std::vector<std::string> words;      // words[k] owns word_spans[k]

  std::size_t n_tokens() const noexcept { return ids.size(); }
  /// True when the text produced no word pieces at all.
  bool degenerate() const noexcept { return word_spans.empty(); }
};

inline constexpr std::size_t kDefaultMaxWordChars = 100;
inline constexpr std::size_t kDefaultMaxLength = 128;

/// Cleanup, CJK isolation, accent stripping and lowercasing, matching the
/// reference uncased BERT normalizer.
std::string normalize_text(std::string_view text);

/// Normalization followed by whitespace and punctuation splitting. These are
/// the words TF-IDF and the word spans are defined over.
std::vector<std::string> basic_tokenize(std::string_view text);

/// Greedy longest-match-first segmentation of one normalized word.
std::vector<TokenId> wordpiece(std::string_view word, const Vocab& vocab,
                               std::size_t max_chars = kDefaultMaxWordChars);

TokenizedSentence encode(std::string_view text, const Vocab& vocab,
                         std::size_t max_len = kDefaultMaxLength);

/// Builds a sentence from externally produced ids (including both specials).
/// Every inner id becomes its own word; `vocab`, when given, supplies the word strings.
TokenizedSentence from_ids(std::vector<TokenId> ids, const Vocab* vocab = nullptr,
                           std::size_t max_len = kDefaultMaxLength);

/// Parses one line of space-separated integer ids.
std::vector<TokenId> parse_id_line(std::string_view line);

/// Copy of `s` with the given positions replaced by [MASK].
TokenizedSentence mask_positions(const TokenizedSentence& s, std::span<const std::size_t> positions,
                                 const Vocab& vocab);
TokenizedSentence mask_positions(const TokenizedSentence& s, std::span<const std::size_t> positions,
                                 TokenId mask_id);

}  // namespace ditto
