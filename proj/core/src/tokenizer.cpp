#include "ditto/tokenizer.hpp"

#include <charconv>
#include <fstream>

#include "ditto/errors.hpp"
#include "unicode.hpp"

namespace ditto {

namespace uc = unicode;

Vocab Vocab::load(const std::filesystem::path& path, const SpecialTokens& specials) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open vocabulary " + path.string());
  std::vector<std::string> tokens;
  std::string line;
  while (std::getline(in, line)) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    tokens.push_back(line);
  }
  return from_tokens(std::move(tokens), specials);
}

Vocab Vocab::from_tokens(std::vector<std::string> tokens, const SpecialTokens& specials) {
  Vocab v;
  v.token_to_id_.reserve(tokens.size());
  for (std::size_t i = 0; i < tokens.size(); ++i) {
    auto [it, inserted] = v.token_to_id_.emplace(tokens[i], static_cast<TokenId>(i));
    if (!inserted) {
      throw FormatError("duplicate vocabulary token '" + tokens[i] + "' on line " + std::to_string(i + 1), i);
    }
  }
  v.id_to_token_ = std::move(tokens);
  auto require = [&](const std::string& name) {
    auto id = v.find(name);
    if (!id) throw CompletenessError("vocabulary lacks special token " + name, name);
    return *id;
  };
  v.cls_ = require(specials.cls);
  v.sep_ = require(specials.sep);
  v.mask_ = require(specials.mask);
  v.pad_ = require(specials.pad);
  v.unk_ = require(specials.unk);
  return v;
}

std::optional<TokenId> Vocab::find(const std::string& token) const {
  auto it = token_to_id_.find(token);
  if (it == token_to_id_.end()) return std::nullopt;
  return it->second;
}

TokenId Vocab::id(const std::string& token) const {
  auto found = find(token);
  if (!found) throw IndexError("token '" + token + "' not in vocabulary");
  return *found;
}

const std::string& Vocab::token(TokenId id) const {
  if (id < 0 || static_cast<std::size_t>(id) >= id_to_token_.size()) {
    throw IndexError("token id " + std::to_string(id) + " out of range");
  }
  return id_to_token_[static_cast<std::size_t>(id)];
}

bool Vocab::is_special(TokenId id) const noexcept {
  return id == cls_ || id == sep_ || id == mask_ || id == pad_ || id == unk_;
}

namespace {

uc::CodePoints normalize_code_points(std::string_view text) {
  const uc::CodePoints raw = uc::decode_utf8(text);
  uc::CodePoints cleaned;
  cleaned.reserve(raw.size());
  for (char32_t c : raw) {
    if (c == 0 || c == 0xFFFD || uc::is_control(c)) continue;
    if (uc::is_whitespace(c)) {
      cleaned.push_back(U' ');
    } else if (uc::is_cjk(c)) {
      cleaned.push_back(U' ');
      cleaned.push_back(c);
      cleaned.push_back(U' ');
    } else {
      cleaned.push_back(c);
    }
  }
  return uc::to_lower(uc::strip_accents(cleaned));
}

}  // namespace

std::string normalize_text(std::string_view text) { return uc::encode_utf8(normalize_code_points(text)); }

std::vector<std::string> basic_tokenize(std::string_view text) {
  const uc::CodePoints cps = normalize_code_points(text);
  std::vector<std::string> words;
  std::size_t start = 0;
  auto flush = [&](std::size_t end) {
    if (end > start) words.push_back(uc::encode_utf8(cps, start, end));
  };
  for (std::size_t i = 0; i < cps.size(); ++i) {
    const char32_t c = cps[i];
    if (uc::is_whitespace(c)) {
      flush(i);
      start = i + 1;
    } else if (uc::is_punctuation(c)) {
      flush(i);
      words.push_back(uc::encode_utf8(cps, i, i + 1));
      start = i + 1;
    }
  }
  flush(cps.size());
  return words;
}

std::vector<TokenId> wordpiece(std::string_view word, const Vocab& vocab, std::size_t max_chars) {
  const uc::CodePoints cps = uc::decode_utf8(word);
  if (cps.empty()) return {};
  if (cps.size() > max_chars) return {vocab.unk_id()};

  std::vector<TokenId> pieces;
  std::size_t start = 0;
  while (start < cps.size()) {
    std::size_t end = cps.size();
    std::optional<TokenId> match;
    while (start < end) {
      std::string candidate = start > 0 ? "##" : "";
      candidate += uc::encode_utf8(cps, start, end);
      if ((match = vocab.find(candidate))) break;
      --end;
    }
    if (!match) return {vocab.unk_id()};
    pieces.push_back(*match);
    start = end;
  }
  return pieces;
}

TokenizedSentence encode(std::string_view text, const Vocab& vocab, std::size_t max_len) {
  if (max_len < 3) throw LengthError("max_len must be at least 3, got " + std::to_string(max_len));
  TokenizedSentence out;
  out.text = std::string(text);
  out.ids.push_back(vocab.cls_id());
  const std::size_t budget = max_len - 2;
  for (auto& word : basic_tokenize(text)) {
    const std::size_t used = out.ids.size() - 1;
    if (used >= budget) break;
    std::vector<TokenId> pieces = wordpiece(word, vocab);
    if (pieces.empty()) continue;
    const std::size_t take = std::min(pieces.size(), budget - used);
    const std::size_t begin = out.ids.size();
    out.ids.insert(out.ids.end(), pieces.begin(), pieces.begin() + static_cast<std::ptrdiff_t>(take));
    out.word_spans.push_back({begin, out.ids.size()});
    out.words.push_back(std::move(word));
  }
  out.ids.push_back(vocab.sep_id());
  return out;
}

std::vector<TokenId> parse_id_line(std::string_view line) {
  std::vector<TokenId> ids;
  std::size_t i = 0;
  while (i < line.size()) {
    while (i < line.size() && (line[i] == ' ' || line[i] == '\t' || line[i] == '\r')) ++i;
    if (i >= line.size()) break;
    std::size_t j = i;
    while (j < line.size() && line[j] != ' ' && line[j] != '\t' && line[j] != '\r') ++j;
    TokenId value = 0;
    auto [ptr, ec] = std::from_chars(line.data() + i, line.data() + j, value);
    if (ec != std::errc() || ptr != line.data() + j) {
      throw FormatError("invalid token id '" + std::string(line.substr(i, j - i)) + "'", i);
    }
    ids.push_back(value);
    i = j;
  }
  return ids;
}

TokenizedSentence from_ids(std::vector<TokenId> ids, const Vocab* vocab, std::size_t max_len) {
  if (max_len < 3) throw LengthError("max_len must be at least 3, got " + std::to_string(max_len));
  if (ids.size() < 2) throw LengthError("pre-tokenized sentence needs both special tokens");
  if (ids.size() > max_len) {
    const TokenId last = ids.back();
    ids.resize(max_len - 1);
    ids.push_back(last);
  }
  TokenizedSentence out;
  for (std::size_t i = 1; i + 1 < ids.size(); ++i) {
    out.word_spans.push_back({i, i + 1});
    out.words.push_back(vocab ? vocab->token(ids[i]) : std::to_string(ids[i]));
    if (!out.text.empty()) out.text += ' ';
    out.text += out.words.back();
  }
  out.ids = std::move(ids);
  return out;
}

TokenizedSentence mask_positions(const TokenizedSentence& s, std::span<const std::size_t> positions,
                                 TokenId mask_id) {
  TokenizedSentence out = s;
  for (std::size_t p : positions) {
    if (p >= s.ids.size()) {
      throw IndexError("mask position " + std::to_string(p) + " out of range for " + std::to_string(s.ids.size()) +
                       " tokens");
    }
    if (p == 0 || p + 1 == s.ids.size()) {
      throw IndexError("mask position " + std::to_string(p) + " targets a special token");
    }
    out.ids[p] = mask_id;
  }
  return out;
}

TokenizedSentence mask_positions(const TokenizedSentence& s, std::span<const std::size_t> positions,
                                 const Vocab& vocab) {
  return mask_positions(s, positions, vocab.mask_id());
}

}  // namespace ditto
