#include "ditto/model_io.hpp"

#include <array>
#include <fstream>
#include <iterator>
#include <set>

#include "ditto/errors.hpp"
#include "json.hpp"

namespace ditto {

using nlohmann::json;

namespace {

std::string read_text(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open " + path.string());
  return std::string(std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>());
}

std::size_t get_size(const json& j, std::initializer_list<const char*> keys, bool required, std::size_t fallback = 0) {
  for (const char* key : keys) {
    if (j.contains(key)) {
      const auto& v = j.at(key);
      if (!v.is_number_integer() || v.get<long long>() < 0) {
        throw FormatError(std::string("config field '") + key + "' must be a non-negative integer", 0);
      }
      return v.get<std::size_t>();
    }
  }
  if (required) throw CompletenessError(std::string("config is missing '") + *keys.begin() + "'", *keys.begin());
  return fallback;
}

constexpr std::array<std::string_view, 4> kModelPrefixes = {"bert.", "electra.", "roberta.", "model."};

std::string strip_prefix(const std::string& name) {
  for (auto prefix : kModelPrefixes) {
    if (name.starts_with(prefix)) return name.substr(prefix.size());
  }
  return name;
}

std::string layer_name(std::size_t layer, std::string_view suffix) {
  return "encoder.layer." + std::to_string(layer) + "." + std::string(suffix);
}

class TensorTaker {
 public:
  TensorTaker(TensorMap& tensors) : tensors_(tensors) {}

  Tensor take(const std::string& name, const Shape& expected) {
    auto it = tensors_.find(name);
    if (it == tensors_.end()) throw CompletenessError("missing required tensor '" + name + "'", name);
    Tensor t = std::move(it->second);
    tensors_.erase(it);
    if (t.shape() != expected) {
      throw ShapeError("tensor '" + name + "' has shape " + shape_string(t.shape()) + ", expected " +
                       shape_string(expected));
    }
    if (!t.all_finite()) throw Error("tensor '" + name + "' contains NaN or Inf");
    return t;
  }

  LinearWeights linear(const std::string& base, std::size_t out, std::size_t in) {
    return {take(base + ".weight", {out, in}), take(base + ".bias", {out})};
  }

  NormWeights norm(const std::string& base, std::size_t d) {
    return {take(base + ".weight", {d}), take(base + ".bias", {d})};
  }

  bool has(const std::string& name) const { return tensors_.contains(name); }

 private:
  TensorMap& tensors_;
};

}  // namespace

void EncoderConfig::validate() const {
  auto positive = [](std::size_t v, const char* name) {
    if (v == 0) throw SpecError(std::string("config: ") + name + " must be positive");
  };
  positive(hidden_size, "hidden_size");
  positive(num_layers, "num_layers");
  positive(num_heads, "num_heads");
  positive(intermediate_size, "intermediate_size");
  positive(vocab_size, "vocab_size");
  positive(max_position_embeddings, "max_position_embeddings");
  positive(type_vocab_size, "type_vocab_size");
  if (hidden_size % num_heads != 0) {
    throw SpecError("config: hidden_size " + std::to_string(hidden_size) + " is not divisible by num_heads " +
                    std::to_string(num_heads));
  }
  if (!(layer_norm_eps > 0.0f)) throw SpecError("config: layer_norm_eps must be positive");
  if (position_offset >= max_position_embeddings) throw SpecError("config: position_offset exceeds table size");
}

EncoderConfig EncoderConfig::from_json(std::string_view json_text) {
  json j;
  try {
    j = json::parse(json_text);
  } catch (const json::parse_error& e) {
    throw FormatError(std::string("config is not valid JSON: ") + e.what(), e.byte);
  }
  EncoderConfig c;
  c.hidden_size = get_size(j, {"hidden_size"}, true);
  c.num_layers = get_size(j, {"num_layers", "num_hidden_layers"}, true);
  c.num_heads = get_size(j, {"num_heads", "num_attention_heads"}, true);
  c.intermediate_size = get_size(j, {"intermediate_size"}, true);
  c.vocab_size = get_size(j, {"vocab_size"}, true);
  c.max_position_embeddings = get_size(j, {"max_position_embeddings"}, true);
  c.type_vocab_size = get_size(j, {"type_vocab_size"}, false, 2);
  c.embedding_size = get_size(j, {"embedding_size"}, false, 0);
  c.position_offset = get_size(j, {"position_offset"}, false, 0);
  if (j.contains("layer_norm_eps")) c.layer_norm_eps = j.at("layer_norm_eps").get<float>();
  if (j.contains("head_dim") && j.at("head_dim").get<std::size_t>() != c.head_dim()) {
    throw SpecError("config: head_dim disagrees with hidden_size / num_heads");
  }
  c.validate();
  return c;
}

EncoderConfig EncoderConfig::load(const std::filesystem::path& path) {
  try {
    return from_json(read_text(path));
  } catch (const FormatError& e) {
    throw FormatError(path.string() + ": " + e.what(), e.offset());
  }
}

std::vector<std::string> required_tensor_names(const EncoderConfig& config) {
  std::vector<std::string> names = {
      "embeddings.word_embeddings.weight", "embeddings.position_embeddings.weight",
      "embeddings.token_type_embeddings.weight", "embeddings.LayerNorm.weight", "embeddings.LayerNorm.bias",
  };
  if (config.embedding_width() != config.hidden_size) {
    names.push_back("embeddings_project.weight");
    names.push_back("embeddings_project.bias");
  }
  for (std::size_t l = 0; l < config.num_layers; ++l) {
    for (auto suffix : {"attention.self.query", "attention.self.key", "attention.self.value",
                        "attention.output.dense", "attention.output.LayerNorm", "intermediate.dense",
                        "output.dense", "output.LayerNorm"}) {
      names.push_back(layer_name(l, std::string(suffix) + ".weight"));
      names.push_back(layer_name(l, std::string(suffix) + ".bias"));
    }
  }
  return names;
}

LoadedWeights weights_from_tensors(TensorMap raw, const EncoderConfig& config) {
  config.validate();
  TensorMap tensors;
  for (auto& [name, t] : raw) tensors.emplace(strip_prefix(name), std::move(t));

  const std::size_t d = config.hidden_size;
  const std::size_t e = config.embedding_width();
  const std::size_t ff = config.intermediate_size;
  TensorTaker taker(tensors);

  LoadedWeights out;
  ModelWeights& w = out.weights;
  w.token_embeddings = taker.take("embeddings.word_embeddings.weight", {config.vocab_size, e});
  w.position_embeddings = taker.take("embeddings.position_embeddings.weight", {config.max_position_embeddings, e});
  w.segment_embeddings = taker.take("embeddings.token_type_embeddings.weight", {config.type_vocab_size, e});
  w.embedding_norm = taker.norm("embeddings.LayerNorm", e);
  if (e != d || taker.has("embeddings_project.weight")) {
    w.embedding_projection = taker.linear("embeddings_project", d, e);
  }
  w.layers.reserve(config.num_layers);
  for (std::size_t l = 0; l < config.num_layers; ++l) {
    LayerWeights lw;
    lw.query = taker.linear(layer_name(l, "attention.self.query"), d, d);
    lw.key = taker.linear(layer_name(l, "attention.self.key"), d, d);
    lw.value = taker.linear(layer_name(l, "attention.self.value"), d, d);
    lw.attention_output = taker.linear(layer_name(l, "attention.output.dense"), d, d);
    lw.attention_norm = taker.norm(layer_name(l, "attention.output.LayerNorm"), d);
    lw.ffn_in = taker.linear(layer_name(l, "intermediate.dense"), ff, d);
    lw.ffn_out = taker.linear(layer_name(l, "output.dense"), d, ff);
    lw.ffn_norm = taker.norm(layer_name(l, "output.LayerNorm"), d);
    w.layers.push_back(std::move(lw));
  }
  for (const auto& [name, t] : tensors) out.warnings.push_back("ignored unused tensor '" + name + "'");
  return out;
}

LoadedWeights load_weights(const std::filesystem::path& path, const EncoderConfig& config) {
  return weights_from_tensors(read_tensor_file(path), config);
}

TensorMap weights_to_tensors(const ModelWeights& w) {
  TensorMap out;
  auto put_linear = [&](const std::string& base, const LinearWeights& lw) {
    out[base + ".weight"] = lw.weight;
    out[base + ".bias"] = lw.bias;
  };
  auto put_norm = [&](const std::string& base, const NormWeights& nw) {
    out[base + ".weight"] = nw.gamma;
    out[base + ".bias"] = nw.beta;
  };
  out["embeddings.word_embeddings.weight"] = w.token_embeddings;
  out["embeddings.position_embeddings.weight"] = w.position_embeddings;
  out["embeddings.token_type_embeddings.weight"] = w.segment_embeddings;
  put_norm("embeddings.LayerNorm", w.embedding_norm);
  if (w.embedding_projection) put_linear("embeddings_project", *w.embedding_projection);
  for (std::size_t l = 0; l < w.layers.size(); ++l) {
    const auto& lw = w.layers[l];
    put_linear(layer_name(l, "attention.self.query"), lw.query);
    put_linear(layer_name(l, "attention.self.key"), lw.key);
    put_linear(layer_name(l, "attention.self.value"), lw.value);
    put_linear(layer_name(l, "attention.output.dense"), lw.attention_output);
    put_norm(layer_name(l, "attention.output.LayerNorm"), lw.attention_norm);
    put_linear(layer_name(l, "intermediate.dense"), lw.ffn_in);
    put_linear(layer_name(l, "output.dense"), lw.ffn_out);
    put_norm(layer_name(l, "output.LayerNorm"), lw.ffn_norm);
  }
  return out;
}

TokenizedSentence Model::encode(std::string_view text, std::size_t max_len) const {
  const std::size_t limit = std::min(max_len, config.max_position_embeddings - config.position_offset);
  if (input_mode == InputMode::pretokenized) {
    return from_ids(parse_id_line(text), vocab ? &*vocab : nullptr, limit);
  }
  if (!vocab) throw SpecError("model '" + id + "' has no vocab.txt; use pre-tokenized input");
  return ditto::encode(text, *vocab, limit);
}

Model load_model(const std::filesystem::path& dir, const ModelLoadOptions& options) {
  if (!std::filesystem::is_directory(dir)) throw IoError("model directory " + dir.string() + " does not exist");
  const auto config_path = dir / "config.json";
  const std::string config_text = read_text(config_path);

  Model m;
  m.id = dir.filename().string();
  if (m.id.empty()) m.id = dir.parent_path().filename().string();
  m.config = EncoderConfig::load(config_path);

  const json j = json::parse(config_text);
  SpecialTokens specials;
  if (j.contains("special_tokens")) {
    const auto& st = j.at("special_tokens");
    specials.cls = st.value("cls", specials.cls);
    specials.sep = st.value("sep", specials.sep);
    specials.mask = st.value("mask", specials.mask);
    specials.pad = st.value("pad", specials.pad);
    specials.unk = st.value("unk", specials.unk);
  }
  if (j.contains("model_id")) m.id = j.at("model_id").get<std::string>();

  m.input_mode = InputMode::wordpiece;
  if (j.value("input_mode", std::string("wordpiece")) == "pretokenized") m.input_mode = InputMode::pretokenized;
  if (options.input_mode) m.input_mode = *options.input_mode;

  if (std::filesystem::exists(dir / "vocab.txt")) {
    m.vocab = Vocab::load(dir / "vocab.txt", specials);
    if (m.vocab->size() != m.config.vocab_size) {
      m.warnings.push_back("vocab.txt has " + std::to_string(m.vocab->size()) + " tokens, config says " +
                           std::to_string(m.config.vocab_size));
    }
    m.mask_id = m.vocab->mask_id();
    m.pad_id = m.vocab->pad_id();
  } else if (m.input_mode == InputMode::wordpiece) {
    throw IoError("model directory " + dir.string() + " lacks vocab.txt");
  }
  if (j.contains("mask_token_id")) m.mask_id = j.at("mask_token_id").get<TokenId>();
  if (j.contains("pad_token_id")) m.pad_id = j.at("pad_token_id").get<TokenId>();

  auto loaded = load_weights(dir / "model.safetensors", m.config);
  m.weights = std::move(loaded.weights);
  m.warnings.insert(m.warnings.end(), loaded.warnings.begin(), loaded.warnings.end());
  return m;
}

}  // namespace ditto
