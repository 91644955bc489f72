#include "ditto/tensor_file.hpp"

#include <bit>
#include <cstring>
#include <fstream>
#include <iterator>

#include "ditto/errors.hpp"
#include "json.hpp"

namespace ditto {

static_assert(std::endian::native == std::endian::little, "tensor files assume a little-endian host");

namespace {

constexpr std::size_t kPrefixBytes = 8;

std::string read_all(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open tensor file " + path.string());
  return std::string(std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>());
}

}  // namespace

TensorMap parse_tensor_file(std::string_view bytes) {
  if (bytes.size() < kPrefixBytes) throw FormatError("file shorter than the 8-byte header length", 0);
  std::uint64_t header_len = 0;
  std::memcpy(&header_len, bytes.data(), kPrefixBytes);
  if (header_len > bytes.size() - kPrefixBytes) {
    throw FormatError("header length " + std::to_string(header_len) + " exceeds file size " +
                          std::to_string(bytes.size()),
                      0);
  }
  const std::string_view header_text = bytes.substr(kPrefixBytes, header_len);
  const std::string_view payload = bytes.substr(kPrefixBytes + header_len);
  const std::size_t payload_start = kPrefixBytes + header_len;

  nlohmann::json header;
  try {
    header = nlohmann::json::parse(header_text);
  } catch (const nlohmann::json::parse_error& e) {
    throw FormatError(std::string("malformed JSON header: ") + e.what(), kPrefixBytes + e.byte);
  }
  if (!header.is_object()) throw FormatError("header is not a JSON object", kPrefixBytes);

  TensorMap out;
  for (const auto& [name, info] : header.items()) {
    if (name == "__metadata__") continue;
    try {
      const auto dtype = info.at("dtype").get<std::string>();
      if (dtype != "F32") {
        throw FormatError("tensor '" + name + "' has unsupported dtype " + dtype, kPrefixBytes);
      }
      const auto shape = info.at("shape").get<Shape>();
      const auto offsets = info.at("data_offsets").get<std::vector<std::uint64_t>>();
      if (offsets.size() != 2 || offsets[0] > offsets[1] || offsets[1] > payload.size()) {
        throw FormatError("tensor '" + name + "' has data_offsets outside the payload", payload_start);
      }
      std::size_t count = 1;
      for (auto d : shape) count *= d;
      if (offsets[1] - offsets[0] != count * sizeof(float)) {
        throw FormatError("tensor '" + name + "' byte range does not match shape " + shape_string(shape),
                          payload_start + offsets[0]);
      }
      std::vector<float> data(count);
      if (count) std::memcpy(data.data(), payload.data() + offsets[0], count * sizeof(float));
      out.emplace(name, Tensor(shape, std::move(data)));
    } catch (const nlohmann::json::exception& e) {
      throw FormatError("bad header entry for '" + name + "': " + e.what(), kPrefixBytes);
    }
  }
  return out;
}

TensorMap read_tensor_file(const std::filesystem::path& path) {
  const std::string bytes = read_all(path);
  try {
    return parse_tensor_file(bytes);
  } catch (const FormatError& e) {
    throw FormatError(path.string() + ": " + e.what(), e.offset());
  }
}

std::string serialize_tensor_file(const TensorMap& tensors, const std::map<std::string, std::string>& metadata) {
  nlohmann::ordered_json header = nlohmann::ordered_json::object();
  if (!metadata.empty()) header["__metadata__"] = metadata;
  std::uint64_t offset = 0;
  for (const auto& [name, t] : tensors) {
    const std::uint64_t bytes = t.size() * sizeof(float);
    header[name] = {{"dtype", "F32"}, {"shape", t.shape()}, {"data_offsets", {offset, offset + bytes}}};
    offset += bytes;
  }
  std::string header_text = header.dump();
  // Pad so the payload starts 8-byte aligned.
  while ((kPrefixBytes + header_text.size()) % 8 != 0) header_text.push_back(' ');

  std::string out;
  out.reserve(kPrefixBytes + header_text.size() + offset);
  const std::uint64_t header_len = header_text.size();
  out.append(reinterpret_cast<const char*>(&header_len), kPrefixBytes);
  out += header_text;
  for (const auto& [name, t] : tensors) {
    out.append(reinterpret_cast<const char*>(t.data().data()), t.size() * sizeof(float));
  }
  return out;
}

void write_tensor_file(const std::filesystem::path& path, const TensorMap& tensors,
                       const std::map<std::string, std::string>& metadata) {
  const std::string bytes = serialize_tensor_file(tensors, metadata);
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw IoError("cannot write tensor file " + path.string());
  out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
  if (!out) throw IoError("short write to " + path.string());
}

}  // namespace ditto
