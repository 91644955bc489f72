#pragma once

#include <filesystem>
#include <map>
#include <string>
#include <string_view>

#include "ditto/tensor.hpp"

namespace ditto {

/// Named F32 tensors in the safetensors layout:
///   u64 little-endian header length | JSON header | raw little-endian payload.
/// The header maps each name to {"dtype": "F32", "shape": [...], "data_offsets": [begin, end)}
/// relative to the start of the payload. A "__metadata__" entry is allowed and ignored.
using TensorMap = std::map<std::string, Tensor>;

TensorMap read_tensor_file(const std::filesystem::path& path);
TensorMap parse_tensor_file(std::string_view bytes);

/// Tensors are laid out in name order, so output is byte-identical for equal input.
void write_tensor_file(const std::filesystem::path& path, const TensorMap& tensors,
                       const std::map<std::string, std::string>& metadata = {});
std::string serialize_tensor_file(const TensorMap& tensors, const std::map<std::string, std::string>& metadata = {});

}  // namespace ditto
