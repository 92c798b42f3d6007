#pragma once

#include <filesystem>
#include <map>
#include <string>

#include "cascade/autodiff.hpp"

namespace cascade {

/// Contents of a safetensors file: named tensors plus the string-valued
/// `__metadata__` table. One-dimensional tensors load as 1 x n rows.
struct TensorFile {
  std::map<std::string, std::string> metadata;
  std::map<std::string, ad::Matrix> tensors;
};

/// Reads F64, F32, F16 and BF16 tensors of rank 1 or 2.
TensorFile read_safetensors(const std::filesystem::path& path);

/// Writes every tensor as F64 with a 2-D shape, in name order. The output is
/// a pure function of the input.
void write_safetensors(const std::filesystem::path& path, const TensorFile& file);

}  // namespace cascade
