#pragma once

#include <filesystem>
#include <string_view>

#include "cascade/model.hpp"

namespace cascade {

inline constexpr std::string_view kCheckpointFormat = "cascade-checkpoint-v1";

/// safetensors container: every parameter as F64 plus metadata entries
/// `format`, `config`, `schema`, `vocab`, `tokenizer` and `encoder`.
/// Saving the same model twice yields identical bytes.
void save_checkpoint(const CascadeModel& model, const std::filesystem::path& path);
CascadeModel load_checkpoint(const std::filesystem::path& path);

}  // namespace cascade
