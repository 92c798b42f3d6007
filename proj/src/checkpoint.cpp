#include "cascade/checkpoint.hpp"

#include "cascade/errors.hpp"
#include "cascade/tensor_file.hpp"
#include "json.hpp"

namespace cascade {

void save_checkpoint(const CascadeModel& model, const std::filesystem::path& path) {
  TensorFile file;
  file.metadata["format"] = std::string(kCheckpointFormat);
  file.metadata["config"] = model.config().to_text();
  file.metadata["schema"] = nlohmann::json(model.schema().names()).dump();
  file.metadata["vocab"] = nlohmann::json(model.vocab().tokens()).dump();
  const auto& t = model.tokenizer_options();
  file.metadata["tokenizer"] = nlohmann::json{{"split_punctuation", t.split_punctuation},
                                              {"lowercase", t.lowercase},
                                              {"max_chars_per_word", t.max_chars_per_word},
                                              {"max_length", t.max_length}}
                                   .dump();
  file.metadata["encoder"] = model.encoder().describe();
  for (const auto& [name, p] : model.params()) file.tensors.emplace(name, p.value);
  write_safetensors(path, file);
}

CascadeModel load_checkpoint(const std::filesystem::path& path) {
  if (!std::filesystem::exists(path)) throw IoError("checkpoint not found: " + path.string());
  const TensorFile file = read_safetensors(path);
  auto meta = [&](const std::string& key) -> const std::string& {
    auto it = file.metadata.find(key);
    if (it == file.metadata.end()) throw CheckpointError(path.string() + ": missing metadata '" + key + "'");
    return it->second;
  };
  if (meta("format") != kCheckpointFormat)
    throw CheckpointError(path.string() + ": unsupported checkpoint format '" + meta("format") + "'");
  try {
    ModelConfig config;
    config.apply_text(meta("config"), path.string() + "[config]");
    RelationSchema schema(nlohmann::json::parse(meta("schema")).get<std::vector<std::string>>());
    Vocabulary vocab(nlohmann::json::parse(meta("vocab")).get<std::vector<std::string>>());
    const auto tj = nlohmann::json::parse(meta("tokenizer"));
    TokenizerOptions tok;
    tok.split_punctuation = tj.at("split_punctuation").get<bool>();
    tok.lowercase = tj.at("lowercase").get<bool>();
    tok.max_chars_per_word = tj.at("max_chars_per_word").get<int>();
    tok.max_length = tj.at("max_length").get<int>();
    CascadeModel model = CascadeModel::create_empty(config, std::move(schema), std::move(vocab), tok, meta("encoder"));
    std::size_t seen = 0;
    for (auto& [name, p] : model.params()) {
      auto it = file.tensors.find(name);
      if (it == file.tensors.end()) throw CheckpointError(path.string() + ": missing tensor '" + name + "'");
      if (it->second.rows() != p.value.rows() || it->second.cols() != p.value.cols())
        throw CheckpointError(path.string() + ": shape mismatch for '" + name + "'");
      p.value = it->second;
      ++seen;
    }
    if (seen != file.tensors.size()) throw CheckpointError(path.string() + ": unexpected extra tensors");
    return model;
  } catch (const nlohmann::json::exception& e) {
    throw CheckpointError(path.string() + ": malformed metadata: " + e.what());
  }
}

}  // namespace cascade
