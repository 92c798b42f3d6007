#include <cmath>
#include <fstream>

#include "cascade/encoder.hpp"
#include "cascade/errors.hpp"
#include "cascade/tensor_file.hpp"
#include "json.hpp"

namespace cascade {

namespace {

nlohmann::json read_json(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open " + path.string());
  try {
    return nlohmann::json::parse(in);
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError(path.string() + ": " + e.what());
  }
}

std::vector<std::pair<std::string, std::pair<int, int>>> bert_shapes(const BertEncoder::Config& c) {
  const int d = c.hidden_size;
  std::vector<std::pair<std::string, std::pair<int, int>>> s = {
      {"embeddings.word_embeddings.weight", {c.vocab_size, d}},
      {"embeddings.position_embeddings.weight", {c.max_position, d}},
      {"embeddings.token_type_embeddings.weight", {c.type_vocab_size, d}},
      {"embeddings.LayerNorm.weight", {1, d}},
      {"embeddings.LayerNorm.bias", {1, d}},
  };
  for (int l = 0; l < c.num_layers; ++l) {
    const std::string p = "encoder.layer." + std::to_string(l) + ".";
    for (const char* qkv : {"query", "key", "value"}) {
      s.push_back({p + "attention.self." + qkv + ".weight", {d, d}});
      s.push_back({p + "attention.self." + qkv + ".bias", {1, d}});
    }
    s.push_back({p + "attention.output.dense.weight", {d, d}});
    s.push_back({p + "attention.output.dense.bias", {1, d}});
    s.push_back({p + "attention.output.LayerNorm.weight", {1, d}});
    s.push_back({p + "attention.output.LayerNorm.bias", {1, d}});
    s.push_back({p + "intermediate.dense.weight", {c.intermediate_size, d}});
    s.push_back({p + "intermediate.dense.bias", {1, c.intermediate_size}});
    s.push_back({p + "output.dense.weight", {d, c.intermediate_size}});
    s.push_back({p + "output.dense.bias", {1, d}});
    s.push_back({p + "output.LayerNorm.weight", {1, d}});
    s.push_back({p + "output.LayerNorm.bias", {1, d}});
  }
  return s;
}

}  // namespace

BertEncoder::BertEncoder(ad::ParameterStore& store, const Config& config)
    : Encoder(store, config.hidden_size), config_(config) {
  if (config.num_heads <= 0 || config.hidden_size % config.num_heads != 0)
    throw ConfigError("hidden_size must be divisible by num_attention_heads");
  if (config.vocab_size <= 0 || config.num_layers < 0) throw ConfigError("invalid BERT configuration");
  for (const auto& [name, shape] : bert_shapes(config))
    store.create("encoder.bert." + name, shape.first, shape.second);
}

BertEncoder::Config BertEncoder::read_config(const std::filesystem::path& dir) {
  const auto j = read_json(dir / "config.json");
  Config c;
  try {
    c.vocab_size = j.at("vocab_size").get<int>();
    c.hidden_size = j.at("hidden_size").get<int>();
    c.num_layers = j.at("num_hidden_layers").get<int>();
    c.num_heads = j.at("num_attention_heads").get<int>();
    c.intermediate_size = j.at("intermediate_size").get<int>();
    c.max_position = j.value("max_position_embeddings", 512);
    c.type_vocab_size = j.value("type_vocab_size", 2);
  c.layer_norm_eps = j.value("layer_norm_eps", 1e-12);
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError((dir / "config.json").string() + ": " + e.what());
  }
  if (j.contains("hidden_act") && j["hidden_act"] != "gelu")
    throw ConfigError("only the exact gelu activation is supported, got " + j["hidden_act"].dump());
  if (std::filesystem::exists(dir / "tokenizer_config.json")) {
    c.lowercase = read_json(dir / "tokenizer_config.json").value("do_lower_case", false);
  }
  return c;
}

void BertEncoder::load_weights(const std::filesystem::path& dir) {
  const auto file = read_safetensors(dir / "model.safetensors");
  auto fetch = [&](const std::string& name) -> const ad::Matrix& {
    for (const auto& candidate : {name, "bert." + name}) {
      if (auto it = file.tensors.find(candidate); it != file.tensors.end()) return it->second;
    }
    throw CheckpointError((dir / "model.safetensors").string() + ": missing tensor '" + name + "'");
  };
  auto assign = [&](ad::Parameter& param, const std::string& name) {
    const ad::Matrix& src = fetch(name);
    if (src.rows() != param.value.rows() || src.cols() != param.value.cols())
      throw CheckpointError("shape mismatch for '" + name + "'");
    param.value = src;
  };
  for (const auto& [name, shape] : bert_shapes(config_)) assign(p(name), name);
  assign(pool_w_, "pooler.dense.weight");
  assign(pool_b_, "pooler.dense.bias");
}

ad::Var BertEncoder::encode(ad::Graph& g, const TokenizedText& tok) const {
  const int T = tok.length();
  if (T > config_.max_position) throw TokenizationError("sequence longer than the encoder's position table");
  for (int id : tok.ids)
    if (id < 0 || id >= config_.vocab_size) throw ConfigError("subtoken id outside the encoder vocabulary");

  auto linear = [&](ad::Var x, const std::string& prefix) {
    return g.add_row(g.matmul_nt(x, g.param(p(prefix + ".weight"))), g.param(p(prefix + ".bias")));
  };
  auto norm = [&](ad::Var x, const std::string& prefix) {
    return g.layer_norm_rows(x, g.param(p(prefix + ".weight")), g.param(p(prefix + ".bias")),
                             config_.layer_norm_eps);
  };

  std::vector<int> positions(static_cast<std::size_t>(T));
  for (int i = 0; i < T; ++i) positions[static_cast<std::size_t>(i)] = i;
  const std::vector<int> types(static_cast<std::size_t>(T), 0);
  ad::Var x = g.add(g.add(g.lookup(p("embeddings.word_embeddings.weight"), tok.ids),
                          g.lookup(p("embeddings.position_embeddings.weight"), positions)),
                    g.lookup(p("embeddings.token_type_embeddings.weight"), types));
  x = norm(x, "embeddings.LayerNorm");

  const int heads = config_.num_heads;
  const int dh = config_.hidden_size / heads;
  const double scale = 1.0 / std::sqrt(static_cast<double>(dh));
  for (int l = 0; l < config_.num_layers; ++l) {
    const std::string pre = "encoder.layer." + std::to_string(l) + ".";
    const ad::Var q = linear(x, pre + "attention.self.query");
    const ad::Var k = linear(x, pre + "attention.self.key");
    const ad::Var v = linear(x, pre + "attention.self.value");
    std::vector<ad::Var> ctx;
    for (int h = 0; h < heads; ++h) {
      const ad::Var qh = g.slice_cols(q, h * dh, dh);
      const ad::Var kh = g.slice_cols(k, h * dh, dh);
      const ad::Var vh = g.slice_cols(v, h * dh, dh);
      const ad::Var attn = g.softmax_rows(g.scale(g.matmul_nt(qh, kh), scale));
      ctx.push_back(g.matmul(attn, vh));
    }
    const ad::Var attended = linear(g.concat_cols(ctx), pre + "attention.output.dense");
    x = norm(g.add(attended, x), pre + "attention.output.LayerNorm");
    const ad::Var inner = g.gelu(linear(x, pre + "intermediate.dense"));
    x = norm(g.add(linear(inner, pre + "output.dense"), x), pre + "output.LayerNorm");
  }
  return x;
}

std::string BertEncoder::describe() const {
  return nlohmann::json{{"kind", "pretrained"},
                        {"vocab_size", config_.vocab_size},
                        {"hidden_size", config_.hidden_size},
                        {"num_layers", config_.num_layers},
                        {"num_heads", config_.num_heads},
                        {"intermediate_size", config_.intermediate_size},
                        {"max_position", config_.max_position},
                        {"type_vocab_size", config_.type_vocab_size},
                        {"layer_norm_eps", config_.layer_norm_eps},
                        {"lowercase", config_.lowercase}}
      .dump();
}

BertEncoder::Config BertEncoder::parse_description(const std::string& text) {
  const auto j = nlohmann::json::parse(text);
  Config c;
  c.vocab_size = j.at("vocab_size").get<int>();
  c.hidden_size = j.at("hidden_size").get<int>();
  c.num_layers = j.at("num_layers").get<int>();
  c.num_heads = j.at("num_heads").get<int>();
  c.intermediate_size = j.at("intermediate_size").get<int>();
  c.max_position = j.at("max_position").get<int>();
  c.type_vocab_size = j.at("type_vocab_size").get<int>();
  c.layer_norm_eps = j.at("layer_norm_eps").get<double>();
  c.lowercase = j.at("lowercase").get<bool>();
  return c;
}

}  // namespace cascade
