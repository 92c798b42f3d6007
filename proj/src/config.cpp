#include "cascade/config.hpp"

#include <charconv>
#include <fstream>
#include <sstream>
#include <variant>

#include "cascade/errors.hpp"

namespace cascade {

namespace {

using FieldRef = std::variant<int*, double*, bool*, std::string*, EncoderKind*>;

template <class Config>
std::vector<std::pair<const char*, FieldRef>> fields(Config& c) {
  auto& m = const_cast<ModelConfig&>(c);
  return {
      {"encoder", &m.encoder},
      {"pretrained_path", &m.pretrained_path},
      {"d", &m.d},
      {"embedding_dim", &m.embedding_dim},
      {"relation_emb_dim", &m.relation_emb_dim},
      {"lstm_hidden", &m.lstm_hidden},
      {"pos_emb_dim", &m.pos_emb_dim},
      {"max_rel_distance", &m.max_rel_distance},
      {"delta", &m.delta},
      {"span_threshold", &m.span_threshold},
      {"dropout", &m.dropout},
      {"prob_clamp", &m.prob_clamp},
      {"learning_rate", &m.learning_rate},
      {"batch_size", &m.batch_size},
      {"adam_beta1", &m.adam_beta1},
      {"adam_beta2", &m.adam_beta2},
      {"adam_eps", &m.adam_eps},
      {"max_epochs", &m.max_epochs},
      {"patience", &m.patience},
      {"stop_at_dev_f1", &m.stop_at_dev_f1},
      {"init_std", &m.init_std},
      {"embedding_init_std", &m.embedding_init_std},
      {"relation_vectors_path", &m.relation_vectors_path},
      {"negative_relations", &m.negative_relations},
      {"unmatched_start_fallback", &m.unmatched_start_fallback},
  };
}

std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string::npos) return {};
  return s.substr(b, s.find_last_not_of(" \t\r") - b + 1);
}

std::string format_double(double v) {
  char buf[64];
  auto [ptr, ec] = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, ptr);
}

}  // namespace

void ModelConfig::set(const std::string& key, const std::string& raw) {
  const std::string value = trim(raw);
  for (auto& [name, ref] : fields(*this)) {
    if (key != name) continue;
    const auto fail = [&] { throw ConfigError("invalid value '" + value + "' for config key '" + key + "'"); };
    std::visit(
        [&](auto* field) {
          using T = std::remove_pointer_t<decltype(field)>;
          if constexpr (std::is_same_v<T, int>) {
            int v = 0;
            auto [p, ec] = std::from_chars(value.data(), value.data() + value.size(), v);
            if (ec != std::errc() || p != value.data() + value.size()) fail();
            *field = v;
          } else if constexpr (std::is_same_v<T, double>) {
            double v = 0;
            auto [p, ec] = std::from_chars(value.data(), value.data() + value.size(), v);
            if (ec != std::errc() || p != value.data() + value.size()) fail();
            *field = v;
          } else if constexpr (std::is_same_v<T, bool>) {
            if (value == "true" || value == "1") *field = true;
            else if (value == "false" || value == "0") *field = false;
            else fail();
          } else if constexpr (std::is_same_v<T, std::string>) {
            *field = value;
          } else {
            *field = encoder_kind_from_string(value);
          }
        },
        ref);
    return;
  }
  throw ConfigError("unknown config key '" + key + "'");
}

std::string ModelConfig::get(const std::string& key) const {
  for (const auto& [name, ref] : fields(*this)) {
    if (key != name) continue;
    return std::visit(
        [](auto* field) -> std::string {
          using T = std::remove_pointer_t<decltype(field)>;
          if constexpr (std::is_same_v<T, int>) return std::to_string(*field);
          else if constexpr (std::is_same_v<T, double>) return format_double(*field);
          else if constexpr (std::is_same_v<T, bool>) return *field ? "true" : "false";
          else if constexpr (std::is_same_v<T, std::string>) return *field;
          else return to_string(*field);
        },
        ref);
  }
  throw ConfigError("unknown config key '" + key + "'");
}

std::vector<std::string> ModelConfig::keys() {
  ModelConfig c;
  std::vector<std::string> out;
  for (const auto& [name, ref] : fields(c)) out.emplace_back(name);
  return out;
}

std::string ModelConfig::to_text() const {
  std::ostringstream out;
  for (const auto& key : keys()) out << key << " = " << get(key) << '\n';
  return out.str();
}

void ModelConfig::apply_text(const std::string& text, const std::string& source) {
  std::istringstream in(text);
  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (auto hash = line.find('#'); hash != std::string::npos) line.erase(hash);
    line = trim(line);
    if (line.empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos)
      throw ConfigError(source + ":" + std::to_string(lineno) + ": expected 'key = value'");
    try {
      set(trim(line.substr(0, eq)), line.substr(eq + 1));
    } catch (const ConfigError& e) {
      throw ConfigError(source + ":" + std::to_string(lineno) + ": " + e.what());
    }
  }
}

ModelConfig ModelConfig::load(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open config file " + path.string());
  std::stringstream ss;
  ss << in.rdbuf();
  ModelConfig c;
  c.apply_text(ss.str(), path.string());
  return c;
}

void ModelConfig::validate() const {
  auto need = [](bool ok, const std::string& what) {
    if (!ok) throw ConfigError(what);
  };
  need(d > 0 && d % 2 == 0, "d must be positive and even");
  need(embedding_dim > 0, "embedding_dim must be positive");
  need(relation_emb_dim > 0, "relation_emb_dim must be positive");
  need(lstm_hidden > 0, "lstm_hidden must be positive");
  need(pos_emb_dim > 0, "pos_emb_dim must be positive");
  need(max_rel_distance > 0, "max_rel_distance must be positive");
  need(delta > 0.0 && delta < 1.0, "delta must lie in (0, 1)");
  need(span_threshold > 0.0 && span_threshold < 1.0, "span_threshold must lie in (0, 1)");
  need(dropout >= 0.0 && dropout < 1.0, "dropout must lie in [0, 1)");
  need(prob_clamp > 0.0 && prob_clamp < 0.5, "prob_clamp must lie in (0, 0.5)");
  need(learning_rate > 0.0, "learning_rate must be positive");
  need(batch_size > 0, "batch_size must be positive");
  need(adam_beta1 >= 0.0 && adam_beta1 < 1.0 && adam_beta2 >= 0.0 && adam_beta2 < 1.0, "Adam betas must lie in [0, 1)");
  need(adam_eps > 0.0, "adam_eps must be positive");
  need(max_epochs > 0, "max_epochs must be positive");
  need(patience > 0, "patience must be positive");
  need(init_std >= 0.0 && embedding_init_std >= 0.0, "init std must be non-negative");
  need(negative_relations >= 0, "negative_relations must be non-negative");
  need(encoder != EncoderKind::pretrained || !pretrained_path.empty(),
       "the pretrained encoder needs pretrained_path");
}

}  // namespace cascade
