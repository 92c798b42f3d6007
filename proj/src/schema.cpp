#include "cascade/schema.hpp"

#include <fstream>
#include <map>

#include "cascade/errors.hpp"
#include "json.hpp"

namespace cascade {

RelationSchema::RelationSchema(std::vector<std::string> names) {
  for (const auto& n : names) {
    if (n.empty()) throw SchemaError("relation label must be non-empty");
    if (find(n)) throw SchemaError("duplicate relation label '" + n + "'");
    add(n);
  }
}

std::optional<int> RelationSchema::find(std::string_view name) const {
  auto it = index_.find(std::string(name));
  if (it == index_.end()) return std::nullopt;
  return it->second;
}

int RelationSchema::id(std::string_view name) const {
  if (auto id = find(name)) return *id;
  throw SchemaError("unknown relation label '" + std::string(name) + "'");
}

int RelationSchema::add(std::string_view name) {
  if (auto id = find(name)) return *id;
  if (name.empty()) throw SchemaError("relation label must be non-empty");
  const int id = size();
  names_.emplace_back(name);
  index_.emplace(names_.back(), id);
  return id;
}

namespace {

std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r\n");
  if (b == std::string::npos) return {};
  const auto e = s.find_last_not_of(" \t\r\n");
  return s.substr(b, e - b + 1);
}

RelationSchema from_json(const nlohmann::json& j, const std::filesystem::path& path) {
  // [id2rel, rel2id] with string ids, or a bare id2rel object / label array.
  const nlohmann::json* id2rel = &j;
  if (j.is_array() && j.size() == 2 && j[0].is_object()) id2rel = &j[0];
  std::vector<std::string> names;
  if (id2rel->is_array()) {
    for (const auto& v : *id2rel) names.push_back(v.get<std::string>());
  } else if (id2rel->is_object()) {
    std::map<int, std::string> ordered;
    for (const auto& [k, v] : id2rel->items()) {
      try {
        ordered[std::stoi(k)] = v.get<std::string>();
      } catch (const std::exception&) {
        throw SchemaError(path.string() + ": schema object keys must be integer ids");
      }
    }
    int expected = 0;
    for (const auto& [k, v] : ordered) {
      if (k != expected++) throw SchemaError(path.string() + ": relation ids are not contiguous");
      names.push_back(v);
    }
  } else {
    throw SchemaError(path.string() + ": unsupported JSON schema layout");
  }
  return RelationSchema(std::move(names));
}

}  // namespace

RelationSchema RelationSchema::load(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open schema file " + path.string());
  std::string content((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  const std::string head = trim(content.substr(0, 64));
  if (!head.empty() && (head.front() == '[' || head.front() == '{')) {
    try {
      return from_json(nlohmann::json::parse(content), path);
    } catch (const nlohmann::json::exception& e) {
      throw SchemaError(path.string() + ": " + e.what());
    }
  }
  std::vector<std::string> names;
  std::size_t pos = 0;
  while (pos <= content.size()) {
    auto nl = content.find('\n', pos);
    if (nl == std::string::npos) nl = content.size();
    auto label = trim(content.substr(pos, nl - pos));
    if (!label.empty()) names.push_back(std::move(label));
    pos = nl + 1;
  }
  RelationSchema schema(std::move(names));
  if (schema.empty()) throw SchemaError(path.string() + ": schema has no relations");
  return schema;
}

void RelationSchema::save(const std::filesystem::path& path) const {
  std::ofstream out(path);
  if (!out) throw IoError("cannot write schema file " + path.string());
  for (const auto& n : names_) out << n << '\n';
}

}  // namespace cascade
