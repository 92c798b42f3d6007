#pragma once

#include <filesystem>
#include <optional>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

namespace cascade {

/// Ordered set of relation labels; a label's position is its integer id.
class RelationSchema {
 public:
  RelationSchema() = default;
  explicit RelationSchema(std::vector<std::string> names);

  /// Reads one label per line. A JSON file in the `[id2rel, rel2id]` layout
  /// of the public NYT/WebNLG releases is accepted as well.
  static RelationSchema load(const std::filesystem::path& path);
  void save(const std::filesystem::path& path) const;

  std::optional<int> find(std::string_view name) const;
  /// Throws SchemaError for unknown labels.
  int id(std::string_view name) const;
  /// Registers `name` if absent and returns its id.
  int add(std::string_view name);

  const std::string& name(int id) const { return names_.at(static_cast<std::size_t>(id)); }
  const std::vector<std::string>& names() const { return names_; }
  int size() const { return static_cast<int>(names_.size()); }
  bool empty() const { return names_.empty(); }

  bool operator==(const RelationSchema& other) const { return names_ == other.names_; }

 private:
  std::vector<std::string> names_;
  std::unordered_map<std::string, int> index_;
};

}  // namespace cascade
