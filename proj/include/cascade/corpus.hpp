#pragma once

#include <filesystem>
#include <iosfwd>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "cascade/schema.hpp"

namespace cascade {

/// Inclusive range of word indices.
struct WordSpan {
  int start = 0;
  int end = 0;
  bool operator==(const WordSpan&) const = default;
  auto operator<=>(const WordSpan&) const = default;
};

struct Entity {
  std::string text;
  std::optional<WordSpan> span;
  bool operator==(const Entity&) const = default;
};

struct Triple {
  Entity head;
  std::string relation;
  Entity tail;
  /// Present on extracted triples only.
  std::optional<double> score;
  bool operator==(const Triple&) const = default;
};

struct Sentence {
  std::string text;
  std::vector<std::string> words;
  std::vector<Triple> triples;
  bool operator==(const Sentence&) const = default;
};

/// The word-splitting rule for every corpus: runs of ASCII whitespace.
std::vector<std::string> split_words(std::string_view text);

/// Builds a sentence whose word list follows `split_words(text)`.
Sentence make_sentence(std::string text, std::vector<Triple> triples = {});

enum class CorpusFormat {
  canonical,    ///< {"text", "triples": [{"head", "relation", "tail"}, ...]}
  legacy_list,  ///< {"text", "triple_list": [[h, r, t], ...]}
  automatic,    ///< per record, by whichever key is present
};

struct ParseOptions {
  CorpusFormat format = CorpusFormat::automatic;
  /// Unknown relation labels raise SchemaError instead of being registered.
  bool strict = false;
};

/// Reads one record per line. A file whose first non-blank character is '['
/// is read as a single JSON array of records (the layout of the public
/// releases). Relation labels are registered into `schema`.
std::vector<Sentence> parse_corpus(const std::filesystem::path& path, RelationSchema& schema,
                                   const ParseOptions& options = {});
std::vector<Sentence> parse_corpus(std::istream& in, RelationSchema& schema,
                                   const ParseOptions& options = {},
                                   const std::string& source_name = "<stream>");

/// Canonical single-line JSON record.
std::string serialize_sentence(const Sentence& sentence);
void write_corpus(std::ostream& out, const std::vector<Sentence>& corpus);
void write_corpus(const std::filesystem::path& path, const std::vector<Sentence>& corpus);

}  // namespace cascade
