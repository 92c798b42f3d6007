#pragma once

#include <cstdint>
#include <map>
#include <utility>
#include <vector>

#include "cascade/corpus.hpp"
#include "cascade/schema.hpp"
#include "cascade/tokenizer.hpp"

namespace cascade {

/// Inclusive span over interior subtokens, 0-based: index i is subtoken
/// position i + 1 (row i + 1 of the encoder output).
struct TokenSpan {
  int start = 0;
  int end = 0;
  bool operator==(const TokenSpan&) const = default;
  auto operator<=>(const TokenSpan&) const = default;
};

/// Binary start/end tag vectors of length m.
struct SpanTags {
  std::vector<std::uint8_t> start;
  std::vector<std::uint8_t> end;

  explicit SpanTags(int m = 0) : start(static_cast<std::size_t>(m), 0), end(static_cast<std::size_t>(m), 0) {}
  void mark(const TokenSpan& span) {
    start.at(static_cast<std::size_t>(span.start)) = 1;
    end.at(static_cast<std::size_t>(span.end)) = 1;
  }
  bool operator==(const SpanTags&) const = default;
};

using HeadKey = std::pair<int, TokenSpan>;

struct TaggedExample {
  std::vector<std::uint8_t> relation_labels;   ///< multi-hot, length K
  std::map<int, SpanTags> head_tags;           ///< relation id -> head tags
  std::map<HeadKey, SpanTags> tail_tags;       ///< (relation, head) -> tail tags
  int m = 0;
};

/// Word span of `entity` in `words`: its explicit span when present, else
/// the first whole-word match. Throws AnnotationError when absent.
WordSpan locate_entity(const Entity& entity, const std::vector<std::string>& words);

/// Start at the first subtoken of the first word, end at the last subtoken
/// of the last word.
TokenSpan to_token_span(const WordSpan& words, const TokenizedText& tok);

/// Word span covering an interior subtoken span.
WordSpan to_word_span(const TokenSpan& span, const TokenizedText& tok);

TaggedExample build_tagged_example(const Sentence& sentence, const TokenizedText& tok,
                                   const RelationSchema& schema);

}  // namespace cascade
