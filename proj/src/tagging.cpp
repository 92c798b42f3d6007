#include "cascade/tagging.hpp"

#include "cascade/errors.hpp"

namespace cascade {

WordSpan locate_entity(const Entity& entity, const std::vector<std::string>& words) {
  if (entity.span) return *entity.span;
  const auto needle = split_words(entity.text);
  if (needle.empty()) throw AnnotationError("empty entity string");
  if (needle.size() <= words.size()) {
    for (std::size_t i = 0; i + needle.size() <= words.size(); ++i) {
      bool hit = true;
      for (std::size_t k = 0; k < needle.size() && hit; ++k) hit = words[i + k] == needle[k];
      if (hit) return {static_cast<int>(i), static_cast<int>(i + needle.size() - 1)};
    }
  }
  throw AnnotationError("entity '" + entity.text + "' not found in sentence words");
}

TokenSpan to_token_span(const WordSpan& words, const TokenizedText& tok) {
  const int n = static_cast<int>(tok.word_ranges.size());
  if (words.start < 0 || words.end < words.start || words.end >= n)
    throw AnnotationError("word span out of range");
  return {tok.word_ranges[static_cast<std::size_t>(words.start)].first - 1,
          tok.word_ranges[static_cast<std::size_t>(words.end)].last - 1};
}

WordSpan to_word_span(const TokenSpan& span, const TokenizedText& tok) {
  if (span.start < 0 || span.end < span.start || span.end >= tok.m())
    throw AnnotationError("token span out of range");
  return {tok.interior_word[static_cast<std::size_t>(span.start)],
          tok.interior_word[static_cast<std::size_t>(span.end)]};
}

TaggedExample build_tagged_example(const Sentence& sentence, const TokenizedText& tok,
                                   const RelationSchema& schema) {
  TaggedExample ex;
  ex.m = tok.m();
  ex.relation_labels.assign(static_cast<std::size_t>(schema.size()), 0);
  for (const auto& t : sentence.triples) {
    const int r = schema.id(t.relation);
    const TokenSpan head = to_token_span(locate_entity(t.head, sentence.words), tok);
    const TokenSpan tail = to_token_span(locate_entity(t.tail, sentence.words), tok);
    ex.relation_labels[static_cast<std::size_t>(r)] = 1;
    ex.head_tags.try_emplace(r, ex.m).first->second.mark(head);
    ex.tail_tags.try_emplace(HeadKey{r, head}, ex.m).first->second.mark(tail);
  }
  return ex;
}

}  // namespace cascade
