#pragma once

#include <iosfwd>
#include <string>
#include <vector>

#include "cascade/corpus.hpp"
#include "cascade/schema.hpp"

namespace cascade {

/// Overlap pattern of a sentence's gold triples. EPO and SEO are not
/// exclusive; `normal` is set only when neither is.
struct OverlapFlags {
  bool normal = true;
  bool epo = false;
  bool seo = false;
  bool operator==(const OverlapFlags&) const = default;
};

/// Entities are compared by their whitespace-normalized strings; identical
/// triples are counted once.
OverlapFlags classify_overlap(const std::vector<Triple>& triples);

struct CorpusStats {
  std::string split;
  long normal = 0;
  long epo = 0;
  long seo = 0;
  long all = 0;
  long relations = 0;
  bool operator==(const CorpusStats&) const = default;
};

CorpusStats corpus_stats(const std::vector<Sentence>& corpus, const RelationSchema& schema,
                         std::string split = {});

/// Aligned text table, one row per split.
void write_stats_table(std::ostream& out, const std::vector<CorpusStats>& rows);

}  // namespace cascade
