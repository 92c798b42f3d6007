#pragma once

#include <filesystem>
#include <iosfwd>
#include <map>
#include <set>
#include <string>
#include <string_view>
#include <tuple>
#include <vector>

#include "cascade/corpus.hpp"

namespace cascade {

enum class MatchMode { partial, exact };
std::string to_string(MatchMode mode);
MatchMode match_mode_from_string(const std::string& s);

/// exact: whitespace-normalized full string; partial: its last word.
/// Matching is case-sensitive.
std::string normalize_entity(std::string_view entity, MatchMode mode);

struct EvalResult {
  long tp = 0;
  long fp = 0;
  long fn = 0;
  double precision = 0.0;
  double recall = 0.0;
  double f1 = 0.0;

  static EvalResult from_counts(long tp, long fp, long fn);
  EvalResult& operator+=(const EvalResult& other);
  bool operator==(const EvalResult&) const = default;
};

using TripleKey = std::tuple<std::string, std::string, std::string>;

/// Normalized (head, relation, tail) set of one sentence.
std::set<TripleKey> normalized_triples(const std::vector<Triple>& triples, MatchMode mode);

/// One sentence.
EvalResult score(const std::vector<Triple>& pred, const std::vector<Triple>& gold, MatchMode mode);
/// Micro-average over aligned per-sentence triple lists.
EvalResult score(const std::vector<std::vector<Triple>>& pred, const std::vector<std::vector<Triple>>& gold,
                 MatchMode mode);

enum class Element { entity_pair, relation, triple };
std::string to_string(Element e);

/// Projects every triple to (h, t), r and (h, r, t); each projection is
/// deduplicated per sentence before matching.
std::map<Element, EvalResult> element_scores(const std::vector<std::vector<Triple>>& pred,
                                             const std::vector<std::vector<Triple>>& gold, MatchMode mode);

enum class BreakdownAxis { overlap, triple_count };
BreakdownAxis breakdown_axis_from_string(const std::string& s);

struct BreakdownTable {
  BreakdownAxis axis = BreakdownAxis::overlap;
  /// Normal, EPO, SEO (non-exclusive) or 1, 2, 3, 4, >=5 gold triples.
  std::vector<std::pair<std::string, EvalResult>> rows;
};

/// `gold` supplies the category of each sentence. Throws AlignmentError when
/// the two corpora differ in length or text.
BreakdownTable breakdown_scores(const std::vector<Sentence>& pred, const std::vector<Sentence>& gold,
                                MatchMode mode, BreakdownAxis axis);

std::vector<std::vector<Triple>> triples_of(const std::vector<Sentence>& corpus);

struct ReportRow {
  std::string section;
  std::string category;
  EvalResult result;
};

struct Report {
  MatchMode mode = MatchMode::exact;
  std::string config_hash;
  std::vector<ReportRow> rows;
};

enum class ReportFormat { table, delimited };
ReportFormat report_format_from_string(const std::string& s);

/// 64-bit FNV-1a, rendered as 16 hex digits.
std::string fnv1a_hex(std::string_view data);

/// Header lines, then one line per row; rates printed with 4 decimals.
void emit_report(const Report& report, std::ostream& out, ReportFormat format);
void emit_report(const Report& report, const std::filesystem::path& path, ReportFormat format);

}  // namespace cascade
