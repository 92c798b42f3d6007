#include "cascade/evaluation.hpp"

#include <algorithm>
#include <cstdint>
#include <cstdio>
#include <fstream>
#include <ostream>
#include <sstream>

#include "cascade/errors.hpp"
#include "cascade/overlap.hpp"

namespace cascade {

std::string to_string(MatchMode mode) { return mode == MatchMode::partial ? "partial" : "exact"; }

MatchMode match_mode_from_string(const std::string& s) {
  if (s == "partial") return MatchMode::partial;
  if (s == "exact") return MatchMode::exact;
  throw ConfigError("unknown match mode '" + s + "' (expected partial or exact)");
}

std::string normalize_entity(std::string_view entity, MatchMode mode) {
  const auto words = split_words(entity);
  if (words.empty()) return {};
  if (mode == MatchMode::partial) return words.back();
  std::string out = words.front();
  for (std::size_t i = 1; i < words.size(); ++i) out += " " + words[i];
  return out;
}

EvalResult EvalResult::from_counts(long tp, long fp, long fn) {
  EvalResult r;
  r.tp = tp;
  r.fp = fp;
  r.fn = fn;
  r.precision = tp + fp > 0 ? static_cast<double>(tp) / static_cast<double>(tp + fp) : 0.0;
  r.recall = tp + fn > 0 ? static_cast<double>(tp) / static_cast<double>(tp + fn) : 0.0;
  r.f1 = r.precision + r.recall > 0 ? 2.0 * r.precision * r.recall / (r.precision + r.recall) : 0.0;
  return r;
}

EvalResult& EvalResult::operator+=(const EvalResult& other) {
  *this = from_counts(tp + other.tp, fp + other.fp, fn + other.fn);
  return *this;
}

std::set<TripleKey> normalized_triples(const std::vector<Triple>& triples, MatchMode mode) {
  std::set<TripleKey> out;
  for (const auto& t : triples)
    out.emplace(normalize_entity(t.head.text, mode), t.relation, normalize_entity(t.tail.text, mode));
  return out;
}

namespace {

template <class T>
EvalResult match_sets(const std::set<T>& pred, const std::set<T>& gold) {
  long tp = 0;
  for (const auto& p : pred) tp += static_cast<long>(gold.count(p));
  return EvalResult::from_counts(tp, static_cast<long>(pred.size()) - tp, static_cast<long>(gold.size()) - tp);
}

void check_aligned(std::size_t a, std::size_t b) {
  if (a != b)
    throw AlignmentError("prediction and gold corpora differ in length (" + std::to_string(a) + " vs " +
                         std::to_string(b) + ")");
}

}  // namespace

EvalResult score(const std::vector<Triple>& pred, const std::vector<Triple>& gold, MatchMode mode) {
  return match_sets(normalized_triples(pred, mode), normalized_triples(gold, mode));
}

EvalResult score(const std::vector<std::vector<Triple>>& pred, const std::vector<std::vector<Triple>>& gold,
                 MatchMode mode) {
  check_aligned(pred.size(), gold.size());
  EvalResult total;
  for (std::size_t i = 0; i < pred.size(); ++i) total += score(pred[i], gold[i], mode);
  return total;
}

std::string to_string(Element e) {
  switch (e) {
    case Element::entity_pair: return "(h,t)";
    case Element::relation: return "r";
    default: return "(h,r,t)";
  }
}

std::map<Element, EvalResult> element_scores(const std::vector<std::vector<Triple>>& pred,
                                             const std::vector<std::vector<Triple>>& gold, MatchMode mode) {
  check_aligned(pred.size(), gold.size());
  std::map<Element, EvalResult> out{{Element::entity_pair, {}}, {Element::relation, {}}, {Element::triple, {}}};
  using Pair = std::pair<std::string, std::string>;
  for (std::size_t i = 0; i < pred.size(); ++i) {
    const auto p = normalized_triples(pred[i], mode);
    const auto g = normalized_triples(gold[i], mode);
    std::set<Pair> pp, gp;
    std::set<std::string> pr, gr;
    for (const auto& [h, r, t] : p) {
      pp.emplace(h, t);
      pr.insert(r);
    }
    for (const auto& [h, r, t] : g) {
      gp.emplace(h, t);
      gr.insert(r);
    }
    out[Element::entity_pair] += match_sets(pp, gp);
    out[Element::relation] += match_sets(pr, gr);
    out[Element::triple] += match_sets(p, g);
  }
  return out;
}

BreakdownAxis breakdown_axis_from_string(const std::string& s) {
  if (s == "overlap") return BreakdownAxis::overlap;
  if (s == "count" || s == "triple_count") return BreakdownAxis::triple_count;
  throw ConfigError("unknown breakdown axis '" + s + "' (expected overlap or count)");
}

std::vector<std::vector<Triple>> triples_of(const std::vector<Sentence>& corpus) {
  std::vector<std::vector<Triple>> out;
  out.reserve(corpus.size());
  for (const auto& s : corpus) out.push_back(s.triples);
  return out;
}

BreakdownTable breakdown_scores(const std::vector<Sentence>& pred, const std::vector<Sentence>& gold,
                                MatchMode mode, BreakdownAxis axis) {
  check_aligned(pred.size(), gold.size());
  BreakdownTable table;
  table.axis = axis;
  if (axis == BreakdownAxis::overlap) {
    table.rows = {{"Normal", {}}, {"EPO", {}}, {"SEO", {}}};
  } else {
    table.rows = {{"1", {}}, {"2", {}}, {"3", {}}, {"4", {}}, {">=5", {}}};
  }
  for (std::size_t i = 0; i < pred.size(); ++i) {
    if (split_words(pred[i].text) != gold[i].words)
      throw AlignmentError("sentence " + std::to_string(i) + " differs between prediction and gold");
    const EvalResult r = score(pred[i].triples, gold[i].triples, mode);
    if (axis == BreakdownAxis::overlap) {
      const auto f = classify_overlap(gold[i].triples);
      if (f.normal) table.rows[0].second += r;
      if (f.epo) table.rows[1].second += r;
      if (f.seo) table.rows[2].second += r;
    } else {
      const auto n = normalized_triples(gold[i].triples, MatchMode::exact).size();
      if (n == 0) continue;
      table.rows[std::min<std::size_t>(n, 5) - 1].second += r;
    }
  }
  return table;
}

ReportFormat report_format_from_string(const std::string& s) {
  if (s == "table") return ReportFormat::table;
  if (s == "delimited") return ReportFormat::delimited;
  throw ConfigError("unknown report format '" + s + "' (expected table or delimited)");
}

std::string fnv1a_hex(std::string_view data) {
  std::uint64_t h = 14695981039346656037ULL;
  for (unsigned char c : data) {
    h ^= c;
    h *= 1099511628211ULL;
  }
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
  return buf;
}

namespace {

std::string fixed4(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.4f", v);
  return buf;
}

}  // namespace

void emit_report(const Report& report, std::ostream& out, ReportFormat format) {
  const char* headers[] = {"section", "category", "tp", "fp", "fn", "precision", "recall", "f1"};
  std::vector<std::vector<std::string>> cells;
  for (const auto& row : report.rows) {
    const auto& r = row.result;
    cells.push_back({row.section, row.category, std::to_string(r.tp), std::to_string(r.fp), std::to_string(r.fn),
                     fixed4(r.precision), fixed4(r.recall), fixed4(r.f1)});
  }
  if (format == ReportFormat::delimited) {
    out << "# mode\t" << to_string(report.mode) << "\n# config_hash\t" << report.config_hash << '\n';
    for (std::size_t c = 0; c < 8; ++c) out << (c ? "\t" : "") << headers[c];
    out << '\n';
    for (const auto& row : cells) {
      for (std::size_t c = 0; c < row.size(); ++c) out << (c ? "\t" : "") << row[c];
      out << '\n';
    }
    return;
  }
  std::size_t width[8];
  for (std::size_t c = 0; c < 8; ++c) {
    width[c] = std::string_view(headers[c]).size();
    for (const auto& row : cells) width[c] = std::max(width[c], row[c].size());
  }
  auto line = [&](auto get) {
    for (std::size_t c = 0; c < 8; ++c) {
      const std::string v = get(c);
      const std::string pad(width[c] - v.size(), ' ');
      if (c > 0) out << "  ";
      out << (c < 2 ? v + pad : pad + v);
    }
    out << '\n';
  };
  out << "mode: " << to_string(report.mode) << "\nconfig_hash: " << report.config_hash << '\n';
  line([&](std::size_t c) { return std::string(headers[c]); });
  for (const auto& row : cells) line([&](std::size_t c) { return row[c]; });
}

void emit_report(const Report& report, const std::filesystem::path& path, ReportFormat format) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot write report " + path.string());
  emit_report(report, out, format);
  if (!out) throw IoError("write failed for " + path.string());
}

}  // namespace cascade
