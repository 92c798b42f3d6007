#include "cascade/overlap.hpp"

#include <algorithm>
#include <iomanip>
#include <ostream>
#include <set>
#include <tuple>

namespace cascade {

namespace {

std::string normalized(const std::string& s) {
  std::string out;
  for (const auto& w : split_words(s)) {
    if (!out.empty()) out.push_back(' ');
    out += w;
  }
  return out;
}

}  // namespace

OverlapFlags classify_overlap(const std::vector<Triple>& triples) {
  std::set<std::tuple<std::string, std::string, std::string>> unique;
  for (const auto& t : triples) unique.emplace(normalized(t.head.text), t.relation, normalized(t.tail.text));

  std::vector<std::set<std::string>> pairs;
  for (const auto& [h, r, t] : unique) pairs.push_back({h, t});

  OverlapFlags flags;
  for (std::size_t i = 0; i < pairs.size(); ++i) {
    for (std::size_t j = i + 1; j < pairs.size(); ++j) {
      if (pairs[i] == pairs[j]) {
        flags.epo = true;
        continue;
      }
      std::size_t shared = 0;
      for (const auto& e : pairs[i]) shared += pairs[j].count(e);
      if (shared == 1) flags.seo = true;
    }
  }
  flags.normal = !flags.epo && !flags.seo;
  return flags;
}

CorpusStats corpus_stats(const std::vector<Sentence>& corpus, const RelationSchema& schema,
                         std::string split) {
  CorpusStats st;
  st.split = std::move(split);
  st.relations = schema.size();
  for (const auto& s : corpus) {
    const auto f = classify_overlap(s.triples);
    st.normal += f.normal;
    st.epo += f.epo;
    st.seo += f.seo;
    ++st.all;
  }
  return st;
}

void write_stats_table(std::ostream& out, const std::vector<CorpusStats>& rows) {
  std::size_t w = 5;
  for (const auto& r : rows) w = std::max(w, r.split.size());
  out << std::left << std::setw(static_cast<int>(w)) << "split" << std::right;
  for (const char* h : {"#Normal", "#EPO", "#SEO", "#ALL", "#Relation"}) out << "  " << std::setw(9) << h;
  out << '\n';
  for (const auto& r : rows) {
    out << std::left << std::setw(static_cast<int>(w)) << r.split << std::right;
    for (long v : {r.normal, r.epo, r.seo, r.all, r.relations}) out << "  " << std::setw(9) << v;
    out << '\n';
  }
}

}  // namespace cascade
