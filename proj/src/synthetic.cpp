#include "cascade/synthetic.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <numeric>
#include <random>
#include <string>

#include "cascade/errors.hpp"

namespace cascade {

namespace {

enum EntityType { kPerson, kCity, kCountry, kOrg, kNumTypes };

struct RelationDef {
  const char* name;
  EntityType head;
  EntityType tail;
  const char* phrase;
};

constexpr std::array<RelationDef, 12> kCatalogue{{
    {"Born_in", kPerson, kCity, "was born in"},
    {"Live_in", kPerson, kCity, "lives in"},
    {"Located_in", kCity, kCountry, "is located in"},
    {"Capital_of", kCity, kCountry, "is the capital of"},
    {"Work_for", kPerson, kOrg, "works for"},
    {"Founder_of", kPerson, kOrg, "founded"},
    {"Headquartered_in", kOrg, kCity, "is headquartered in"},
    {"Died_in", kPerson, kCity, "died in"},
    {"Citizen_of", kPerson, kCountry, "is a citizen of"},
    {"Operates_in", kOrg, kCountry, "operates in"},
    {"President_of", kPerson, kCountry, "is the president of"},
    {"Subsidiary_of", kOrg, kOrg, "is a subsidiary of"},
}};

struct Relation {
  std::string name;
  EntityType head;
  EntityType tail;
  std::vector<std::string> phrase;
};

std::vector<Relation> relations_for(int k) {
  if (k < 1) throw SpecError("schema size must be at least 1");
  std::vector<Relation> out;
  for (int i = 0; i < k; ++i) {
    if (i < static_cast<int>(kCatalogue.size())) {
      const auto& d = kCatalogue[static_cast<std::size_t>(i)];
      out.push_back({d.name, d.head, d.tail, split_words(d.phrase)});
    } else {
      const auto types = static_cast<EntityType>(i % kNumTypes);
      const std::string tag = std::to_string(i);
      out.push_back({"Relation_" + tag, types, static_cast<EntityType>((i / kNumTypes) % kNumTypes),
                     {"is", "tied-" + tag, "to"}});
    }
  }
  return out;
}

const std::vector<std::string>& pool(EntityType t) {
  static const std::vector<std::string> first = {"Maria", "Jonas", "Elena", "Tomas", "Ingrid", "Pavel",
                                                 "Lucia", "Omar",  "Hana",  "Felix", "Sofia",  "Viktor"};
  static const std::vector<std::string> last = {"Klein", "Okafor", "Lindqvist", "Moreau", "Tanaka",
                                                "Novak", "Haddad", "Ferreira",  "Brandt", "Ivanova"};
  static const std::vector<std::string> people = [] {
    std::vector<std::string> v;
    for (const auto& l : last)
      for (const auto& f : first) v.push_back(f + " " + l);
    return v;
  }();
  static const std::vector<std::string> cities = {
      "Leipzig", "Dresden", "Washington", "Lyon",   "Porto",  "New Haven",   "San Jose", "Kyoto",
      "Bergen",  "Austin",  "Cape Town",  "Graz",   "Tampere", "Valparaiso", "Osaka",    "Hamburg"};
  static const std::vector<std::string> countries = {"Germany", "France",  "United States", "Japan",
                                                     "Norway",  "Portugal", "Austria",      "South Africa",
                                                     "Canada",  "Chile",    "Finland",      "Kenya"};
  static const std::vector<std::string> orgs = {
      "Acme Corp",     "Globex Industries", "Initech",       "Umbrella Group", "Stark Labs",
      "Hooli",         "Vandelay Imports",  "Soylent Foods", "Tyrell Systems", "Cyberdyne Motors",
      "Wonka Holdings", "Aperture Science"};
  switch (t) {
    case kPerson: return people;
    case kCity: return cities;
    case kCountry: return countries;
    default: return orgs;
  }
}

const std::vector<std::vector<std::string>> kPrefixes = {
    {}, {}, {}, {"Reportedly", ","}, {"According", "to", "sources", ","}, {"It", "is", "known", "that"}};

class Generator {
 public:
  Generator(const SyntheticSpec& spec, std::uint64_t seed) : rng_(seed), rels_(relations_for(spec.num_relations)) {
    for (int t = 0; t < kNumTypes; ++t) {
      auto names = pool(static_cast<EntityType>(t));
      if (spec.names_per_type > 0 && spec.names_per_type < static_cast<int>(names.size())) {
        shuffle(names);
        names.resize(static_cast<std::size_t>(spec.names_per_type));
      }
      names_[static_cast<std::size_t>(t)] = std::move(names);
    }
    for (std::size_t i = 0; i < rels_.size(); ++i)
      for (std::size_t j = 0; j < rels_.size(); ++j) {
        if (i == j) continue;
        if (rels_[i].head == rels_[j].head && rels_[i].tail == rels_[j].tail && i < j)
          epo_pairs_.emplace_back(i, j);
        if (rels_[i].tail == rels_[j].head) chains_.emplace_back(i, j);
      }
  }

  bool epo_feasible() const { return !epo_pairs_.empty(); }

  std::size_t below(std::size_t n) { return static_cast<std::size_t>(rng_() % n); }

  template <class T>
  void shuffle(std::vector<T>& v) {
    for (std::size_t i = v.size(); i > 1; --i) std::swap(v[i - 1], v[below(i)]);
  }

  Sentence normal(int n_triples) {
    Builder b(*this);
    b.prefix();
    for (int c = 0; c < n_triples; ++c) {
      if (c > 0) b.words({",", "and"});
      const auto& r = rels_[below(rels_.size())];
      const auto h = b.fresh(r.head);
      const auto t = b.fresh(r.tail);
      b.clause(h, r, t);
    }
    return b.finish();
  }

  Sentence epo(int extra) {
    Builder b(*this);
    b.prefix();
    auto [i, j] = epo_pairs_[below(epo_pairs_.size())];
    if (coin()) std::swap(i, j);
    const auto& r1 = rels_[i];
    const auto& r2 = rels_[j];
    const auto h = b.fresh(r1.head);
    const auto t = b.fresh(r1.tail);
    b.entity(h);
    b.words(r1.phrase);
    b.words({"and"});
    b.words(r2.phrase);
    b.entity(t);
    b.add(h, r1, t);
    b.add(h, r2, t);
    add_disjoint(b, extra);
    return b.finish();
  }

  Sentence seo(int extra) {
    Builder b(*this);
    b.prefix();
    if (!chains_.empty() && coin()) {
      // H r1 M , which r2 T
      const auto [i, j] = chains_[below(chains_.size())];
      const auto& r1 = rels_[i];
      const auto& r2 = rels_[j];
      const auto h = b.fresh(r1.head);
      const auto mid = b.fresh(r1.tail);
      const auto t = b.fresh(r2.tail);
      b.clause(h, r1, mid);
      b.words({",", "which"});
      b.words(r2.phrase);
      b.entity(t);
      b.add(mid, r2, t);
    } else {
      // H r1 T1 and r2 T2, with r1 and r2 sharing the head type
      const auto& r1 = rels_[below(rels_.size())];
      std::vector<std::size_t> same_head;
      for (std::size_t k = 0; k < rels_.size(); ++k)
        if (rels_[k].head == r1.head && rels_[k].name != r1.name) same_head.push_back(k);
      const auto& r2 = same_head.empty() ? r1 : rels_[same_head[below(same_head.size())]];
      const auto h = b.fresh(r1.head);
      const auto t1 = b.fresh(r1.tail);
      const auto t2 = b.fresh(r2.tail);
      b.clause(h, r1, t1);
      b.words({"and"});
      b.words(r2.phrase);
      b.entity(t2);
      b.add(h, r2, t2);
    }
    add_disjoint(b, extra);
    return b.finish();
  }

 private:
  bool coin() { return (rng_() & 1U) != 0; }

  struct Builder {
    Generator& g;
    std::vector<std::string> ws;
    std::vector<Triple> triples;
    std::vector<std::string> used;

    explicit Builder(Generator& gen) : g(gen) {}

    void words(const std::vector<std::string>& w) { ws.insert(ws.end(), w.begin(), w.end()); }
    void prefix() { words(kPrefixes[g.below(kPrefixes.size())]); }
    void entity(const std::string& e) { words(split_words(e)); }
    std::string fresh(EntityType t) {
      const auto& names = g.names_[static_cast<std::size_t>(t)];
      const auto taken = std::count_if(names.begin(), names.end(), [&](const std::string& n) {
        return std::find(used.begin(), used.end(), n) != used.end();
      });
      if (taken >= static_cast<long>(names.size()))
        throw SpecError("entity pool too small for the requested sentence patterns");
      for (;;) {
        const auto& candidate = names[g.below(names.size())];
        if (std::find(used.begin(), used.end(), candidate) == used.end()) {
          used.push_back(candidate);
          return candidate;
        }
      }
    }
    void add(const std::string& h, const Relation& r, const std::string& t) {
      triples.push_back({Entity{h, {}}, r.name, Entity{t, {}}, {}});
    }
    void clause(const std::string& h, const Relation& r, const std::string& t) {
      entity(h);
      words(r.phrase);
      entity(t);
      add(h, r, t);
    }
    Sentence finish() {
      ws.emplace_back(".");
      std::string text;
      for (const auto& w : ws) {
        if (!text.empty()) text.push_back(' ');
        text += w;
      }
      return make_sentence(std::move(text), std::move(triples));
    }
  };

  void add_disjoint(Builder& b, int extra) {
    for (int c = 0; c < extra; ++c) {
      b.words({",", "while"});
      const auto& r = rels_[below(rels_.size())];
      const auto h = b.fresh(r.head);
      const auto t = b.fresh(r.tail);
      b.clause(h, r, t);
    }
  }

  std::mt19937_64 rng_;
  std::vector<Relation> rels_;
  std::array<std::vector<std::string>, kNumTypes> names_;
  std::vector<std::pair<std::size_t, std::size_t>> epo_pairs_;
  std::vector<std::pair<std::size_t, std::size_t>> chains_;
};

}  // namespace

RelationSchema synthetic_schema(int num_relations) {
  std::vector<std::string> names;
  for (const auto& r : relations_for(num_relations)) names.push_back(r.name);
  return RelationSchema(std::move(names));
}

std::vector<Sentence> generate_synthetic_corpus(const SyntheticSpec& spec, std::uint64_t seed) {
  if (spec.n_sentences < 0) throw SpecError("n_sentences must be non-negative");
  if (spec.max_triples < 1) throw SpecError("max_triples must be at least 1");
  const std::array<double, 3> fr{spec.frac_normal, spec.frac_epo, spec.frac_seo};
  for (double f : fr)
    if (!(f >= 0.0 && f <= 1.0)) throw SpecError("pattern fractions must lie in [0, 1]");
  if (std::abs(fr[0] + fr[1] + fr[2] - 1.0) > 1e-9) throw SpecError("pattern fractions must sum to 1");
  if ((fr[1] > 0 || fr[2] > 0) && spec.max_triples < 2)
    throw SpecError("overlapping patterns need max_triples >= 2");
  if (spec.names_per_type != 0 && spec.names_per_type < 3)
    throw SpecError("names_per_type must be 0 or at least 3");

  Generator gen(spec, seed);
  if (fr[1] > 0 && !gen.epo_feasible())
    throw SpecError("entity-pair overlap requested but no two relations share a type signature");

  // Largest-remainder allocation of sentence counts to patterns.
  std::array<int, 3> counts{};
  std::array<double, 3> rem{};
  int assigned = 0;
  for (std::size_t i = 0; i < 3; ++i) {
    const double exact = fr[i] * spec.n_sentences;
    counts[i] = static_cast<int>(std::floor(exact));
    rem[i] = exact - counts[i];
    assigned += counts[i];
  }
  while (assigned < spec.n_sentences) {
    std::size_t best = 0;
    for (std::size_t i = 1; i < 3; ++i)
      if (rem[i] > rem[best]) best = i;
    ++counts[best];
    rem[best] = -1.0;
    ++assigned;
  }

  std::vector<int> patterns;
  for (int p = 0; p < 3; ++p) patterns.insert(patterns.end(), static_cast<std::size_t>(counts[static_cast<std::size_t>(p)]), p);
  gen.shuffle(patterns);

  const int normal_max = std::min(spec.max_triples, 3);
  const int extra_max = std::min(spec.max_triples - 2, 1);
  std::vector<Sentence> corpus;
  corpus.reserve(patterns.size());
  for (int p : patterns) {
    const int extra = extra_max > 0 ? static_cast<int>(gen.below(static_cast<std::size_t>(extra_max) + 1)) : 0;
    switch (p) {
      case 0: corpus.push_back(gen.normal(1 + static_cast<int>(gen.below(static_cast<std::size_t>(normal_max))))); break;
      case 1: corpus.push_back(gen.epo(extra)); break;
      default: corpus.push_back(gen.seo(extra)); break;
    }
  }
  return corpus;
}

}  // namespace cascade
