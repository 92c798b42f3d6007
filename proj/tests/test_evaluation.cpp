#include <random>
#include <sstream>

#include "doctest.h"
#include "oracles.hpp"
#include "test_util.hpp"

#include "cascade/errors.hpp"
#include "cascade/evaluation.hpp"

using namespace cascade;
using testutil::triple;

namespace {

std::string render(const Report& r, ReportFormat f) {
  std::ostringstream out;
  emit_report(r, out, f);
  return out.str();
}

}  // namespace

TEST_CASE("normalize_entity examples") {
  CHECK(normalize_entity("New York City", MatchMode::partial) == "City");
  CHECK(normalize_entity("Leipzig", MatchMode::partial) == "Leipzig");
  CHECK(normalize_entity("  U.S. ", MatchMode::exact) == "U.S.");
  CHECK(normalize_entity("New   York\tCity", MatchMode::exact) == "New York City");
  CHECK(normalize_entity("leipzig", MatchMode::exact) != normalize_entity("Leipzig", MatchMode::exact));
  CHECK(match_mode_from_string("partial") == MatchMode::partial);
  CHECK(to_string(MatchMode::exact) == "exact");
  CHECK_THROWS_AS(match_mode_from_string("fuzzy"), ConfigError);
}

TEST_CASE("score examples") {
  const auto maria = triple("Maria", "Born_in", "Leipzig");
  auto r = score(std::vector{maria}, std::vector{maria}, MatchMode::exact);
  CHECK(r.precision == 1.0);
  CHECK(r.recall == 1.0);
  CHECK(r.f1 == 1.0);

  const auto wash = triple("Washington", "Capital_of", "U.S.");
  r = score(std::vector{wash}, std::vector{wash, triple("Washington", "Located_in", "U.S.")}, MatchMode::exact);
  CHECK(r.precision == 1.0);
  CHECK(r.recall == 0.5);
  CHECK(r.f1 == doctest::Approx(0.6667).epsilon(1e-4));
  CHECK(r.tp == 1);
  CHECK(r.fn == 1);

  const auto george = triple("George Washington", "Capital_of", "U.S.");
  CHECK(score(std::vector{george}, std::vector{wash}, MatchMode::partial).tp == 1);
  CHECK(score(std::vector{george}, std::vector{wash}, MatchMode::exact).tp == 0);

  const auto empty = score(std::vector<Triple>{}, std::vector<Triple>{}, MatchMode::exact);
  CHECK(empty == EvalResult{});
  // duplicates count once
  CHECK(score(std::vector{wash, wash}, std::vector{wash}, MatchMode::exact).fp == 0);
}

TEST_CASE("corpus score is micro-averaged") {
  const std::vector<std::vector<Triple>> gold = {{triple("A", "r", "B")}, {triple("C", "r", "D"), triple("E", "r", "F")}};
  const std::vector<std::vector<Triple>> pred = {{triple("A", "r", "B"), triple("A", "r", "X")}, {}};
  const auto r = score(pred, gold, MatchMode::exact);
  CHECK(r == EvalResult::from_counts(1, 1, 2));
  CHECK(r.f1 == doctest::Approx(0.4));
  CHECK_THROWS_AS(score(pred, {gold[0]}, MatchMode::exact), AlignmentError);
}

TEST_CASE("element scores examples") {
  const auto a = triple("A", "r_wrong", "B"), b = triple("A", "r_true", "B");
  const auto e = element_scores({{a}}, {{b}}, MatchMode::exact);
  CHECK(e.at(Element::entity_pair).f1 == 1.0);
  CHECK(e.at(Element::relation).f1 == 0.0);
  CHECK(e.at(Element::triple).f1 == 0.0);
  const auto same = element_scores({{a, b}}, {{a, b}}, MatchMode::partial);
  for (const auto& [k, v] : same) CHECK(v.f1 == 1.0);
  CHECK(to_string(Element::entity_pair) == "(h,t)");
  CHECK(to_string(Element::relation) == "r");
  CHECK(to_string(Element::triple) == "(h,r,t)");
}

TEST_CASE("element F1 ordering fails once projections collapse") {
  // two predicted triples on one entity pair collapse to a single (h,t) item
  const std::vector<std::vector<Triple>> pred = {{triple("A", "r1", "B"), triple("A", "r2", "B")}};
  const std::vector<std::vector<Triple>> gold = {{triple("A", "r1", "B"), triple("A", "r2", "B"), triple("C", "r1", "D")}};
  const auto e = element_scores(pred, gold, MatchMode::exact);
  CHECK(e.at(Element::triple).tp == 2);
  CHECK(e.at(Element::entity_pair).tp == 1);
  CHECK(e.at(Element::triple).f1 == doctest::Approx(0.8));
  CHECK(e.at(Element::entity_pair).f1 == doctest::Approx(2.0 / 3.0));
}

TEST_CASE("scorer agrees with the brute-force oracle") {
  std::mt19937_64 rng(99);
  for (int i = 0; i < 500; ++i) {
    const auto c = oracle::random_case(rng);
    for (bool partial : {false, true}) {
      const auto mode = partial ? MatchMode::partial : MatchMode::exact;
      const auto r = score(c.pred, c.gold, mode);
      CHECK(oracle::Counts{r.tp, r.fp, r.fn} == oracle::count(c.pred, c.gold, partial));
      const auto e = element_scores({c.pred}, {c.gold}, mode);
      for (int el = 0; el < 3; ++el) {
        const auto& x = e.at(static_cast<Element>(el));
        CHECK(oracle::Counts{x.tp, x.fp, x.fn} == oracle::count(c.pred, c.gold, partial, el));
      }
      // swapping pred and gold swaps precision and recall
      const auto s = score(c.gold, c.pred, mode);
      CHECK(s.tp == r.tp);
      CHECK(s.precision == r.recall);
      CHECK(s.recall == r.precision);
      CHECK(s.f1 == doctest::Approx(r.f1).epsilon(1e-15));
    }
  }
}

TEST_CASE("matched triples have matched projections") {
  std::mt19937_64 rng(5);
  for (int i = 0; i < 300; ++i) {
    const auto c = oracle::random_case(rng);
    for (auto mode : {MatchMode::exact, MatchMode::partial}) {
      const auto gold = normalized_triples(c.gold, mode);
      for (const auto& key : normalized_triples(c.pred, mode)) {
        if (!gold.count(key)) continue;
        bool pair = false, rel = false;
        for (const auto& [h, r, t] : gold) {
          pair = pair || (h == std::get<0>(key) && t == std::get<2>(key));
          rel = rel || r == std::get<1>(key);
        }
        CHECK(pair);
        CHECK(rel);
      }
    }
  }
}

TEST_CASE("element F1 ordering without collapsing projections") {
  // one triple per entity pair and per relation on both sides
  std::mt19937_64 rng(17);
  const char* names[] = {"A", "B", "C", "D", "E", "F"};
  const char* rels[] = {"r1", "r2", "r3", "r4", "r5", "r6"};
  for (int i = 0; i < 300; ++i) {
    auto draw = [&](int n) {
      std::vector<Triple> out;
      std::vector<int> ri = {0, 1, 2, 3, 4, 5};
      std::shuffle(ri.begin(), ri.end(), rng);
      std::set<std::pair<int, int>> pairs;
      for (int k = 0; k < n; ++k) {
        int h, t;
        do {
          h = std::uniform_int_distribution<int>(0, 5)(rng);
          t = std::uniform_int_distribution<int>(0, 5)(rng);
        } while (!pairs.insert({h, t}).second);
        out.push_back(triple(names[h], rels[ri[static_cast<std::size_t>(k)]], names[t]));
      }
      return out;
    };
    const auto pred = draw(std::uniform_int_distribution<int>(0, 6)(rng));
    const auto gold = draw(std::uniform_int_distribution<int>(0, 6)(rng));
    const auto e = element_scores({pred}, {gold}, MatchMode::exact);
    CHECK(e.at(Element::triple).tp <= e.at(Element::entity_pair).tp);
    CHECK(e.at(Element::triple).tp <= e.at(Element::relation).tp);
    CHECK(e.at(Element::triple).f1 <= e.at(Element::entity_pair).f1 + 1e-15);
    CHECK(e.at(Element::triple).f1 <= e.at(Element::relation).f1 + 1e-15);
  }
}

TEST_CASE("breakdown tables") {
  auto s = [](std::string text, std::vector<Triple> ts) { return make_sentence(std::move(text), std::move(ts)); };
  const std::vector<Sentence> gold = {
      s("A met B", {triple("A", "r1", "B")}),
      s("A and B", {triple("A", "r1", "B"), triple("A", "r2", "B")}),
      s("A C B", {triple("A", "r1", "B"), triple("A", "r2", "C")}),
      s("nothing here", {}),
      s("A B C D E F G H",
        {triple("A", "r", "B"), triple("C", "r", "D"), triple("E", "r", "F"), triple("G", "r", "H"),
         triple("A", "r", "H"), triple("C", "r", "F"), triple("B", "r", "E")}),
  };
  std::vector<Sentence> pred = gold;
  pred[0].triples.clear();
  pred[2].triples.pop_back();

  const auto overlap = breakdown_scores(pred, gold, MatchMode::exact, BreakdownAxis::overlap);
  REQUIRE(overlap.rows.size() == 3);
  CHECK(overlap.rows[0].first == "Normal");
  CHECK(overlap.rows[1].first == "EPO");
  CHECK(overlap.rows[2].first == "SEO");
  CHECK(overlap.rows[1].second == EvalResult::from_counts(2, 0, 0));
  CHECK(overlap.rows[2].second.tp >= 1);

  const auto counts = breakdown_scores(pred, gold, MatchMode::exact, BreakdownAxis::triple_count);
  REQUIRE(counts.rows.size() == 5);
  CHECK(counts.rows[4].first == ">=5");
  CHECK(counts.rows[4].second.tp == 7);
  CHECK(counts.rows[0].second == EvalResult::from_counts(0, 0, 1));
  EvalResult total;
  for (const auto& [name, r] : counts.rows) total += r;
  const auto overall = score(triples_of(pred), triples_of(gold), MatchMode::exact);
  CHECK(total.tp == overall.tp);
  CHECK(total.fp == overall.fp);
  CHECK(total.fn == overall.fn);

  const std::vector<Sentence> normal = {s("A met B", {triple("A", "r1", "B")}), s("C met D", {triple("C", "r1", "D")})};
  const auto only = breakdown_scores(normal, normal, MatchMode::exact, BreakdownAxis::overlap);
  CHECK(only.rows[0].second.tp == 2);
  CHECK(only.rows[1].second == EvalResult{});

  CHECK_THROWS_AS(breakdown_scores({normal[0]}, normal, MatchMode::exact, BreakdownAxis::overlap), AlignmentError);
  CHECK_THROWS_AS(breakdown_scores({normal[1], normal[0]}, normal, MatchMode::exact, BreakdownAxis::overlap),
                  AlignmentError);
  CHECK(breakdown_axis_from_string("count") == BreakdownAxis::triple_count);
  CHECK_THROWS_AS(breakdown_axis_from_string("length"), ConfigError);
}

TEST_CASE("reports are deterministic and fixed-precision") {
  Report r;
  r.mode = MatchMode::partial;
  r.config_hash = fnv1a_hex("x");
  r.rows.push_back({"overall", "all", EvalResult::from_counts(2, 1, 0)});
  r.rows.push_back({"overlap", "EPO", EvalResult::from_counts(1, 2, 3)});
  for (auto f : {ReportFormat::table, ReportFormat::delimited}) {
    const auto a = render(r, f);
    CHECK(a == render(r, f));
    CHECK(a.find("0.6667") != std::string::npos);
    CHECK(a.find("0.8000") != std::string::npos);
    CHECK(a.find("partial") != std::string::npos);
    CHECK(a.find(r.config_hash) != std::string::npos);
  }
  const auto tsv = render(r, ReportFormat::delimited);
  CHECK(tsv.find("overlap\tEPO\t1\t2\t3\t0.3333\t0.2500\t0.2857\n") != std::string::npos);

  Report empty;
  empty.config_hash = "0";
  std::istringstream lines(render(empty, ReportFormat::delimited));
  int n = 0;
  for (std::string line; std::getline(lines, line);) ++n;
  CHECK(n == 3);

  testutil::TempDir dir;
  emit_report(r, dir / "a.txt", ReportFormat::table);
  emit_report(r, dir / "b.txt", ReportFormat::table);
  CHECK(testutil::read_file(dir / "a.txt") == testutil::read_file(dir / "b.txt"));
  CHECK_THROWS_AS(emit_report(r, dir / "no" / "c.txt", ReportFormat::table), IoError);
  CHECK(fnv1a_hex("") == "cbf29ce484222325");
  CHECK(fnv1a_hex("a") == "af63dc4c8601ec8c");
}
