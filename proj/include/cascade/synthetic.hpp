#pragma once

#include <cstdint>
#include <vector>

#include "cascade/corpus.hpp"
#include "cascade/schema.hpp"

namespace cascade {

/// Parameters of the templated corpus generator. Sentences are built from
/// whitespace-separated words; punctuation is its own word.
struct SyntheticSpec {
  int n_sentences = 200;
  int num_relations = 6;
  double frac_normal = 0.4;
  double frac_epo = 0.3;
  double frac_seo = 0.3;
  int max_triples = 3;
  /// Entity names drawn per type; 0 uses the whole built-in pool.
  int names_per_type = 0;
};

/// The first `num_relations` labels of the generator's relation catalogue.
RelationSchema synthetic_schema(int num_relations);

/// Deterministic in (spec, seed). Throws SpecError for infeasible specs
/// (fractions not summing to 1, entity-pair overlap with no pair of
/// relations sharing a type signature, ...).
std::vector<Sentence> generate_synthetic_corpus(const SyntheticSpec& spec, std::uint64_t seed);

}  // namespace cascade
