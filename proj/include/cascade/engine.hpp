#pragma once

#include <cstdint>
#include <filesystem>
#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "cascade/corpus.hpp"
#include "cascade/model.hpp"

namespace cascade {

/// Greedy pairing: each position with start prob > threshold takes the
/// nearest position at or after it with end prob > threshold, provided that
/// position comes before the next start. Unpaired starts are dropped, or
/// become single-token spans with `fallback`.
std::vector<TokenSpan> pair_spans(const SpanProbs& probs, double threshold, bool fallback = false);

struct ExtractedEntity {
  TokenSpan tokens;
  WordSpan words;
  std::string text;
};

struct ExtractedTriple {
  ExtractedEntity head;
  std::string relation;
  ExtractedEntity tail;
  double score = 0.0;   ///< p_r * p_start^h * p_end^h * p_start^t * p_end^t
};

struct DecodeOptions {
  double delta = 0.5;
  double span_threshold = 0.5;
  bool fallback = false;

  static DecodeOptions from(const ModelConfig& config);
};

/// Relation, head and tail stages in sequence. Each (head text, relation,
/// tail text) appears once, carrying its best score.
std::vector<ExtractedTriple> decode_sentence(const TokenizedText& tok, const CascadeModel& model,
                                             const DecodeOptions& options);
std::vector<ExtractedTriple> decode_sentence(const TokenizedText& tok, const CascadeModel& model);

/// Copy of `sentence` with its triples replaced by the extracted ones.
Sentence to_sentence(const Sentence& sentence, const std::vector<ExtractedTriple>& triples);

std::vector<Sentence> predict_corpus(const std::vector<Sentence>& corpus, const CascadeModel& model,
                                     const DecodeOptions& options);
std::vector<Sentence> predict_corpus(const std::vector<Sentence>& corpus, const CascadeModel& model);
void predict_corpus(const std::vector<Sentence>& corpus, const CascadeModel& model, const DecodeOptions& options,
                    const std::filesystem::path& output);

struct EpochRecord {
  int epoch = 0;                        ///< 1-based
  double loss = 0.0;                    ///< mean per-sentence training loss
  std::optional<double> dev_f1;         ///< exact match
  double seconds = 0.0;
};

struct TrainReport {
  std::vector<EpochRecord> epochs;
  int best_epoch = 0;
  double best_dev_f1 = 0.0;
  std::string best_checkpoint;
  std::uint64_t seed = 0;
  std::string config_snapshot;
  bool stopped_early = false;

  std::string to_json() const;
};

struct TrainOptions {
  /// Written with the restored best parameters when non-empty.
  std::filesystem::path checkpoint;
  std::function<void(const EpochRecord&)> on_epoch;
};

/// Adam over every parameter of the model.
class Adam {
 public:
  Adam(double lr, double beta1, double beta2, double eps);
  void step(ad::ParameterStore& store);
  long steps() const { return t_; }

 private:
  double lr_, beta1_, beta2_, eps_;
  long t_ = 0;
  std::vector<ad::Matrix> m_, v_;
};

/// The toy encoder takes its vocabulary from the training corpus; the
/// pretrained one from its checkpoint directory.
CascadeModel build_model(const ModelConfig& config, const RelationSchema& schema,
                         const std::vector<Sentence>& train_corpus, std::uint64_t seed);

/// Minimizes the joint loss over shuffled mini-batches. With a non-empty dev
/// corpus, stops after `patience` epochs without a dev F1 gain and restores
/// the best parameters. Throws DivergenceError on a non-finite loss.
TrainReport train(CascadeModel& model, const std::vector<Sentence>& train_corpus,
                  const std::vector<Sentence>& dev_corpus, std::uint64_t seed, const TrainOptions& options = {});

}  // namespace cascade
