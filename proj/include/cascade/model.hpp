#pragma once

#include <cstdint>
#include <memory>
#include <random>
#include <vector>

#include "cascade/autodiff.hpp"
#include "cascade/config.hpp"
#include "cascade/encoder.hpp"
#include "cascade/schema.hpp"
#include "cascade/tagging.hpp"
#include "cascade/tokenizer.hpp"

namespace cascade {

struct RelationPrediction {
  ad::Vector probs;            ///< p_i for every relation, in (0, 1)
  std::vector<int> selected;   ///< {i : probs[i] > delta}
};

/// Positive-class probabilities of the per-token start/end taggers.
struct SpanProbs {
  ad::Vector start;
  ad::Vector end;
  int size() const { return static_cast<int>(start.size()); }
};

struct LossBreakdown {
  double relation = 0.0;
  double head = 0.0;
  double tail = 0.0;
  double total = 0.0;
};

enum LossComponent : unsigned { kRelationLoss = 1, kHeadLoss = 2, kTailLoss = 4, kAllLosses = 7 };

struct LossOptions {
  bool training = false;       ///< enables dropout (needs rng)
  bool backward = true;        ///< accumulate gradients into the parameters
  std::mt19937_64* rng = nullptr;
  unsigned components = kAllLosses;   ///< terms to build; others stay 0
  /// When set, receives every per-element cross-entropy value in build order.
  std::vector<double>* elements = nullptr;
  /// Fixed encoder output H used instead of running the encoder.
  const ad::Matrix* encoded = nullptr;
};

/// Encoder, relation classifier, relation and position embeddings and the
/// four start/end tagger stacks, all in one parameter store.
class CascadeModel {
 public:
  /// Randomly initialised model over a desk-scale encoder.
  static CascadeModel create_toy(const ModelConfig& config, RelationSchema schema, Vocabulary vocab,
                                 std::uint64_t seed);
  /// Encoder weights, pooler and vocabulary come from config.pretrained_path.
  static CascadeModel create_pretrained(const ModelConfig& config, RelationSchema schema, std::uint64_t seed);
  /// All parameters zero; used when loading checkpoints.
  static CascadeModel create_empty(const ModelConfig& config, RelationSchema schema, Vocabulary vocab,
                                   TokenizerOptions tokenizer, const std::string& encoder_description);

  CascadeModel(CascadeModel&&) noexcept = default;
  CascadeModel& operator=(CascadeModel&&) noexcept = default;

  const ModelConfig& config() const { return config_; }
  ModelConfig& config() { return config_; }
  const RelationSchema& schema() const { return schema_; }
  const Vocabulary& vocab() const { return vocab_; }
  const TokenizerOptions& tokenizer_options() const { return tokenizer_; }
  const Encoder& encoder() const { return *encoder_; }
  ad::ParameterStore& params() { return *store_; }
  const ad::ParameterStore& params() const { return *store_; }
  int num_relations() const { return schema_.size(); }
  int dim() const { return encoder_->dim(); }

  TokenizedText tokenize(const Sentence& sentence) const;

  /// Zeroes every parameter outside the encoder.
  void zero_decoder_parameters();

  /// Parameter group of a parameter name ("encoder", "relation_classifier", ...).
  static std::string group_of(const std::string& name);

  // Graph building blocks. Span vectors are m x 1 columns.
  struct SpanVars {
    ad::Var start;
    ad::Var end;
  };

  ad::Var encode(ad::Graph& g, const TokenizedText& tok, const LossOptions& options = {}) const;
  /// 1 x K relation probabilities from H.
  ad::Var relation_probs(ad::Graph& g, ad::Var H) const;
  /// `gold_starts` feeds the relative-position features; when null the
  /// positions whose start probability exceeds span_threshold are used.
  SpanVars head_probs(ad::Graph& g, ad::Var H, int relation, const std::vector<int>* gold_starts) const;
  SpanVars tail_probs(ad::Graph& g, ad::Var H, int relation, ad::Var head_vec,
                      const std::vector<int>* gold_starts) const;
  /// (h_first + h_last) / 2 over H rows.
  ad::Var head_vector(ad::Graph& g, ad::Var H, int first_row, int last_row) const;

 private:
  struct Tagger {
    ad::Parameter *fwd_wx, *fwd_wh, *fwd_b, *bwd_wx, *bwd_wh, *bwd_b, *out_w, *out_b;
  };

  CascadeModel(const ModelConfig& config, RelationSchema schema, Vocabulary vocab, TokenizerOptions tokenizer);
  void build_decoder();
  void initialize(std::uint64_t seed, bool skip_encoder);
  void load_relation_vectors();
  Tagger make_tagger(const std::string& name, int input_dim);
  /// Returns the m x 2h tagger states and the m x 1 positive-class probabilities.
  std::pair<ad::Var, ad::Var> run_tagger(ad::Graph& g, const Tagger& t, ad::Var x) const;
  ad::Var end_pass(ad::Graph& g, const Tagger& t, ad::Var start_states, ad::Var start_probs,
                   const std::vector<int>* gold_starts) const;

  ModelConfig config_;
  RelationSchema schema_;
  Vocabulary vocab_;
  TokenizerOptions tokenizer_;
  std::unique_ptr<ad::ParameterStore> store_;
  std::unique_ptr<Encoder> encoder_;
  ad::Parameter* rel_w_ = nullptr;
  ad::Parameter* rel_b_ = nullptr;
  ad::Parameter* rel_emb_ = nullptr;
  ad::Parameter* pos_emb_ = nullptr;
  Tagger head_start_{}, head_end_{}, tail_start_{}, tail_end_{};
};

RelationPrediction predict_relations(const ad::Vector& pooled, const CascadeModel& model, double delta);

/// -sum_i [y_i log p_i + (1 - y_i) log(1 - p_i)], probabilities clamped at eps.
double relation_nll(const ad::Vector& probs, const std::vector<std::uint8_t>& labels, double eps = 1e-12);

/// Start and end terms of the binary cross-entropy, summed.
double span_nll(const SpanProbs& probs, const SpanTags& gold, double eps = 1e-12);

/// Token i -> min(i - s, max_rel_distance - 1) for the nearest start s <= i;
/// tokens with no preceding start get the sentinel bucket max_rel_distance.
std::vector<int> relative_distance_buckets(const std::vector<int>& starts, int m, int max_rel_distance);

/// (H[first_row] + H[last_row]) / 2; requires 1 <= first_row <= last_row <= m.
ad::Vector head_vector(const ad::Matrix& H, int first_row, int last_row);

/// Inference-mode tagger passes on a fixed encoder output.
SpanProbs extract_head_probs(const ad::Matrix& H, int relation, const CascadeModel& model,
                             const std::vector<int>* gold_starts = nullptr);
SpanProbs extract_tail_probs(const ad::Matrix& H, int relation, const ad::Vector& head_vec,
                             const CascadeModel& model, const std::vector<int>* gold_starts = nullptr);

/// Teacher-forced joint objective: relation BCE over all K relations, head
/// tagging for each gold relation, tail tagging for each gold (relation,
/// head). Gradients are accumulated into the model parameters when
/// options.backward is set.
LossBreakdown joint_loss(const TaggedExample& example, const TokenizedText& tok, CascadeModel& model,
                         const LossOptions& options = {});

}  // namespace cascade
