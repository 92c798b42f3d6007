#pragma once

#include <filesystem>
#include <string>
#include <vector>

#include "cascade/encoder.hpp"

namespace cascade {

/// Every tunable of the model, the trainer and the decoder. Defaults follow
/// the published BERT-base setup except where noted.
struct ModelConfig {
  EncoderKind encoder = EncoderKind::toy;
  std::string pretrained_path;   ///< checkpoint directory for the pretrained encoder

  // toy encoder
  int d = 128;
  int embedding_dim = 64;

  int relation_emb_dim = 300;
  int lstm_hidden = 384;         ///< per direction
  int pos_emb_dim = 64;
  int max_rel_distance = 64;     ///< distance buckets; one extra sentinel row

  double delta = 0.5;            ///< relation threshold (strict)
  double span_threshold = 0.5;   ///< start/end tag threshold (strict)
  double dropout = 0.4;          ///< on encoder rows, training only
  double prob_clamp = 1e-12;

  double learning_rate = 2e-5;
  int batch_size = 8;
  double adam_beta1 = 0.9;
  double adam_beta2 = 0.999;
  double adam_eps = 1e-8;
  int max_epochs = 100;
  int patience = 10;             ///< epochs without dev improvement
  double stop_at_dev_f1 = 2.0;   ///< stop once dev exact F1 reaches this; >1 disables
  double init_std = 0.02;        ///< relation embeddings
  double embedding_init_std = 0.1;  ///< token and position embeddings
  /// Word vectors in GloVe text format; relation embeddings start as the
  /// average over the words of the relation name. Empty = random init.
  std::string relation_vectors_path;

  int negative_relations = 0;    ///< sampled non-gold relations trained to tag nothing
  bool unmatched_start_fallback = false;  ///< unpaired starts become single-token spans

  void validate() const;

  /// Sets one field from its textual value. Throws ConfigError for unknown
  /// keys or malformed values.
  void set(const std::string& key, const std::string& value);
  std::string get(const std::string& key) const;
  static std::vector<std::string> keys();

  /// `key = value` lines in field order.
  std::string to_text() const;
  /// Applies `key = value` lines (`#` starts a comment) on top of *this.
  void apply_text(const std::string& text, const std::string& source = "<config>");
  static ModelConfig load(const std::filesystem::path& path);
};

}  // namespace cascade
