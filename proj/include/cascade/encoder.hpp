#pragma once

#include <filesystem>
#include <memory>
#include <random>
#include <string>

#include "cascade/autodiff.hpp"
#include "cascade/tokenizer.hpp"

namespace cascade {

enum class EncoderKind { toy, pretrained };

std::string to_string(EncoderKind kind);
EncoderKind encoder_kind_from_string(const std::string& s);

/// Contextual token vectors for one tokenized text.
struct EncoderOutput {
  ad::Matrix H;        ///< (m + 2) x d; row i is h_i
  ad::Vector pooled;   ///< d
};

/// Produces the per-token matrix H from a tokenized text. Every encoder owns a
/// pooler (affine d x d + tanh on h_0) stored as `encoder.pooler.weight`
/// (out x in) and `encoder.pooler.bias` (1 x d).
class Encoder {
 public:
  virtual ~Encoder() = default;

  virtual EncoderKind kind() const = 0;
  virtual int dim() const = 0;
  /// Encoder-specific settings, serialized into checkpoints.
  virtual std::string describe() const = 0;
  /// H has one row per subtoken of `tok`.
  virtual ad::Var encode(ad::Graph& g, const TokenizedText& tok) const = 0;

  /// tanh(W_p h0 + b_p) for a 1 x d row.
  ad::Var pool(ad::Graph& g, ad::Var h0) const;

  /// Graph-free forward pass.
  EncoderOutput run(const TokenizedText& tok) const;

 protected:
  Encoder(ad::ParameterStore& store, int d);

  ad::ParameterStore& store_;
  ad::Parameter& pool_w_;
  ad::Parameter& pool_b_;
};

/// tanh(W h0 + b), nothing else.
ad::Vector pool(const ad::Vector& h0, const ad::Matrix& weight, const ad::Vector& bias);

/// Desk-scale encoder: trainable token embeddings followed by one
/// bidirectional LSTM with d/2 units per direction.
class ToyEncoder final : public Encoder {
 public:
  struct Config {
    int vocab_size = 0;
    int embedding_dim = 64;
    int d = 128;
  };

  ToyEncoder(ad::ParameterStore& store, const Config& config);

  EncoderKind kind() const override { return EncoderKind::toy; }
  int dim() const override { return config_.d; }
  std::string describe() const override;
  ad::Var encode(ad::Graph& g, const TokenizedText& tok) const override;

  static Config parse_description(const std::string& text);

 private:
  Config config_;
  ad::Parameter& embedding_;
  ad::Parameter *fwd_wx_, *fwd_wh_, *fwd_b_, *bwd_wx_, *bwd_wh_, *bwd_b_;
};

/// BERT-architecture encoder whose weights come from a released checkpoint
/// directory (config.json, vocab.txt, model.safetensors).
class BertEncoder final : public Encoder {
 public:
  struct Config {
    int vocab_size = 0;
    int hidden_size = 768;
    int num_layers = 12;
    int num_heads = 12;
    int intermediate_size = 3072;
    int max_position = 512;
    int type_vocab_size = 2;
    double layer_norm_eps = 1e-12;
    bool lowercase = false;
  };

  BertEncoder(ad::ParameterStore& store, const Config& config);

  /// Reads config.json (and tokenizer_config.json when present).
  static Config read_config(const std::filesystem::path& dir);
  /// Copies the checkpoint weights into the store, pooler included.
  void load_weights(const std::filesystem::path& dir);

  EncoderKind kind() const override { return EncoderKind::pretrained; }
  int dim() const override { return config_.hidden_size; }
  std::string describe() const override;
  ad::Var encode(ad::Graph& g, const TokenizedText& tok) const override;

  const Config& config() const { return config_; }
  static Config parse_description(const std::string& text);

 private:
  ad::Parameter& p(const std::string& name) const { return store_.get("encoder.bert." + name); }

  Config config_;
};

}  // namespace cascade
