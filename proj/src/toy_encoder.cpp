#include <cmath>

#include "cascade/encoder.hpp"
#include "cascade/errors.hpp"
#include "json.hpp"

namespace cascade {

std::string to_string(EncoderKind kind) { return kind == EncoderKind::toy ? "toy" : "pretrained"; }

EncoderKind encoder_kind_from_string(const std::string& s) {
  if (s == "toy") return EncoderKind::toy;
  if (s == "pretrained") return EncoderKind::pretrained;
  throw ConfigError("unknown encoder kind '" + s + "' (expected toy or pretrained)");
}

namespace {

int checked_dim(int d) {
  if (d <= 0) throw ConfigError("encoder dimension must be positive");
  return d;
}

}  // namespace

Encoder::Encoder(ad::ParameterStore& store, int d)
    : store_(store),
      pool_w_(store.create("encoder.pooler.weight", checked_dim(d), d)),
      pool_b_(store.create("encoder.pooler.bias", 1, d)) {}

ad::Var Encoder::pool(ad::Graph& g, ad::Var h0) const {
  if (g.value(h0).rows() != 1 || g.value(h0).cols() != dim())
    throw ConfigError("pool input must be a 1 x d row");
  return g.tanh(g.add_row(g.matmul_nt(h0, g.param(pool_w_)), g.param(pool_b_)));
}

EncoderOutput Encoder::run(const TokenizedText& tok) const {
  ad::Graph g;
  const ad::Var H = encode(g, tok);
  const ad::Var pooled = pool(g, g.slice_rows(H, 0, 1));
  return {g.value(H), g.value(pooled).row(0).transpose()};
}

ad::Vector pool(const ad::Vector& h0, const ad::Matrix& weight, const ad::Vector& bias) {
  if (weight.cols() != h0.size() || weight.rows() != bias.size())
    throw ConfigError("pool: dimension mismatch");
  return (weight * h0 + bias).array().tanh().matrix();
}

ToyEncoder::ToyEncoder(ad::ParameterStore& store, const Config& config)
    : Encoder(store, config.d),
      config_(config),
      embedding_(store.create("encoder.embedding", config.vocab_size, config.embedding_dim)) {
  if (config.d <= 0 || config.d % 2 != 0) throw ConfigError("toy encoder dimension d must be positive and even");
  if (config.vocab_size <= 0 || config.embedding_dim <= 0) throw ConfigError("toy encoder needs a vocabulary and embedding size");
  const int h = config.d / 2;
  fwd_wx_ = &store.create("encoder.lstm_fwd.wx", config.embedding_dim, 4 * h);
  fwd_wh_ = &store.create("encoder.lstm_fwd.wh", h, 4 * h);
  fwd_b_ = &store.create("encoder.lstm_fwd.b", 1, 4 * h);
  bwd_wx_ = &store.create("encoder.lstm_bwd.wx", config.embedding_dim, 4 * h);
  bwd_wh_ = &store.create("encoder.lstm_bwd.wh", h, 4 * h);
  bwd_b_ = &store.create("encoder.lstm_bwd.b", 1, 4 * h);
}

ad::Var ToyEncoder::encode(ad::Graph& g, const TokenizedText& tok) const {
  for (int id : tok.ids)
    if (id < 0 || id >= config_.vocab_size) throw ConfigError("subtoken id outside the encoder vocabulary");
  const ad::Var x = g.lookup(embedding_, tok.ids);
  const ad::Var fwd = g.lstm(x, g.param(*fwd_wx_), g.param(*fwd_wh_), g.param(*fwd_b_), false);
  const ad::Var bwd = g.lstm(x, g.param(*bwd_wx_), g.param(*bwd_wh_), g.param(*bwd_b_), true);
  const ad::Var parts[] = {fwd, bwd};
  return g.concat_cols(parts);
}

std::string ToyEncoder::describe() const {
  return nlohmann::json{{"kind", "toy"},
                        {"vocab_size", config_.vocab_size},
                        {"embedding_dim", config_.embedding_dim},
                        {"d", config_.d}}
      .dump();
}

ToyEncoder::Config ToyEncoder::parse_description(const std::string& text) {
  const auto j = nlohmann::json::parse(text);
  return {j.at("vocab_size").get<int>(), j.at("embedding_dim").get<int>(), j.at("d").get<int>()};
}

}  // namespace cascade
