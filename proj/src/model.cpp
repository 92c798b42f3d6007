#include "cascade/model.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <sstream>
#include <unordered_map>

#include "cascade/errors.hpp"
#include "json.hpp"

namespace cascade {

CascadeModel::CascadeModel(const ModelConfig& config, RelationSchema schema, Vocabulary vocab,
                           TokenizerOptions tokenizer)
    : config_(config),
      schema_(std::move(schema)),
      vocab_(std::move(vocab)),
      tokenizer_(tokenizer),
      store_(std::make_unique<ad::ParameterStore>()) {
  config_.validate();
  if (schema_.empty()) throw SchemaError("model needs at least one relation");
}

CascadeModel::Tagger CascadeModel::make_tagger(const std::string& name, int input_dim) {
  const int h = config_.lstm_hidden;
  auto& s = *store_;
  const std::string p = "tagger." + name + ".";
  return Tagger{&s.create(p + "lstm_fwd.wx", input_dim, 4 * h), &s.create(p + "lstm_fwd.wh", h, 4 * h),
                &s.create(p + "lstm_fwd.b", 1, 4 * h),          &s.create(p + "lstm_bwd.wx", input_dim, 4 * h),
                &s.create(p + "lstm_bwd.wh", h, 4 * h),         &s.create(p + "lstm_bwd.b", 1, 4 * h),
                &s.create(p + "out.weight", 2, 2 * h),          &s.create(p + "out.bias", 1, 2)};
}

void CascadeModel::build_decoder() {
  const int d = encoder_->dim();
  const int k = schema_.size();
  auto& s = *store_;
  rel_w_ = &s.create("relation.classifier.weight", k, d);
  rel_b_ = &s.create("relation.classifier.bias", 1, k);
  rel_emb_ = &s.create("relation.embedding", k, config_.relation_emb_dim);
  pos_emb_ = &s.create("position.embedding", config_.max_rel_distance + 1, config_.pos_emb_dim);
  const int states = 2 * config_.lstm_hidden;
  head_start_ = make_tagger("head_start", d + config_.relation_emb_dim);
  head_end_ = make_tagger("head_end", states + config_.pos_emb_dim);
  tail_start_ = make_tagger("tail_start", d + config_.relation_emb_dim + d);
  tail_end_ = make_tagger("tail_end", states + config_.pos_emb_dim);
}

std::string CascadeModel::group_of(const std::string& name) {
  if (name.rfind("encoder.pooler", 0) == 0) return "pooler";
  if (name.rfind("encoder.", 0) == 0) return "encoder";
  if (name.rfind("relation.classifier", 0) == 0) return "relation_classifier";
  if (name == "relation.embedding") return "relation_embedding";
  if (name == "position.embedding") return "position_embedding";
  if (name.rfind("tagger.", 0) == 0) {
    const auto dot = name.find('.', 7);
    return "tagger_" + name.substr(7, dot - 7);
  }
  return "other";
}

namespace {

bool ends_with(const std::string& s, const std::string& suffix) {
  return s.size() >= suffix.size() && s.compare(s.size() - suffix.size(), suffix.size(), suffix) == 0;
}

}  // namespace

void CascadeModel::initialize(std::uint64_t seed, bool skip_encoder) {
  std::mt19937_64 rng(seed);
  for (auto& [name, p] : *store_) {
    if (skip_encoder && group_of(name) == "encoder") continue;
    if (skip_encoder && group_of(name) == "pooler") continue;
    if (ends_with(name, ".b") || ends_with(name, ".bias")) {
      p.value.setZero();
      continue;
    }
    double std_dev = -1.0;
    double bound = 0.0;
    if (name == "relation.embedding") {
      std_dev = config_.init_std;
    } else if (ends_with(name, "embedding")) {
      std_dev = config_.embedding_init_std;
    } else if (ends_with(name, ".wx") || ends_with(name, ".wh")) {
      bound = 1.0 / std::sqrt(static_cast<double>(p.value.cols() / 4));
    } else {
      bound = 1.0 / std::sqrt(static_cast<double>(p.value.cols()));
    }
    if (std_dev >= 0.0) {
      std::normal_distribution<double> dist(0.0, std_dev);
      for (ad::Index i = 0; i < p.value.size(); ++i) p.value(i) = std_dev > 0.0 ? dist(rng) : 0.0;
    } else {
      std::uniform_real_distribution<double> dist(-bound, bound);
      for (ad::Index i = 0; i < p.value.size(); ++i) p.value(i) = dist(rng);
    }
  }
  if (!config_.relation_vectors_path.empty()) load_relation_vectors();
}

void CascadeModel::load_relation_vectors() {
  // Collect the words needed first so the (large) vector file is scanned once.
  std::vector<std::vector<std::string>> words(static_cast<std::size_t>(schema_.size()));
  std::unordered_map<std::string, ad::RowVector> table;
  for (int r = 0; r < schema_.size(); ++r) {
    std::string cur;
    for (char c : schema_.name(r) + "_") {
      if (c == '_' || c == '/' || c == ' ' || c == '-') {
        if (!cur.empty()) words[static_cast<std::size_t>(r)].push_back(cur);
        cur.clear();
      } else {
        cur.push_back(c);
      }
    }
    for (const auto& w : words[static_cast<std::size_t>(r)]) {
      table.emplace(w, ad::RowVector());
      std::string lower = w;
      std::transform(lower.begin(), lower.end(), lower.begin(), [](unsigned char c) { return std::tolower(c); });
      table.emplace(lower, ad::RowVector());
    }
  }
  std::ifstream in(config_.relation_vectors_path);
  if (!in) throw IoError("cannot open relation vector file " + config_.relation_vectors_path);
  std::string line;
  const int dim = config_.relation_emb_dim;
  while (std::getline(in, line)) {
    const auto sp = line.find(' ');
    if (sp == std::string::npos) continue;
    auto it = table.find(line.substr(0, sp));
    if (it == table.end() || it->second.size() != 0) continue;
    std::istringstream vals(line.substr(sp + 1));
    ad::RowVector v(dim);
    int n = 0;
    for (double x; n < dim && vals >> x; ++n) v(n) = x;
    if (n != dim) throw ConfigError("relation vectors must have relation_emb_dim = " + std::to_string(dim) + " values");
    it->second = std::move(v);
  }
  for (int r = 0; r < schema_.size(); ++r) {
    ad::RowVector sum = ad::RowVector::Zero(dim);
    int found = 0;
    for (const auto& w : words[static_cast<std::size_t>(r)]) {
      const ad::RowVector* v = &table[w];
      if (v->size() == 0) {
        std::string lower = w;
        std::transform(lower.begin(), lower.end(), lower.begin(), [](unsigned char c) { return std::tolower(c); });
        v = &table[lower];
      }
      if (v->size() == 0) continue;
      sum += *v;
      ++found;
    }
    if (found > 0) rel_emb_->value.row(r) = sum / found;  // otherwise keep the random init
  }
}

CascadeModel CascadeModel::create_toy(const ModelConfig& config, RelationSchema schema, Vocabulary vocab,
                                      std::uint64_t seed) {
  if (config.encoder != EncoderKind::toy) throw ConfigError("create_toy needs encoder = toy");
  CascadeModel m(config, std::move(schema), std::move(vocab), TokenizerOptions{});
  m.encoder_ = std::make_unique<ToyEncoder>(
      *m.store_, ToyEncoder::Config{m.vocab_.size(), config.embedding_dim, config.d});
  m.build_decoder();
  m.initialize(seed, false);
  return m;
}

CascadeModel CascadeModel::create_pretrained(const ModelConfig& config, RelationSchema schema, std::uint64_t seed) {
  if (config.encoder != EncoderKind::pretrained) throw ConfigError("create_pretrained needs encoder = pretrained");
  const std::filesystem::path dir = config.pretrained_path;
  const auto bert = BertEncoder::read_config(dir);
  Vocabulary vocab = Vocabulary::load(dir / "vocab.txt");
  if (vocab.size() != bert.vocab_size)
    throw ConfigError("vocab.txt has " + std::to_string(vocab.size()) + " entries but the encoder expects " +
                      std::to_string(bert.vocab_size));
  TokenizerOptions tok;
  tok.split_punctuation = true;
  tok.lowercase = bert.lowercase;
  tok.max_length = bert.max_position;
  CascadeModel m(config, std::move(schema), std::move(vocab), tok);
  auto enc = std::make_unique<BertEncoder>(*m.store_, bert);
  enc->load_weights(dir);
  m.encoder_ = std::move(enc);
  m.build_decoder();
  m.initialize(seed, true);
  return m;
}

CascadeModel CascadeModel::create_empty(const ModelConfig& config, RelationSchema schema, Vocabulary vocab,
                                        TokenizerOptions tokenizer, const std::string& encoder_description) {
  CascadeModel m(config, std::move(schema), std::move(vocab), tokenizer);
  const auto kind = nlohmann::json::parse(encoder_description).at("kind").get<std::string>();
  if (kind == "toy") {
    m.encoder_ = std::make_unique<ToyEncoder>(*m.store_, ToyEncoder::parse_description(encoder_description));
  } else {
    m.encoder_ = std::make_unique<BertEncoder>(*m.store_, BertEncoder::parse_description(encoder_description));
  }
  m.build_decoder();
  return m;
}

TokenizedText CascadeModel::tokenize(const Sentence& sentence) const {
  return tokenize_and_align(sentence, vocab_, tokenizer_);
}

void CascadeModel::zero_decoder_parameters() {
  for (auto& [name, p] : *store_) {
    const auto g = group_of(name);
    if (g != "encoder" && g != "pooler") p.value.setZero();
  }
}

ad::Var CascadeModel::encode(ad::Graph& g, const TokenizedText& tok, const LossOptions& options) const {
  ad::Var H = encoder_->encode(g, tok);
  if (options.training && config_.dropout > 0.0) {
    if (!options.rng) throw ConfigError("training-mode dropout needs a random generator");
    const ad::Matrix& v = g.value(H);
    const double keep = 1.0 - config_.dropout;
    std::bernoulli_distribution coin(keep);
    ad::Matrix mask(v.rows(), v.cols());
    for (ad::Index i = 0; i < mask.size(); ++i) mask(i) = coin(*options.rng) ? 1.0 / keep : 0.0;
    H = g.mul(H, g.constant(std::move(mask)));
  }
  return H;
}

ad::Var CascadeModel::relation_probs(ad::Graph& g, ad::Var H) const {
  const ad::Var pooled = encoder_->pool(g, g.slice_rows(H, 0, 1));
  return g.sigmoid(g.add_row(g.matmul_nt(pooled, g.param(*rel_w_)), g.param(*rel_b_)));
}

std::pair<ad::Var, ad::Var> CascadeModel::run_tagger(ad::Graph& g, const Tagger& t, ad::Var x) const {
  const ad::Var fwd = g.lstm(x, g.param(*t.fwd_wx), g.param(*t.fwd_wh), g.param(*t.fwd_b), false);
  const ad::Var bwd = g.lstm(x, g.param(*t.bwd_wx), g.param(*t.bwd_wh), g.param(*t.bwd_b), true);
  const ad::Var both[] = {fwd, bwd};
  const ad::Var states = g.concat_cols(both);
  const ad::Var logits = g.add_row(g.matmul_nt(states, g.param(*t.out_w)), g.param(*t.out_b));
  return {states, g.slice_cols(g.softmax_rows(logits), 1, 1)};
}

ad::Var CascadeModel::end_pass(ad::Graph& g, const Tagger& t, ad::Var start_states, ad::Var start_probs,
                               const std::vector<int>* gold_starts) const {
  const int m = static_cast<int>(g.value(start_states).rows());
  std::vector<int> starts;
  if (gold_starts) {
    starts = *gold_starts;
  } else {
    const ad::Matrix& p = g.value(start_probs);
    for (int i = 0; i < m; ++i)
      if (p(i, 0) > config_.span_threshold) starts.push_back(i);
  }
  const auto buckets = relative_distance_buckets(starts, m, config_.max_rel_distance);
  const ad::Var parts[] = {start_states, g.lookup(*pos_emb_, buckets)};
  return run_tagger(g, t, g.concat_cols(parts)).second;
}

CascadeModel::SpanVars CascadeModel::head_probs(ad::Graph& g, ad::Var H, int relation,
                                                const std::vector<int>* gold_starts) const {
  if (relation < 0 || relation >= schema_.size()) throw IndexError("relation id out of range");
  const auto m = g.value(H).rows() - 2;
  const ad::Var interior = g.slice_rows(H, 1, m);
  const int rel[] = {relation};
  const ad::Var parts[] = {interior, g.repeat_rows(g.lookup(*rel_emb_, rel), m)};
  const auto [states, start] = run_tagger(g, head_start_, g.concat_cols(parts));
  return {start, end_pass(g, head_end_, states, start, gold_starts)};
}

CascadeModel::SpanVars CascadeModel::tail_probs(ad::Graph& g, ad::Var H, int relation, ad::Var head_vec,
                                                const std::vector<int>* gold_starts) const {
  if (relation < 0 || relation >= schema_.size()) throw IndexError("relation id out of range");
  if (g.value(head_vec).rows() != 1 || g.value(head_vec).cols() != dim())
    throw ConfigError("head vector must be a 1 x d row");
  const auto m = g.value(H).rows() - 2;
  const ad::Var interior = g.slice_rows(H, 1, m);
  const int rel[] = {relation};
  const ad::Var parts[] = {interior, g.repeat_rows(g.lookup(*rel_emb_, rel), m), g.repeat_rows(head_vec, m)};
  const auto [states, start] = run_tagger(g, tail_start_, g.concat_cols(parts));
  return {start, end_pass(g, tail_end_, states, start, gold_starts)};
}

ad::Var CascadeModel::head_vector(ad::Graph& g, ad::Var H, int first_row, int last_row) const {
  const auto m = g.value(H).rows() - 2;
  if (first_row < 1 || first_row > last_row || last_row > m) throw IndexError("head span outside 1..m");
  return g.scale(g.add(g.slice_rows(H, first_row, 1), g.slice_rows(H, last_row, 1)), 0.5);
}

RelationPrediction predict_relations(const ad::Vector& pooled, const CascadeModel& model, double delta) {
  const auto& w = model.params().get("relation.classifier.weight").value;
  const auto& b = model.params().get("relation.classifier.bias").value;
  if (pooled.size() != w.cols()) throw ConfigError("pooled vector has the wrong dimension");
  RelationPrediction out;
  const ad::Vector logits = w * pooled + b.row(0).transpose();
  out.probs = (1.0 / (1.0 + (-logits.array()).exp())).matrix();
  for (int i = 0; i < out.probs.size(); ++i)
    if (out.probs(i) > delta) out.selected.push_back(i);
  return out;
}

namespace {

double bce(double p, double y, double eps) {
  double l = 0.0;
  if (y != 0.0) l -= y * std::log(std::max(p, eps));
  if (y != 1.0) l -= (1.0 - y) * std::log(std::max(1.0 - p, eps));
  return l;
}

ad::Matrix column(const std::vector<std::uint8_t>& v) {
  ad::Matrix m(static_cast<ad::Index>(v.size()), 1);
  for (std::size_t i = 0; i < v.size(); ++i) m(static_cast<ad::Index>(i), 0) = v[i];
  return m;
}

std::vector<int> ones(const std::vector<std::uint8_t>& v) {
  std::vector<int> out;
  for (std::size_t i = 0; i < v.size(); ++i)
    if (v[i]) out.push_back(static_cast<int>(i));
  return out;
}

}  // namespace

double relation_nll(const ad::Vector& probs, const std::vector<std::uint8_t>& labels, double eps) {
  if (static_cast<std::size_t>(probs.size()) != labels.size()) throw ConfigError("relation_nll: length mismatch");
  double l = 0.0;
  for (ad::Index i = 0; i < probs.size(); ++i) l += bce(probs(i), labels[static_cast<std::size_t>(i)], eps);
  return l;
}

double span_nll(const SpanProbs& probs, const SpanTags& gold, double eps) {
  const auto m = static_cast<std::size_t>(probs.size());
  if (gold.start.size() != m || gold.end.size() != m || static_cast<std::size_t>(probs.end.size()) != m)
    throw ConfigError("span_nll: length mismatch");
  double l = 0.0;
  for (std::size_t i = 0; i < m; ++i) {
    l += bce(probs.start(static_cast<ad::Index>(i)), gold.start[i], eps);
    l += bce(probs.end(static_cast<ad::Index>(i)), gold.end[i], eps);
  }
  return l;
}

std::vector<int> relative_distance_buckets(const std::vector<int>& starts, int m, int max_rel_distance) {
  std::vector<char> is_start(static_cast<std::size_t>(std::max(m, 0)), 0);
  for (int s : starts) {
    if (s < 0 || s >= m) throw IndexError("start position outside [0, m)");
    is_start[static_cast<std::size_t>(s)] = 1;
  }
  std::vector<int> out(static_cast<std::size_t>(std::max(m, 0)), max_rel_distance);
  int last = -1;
  for (int i = 0; i < m; ++i) {
    if (is_start[static_cast<std::size_t>(i)]) last = i;
    if (last >= 0) out[static_cast<std::size_t>(i)] = std::min(i - last, max_rel_distance - 1);
  }
  return out;
}

ad::Vector head_vector(const ad::Matrix& H, int first_row, int last_row) {
  const auto m = H.rows() - 2;
  if (first_row < 1 || first_row > last_row || last_row > m) throw IndexError("head span outside 1..m");
  return 0.5 * (H.row(first_row) + H.row(last_row)).transpose();
}

SpanProbs extract_head_probs(const ad::Matrix& H, int relation, const CascadeModel& model,
                             const std::vector<int>* gold_starts) {
  ad::Graph g;
  const auto v = model.head_probs(g, g.constant(H), relation, gold_starts);
  return {g.value(v.start).col(0), g.value(v.end).col(0)};
}

SpanProbs extract_tail_probs(const ad::Matrix& H, int relation, const ad::Vector& head_vec,
                             const CascadeModel& model, const std::vector<int>* gold_starts) {
  ad::Graph g;
  const auto v = model.tail_probs(g, g.constant(H), relation, g.constant(head_vec.transpose()), gold_starts);
  return {g.value(v.start).col(0), g.value(v.end).col(0)};
}

LossBreakdown joint_loss(const TaggedExample& example, const TokenizedText& tok, CascadeModel& model,
                         const LossOptions& options) {
  const int k = model.num_relations();
  if (static_cast<int>(example.relation_labels.size()) != k) throw ConfigError("example has the wrong relation count");
  if (example.m != tok.m()) throw ConfigError("example does not match the tokenized text");
  const double eps = model.config().prob_clamp;

  ad::Graph g;
  const ad::Var H = options.encoded ? g.constant(*options.encoded) : model.encode(g, tok, options);
  std::vector<ad::Var> terms;
  LossBreakdown out;

  auto bce = [&](ad::Var probs, const ad::Matrix& targets) {
    if (options.elements) {
      const ad::Matrix& p = g.value(probs);
      for (ad::Index i = 0; i < p.size(); ++i)
        options.elements->push_back(-std::log(std::max(targets(i) != 0.0 ? p(i) : 1.0 - p(i), eps)));
    }
    const ad::Var v = g.bernoulli_nll(probs, targets, eps);
    terms.push_back(v);
    return g.scalar(v);
  };
  auto tag_loss = [&](const CascadeModel::SpanVars& v, const SpanTags& tags) {
    return bce(v.start, column(tags.start)) + bce(v.end, column(tags.end));
  };

  if (options.components & kRelationLoss)
    out.relation = bce(model.relation_probs(g, H), ad::Matrix(column(example.relation_labels).transpose()));

  const bool heads = options.components & kHeadLoss;
  const bool tails = options.components & kTailLoss;
  for (const auto& [r, tags] : example.head_tags) {
    if (!heads) break;
    const auto gold_starts = ones(tags.start);
    out.head += tag_loss(model.head_probs(g, H, r, &gold_starts), tags);
  }

  if (heads && options.training && model.config().negative_relations > 0 && options.rng) {
    std::vector<int> negatives;
    for (int r = 0; r < k; ++r)
      if (!example.relation_labels[static_cast<std::size_t>(r)]) negatives.push_back(r);
    for (int n = 0; n < model.config().negative_relations && !negatives.empty(); ++n) {
      const auto pick = static_cast<std::size_t>((*options.rng)() % negatives.size());
      const int r = negatives[pick];
      negatives.erase(negatives.begin() + static_cast<std::ptrdiff_t>(pick));
      const std::vector<int> none;
      out.head += tag_loss(model.head_probs(g, H, r, &none), SpanTags(example.m));
    }
  }

  for (const auto& [key, tags] : example.tail_tags) {
    if (!tails) break;
    const auto& [r, head] = key;
    const ad::Var hv = model.head_vector(g, H, head.start + 1, head.end + 1);
    const auto gold_starts = ones(tags.start);
    out.tail += tag_loss(model.tail_probs(g, H, r, hv, &gold_starts), tags);
  }

  if (terms.empty()) return out;
  const ad::Var total = g.sum(terms);
  out.total = g.scalar(total);
  if (options.backward) g.backward(total);
  return out;
}

}  // namespace cascade
