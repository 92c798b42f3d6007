#include "cascade/engine.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <map>
#include <numeric>
#include <random>
#include <sstream>
#include <tuple>

#include "json.hpp"

#include "cascade/checkpoint.hpp"
#include "cascade/errors.hpp"
#include "cascade/evaluation.hpp"

namespace cascade {

std::vector<TokenSpan> pair_spans(const SpanProbs& probs, double threshold, bool fallback) {
  const int m = probs.size();
  std::vector<int> starts;
  for (int i = 0; i < m; ++i)
    if (probs.start(i) > threshold) starts.push_back(i);
  std::vector<TokenSpan> spans;
  for (std::size_t k = 0; k < starts.size(); ++k) {
    const int s = starts[k];
    const int limit = k + 1 < starts.size() ? starts[k + 1] : m;
    int e = -1;
    for (int j = s; j < limit; ++j) {
      if (probs.end(j) > threshold) {
        e = j;
        break;
      }
    }
    if (e >= 0)
      spans.push_back({s, e});
    else if (fallback)
      spans.push_back({s, s});
  }
  return spans;
}

DecodeOptions DecodeOptions::from(const ModelConfig& config) {
  return {config.delta, config.span_threshold, config.unmatched_start_fallback};
}

namespace {

ExtractedEntity entity_of(const TokenSpan& span, const TokenizedText& tok) {
  ExtractedEntity e;
  e.tokens = span;
  e.words = to_word_span(span, tok);
  for (int w = e.words.start; w <= e.words.end; ++w) {
    if (w > e.words.start) e.text += ' ';
    e.text += tok.words[static_cast<std::size_t>(w)];
  }
  return e;
}

}  // namespace

std::vector<ExtractedTriple> decode_sentence(const TokenizedText& tok, const CascadeModel& model,
                                             const DecodeOptions& options) {
  const EncoderOutput enc = model.encoder().run(tok);
  const RelationPrediction rel = predict_relations(enc.pooled, model, options.delta);
  std::vector<ExtractedTriple> out;
  std::map<std::tuple<std::string, std::string, std::string>, std::size_t> seen;
  for (int r : rel.selected) {
    const SpanProbs hp = extract_head_probs(enc.H, r, model);
    for (const TokenSpan& head : pair_spans(hp, options.span_threshold, options.fallback)) {
      const ad::Vector hv = head_vector(enc.H, head.start + 1, head.end + 1);
      const SpanProbs tp = extract_tail_probs(enc.H, r, hv, model);
      const double head_score = rel.probs(r) * hp.start(head.start) * hp.end(head.end);
      const ExtractedEntity head_entity = entity_of(head, tok);
      for (const TokenSpan& tail : pair_spans(tp, options.span_threshold, options.fallback)) {
        ExtractedTriple t{head_entity, model.schema().name(r), entity_of(tail, tok),
                          head_score * tp.start(tail.start) * tp.end(tail.end)};
        auto key = std::make_tuple(t.head.text, t.relation, t.tail.text);
        if (auto it = seen.find(key); it != seen.end()) {
          if (t.score > out[it->second].score) out[it->second] = std::move(t);
          continue;
        }
        seen.emplace(std::move(key), out.size());
        out.push_back(std::move(t));
      }
    }
  }
  return out;
}

std::vector<ExtractedTriple> decode_sentence(const TokenizedText& tok, const CascadeModel& model) {
  return decode_sentence(tok, model, DecodeOptions::from(model.config()));
}

Sentence to_sentence(const Sentence& sentence, const std::vector<ExtractedTriple>& triples) {
  Sentence out = sentence;
  out.triples.clear();
  for (const auto& t : triples) {
    Triple triple;
    triple.head = {t.head.text, t.head.words};
    triple.relation = t.relation;
    triple.tail = {t.tail.text, t.tail.words};
    triple.score = t.score;
    out.triples.push_back(std::move(triple));
  }
  return out;
}

std::vector<Sentence> predict_corpus(const std::vector<Sentence>& corpus, const CascadeModel& model,
                                     const DecodeOptions& options) {
  std::vector<Sentence> out;
  out.reserve(corpus.size());
  for (const auto& s : corpus) out.push_back(to_sentence(s, decode_sentence(model.tokenize(s), model, options)));
  return out;
}

std::vector<Sentence> predict_corpus(const std::vector<Sentence>& corpus, const CascadeModel& model) {
  return predict_corpus(corpus, model, DecodeOptions::from(model.config()));
}

void predict_corpus(const std::vector<Sentence>& corpus, const CascadeModel& model, const DecodeOptions& options,
                    const std::filesystem::path& output) {
  write_corpus(output, predict_corpus(corpus, model, options));
}

std::string TrainReport::to_json() const {
  nlohmann::ordered_json j;
  j["seed"] = seed;
  j["best_epoch"] = best_epoch;
  j["best_dev_f1"] = best_dev_f1;
  j["best_checkpoint"] = best_checkpoint;
  j["stopped_early"] = stopped_early;
  auto& ep = j["epochs"] = nlohmann::ordered_json::array();
  for (const auto& e : epochs) {
    nlohmann::ordered_json r;
    r["epoch"] = e.epoch;
    r["loss"] = e.loss;
    r["dev_f1"] = e.dev_f1 ? nlohmann::ordered_json(*e.dev_f1) : nlohmann::ordered_json(nullptr);
    ep.push_back(std::move(r));
  }
  j["config"] = config_snapshot;
  return j.dump(2);
}

Adam::Adam(double lr, double beta1, double beta2, double eps) : lr_(lr), beta1_(beta1), beta2_(beta2), eps_(eps) {}

void Adam::step(ad::ParameterStore& store) {
  if (m_.empty()) {
    for (auto& [name, p] : store) {
      m_.push_back(ad::Matrix::Zero(p.value.rows(), p.value.cols()));
      v_.push_back(ad::Matrix::Zero(p.value.rows(), p.value.cols()));
    }
  }
  ++t_;
  const double c1 = 1.0 - std::pow(beta1_, static_cast<double>(t_));
  const double c2 = 1.0 - std::pow(beta2_, static_cast<double>(t_));
  std::size_t i = 0;
  for (auto& [name, p] : store) {
    auto& m = m_[i];
    auto& v = v_[i];
    ++i;
    m = beta1_ * m + (1.0 - beta1_) * p.grad;
    v = beta2_ * v + (1.0 - beta2_) * p.grad.cwiseProduct(p.grad);
    p.value.array() -= lr_ * (m.array() / c1) / ((v.array() / c2).sqrt() + eps_);
  }
}

CascadeModel build_model(const ModelConfig& config, const RelationSchema& schema,
                         const std::vector<Sentence>& train_corpus, std::uint64_t seed) {
  config.validate();
  if (config.encoder == EncoderKind::pretrained) return CascadeModel::create_pretrained(config, schema, seed);
  return CascadeModel::create_toy(config, schema, build_word_vocabulary(train_corpus), seed);
}

namespace {

struct Prepared {
  TokenizedText tok;
  TaggedExample example;
};

std::vector<Prepared> prepare(const std::vector<Sentence>& corpus, const CascadeModel& model) {
  std::vector<Prepared> out;
  out.reserve(corpus.size());
  for (std::size_t i = 0; i < corpus.size(); ++i) {
    try {
      Prepared p;
      p.tok = model.tokenize(corpus[i]);
      p.example = build_tagged_example(corpus[i], p.tok, model.schema());
      out.push_back(std::move(p));
    } catch (const Error& e) {
      throw AnnotationError("training sentence " + std::to_string(i + 1) + ": " + e.what());
    }
  }
  return out;
}

std::vector<ad::Matrix> snapshot(const ad::ParameterStore& store) {
  std::vector<ad::Matrix> out;
  for (const auto& [name, p] : store) out.push_back(p.value);
  return out;
}

void restore(ad::ParameterStore& store, const std::vector<ad::Matrix>& values) {
  std::size_t i = 0;
  for (auto& [name, p] : store) p.value = values[i++];
}

}  // namespace

TrainReport train(CascadeModel& model, const std::vector<Sentence>& train_corpus,
                  const std::vector<Sentence>& dev_corpus, std::uint64_t seed, const TrainOptions& options) {
  if (train_corpus.empty()) throw ConfigError("training corpus is empty");
  const ModelConfig& cfg = model.config();
  cfg.validate();
  const auto data = prepare(train_corpus, model);

  TrainReport report;
  report.seed = seed;
  report.config_snapshot = cfg.to_text();

  std::mt19937_64 rng(seed);
  Adam adam(cfg.learning_rate, cfg.adam_beta1, cfg.adam_beta2, cfg.adam_eps);
  auto& store = model.params();
  std::vector<std::size_t> order(data.size());
  std::iota(order.begin(), order.end(), 0);

  std::vector<ad::Matrix> best;
  double best_f1 = -1.0;
  int since_best = 0;
  const auto batch = static_cast<std::size_t>(cfg.batch_size);

  for (int epoch = 1; epoch <= cfg.max_epochs; ++epoch) {
    const auto t0 = std::chrono::steady_clock::now();
    std::shuffle(order.begin(), order.end(), rng);
    double total = 0.0;
    for (std::size_t b = 0; b < order.size(); b += batch) {
      const std::size_t e = std::min(order.size(), b + batch);
      store.zero_grad();
      double batch_loss = 0.0;
      for (std::size_t i = b; i < e; ++i) {
        const auto& p = data[order[i]];
        LossOptions lo;
        lo.training = true;
        lo.rng = &rng;
        batch_loss += joint_loss(p.example, p.tok, model, lo).total;
      }
      if (!std::isfinite(batch_loss))
        throw DivergenceError("loss became non-finite at epoch " + std::to_string(epoch) + ", batch starting at " +
                              std::to_string(b / batch + 1) + "; lower learning_rate or check the data");
      store.scale_grad(1.0 / static_cast<double>(e - b));
      adam.step(store);
      total += batch_loss;
    }

    EpochRecord rec;
    rec.epoch = epoch;
    rec.loss = total / static_cast<double>(data.size());
    if (!dev_corpus.empty()) {
      const auto pred = predict_corpus(dev_corpus, model);
      rec.dev_f1 = score(triples_of(pred), triples_of(dev_corpus), MatchMode::exact).f1;
    }
    rec.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    report.epochs.push_back(rec);
    if (options.on_epoch) options.on_epoch(rec);

    if (!rec.dev_f1) continue;
    if (*rec.dev_f1 > best_f1) {
      best_f1 = *rec.dev_f1;
      report.best_epoch = epoch;
      best = snapshot(store);
      since_best = 0;
    } else if (++since_best >= cfg.patience) {
      report.stopped_early = true;
      break;
    }
    if (best_f1 >= cfg.stop_at_dev_f1) {
      report.stopped_early = true;
      break;
    }
  }

  if (!best.empty()) {
    restore(store, best);
    report.best_dev_f1 = best_f1;
  } else {
    report.best_epoch = static_cast<int>(report.epochs.size());
  }
  store.zero_grad();
  if (!options.checkpoint.empty()) {
    save_checkpoint(model, options.checkpoint);
    report.best_checkpoint = options.checkpoint.string();
  }
  return report;
}

}  // namespace cascade
