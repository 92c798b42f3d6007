#include "cascade/gradcheck.hpp"

#include <algorithm>
#include <cmath>
#include <map>

#include "cascade/synthetic.hpp"

namespace cascade {

namespace {

struct Item {
  TokenizedText tok;
  TaggedExample example;
  ad::Matrix H;
};

double total_loss(const std::vector<Item>& items, CascadeModel& model) {
  double sum = 0.0;
  for (const auto& it : items) sum += joint_loss(it.example, it.tok, model).total;
  return sum;
}

/// Per-element cross-entropy values of the requested loss components.
std::vector<double> loss_elements(const std::vector<Item>& items, CascadeModel& model, unsigned components,
                                  bool reuse_encoding) {
  std::vector<double> out;
  LossOptions lo;
  lo.backward = false;
  lo.components = components;
  lo.elements = &out;
  for (const auto& it : items) {
    lo.encoded = reuse_encoding ? &it.H : nullptr;
    joint_loss(it.example, it.tok, model, lo);
  }
  return out;
}

/// Loss components a parameter group can influence. Anything it misses
/// shows up as a mismatch, since the analytic side uses the full loss.
unsigned components_of(const std::string& group) {
  if (group == "pooler" || group == "relation_classifier") return kRelationLoss;
  if (group == "tagger_head_start" || group == "tagger_head_end") return kHeadLoss;
  if (group == "tagger_tail_start" || group == "tagger_tail_end") return kTailLoss;
  if (group == "relation_embedding" || group == "position_embedding") return kHeadLoss | kTailLoss;
  return kAllLosses;
}

}  // namespace

GradCheckReport gradient_check(CascadeModel& model, const std::vector<Sentence>& batch,
                               const GradCheckOptions& options) {
  std::vector<Item> items;
  for (const auto& s : batch) {
    Item it;
    it.tok = model.tokenize(s);
    it.example = build_tagged_example(s, it.tok, model.schema());
    ad::Graph g;
    it.H = g.value(model.encode(g, it.tok));
    items.push_back(std::move(it));
  }
  auto& store = model.params();
  store.zero_grad();
  GradCheckReport report;
  report.loss = total_loss(items, model);

  std::map<std::string, GroupCheck> groups;
  for (auto& [name, p] : store) {
    const std::string group = CascadeModel::group_of(name);
    auto& gc = groups[group];
    const unsigned components = components_of(group);
    // the encoder output only moves with encoder weights; the pooler acts
    // on top of it
    const bool reuse = group != "encoder";
    gc.group = group;
    const long n = static_cast<long>(p.value.size());
    const long count = options.max_entries > 0 ? std::min(n, options.max_entries) : n;
    for (long c = 0; c < count; ++c) {
      // evenly spread when sampling
      const long idx = count == n ? c : static_cast<long>((static_cast<double>(c) + 0.5) * n / count);
      double& x = p.value.data()[idx];
      const double saved = x;
      // differencing element by element keeps the cancellation error at
      // the scale of a single cross-entropy term
      x = saved + options.step;
      const auto up = loss_elements(items, model, components, reuse);
      x = saved - options.step;
      const auto down = loss_elements(items, model, components, reuse);
      x = saved;
      long double diff = 0.0L;
      for (std::size_t i = 0; i < up.size(); ++i) diff += static_cast<long double>(up[i]) - down[i];
      const double numeric = static_cast<double>(diff / (2.0L * options.step));
      const double analytic = p.grad.data()[idx];
      const double abs_err = std::abs(analytic - numeric);
      const double rel = abs_err / std::max({std::abs(analytic), std::abs(numeric), options.floor});
      ++gc.entries;
      gc.max_abs_error = std::max(gc.max_abs_error, abs_err);
      if (rel > gc.max_rel_error || gc.worst_index < 0) {
        gc.max_rel_error = std::max(gc.max_rel_error, rel);
        gc.worst_parameter = name;
        gc.worst_index = idx;
      }
    }
  }
  for (auto& [g, gc] : groups) {
    report.max_rel_error = std::max(report.max_rel_error, gc.max_rel_error);
    report.groups.push_back(gc);
  }
  report.passed = report.max_rel_error < options.tolerance;
  store.zero_grad();
  return report;
}

ModelConfig gradcheck_config() {
  ModelConfig c;
  c.d = 32;
  c.embedding_dim = 8;
  c.lstm_hidden = 16;
  c.relation_emb_dim = 8;
  c.pos_emb_dim = 8;
  c.max_rel_distance = 16;
  c.dropout = 0.0;
  return c;
}

std::vector<Sentence> gradcheck_batch(std::uint64_t seed, int num_relations) {
  SyntheticSpec spec;
  spec.n_sentences = 2;
  spec.num_relations = num_relations;
  spec.frac_normal = 0.0;
  spec.frac_epo = 0.5;
  spec.frac_seo = 0.5;
  return generate_synthetic_corpus(spec, seed);
}

}  // namespace cascade
