#include "cascade/cli.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <iomanip>
#include <iostream>
#include <optional>
#include <sstream>

#include "CLI11.hpp"
#include "json.hpp"

#include "cascade/checkpoint.hpp"
#include "cascade/corpus.hpp"
#include "cascade/engine.hpp"
#include "cascade/errors.hpp"
#include "cascade/evaluation.hpp"
#include "cascade/gradcheck.hpp"
#include "cascade/overlap.hpp"
#include "cascade/synthetic.hpp"
#include "cascade/theory.hpp"

namespace cascade::cli {

namespace {

std::string read_text(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open " + path);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void apply_overrides(ModelConfig& cfg, const std::vector<std::string>& sets) {
  for (const auto& kv : sets) {
    const auto eq = kv.find('=');
    if (eq == std::string::npos) throw ConfigError("--set expects key=value, got '" + kv + "'");
    auto trim = [](std::string s) {
      const auto b = s.find_first_not_of(" \t");
      const auto e = s.find_last_not_of(" \t");
      return b == std::string::npos ? std::string() : s.substr(b, e - b + 1);
    };
    cfg.set(trim(kv.substr(0, eq)), trim(kv.substr(eq + 1)));
  }
}

std::string format_double(double v) {
  std::ostringstream ss;
  ss << std::setprecision(10) << v;
  return ss.str();
}

struct TrainArgs {
  std::string train, dev, schema, config, encoder, pretrained, out, report;
  std::uint64_t seed = 0;
  std::vector<std::string> sets;
  std::optional<double> lr, dropout;
  std::optional<int> batch_size, max_epochs, patience;
};

int cmd_train(const TrainArgs& a, std::ostream& out) {
  ModelConfig cfg = a.config.empty() ? ModelConfig{} : ModelConfig::load(a.config);
  if (!a.encoder.empty()) cfg.encoder = encoder_kind_from_string(a.encoder);
  if (!a.pretrained.empty()) cfg.pretrained_path = a.pretrained;
  if (a.lr) cfg.learning_rate = *a.lr;
  if (a.dropout) cfg.dropout = *a.dropout;
  if (a.batch_size) cfg.batch_size = *a.batch_size;
  if (a.max_epochs) cfg.max_epochs = *a.max_epochs;
  if (a.patience) cfg.patience = *a.patience;
  apply_overrides(cfg, a.sets);
  cfg.validate();

  RelationSchema schema;
  ParseOptions po;
  if (!a.schema.empty()) {
    schema = RelationSchema::load(a.schema);
    po.strict = true;
  }
  const auto train_corpus = parse_corpus(a.train, schema, po);
  const auto dev_corpus = a.dev.empty() ? std::vector<Sentence>{} : parse_corpus(a.dev, schema, po);
  if (train_corpus.empty()) throw ConfigError("training corpus " + a.train + " is empty");

  CascadeModel model = build_model(cfg, schema, train_corpus, a.seed);
  TrainOptions opts;
  opts.checkpoint = a.out;
  opts.on_epoch = [&out](const EpochRecord& r) {
    out << "epoch " << r.epoch << " loss " << format_double(r.loss);
    if (r.dev_f1) out << " dev_f1 " << std::fixed << std::setprecision(4) << *r.dev_f1 << std::defaultfloat;
    out << '\n' << std::flush;
  };
  const TrainReport report = train(model, train_corpus, dev_corpus, a.seed, opts);
  out << "best epoch " << report.best_epoch << ", checkpoint " << report.best_checkpoint << '\n';
  if (!a.report.empty()) {
    std::ofstream f(a.report, std::ios::binary);
    if (!f) throw IoError("cannot write " + a.report);
    f << report.to_json() << '\n';
  }
  return kExitOk;
}

struct ExtractArgs {
  std::string model, input, output;
  std::optional<double> delta, span_threshold;
  bool fallback = false;
};

int cmd_extract(const ExtractArgs& a, std::ostream& out) {
  const CascadeModel model = load_checkpoint(a.model);
  DecodeOptions opts = DecodeOptions::from(model.config());
  if (a.delta) opts.delta = *a.delta;
  if (a.span_threshold) opts.span_threshold = *a.span_threshold;
  if (a.fallback) opts.fallback = true;
  if (!(opts.delta >= 0.0 && opts.delta < 1.0)) throw ConfigError("--delta must lie in [0, 1)");
  if (!(opts.span_threshold >= 0.0 && opts.span_threshold < 1.0))
    throw ConfigError("--span-threshold must lie in [0, 1)");
  RelationSchema schema = model.schema();
  const auto corpus = parse_corpus(a.input, schema);
  predict_corpus(corpus, model, opts, a.output);
  out << "wrote " << corpus.size() << " records to " << a.output << '\n';
  return kExitOk;
}

struct EvaluateArgs {
  std::string pred, gold, mode = "exact", breakdown, report, format = "table";
  bool elements = false;
};

int cmd_evaluate(const EvaluateArgs& a, std::ostream& out) {
  const MatchMode mode = match_mode_from_string(a.mode);
  const ReportFormat format = report_format_from_string(a.format);
  std::optional<BreakdownAxis> axis;
  if (!a.breakdown.empty()) axis = breakdown_axis_from_string(a.breakdown);

  RelationSchema schema;
  const auto pred = parse_corpus(a.pred, schema);
  const auto gold = parse_corpus(a.gold, schema);
  if (pred.size() != gold.size())
    throw AlignmentError(a.pred + " has " + std::to_string(pred.size()) + " records but " + a.gold + " has " +
                         std::to_string(gold.size()));

  Report report;
  report.mode = mode;
  report.config_hash = fnv1a_hex("mode=" + to_string(mode) + ";elements=" + (a.elements ? "1" : "0") +
                                 ";breakdown=" + a.breakdown + ";gold=" + fnv1a_hex(read_text(a.gold)));
  const auto p = triples_of(pred);
  const auto g = triples_of(gold);
  report.rows.push_back({"overall", "all", score(p, g, mode)});
  if (a.elements)
    for (const auto& [e, r] : element_scores(p, g, mode)) report.rows.push_back({"element", to_string(e), r});
  if (axis) {
    const auto table = breakdown_scores(pred, gold, mode, *axis);
    const std::string section = *axis == BreakdownAxis::overlap ? "overlap" : "count";
    for (const auto& [cat, r] : table.rows) report.rows.push_back({section, cat, r});
  }
  emit_report(report, out, format);
  if (!a.report.empty()) emit_report(report, std::filesystem::path(a.report), format);
  return kExitOk;
}

struct StatsArgs {
  std::vector<std::string> data;
  std::string schema;
};

int cmd_stats(const StatsArgs& a, std::ostream& out) {
  RelationSchema schema;
  ParseOptions po;
  if (!a.schema.empty()) {
    schema = RelationSchema::load(a.schema);
    po.strict = true;
  }
  std::vector<CorpusStats> rows;
  for (const auto& path : a.data) {
    const auto corpus = parse_corpus(path, schema, po);
    rows.push_back(corpus_stats(corpus, schema, std::filesystem::path(path).stem().string()));
  }
  write_stats_table(out, rows);
  return kExitOk;
}

struct SimulateArgs {
  GaussianSimParams params;
  double r_obs = 1.0;
  long samples = 1000000;
  std::uint64_t seed = 0;
  std::optional<double> band;
};

int cmd_simulate(const SimulateArgs& a, std::ostream& out) {
  a.params.validate();
  const double band = a.band ? *a.band : 0.01 * std::sqrt(a.params.p22);
  const SimResult sim = monte_carlo_conditional(a.params, a.r_obs, band, a.samples, a.seed);
  const MseComparison mse = mse_comparison(a.params, a.samples, a.seed);
  nlohmann::ordered_json j = nlohmann::ordered_json::parse(sim.to_json());
  j["band"] = band;
  j["mse_conditional_stderr"] = mse.stderr_conditional;
  j["mse_unconditional_stderr"] = mse.stderr_unconditional;
  j["mse_difference_stderr"] = mse.stderr_difference;
  j["residual_mean"] = mse.residual_mean;
  j["residual_stderr"] = mse.residual_stderr;
  out << j.dump(2) << '\n';
  return kExitOk;
}

struct GradcheckArgs {
  std::string config;
  std::uint64_t seed = 0;
  double eps = 1e-5;
  double tol = 1e-4;
  int relations = 3;
  long max_entries = 0;
};

int cmd_gradcheck(const GradcheckArgs& a, std::ostream& out) {
  ModelConfig cfg = gradcheck_config();
  if (!a.config.empty()) cfg.apply_text(read_text(a.config), a.config);
  cfg.dropout = 0.0;
  cfg.validate();
  const auto batch = gradcheck_batch(a.seed, a.relations);
  CascadeModel model =
      CascadeModel::create_toy(cfg, synthetic_schema(a.relations), build_word_vocabulary(batch), a.seed);
  GradCheckOptions opts;
  opts.step = a.eps;
  opts.tolerance = a.tol;
  opts.max_entries = a.max_entries;
  const auto report = gradient_check(model, batch, opts);
  out << std::left << std::setw(24) << "group" << std::right << std::setw(10) << "entries" << std::setw(16)
      << "max_rel_error" << '\n';
  for (const auto& gcheck : report.groups)
    out << std::left << std::setw(24) << gcheck.group << std::right << std::setw(10) << gcheck.entries
        << std::setw(16) << std::scientific << std::setprecision(3) << gcheck.max_rel_error << std::defaultfloat
        << '\n';
  out << (report.passed ? "PASS" : "FAIL") << " max relative error " << std::scientific << std::setprecision(3)
      << report.max_rel_error << " (tolerance " << a.tol << ")" << std::defaultfloat << '\n';
  return report.passed ? kExitOk : kExitRuntime;
}

}  // namespace

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"Joint entity and relation extraction with a cascade dual decoder", "cascade"};
  app.require_subcommand(1);
  app.fallthrough(false);

  TrainArgs ta;
  auto* train_cmd = app.add_subcommand("train", "Train a model and write a checkpoint");
  train_cmd->add_option("--train", ta.train, "Training corpus (JSON lines)")->required();
  train_cmd->add_option("--dev", ta.dev, "Development corpus used for early stopping");
  train_cmd->add_option("--schema", ta.schema, "Relation schema; relations outside it are rejected");
  train_cmd->add_option("--config", ta.config, "Config file of key = value lines");
  train_cmd->add_option("--encoder", ta.encoder, "Encoder kind")->check(CLI::IsMember({"toy", "pretrained"}));
  train_cmd->add_option("--pretrained", ta.pretrained, "Pretrained encoder directory");
  train_cmd->add_option("--seed", ta.seed, "Random seed")->capture_default_str();
  train_cmd->add_option("--out", ta.out, "Checkpoint path")->required();
  train_cmd->add_option("--report", ta.report, "Training report (JSON)");
  train_cmd->add_option("--lr", ta.lr, "Learning rate (default 2e-5)");
  train_cmd->add_option("--batch-size", ta.batch_size, "Mini-batch size (default 8)");
  train_cmd->add_option("--max-epochs", ta.max_epochs, "Epoch limit (default 100)");
  train_cmd->add_option("--patience", ta.patience, "Early-stopping patience in epochs (default 10)");
  train_cmd->add_option("--dropout", ta.dropout, "Dropout rate (default 0.4)");
  train_cmd->add_option("--set", ta.sets, "Config override key=value; repeatable");

  ExtractArgs ea;
  auto* extract_cmd = app.add_subcommand("extract", "Extract triples with a trained model");
  extract_cmd->add_option("--model", ea.model, "Checkpoint path")->required();
  extract_cmd->add_option("--input", ea.input, "Input corpus (JSON lines)")->required();
  extract_cmd->add_option("--output", ea.output, "Prediction file")->required();
  extract_cmd->add_option("--delta", ea.delta, "Relation threshold (default: from checkpoint, 0.5)");
  extract_cmd->add_option("--span-threshold", ea.span_threshold, "Start/end tag threshold (default: from checkpoint, 0.5)");
  extract_cmd->add_flag("--fallback", ea.fallback, "Keep unpaired starts as single-token entities");

  EvaluateArgs va;
  auto* eval_cmd = app.add_subcommand("evaluate", "Score predictions against gold triples");
  eval_cmd->add_option("--pred", va.pred, "Prediction file")->required();
  eval_cmd->add_option("--gold", va.gold, "Gold file")->required();
  eval_cmd->add_option("--mode", va.mode, "Match mode")->check(CLI::IsMember({"partial", "exact"}))->capture_default_str();
  eval_cmd->add_flag("--elements", va.elements, "Also score (h,t), r and (h,r,t)");
  eval_cmd->add_option("--breakdown", va.breakdown, "Break down by overlap pattern or gold triple count")
      ->check(CLI::IsMember({"overlap", "count"}));
  eval_cmd->add_option("--report", va.report, "Also write the report to this file");
  eval_cmd->add_option("--format", va.format, "Report format")
      ->check(CLI::IsMember({"table", "delimited"}))
      ->capture_default_str();

  StatsArgs sa;
  auto* stats_cmd = app.add_subcommand("stats", "Overlap statistics of corpus files");
  stats_cmd->add_option("--data", sa.data, "Corpus file; repeatable")->required();
  stats_cmd->add_option("--schema", sa.schema, "Relation schema");

  SimulateArgs ma;
  auto* sim_cmd = app.add_subcommand("simulate-posterior", "Monte Carlo check of the Gaussian conditional estimate");
  sim_cmd->add_option("--mh", ma.params.m_h, "Mean of h")->capture_default_str();
  sim_cmd->add_option("--mr", ma.params.m_r, "Mean of r")->capture_default_str();
  sim_cmd->add_option("--p11", ma.params.p11, "Variance of h")->capture_default_str();
  sim_cmd->add_option("--p12", ma.params.p12, "Covariance of h and r")->capture_default_str();
  sim_cmd->add_option("--p22", ma.params.p22, "Variance of r")->capture_default_str();
  sim_cmd->add_option("--robs", ma.r_obs, "Observed r")->capture_default_str();
  sim_cmd->add_option("--samples", ma.samples, "Number of joint samples")->capture_default_str();
  sim_cmd->add_option("--seed", ma.seed, "Random seed")->capture_default_str();
  sim_cmd->add_option("--band", ma.band, "Conditioning half-width (default 0.01 * sqrt(P22))");

  GradcheckArgs ga;
  auto* grad_cmd = app.add_subcommand("gradcheck", "Compare analytic and finite-difference gradients");
  grad_cmd->add_option("--config", ga.config, "Config overrides applied to the check setup");
  grad_cmd->add_option("--seed", ga.seed, "Random seed")->capture_default_str();
  grad_cmd->add_option("--eps", ga.eps, "Finite-difference step")->capture_default_str();
  grad_cmd->add_option("--tol", ga.tol, "Relative error tolerance")->capture_default_str();
  grad_cmd->add_option("--relations", ga.relations, "Number of relations")->capture_default_str();
  grad_cmd->add_option("--max-entries", ga.max_entries, "Entries checked per tensor (0 = all)")->capture_default_str();

  try {
    std::vector<std::string> reversed(args.rbegin(), args.rend());
    app.parse(reversed);
  } catch (const CLI::ParseError& e) {
    if (e.get_exit_code() == 0) {
      app.exit(e, out, err);
      return kExitOk;
    }
    app.exit(e, out, err);
    return kExitUsage;
  }

  try {
    if (train_cmd->parsed()) return cmd_train(ta, out);
    if (extract_cmd->parsed()) return cmd_extract(ea, out);
    if (eval_cmd->parsed()) return cmd_evaluate(va, out);
    if (stats_cmd->parsed()) return cmd_stats(sa, out);
    if (sim_cmd->parsed()) return cmd_simulate(ma, out);
    if (grad_cmd->parsed()) return cmd_gradcheck(ga, out);
  } catch (const std::exception& e) {
    err << "error: " << e.what() << '\n';
    return kExitRuntime;
  }
  return kExitUsage;
}

int main(int argc, char** argv) {
  std::vector<std::string> args;
  for (int i = 1; i < argc; ++i) args.emplace_back(argv[i]);
  return run(args, std::cout, std::cerr);
}

}  // namespace cascade::cli
