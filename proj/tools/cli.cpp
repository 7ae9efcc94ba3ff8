#include "cli.hpp"

#include <filesystem>
#include <fstream>
#include <iomanip>
#include <map>
#include <memory>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "chunkalign/chunkalign.hpp"
#include "json.hpp"

namespace chunkalign::cli {

namespace {

namespace fs = std::filesystem;

struct Options {
  std::string corpus, vectors, contextual, triples, annotations;
  std::string eval_corpus, eval_contextual, eval_annotations;
  std::string checkpoint, alignments, out;
  std::string preset = "M2";
  double rho = 0.0;
  Eigen::Index dim = 100;
  double lambda = 0.6;
  double epsilon = 1e-8;
  std::string epsilon_placement = "kernel";
  int sinkhorn_iters = 20;
  double tau = 0.8;
  double c1 = 1.0, c2 = 1.0;
  std::uint64_t seed = 1;
  int seeds = 1;
  int epochs = 100;
  int patience = 5;
  double lr = 1e-3;
  bool log_timing = false;
  bool no_syntax_rule = false;
  bool mutual_argmax = false;
  std::vector<double> grid_rho = {0, 1, 2, 4};
  std::vector<Eigen::Index> grid_dim = {100, 150, 200, 768};
  // synthesize
  std::size_t pairs = 200;
  std::size_t vector_dim = 50;
  double sigma = 0.1;
  std::string mode = "identity";
  double unaligned_fraction = 0.0;
  std::size_t near_duplicates = 0;
  std::size_t min_chunks = 2, max_chunks = 6;
};

/// Everything read from disk for one corpus.
struct Inputs {
  std::vector<ChunkedPair> pairs;
  std::optional<EmbeddingTable> table;
  std::optional<ContextualStore> contextual;
};

void require_file(const std::string& path, const char* flag) {
  if (path.empty()) throw ConfigError(std::string("missing required flag ") + flag);
  if (!fs::exists(path)) throw ConfigError(std::string(flag) + ": no such file '" + path + "'");
}

fs::path out_dir(const Options& o) {
  if (o.out.empty()) throw ConfigError("missing required flag --out");
  fs::create_directories(o.out);
  return fs::path(o.out);
}

std::ofstream open_out(const fs::path& p) {
  std::ofstream f(p);
  if (!f) throw Error("cannot write '" + p.string() + "'");
  return f;
}

ModelConfig model_config(const Options& o) {
  ModelConfig c;
  c.preset = parse_preset(o.preset);
  c.proj_dim = o.dim;
  c.rho = o.rho;
  c.syntax_rule = !o.no_syntax_rule;
  c.sinkhorn.lambda = o.lambda;
  c.sinkhorn.epsilon = o.epsilon;
  c.sinkhorn.iterations = o.sinkhorn_iters;
  if (o.epsilon_placement == "kernel")
    c.sinkhorn.placement = EpsilonPlacement::Kernel;
  else if (o.epsilon_placement == "cost")
    c.sinkhorn.placement = EpsilonPlacement::Cost;
  else
    throw ConfigError("--epsilon-placement must be 'kernel' or 'cost'");
  c.loss.c1_weight = o.c1;
  c.loss.c2_weight = o.c2;
  c.synsim.tau = o.tau;
  c.mutual_argmax = o.mutual_argmax;
  if (o.dim <= 0) throw ConfigError("--dim must be positive");
  if (o.rho < 0) throw ConfigError("--rho must be non-negative");
  if (o.tau < 0 || o.tau > 1) throw ConfigError("--tau must lie in [0, 1]");
  c.sinkhorn.check();
  c.loss.check();
  return c;
}

TrainConfig train_config(const Options& o) {
  TrainConfig t;
  t.adam.learning_rate = o.lr;
  t.max_epochs = o.epochs;
  t.patience = o.patience;
  t.seed = o.seed;
  if (!(o.lr > 0)) throw ConfigError("--lr must be positive");
  if (o.seeds < 1) throw ConfigError("--seeds must be at least 1");
  return t;
}

std::vector<ChunkedPair> read_corpus(const std::string& path, const std::string& annotations, const char* flag) {
  require_file(path, flag);
  auto pairs = load_corpus(path);
  if (!annotations.empty()) {
    std::ifstream in(annotations);
    if (!in) throw ConfigError("cannot open annotation file '" + annotations + "'");
    merge_parse_annotations(pairs, in);
  }
  return pairs;
}

/// Loads the feature source the preset needs, rejecting inputs it cannot use.
Inputs read_inputs(const std::string& corpus, const std::string& annotations, const std::string& contextual,
                   const Options& o, const ModelConfig& cfg, const char* corpus_flag, const char* ctx_flag) {
  Inputs in;
  in.pairs = read_corpus(corpus, annotations, corpus_flag);
  if (cfg.traits().representation == ChunkMode::Mean) {
    if (o.vectors.empty())
      throw ConfigError("preset " + std::string(preset_name(cfg.preset)) + " needs word vectors (--vectors)");
    require_file(o.vectors, "--vectors");
    in.table = load_vectors(o.vectors);
  } else {
    if (contextual.empty())
      throw ConfigError("preset " + std::string(preset_name(cfg.preset)) + " needs contextual annotations (" +
                        ctx_flag + ")");
    require_file(contextual, ctx_flag);
    in.contextual = load_contextual(contextual);
  }
  return in;
}

FeatureSource source(const Inputs& in) {
  return {in.table ? &*in.table : nullptr, in.contextual ? &*in.contextual : nullptr};
}

std::optional<RelationLexicon> read_lexicon(const Options& o) {
  if (o.triples.empty()) return std::nullopt;
  require_file(o.triples, "--triples");
  return load_triples(o.triples);
}

std::string fixed(double v) {
  std::ostringstream s;
  s << std::fixed << std::setprecision(6) << v;
  return s.str();
}

void write_log_line(std::ostream& log, std::uint64_t seed, const EpochLog& e, bool timing) {
  nlohmann::json j = {{"seed", seed}, {"epoch", e.epoch}, {"loss", e.loss}, {"train_f1", e.train_f1}};
  if (timing) j["wall_seconds"] = e.wall_seconds;
  log << j.dump() << '\n';
}

std::vector<std::uint64_t> seed_list(const Options& o) {
  std::vector<std::uint64_t> s;
  for (int k = 0; k < o.seeds; ++k) s.push_back(o.seed + static_cast<std::uint64_t>(k));
  return s;
}

// ---------------------------------------------------------------------------
// Commands

int run_prepare(const Options& o, std::ostream& out) {
  const auto pairs = read_corpus(o.corpus, o.annotations, "--corpus");
  const fs::path dir = out_dir(o);
  save_canonical(pairs, (dir / "corpus.jsonl").string());
  out << "wrote " << pairs.size() << " pairs to " << (dir / "corpus.jsonl").string() << '\n';
  return 0;
}

int run_synthesize(const Options& o, std::ostream& out) {
  SyntheticSpec spec;
  spec.pairs = o.pairs;
  spec.dim = o.vector_dim;
  spec.sigma = o.sigma;
  spec.min_chunks = o.min_chunks;
  spec.max_chunks = o.max_chunks;
  spec.unaligned_fraction = o.unaligned_fraction;
  spec.near_duplicates = o.near_duplicates;
  if (o.mode == "identity")
    spec.mode = SyntheticMode::Identity;
  else if (o.mode == "permutation")
    spec.mode = SyntheticMode::Permutation;
  else if (o.mode == "unaligned")
    spec.mode = SyntheticMode::Unaligned;
  else
    throw ConfigError("--mode must be identity, permutation or unaligned");
  const SyntheticCorpus c = generate(spec, o.seed);
  const fs::path dir = out_dir(o);
  save_canonical(c.pairs, (dir / "corpus.jsonl").string());
  save_vectors(c.table, (dir / "vectors.txt").string());
  out << "wrote " << c.pairs.size() << " pairs and " << c.table.size() << " vectors to " << dir.string() << '\n';
  return 0;
}

struct TrainedRun {
  std::uint64_t seed;
  FitResult fit;
  std::optional<CorpusReport> eval;
};

/// Trains one model per seed; evaluates on the held-out corpus when one is given.
std::vector<TrainedRun> train_runs(const Options& o, const ModelConfig& cfg, std::ostream* log) {
  const Inputs train = read_inputs(o.corpus, o.annotations, o.contextual, o, cfg, "--corpus", "--contextual");
  const auto lex = read_lexicon(o);
  const auto examples = build_examples(train.pairs, source(train), cfg, lex ? &*lex : nullptr);

  std::optional<Inputs> test;
  std::vector<PairExample> test_examples;
  if (!o.eval_corpus.empty()) {
    test = read_inputs(o.eval_corpus, o.eval_annotations, o.eval_contextual, o, cfg, "--eval-corpus",
                       "--eval-contextual");
    test_examples = build_examples(test->pairs, source(*test), cfg, lex ? &*lex : nullptr);
  }

  std::vector<TrainedRun> runs;
  for (std::uint64_t seed : seed_list(o)) {
    TrainConfig tc = train_config(o);
    tc.seed = seed;
    TrainedRun r{seed, fit(examples, cfg, tc, [&](const EpochLog& e) {
                   if (log) write_log_line(*log, seed, e, o.log_timing);
                 }),
                 std::nullopt};
    if (test) r.eval = evaluate_examples(test_examples, r.fit.params, cfg);
    runs.push_back(std::move(r));
  }
  return runs;
}

void write_run_summary(std::ostream& s, const std::vector<TrainedRun>& runs) {
  double train_sum = 0, eval_sum = 0;
  for (const auto& r : runs) {
    s << "seed " << r.seed << " best_epoch " << r.fit.best_epoch << " train_f1 " << fixed(r.fit.best_f1);
    if (r.eval) s << " eval_f1 " << fixed(r.eval->micro.f1);
    s << '\n';
    train_sum += r.fit.best_f1;
    if (r.eval) eval_sum += r.eval->micro.f1;
  }
  const double n = static_cast<double>(runs.size());
  s << "mean train_f1 " << fixed(train_sum / n);
  if (runs.front().eval) s << " eval_f1 " << fixed(eval_sum / n);
  s << '\n';
}

int run_train(const Options& o, std::ostream& out) {
  const ModelConfig cfg = model_config(o);
  const fs::path dir = out_dir(o);
  std::ofstream log = open_out(dir / "train_log.jsonl");
  const auto runs = train_runs(o, cfg, &log);
  for (const auto& r : runs) {
    const fs::path ck = runs.size() == 1 ? dir / "checkpoint.json" : dir / ("checkpoint-seed" + std::to_string(r.seed) + ".json");
    save_checkpoint({cfg, r.fit.params}, ck.string());
  }
  std::ostringstream summary;
  write_run_summary(summary, runs);
  std::ofstream(dir / "summary.txt") << summary.str();
  out << summary.str();
  return 0;
}

/// Applies any flag given explicitly on top of the checkpoint's stored configuration.
ModelConfig checkpoint_config(const Checkpoint& ck, const Options& o, const CLI::App& app) {
  ModelConfig c = ck.config;
  auto given = [&](const char* name) { return app.get_option(name)->count() > 0; };
  if (given("--rho")) c.rho = o.rho;
  if (given("--lambda")) c.sinkhorn.lambda = o.lambda;
  if (given("--sinkhorn-iters")) c.sinkhorn.iterations = o.sinkhorn_iters;
  if (given("--tau")) c.synsim.tau = o.tau;
  if (given("--mutual-argmax")) c.mutual_argmax = o.mutual_argmax;
  if (given("--no-syntax-rule")) c.syntax_rule = !o.no_syntax_rule;
  if (given("--preset") && parse_preset(o.preset) != c.preset)
    throw ConfigError("--preset " + o.preset + " disagrees with the checkpoint's preset " +
                      std::string(preset_name(c.preset)));
  c.sinkhorn.check();
  return c;
}

std::vector<DecodedAlignment> decode_with_checkpoint(const Options& o, const CLI::App& app,
                                                     const std::vector<ChunkedPair>** pairs_out, Inputs& holder) {
  require_file(o.checkpoint, "--checkpoint");
  const Checkpoint ck = load_checkpoint(o.checkpoint);
  const ModelConfig cfg = checkpoint_config(ck, o, app);
  holder = read_inputs(o.corpus, o.annotations, o.contextual, o, cfg, "--corpus", "--contextual");
  const auto lex = read_lexicon(o);
  const auto examples = build_examples(holder.pairs, source(holder), cfg, lex ? &*lex : nullptr);
  *pairs_out = &holder.pairs;
  return decode_all(examples, ck.params, cfg);
}

int run_align(const Options& o, const CLI::App& app, std::ostream& out) {
  Inputs holder;
  const std::vector<ChunkedPair>* pairs = nullptr;
  const auto preds = decode_with_checkpoint(o, app, &pairs, holder);
  std::ostringstream text;
  for (std::size_t k = 0; k < preds.size(); ++k) write_alignment_line(text, (*pairs)[k].id, preds[k]);
  if (o.out.empty()) {
    out << text.str();
  } else {
    const fs::path dir = out_dir(o);
    open_out(dir / "alignments.txt") << text.str();
    out << "wrote " << preds.size() << " alignments to " << (dir / "alignments.txt").string() << '\n';
  }
  return 0;
}

int run_evaluate(const Options& o, const CLI::App& app, std::ostream& out) {
  CorpusReport report;
  if (!o.alignments.empty()) {
    const auto pairs = read_corpus(o.corpus, o.annotations, "--corpus");
    require_file(o.alignments, "--alignments");
    std::ifstream in(o.alignments);
    const auto preds = match_alignments(parse_alignments(in), pairs);
    report = evaluate_corpus(preds, pairs);
  } else {
    if (o.checkpoint.empty()) throw ConfigError("evaluate needs --alignments or --checkpoint");
    Inputs holder;
    const std::vector<ChunkedPair>* pairs = nullptr;
    const auto preds = decode_with_checkpoint(o, app, &pairs, holder);
    report = evaluate_corpus(preds, *pairs);
  }
  std::ostringstream text;
  write_report(text, report);
  out << text.str();
  if (!o.out.empty()) open_out(out_dir(o) / "report.txt") << text.str();
  return 0;
}

int run_grid(const Options& o, std::ostream& out, std::ostream& err) {
  const ModelConfig cfg = model_config(o);
  const Inputs train = read_inputs(o.corpus, o.annotations, o.contextual, o, cfg, "--corpus", "--contextual");
  const auto lex = read_lexicon(o);
  const auto examples = build_examples(train.pairs, source(train), cfg, lex ? &*lex : nullptr);
  const GridResult r = grid_search(examples, cfg, train_config(o), GridSpec{o.grid_rho, o.grid_dim});
  for (const auto& w : r.warnings) err << "warning: " << w << '\n';
  std::ostringstream table;
  table << "rho\tdim\ttrain_f1\tbest_epoch\tbest\n";
  for (std::size_t k = 0; k < r.rows.size(); ++k) {
    const auto& row = r.rows[k];
    table << row.rho << '\t' << row.dim << '\t' << fixed(row.train_f1) << '\t' << row.best_epoch << '\t'
          << (k == r.best ? "*" : "") << '\n';
  }
  open_out(out_dir(o) / "grid.tsv") << table.str();
  out << table.str();
  return 0;
}

int run_crossdomain(const Options& o, std::ostream& out) {
  if (o.eval_corpus.empty()) throw ConfigError("crossdomain needs --eval-corpus");
  const ModelConfig cfg = model_config(o);
  const fs::path dir = out_dir(o);
  std::ofstream log = open_out(dir / "train_log.jsonl");
  const auto runs = train_runs(o, cfg, &log);
  std::ostringstream summary;
  write_run_summary(summary, runs);
  open_out(dir / "crossdomain.txt") << summary.str();
  out << summary.str();
  return 0;
}

}  // namespace

int dispatch(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
  Options o;
  CLI::App app{"Chunk alignment with gated pointer networks and optimal transport", "chunkalign"};
  app.require_subcommand(1);
  app.set_config("--config", "", "TOML configuration file; command-line flags take precedence");

  app.add_option("--corpus", o.corpus, "Training or input corpus (.wa or canonical .jsonl)");
  app.add_option("--vectors", o.vectors, "Static word-vector text file");
  app.add_option("--contextual", o.contextual, "Contextual annotation file for --corpus");
  app.add_option("--triples", o.triples, "Relation-triple lexicon (term TAB term TAB relation)");
  app.add_option("--annotations", o.annotations, "POS/dependency annotation file for --corpus");
  app.add_option("--eval-corpus", o.eval_corpus, "Held-out corpus evaluated after training");
  app.add_option("--eval-contextual", o.eval_contextual, "Contextual annotation file for --eval-corpus");
  app.add_option("--eval-annotations", o.eval_annotations, "POS/dependency annotation file for --eval-corpus");
  app.add_option("--checkpoint", o.checkpoint, "Model checkpoint to load");
  app.add_option("--alignments", o.alignments, "Predicted alignment file to score");
  app.add_option("--out", o.out, "Output directory");
  app.add_option("--preset", o.preset, "Model preset")->check(CLI::IsMember({"M1", "M2", "M3", "M4"}));
  app.add_option("--rho", o.rho, "Rule strength");
  app.add_option("--dim", o.dim, "Projection dimension d");
  app.add_option("--lambda", o.lambda, "Entropy regularization strength");
  app.add_option("--epsilon", o.epsilon, "Sinkhorn stabilizing constant");
  app.add_option("--epsilon-placement", o.epsilon_placement, "Where epsilon enters: kernel or cost");
  app.add_option("--sinkhorn-iters", o.sinkhorn_iters, "Unrolled Sinkhorn iterations");
  app.add_option("--tau", o.tau, "Syntactic-similarity threshold");
  app.add_option("--c1", o.c1, "Row cross-entropy weight (unidirectional loss)");
  app.add_option("--c2", o.c2, "Phi binary cross-entropy weight (unidirectional loss)");
  app.add_option("--seed", o.seed, "Random seed");
  app.add_option("--seeds", o.seeds, "Number of runs with consecutive seeds");
  app.add_option("--epochs", o.epochs, "Maximum training epochs");
  app.add_option("--patience", o.patience, "Early-stopping patience in epochs");
  app.add_option("--lr", o.lr, "Adam learning rate");
  app.add_flag("--log-timing", o.log_timing, "Add wall-clock seconds to the training log");
  app.add_flag("--no-syntax-rule", o.no_syntax_rule, "Disable the syntactic-similarity rule");
  app.add_flag("--mutual-argmax", o.mutual_argmax, "Decode by mutual argmax instead of the union");
  app.add_option("--grid-rho", o.grid_rho, "Rule strengths searched by grid")->delimiter(',');
  app.add_option("--grid-dim", o.grid_dim, "Projection dimensions searched by grid")->delimiter(',');
  app.add_option("--pairs", o.pairs, "Synthetic pair count");
  app.add_option("--vector-dim", o.vector_dim, "Synthetic vector dimension");
  app.add_option("--sigma", o.sigma, "Synthetic noise scale");
  app.add_option("--mode", o.mode, "Synthetic mode: identity, permutation or unaligned");
  app.add_option("--unaligned-fraction", o.unaligned_fraction, "Synthetic unaligned fraction");
  app.add_option("--near-duplicates", o.near_duplicates, "Synthetic near-duplicate x chunks per pair");
  app.add_option("--min-chunks", o.min_chunks, "Synthetic minimum chunks per sentence");
  app.add_option("--max-chunks", o.max_chunks, "Synthetic maximum chunks per sentence");

  auto* prepare = app.add_subcommand("prepare", "Convert a .wa corpus (plus annotations) to canonical JSON lines");
  auto* train = app.add_subcommand("train", "Fit a model; writes checkpoint, training log and summary");
  auto* align = app.add_subcommand("align", "Decode alignments with a checkpoint");
  auto* evaluate = app.add_subcommand("evaluate", "Score alignments or a checkpoint against gold");
  auto* grid = app.add_subcommand("grid", "Train over the rho x dim grid");
  auto* cross = app.add_subcommand("crossdomain", "Train on --corpus, evaluate on --eval-corpus");
  auto* synth = app.add_subcommand("synthesize", "Write a synthetic corpus and its word vectors");
  for (auto* sub : {prepare, train, align, evaluate, grid, cross, synth}) sub->fallthrough();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    return app.exit(e, out, err);
  }

  try {
    if (prepare->parsed()) return run_prepare(o, out);
    if (train->parsed()) return run_train(o, out);
    if (align->parsed()) return run_align(o, app, out);
    if (evaluate->parsed()) return run_evaluate(o, app, out);
    if (grid->parsed()) return run_grid(o, out, err);
    if (cross->parsed()) return run_crossdomain(o, out);
    if (synth->parsed()) return run_synthesize(o, out);
  } catch (const std::exception& e) {
    err << "error: " << e.what() << '\n';
    return 1;
  }
  return 1;
}

}  // namespace chunkalign::cli
