#pragma once

// The full alignment model for one sentence pair:
//   chunk vectors -> scores (+ρ·m) -> gates -> row softmax (unidirectional)
//                                          or cost -> Sinkhorn plan (bidirectional)
// with a single reverse pass from the loss back to PointerParams.

#include <cstddef>
#include <fstream>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include <Eigen/Dense>

#include "json.hpp"

#include "chunkalign/corpus.hpp"
#include "chunkalign/embed.hpp"
#include "chunkalign/error.hpp"
#include "chunkalign/loss.hpp"
#include "chunkalign/net.hpp"
#include "chunkalign/ot.hpp"
#include "chunkalign/rules.hpp"

namespace chunkalign {

enum class Preset { M1, M2, M3, M4 };

struct PresetTraits {
  ChunkMode representation;
  bool constraints;
  bool bidirectional;
};

/// M1: mean vectors, unidirectional. M2: mean, bidirectional.
/// M3: contextual boundary vectors, bidirectional. M4: M3 plus logic rules.
inline constexpr PresetTraits traits(Preset p) {
  switch (p) {
    case Preset::M1: return {ChunkMode::Mean, false, false};
    case Preset::M2: return {ChunkMode::Mean, false, true};
    case Preset::M3: return {ChunkMode::BoundaryConcat, false, true};
    case Preset::M4: return {ChunkMode::BoundaryConcat, true, true};
  }
  return {ChunkMode::Mean, false, false};
}

inline std::string_view preset_name(Preset p) {
  constexpr std::string_view names[] = {"M1", "M2", "M3", "M4"};
  return names[static_cast<int>(p)];
}

inline Preset parse_preset(std::string_view s) {
  for (Preset p : {Preset::M1, Preset::M2, Preset::M3, Preset::M4})
    if (preset_name(p) == s) return p;
  throw ConfigError("unknown preset '" + std::string(s) + "' (expected M1, M2, M3 or M4)");
}

struct ModelConfig {
  Preset preset = Preset::M2;
  Eigen::Index proj_dim = 100;
  double rho = 0.0;
  bool syntax_rule = true;  // R2 alongside the lexicon rule when constraints are on
  SinkhornConfig sinkhorn;
  LossConfig loss;
  SynSimConfig synsim;
  bool mutual_argmax = false;

  PresetTraits traits() const { return chunkalign::traits(preset); }
  bool bidirectional() const { return traits().bidirectional; }
  bool constrained() const { return traits().constraints && rho > 0; }
};

/// One pair with its chunk vectors and (for constrained presets) its rule matrix.
struct PairExample {
  const ChunkedPair* pair = nullptr;
  PairFeatures features;
  std::optional<ConstraintMatrix> constraints;
};

/// Where chunk vectors come from; exactly one source must match the preset.
struct FeatureSource {
  const EmbeddingTable* table = nullptr;
  const ContextualStore* contextual = nullptr;

  PairFeatures features(const ChunkedPair& p, ChunkMode mode) const {
    if (mode == ChunkMode::Mean) {
      if (!table) throw ConfigError("this preset needs a word-vector table (--vectors)");
      return mean_features(p, *table);
    }
    if (!contextual) throw ConfigError("this preset needs contextual annotations (--contextual)");
    return boundary_features(p, *contextual);
  }

  Eigen::Index input_dim(ChunkMode mode) const {
    if (mode == ChunkMode::Mean) {
      if (!table) throw ConfigError("this preset needs a word-vector table (--vectors)");
      return static_cast<Eigen::Index>(table->dim());
    }
    if (!contextual) throw ConfigError("this preset needs contextual annotations (--contextual)");
    return 2 * static_cast<Eigen::Index>(contextual->dim());
  }
};

inline std::vector<PairExample> build_examples(const std::vector<ChunkedPair>& pairs, const FeatureSource& src,
                                               const ModelConfig& cfg, const RelationLexicon* lex = nullptr) {
  std::vector<PairExample> out;
  out.reserve(pairs.size());
  const bool rules = cfg.traits().constraints;
  for (const auto& p : pairs) {
    PairExample ex{&p, src.features(p, cfg.traits().representation), std::nullopt};
    if (rules) ex.constraints = build_constraints(p, lex, cfg.syntax_rule, cfg.synsim, cfg.rho);
    out.push_back(std::move(ex));
  }
  return out;
}

/// Forward values and tapes for one pair.
struct ForwardPass {
  ScoreTape score_tape;
  ScoreMatrix scores;
  GateTape gate_tape;
  GateVectors gates;
  // unidirectional
  UnidirectionalOutput uni;
  // bidirectional
  CostTape cost_tape;
  CostMatrix cost;
  SinkhornTape sinkhorn_tape;
  TransportPlan plan;

  /// Alignment probabilities as an (n+1) x (m+1) table, φ last; the corner is 0.
  MatrixXd table;
};

inline ForwardPass forward(const PairExample& ex, const PointerParams& params, const ModelConfig& cfg) {
  ForwardPass f;
  f.scores = score_matrix(ex.features.x, ex.features.y, params, &f.score_tape);
  if (ex.constraints && cfg.traits().constraints) {
    ConstraintMatrix cm = *ex.constraints;
    cm.rho = cfg.rho;
    f.scores = apply_constraints(std::move(f.scores), cm);
  }
  f.gates = gates(f.scores, params, &f.gate_tape);
  const Eigen::Index n = f.scores.n(), m = f.scores.m();
  if (cfg.bidirectional()) {
    f.cost = build_cost(f.scores, f.gates, &f.cost_tape);
    f.plan = sinkhorn(f.cost, cfg.sinkhorn, &f.sinkhorn_tape);
    f.table = f.plan.p;
  } else {
    f.uni = forward_unidirectional(f.scores, f.gates);
    f.table = MatrixXd::Zero(n + 1, m + 1);
    f.table.topRows(n) = f.uni.rows;
    f.table.row(n).head(m) = f.uni.phi_col.transpose();
  }
  return f;
}

inline double pass_loss(const ForwardPass& f, const GoldAlignment& gold, const ModelConfig& cfg) {
  return cfg.bidirectional() ? loss_bidirectional(f.plan.p, gold) : loss_unidirectional(f.uni, gold, cfg.loss);
}

struct LossAndGrad {
  double loss = 0;
  PointerParams grad;
};

/// Loss of one pair and its exact gradient w.r.t. every parameter group.
/// The rule matrix is a constant of the computation.
inline LossAndGrad loss_and_gradient(const PairExample& ex, const PointerParams& params, const ModelConfig& cfg) {
  if (!ex.pair || !ex.pair->gold) throw ConfigError("training pair lacks a gold alignment");
  const GoldAlignment& gold = *ex.pair->gold;
  const ForwardPass f = forward(ex, params, cfg);
  const Eigen::Index n = f.scores.n(), m = f.scores.m();

  LossAndGrad out;
  out.grad = PointerParams::zeros(params.input_dim(), params.proj_dim());
  ScoreGrad up{MatrixXd::Zero(n, m), VectorXd::Zero(n), VectorXd::Zero(m)};
  VectorXd dgx = VectorXd::Zero(n), dgy = VectorXd::Zero(m);

  if (cfg.bidirectional()) {
    MatrixXd dplan;
    out.loss = loss_bidirectional(f.plan.p, gold, &dplan);
    const MatrixXd dcost = sinkhorn_backward(f.sinkhorn_tape, cfg.sinkhorn, dplan);
    build_cost_backward(f.cost_tape, f.scores, f.gates, dcost, up, dgx, dgy);
  } else {
    UnidirectionalLossGrad lg;
    out.loss = loss_unidirectional(f.uni, gold, cfg.loss, &lg);
    unidirectional_backward(f.scores, f.gates, f.uni, lg.d_rows, lg.d_phi_col, up, dgx, dgy);
  }
  gates_backward(f.gate_tape, f.gates, params, dgx, dgy, up, out.grad);
  score_matrix_backward(f.score_tape, params, up, out.grad);

  std::string bad;
  out.grad.for_each_group([&](const char* name, const double* p, std::size_t len) {
    for (std::size_t k = 0; k < len && bad.empty(); ++k)
      if (!std::isfinite(p[k])) bad = name;
  });
  if (!bad.empty()) throw NumericError("non-finite gradient in parameter group " + bad + " (pair '" + ex.pair->id + "')");
  return out;
}

inline double example_loss(const PairExample& ex, const PointerParams& params, const ModelConfig& cfg) {
  return pass_loss(forward(ex, params, cfg), *ex.pair->gold, cfg);
}

// ---------------------------------------------------------------------------
// Checkpoints: versioned JSON holding the model configuration and parameters.

inline constexpr std::string_view kCheckpointFormat = "chunkalign-checkpoint";
inline constexpr int kCheckpointVersion = 1;

inline nlohmann::json config_to_json(const ModelConfig& c) {
  return {{"preset", preset_name(c.preset)},
          {"proj_dim", c.proj_dim},
          {"rho", c.rho},
          {"syntax_rule", c.syntax_rule},
          {"lambda", c.sinkhorn.lambda},
          {"epsilon", c.sinkhorn.epsilon},
          {"epsilon_placement", c.sinkhorn.placement == EpsilonPlacement::Kernel ? "kernel" : "cost"},
          {"sinkhorn_iters", c.sinkhorn.iterations},
          {"loss_c1", c.loss.c1_weight},
          {"loss_c2", c.loss.c2_weight},
          {"tau", c.synsim.tau},
          {"mutual_argmax", c.mutual_argmax}};
}

inline ModelConfig config_from_json(const nlohmann::json& j) {
  ModelConfig c;
  c.preset = parse_preset(j.at("preset").get<std::string>());
  c.proj_dim = j.at("proj_dim").get<Eigen::Index>();
  c.rho = j.at("rho").get<double>();
  c.syntax_rule = j.value("syntax_rule", true);
  c.sinkhorn.lambda = j.at("lambda").get<double>();
  c.sinkhorn.epsilon = j.at("epsilon").get<double>();
  c.sinkhorn.placement = j.value("epsilon_placement", std::string("kernel")) == "cost" ? EpsilonPlacement::Cost
                                                                                      : EpsilonPlacement::Kernel;
  c.sinkhorn.iterations = j.at("sinkhorn_iters").get<int>();
  c.loss.c1_weight = j.at("loss_c1").get<double>();
  c.loss.c2_weight = j.at("loss_c2").get<double>();
  c.synsim.tau = j.at("tau").get<double>();
  c.mutual_argmax = j.value("mutual_argmax", false);
  return c;
}

struct Checkpoint {
  ModelConfig config;
  PointerParams params;
};

inline void save_checkpoint(const Checkpoint& ck, const std::string& path) {
  nlohmann::json j = {{"format", kCheckpointFormat},
                      {"version", kCheckpointVersion},
                      {"config", config_to_json(ck.config)},
                      {"params", to_json(ck.params)}};
  std::ofstream out(path);
  if (!out) throw Error("cannot write '" + path + "'");
  out << j.dump() << '\n';
}

inline Checkpoint load_checkpoint(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw Error("cannot open '" + path + "'");
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(in);
  } catch (const nlohmann::json::exception& e) {
    throw ParseError("checkpoint '" + path + "': " + e.what());
  }
  if (j.value("format", std::string()) != kCheckpointFormat)
    throw SchemaError("checkpoint", "format", "not a chunkalign checkpoint");
  if (j.value("version", 0) != kCheckpointVersion)
    throw SchemaError("checkpoint", "version", "unsupported version " + std::to_string(j.value("version", 0)));
  try {
    return {config_from_json(j.at("config")), params_from_json(j.at("params"))};
  } catch (const nlohmann::json::exception& e) {
    throw SchemaError("checkpoint", "config", e.what());
  }
}

}  // namespace chunkalign
