#pragma once

// Optimization: Adam over one pair per step, early stopping on training F1,
// hyperparameter grid, and a finite-difference gradient check.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdint>
#include <functional>
#include <numeric>
#include <random>
#include <string>
#include <vector>

#include "chunkalign/error.hpp"
#include "chunkalign/eval.hpp"
#include "chunkalign/model.hpp"
#include "chunkalign/net.hpp"

namespace chunkalign {

struct AdamConfig {
  double learning_rate = 1e-3;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
};

class Adam {
 public:
  Adam(const PointerParams& like, AdamConfig cfg)
      : cfg_(cfg),
        m_(PointerParams::zeros(like.input_dim(), like.proj_dim())),
        v_(PointerParams::zeros(like.input_dim(), like.proj_dim())) {}

  void step(PointerParams& params, const PointerParams& grad) {
    ++t_;
    const double bc1 = 1.0 - std::pow(cfg_.beta1, static_cast<double>(t_));
    const double bc2 = 1.0 - std::pow(cfg_.beta2, static_cast<double>(t_));
    std::vector<double*> ps, ms, vs;
    std::vector<const double*> gs;
    std::vector<std::size_t> lens;
    params.for_each_group([&](const char*, double* p, std::size_t n) { ps.push_back(p); lens.push_back(n); });
    m_.for_each_group([&](const char*, double* p, std::size_t) { ms.push_back(p); });
    v_.for_each_group([&](const char*, double* p, std::size_t) { vs.push_back(p); });
    grad.for_each_group([&](const char*, const double* p, std::size_t) { gs.push_back(p); });
    for (std::size_t g = 0; g < ps.size(); ++g)
      for (std::size_t k = 0; k < lens[g]; ++k) {
        const double gr = gs[g][k];
        ms[g][k] = cfg_.beta1 * ms[g][k] + (1 - cfg_.beta1) * gr;
        vs[g][k] = cfg_.beta2 * vs[g][k] + (1 - cfg_.beta2) * gr * gr;
        ps[g][k] -= cfg_.learning_rate * (ms[g][k] / bc1) / (std::sqrt(vs[g][k] / bc2) + cfg_.eps);
      }
  }

 private:
  AdamConfig cfg_;
  PointerParams m_, v_;
  std::uint64_t t_ = 0;
};

/// Signals a stop once `patience` successive epochs fail to beat the best value.
class EarlyStopper {
 public:
  explicit EarlyStopper(int patience) : patience_(patience) {
    if (patience < 1) throw ConfigError("patience must be at least 1");
  }

  /// Feeds one epoch's metric; returns true when training should stop.
  bool update(double metric) {
    ++epoch_;
    if (epoch_ == 1 || metric > best_) {
      best_ = metric;
      best_epoch_ = epoch_;
      stale_ = 0;
      return false;
    }
    return ++stale_ >= patience_;
  }

  double best() const { return best_; }
  int best_epoch() const { return best_epoch_; }

 private:
  int patience_;
  int epoch_ = 0;
  int best_epoch_ = 0;
  int stale_ = 0;
  double best_ = 0;
};

struct TrainConfig {
  AdamConfig adam;
  int max_epochs = 100;
  int patience = 5;
  std::uint64_t seed = 1;
};

struct EpochLog {
  int epoch = 0;
  double loss = 0;
  double train_f1 = 0;
  double wall_seconds = 0;
};

struct FitResult {
  PointerParams params;  // parameters of the best-F1 epoch
  std::vector<EpochLog> log;
  int best_epoch = 0;
  double best_f1 = 0;
};

inline std::vector<DecodedAlignment> decode_all(std::span<const PairExample> examples, const PointerParams& params,
                                                const ModelConfig& cfg) {
  std::vector<DecodedAlignment> out;
  out.reserve(examples.size());
  for (const auto& ex : examples) out.push_back(decode(forward(ex, params, cfg).table, cfg.mutual_argmax));
  return out;
}

inline CorpusReport evaluate_examples(std::span<const PairExample> examples, const PointerParams& params,
                                      const ModelConfig& cfg) {
  std::vector<ChunkedPair> pairs;
  pairs.reserve(examples.size());
  for (const auto& ex : examples) pairs.push_back(*ex.pair);
  const auto preds = decode_all(examples, params, cfg);
  return evaluate_corpus(preds, pairs);
}

/// Seeded parameter initialization for a model over `input_dim`-long chunk vectors.
inline PointerParams init_params(Eigen::Index input_dim, const ModelConfig& cfg, std::uint64_t seed) {
  return PointerParams::init(input_dim, cfg.proj_dim, seed);
}

inline FitResult fit(std::span<const PairExample> examples, const ModelConfig& cfg, const TrainConfig& tc,
                     const std::function<void(const EpochLog&)>& on_epoch = {}) {
  if (examples.empty()) throw ConfigError("training corpus is empty");
  if (tc.max_epochs < 1) throw ConfigError("max_epochs must be at least 1");
  cfg.sinkhorn.check();
  cfg.loss.check();
  for (const auto& ex : examples)
    if (!ex.pair->gold) throw ConfigError("training pair '" + ex.pair->id + "' lacks a gold alignment");

  std::mt19937_64 rng(tc.seed);
  PointerParams params = init_params(examples.front().features.x.cols(), cfg, rng());
  Adam opt(params, tc.adam);
  EarlyStopper stopper(tc.patience);
  FitResult result{params, {}, 0, 0};
  std::vector<std::size_t> order(examples.size());
  std::iota(order.begin(), order.end(), std::size_t{0});

  for (int epoch = 1; epoch <= tc.max_epochs; ++epoch) {
    const auto t0 = std::chrono::steady_clock::now();
    std::shuffle(order.begin(), order.end(), rng);
    double total = 0;
    for (std::size_t k : order) {
      auto lg = loss_and_gradient(examples[k], params, cfg);
      total += lg.loss;
      opt.step(params, lg.grad);
    }
    EpochLog entry;
    entry.epoch = epoch;
    entry.loss = total / static_cast<double>(examples.size());
    entry.train_f1 = evaluate_examples(examples, params, cfg).micro.f1;
    entry.wall_seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    result.log.push_back(entry);
    if (on_epoch) on_epoch(entry);
    const bool stop = stopper.update(entry.train_f1);
    if (stopper.best_epoch() == epoch) {
      result.params = params;
      result.best_epoch = epoch;
      result.best_f1 = entry.train_f1;
    }
    if (stop) break;
  }
  return result;
}

struct GridSpec {
  std::vector<double> rhos = {0, 1, 2, 4};
  std::vector<Eigen::Index> dims = {100, 150, 200, 768};
};

struct GridRow {
  double rho = 0;
  Eigen::Index dim = 0;
  double train_f1 = 0;
  int best_epoch = 0;
};

struct GridResult {
  std::vector<GridRow> rows;
  std::size_t best = 0;
  std::vector<std::string> warnings;
};

/// One training run per admissible (ρ, d). d = 768 is admitted only for
/// contextual presets, ρ > 0 only for constrained ones.
inline GridResult grid_search(std::span<const PairExample> examples, const ModelConfig& base, const TrainConfig& tc,
                              const GridSpec& grid) {
  if (grid.rhos.empty() || grid.dims.empty()) throw ConfigError("grid is empty");
  GridResult out;
  const PresetTraits tr = base.traits();
  for (double rho : grid.rhos) {
    if (rho > 0 && !tr.constraints) {
      out.warnings.push_back("skipping rho=" + std::to_string(rho) + ": preset " +
                             std::string(preset_name(base.preset)) + " has no rule constraints");
      continue;
    }
    for (Eigen::Index d : grid.dims) {
      if (d == 768 && tr.representation != ChunkMode::BoundaryConcat) {
        out.warnings.push_back("skipping d=768: valid only for contextual chunk representations (M3, M4)");
        continue;
      }
      ModelConfig cfg = base;
      cfg.rho = rho;
      cfg.proj_dim = d;
      const FitResult r = fit(examples, cfg, tc);
      out.rows.push_back({rho, d, r.best_f1, r.best_epoch});
    }
  }
  if (out.rows.empty()) throw ConfigError("no admissible grid point for this preset");
  for (std::size_t k = 1; k < out.rows.size(); ++k)
    if (out.rows[k].train_f1 > out.rows[out.best].train_f1) out.best = k;
  return out;
}

// ---------------------------------------------------------------------------
// Gradient check

struct GroupError {
  std::string group;
  double max_abs_error = 0;
  double scale = 0;           // max |finite difference| over the group
  double relative_error = 0;  // max_abs_error / max(scale, floor)
};

struct GradientReport {
  std::vector<GroupError> groups;
  double tolerance = 1e-4;
  double worst() const {
    double w = 0;
    for (const auto& g : groups) w = std::max(w, g.relative_error);
    return w;
  }
  bool passed() const { return worst() <= tolerance; }
};

/// Central differences of the pair loss against the analytic gradient, per parameter group.
inline GradientReport gradient_check(const PairExample& ex, const PointerParams& params, const ModelConfig& cfg,
                                     double h = 1e-5, double tolerance = 1e-4, double scale_floor = 1e-8) {
  const LossAndGrad analytic = loss_and_gradient(ex, params, cfg);
  PointerParams probe = params;
  std::vector<std::pair<std::string, std::vector<double>>> numeric;
  probe.for_each_group([&](const char* name, double* p, std::size_t len) {
    std::vector<double> fd(len);
    for (std::size_t k = 0; k < len; ++k) {
      const double orig = p[k];
      p[k] = orig + h;
      const double up = example_loss(ex, probe, cfg);
      p[k] = orig - h;
      const double down = example_loss(ex, probe, cfg);
      p[k] = orig;
      fd[k] = (up - down) / (2 * h);
    }
    numeric.emplace_back(name, std::move(fd));
  });
  GradientReport report;
  report.tolerance = tolerance;
  std::size_t g = 0;
  analytic.grad.for_each_group([&](const char* name, const double* a, std::size_t len) {
    const auto& fd = numeric[g++].second;
    GroupError e{name};
    for (std::size_t k = 0; k < len; ++k) {
      e.max_abs_error = std::max(e.max_abs_error, std::abs(a[k] - fd[k]));
      e.scale = std::max(e.scale, std::abs(fd[k]));
    }
    e.relative_error = e.max_abs_error / std::max(e.scale, scale_floor);
    report.groups.push_back(e);
  });
  return report;
}

}  // namespace chunkalign
