#pragma once

// Training objectives. Probabilities are clamped at kProbClamp before the log;
// a clamped entry contributes no gradient.

#include <cmath>
#include <cstddef>

#include <Eigen/Dense>

#include "chunkalign/corpus.hpp"
#include "chunkalign/error.hpp"
#include "chunkalign/net.hpp"
#include "chunkalign/ot.hpp"

namespace chunkalign {

inline constexpr double kProbClamp = 1e-12;

struct LossConfig {
  double c1_weight = 1.0;  // row cross-entropy weight
  double c2_weight = 1.0;  // y-side φ binary cross-entropy weight

  void check() const {
    if (!(c1_weight > 0) || !(c2_weight > 0)) throw ConfigError("loss weights must be positive");
  }
};

namespace detail {

inline double clamped_log(double p) { return std::log(std::max(p, kProbClamp)); }
inline double clamped_dlog(double p) { return p > kProbClamp ? 1.0 / p : 0.0; }

}  // namespace detail

/// Dense indicator form of a gold alignment.
struct GoldMatrix {
  MatrixXd a;      // n x m
  VectorXd x_phi;  // n, a_iφ
  VectorXd y_phi;  // m, a_φj

  explicit GoldMatrix(const GoldAlignment& g)
      : a(MatrixXd::Zero(static_cast<Eigen::Index>(g.n()), static_cast<Eigen::Index>(g.m()))),
        x_phi(static_cast<Eigen::Index>(g.n())),
        y_phi(static_cast<Eigen::Index>(g.m())) {
    for (auto [i, j] : g.pairs()) a(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) = 1.0;
    for (Eigen::Index i = 0; i < a.rows(); ++i) x_phi[i] = g.x_unaligned(static_cast<std::size_t>(i)) ? 1.0 : 0.0;
    for (Eigen::Index j = 0; j < a.cols(); ++j) y_phi[j] = g.y_unaligned(static_cast<std::size_t>(j)) ? 1.0 : 0.0;
  }
};

struct UnidirectionalLossGrad {
  MatrixXd d_rows;  // n x (m+1)
  VectorXd d_phi_col;
};

/// −(C1/n)·Σ_i [Σ_j a_ij log p_ij + a_iφ log p_iφ]
///   + C2·(−Σ_j [a_φj log p_φj + (1 − a_φj) log(1 − p_φj)])
inline double loss_unidirectional(const UnidirectionalOutput& out, const GoldAlignment& gold, const LossConfig& cfg,
                                  UnidirectionalLossGrad* grad = nullptr) {
  const Eigen::Index n = out.rows.rows(), m = out.rows.cols() - 1;
  if (static_cast<Eigen::Index>(gold.n()) != n || static_cast<Eigen::Index>(gold.m()) != m)
    throw ShapeError("gold alignment shape does not match the prediction");
  const GoldMatrix g(gold);
  const double w = cfg.c1_weight / static_cast<double>(n);
  if (grad) {
    grad->d_rows = MatrixXd::Zero(n, m + 1);
    grad->d_phi_col = VectorXd::Zero(m);
  }
  double row_term = 0;
  for (Eigen::Index i = 0; i < n; ++i)
    for (Eigen::Index k = 0; k <= m; ++k) {
      const double a = k < m ? g.a(i, k) : g.x_phi[i];
      if (a == 0) continue;
      row_term -= a * detail::clamped_log(out.rows(i, k));
      if (grad) grad->d_rows(i, k) = -w * a * detail::clamped_dlog(out.rows(i, k));
    }
  double phi_term = 0;
  for (Eigen::Index j = 0; j < m; ++j) {
    const double p = out.phi_col[j], a = g.y_phi[j];
    phi_term -= a * detail::clamped_log(p) + (1 - a) * detail::clamped_log(1 - p);
    if (grad)
      grad->d_phi_col[j] =
          -cfg.c2_weight * (a * detail::clamped_dlog(p) - (1 - a) * detail::clamped_dlog(1 - p));
  }
  return w * row_term + cfg.c2_weight * phi_term;
}

/// 2·(−Σ_ij a_ij log p_ij) − Σ_i a_iφ log p_iφ − Σ_j a_φj log p_φj over the transport plan.
inline double loss_bidirectional(const MatrixXd& plan, const GoldAlignment& gold, MatrixXd* dplan = nullptr) {
  const Eigen::Index n = plan.rows() - 1, m = plan.cols() - 1;
  if (static_cast<Eigen::Index>(gold.n()) != n || static_cast<Eigen::Index>(gold.m()) != m)
    throw ShapeError("gold alignment shape does not match the plan");
  const GoldMatrix g(gold);
  if (dplan) *dplan = MatrixXd::Zero(n + 1, m + 1);
  double loss = 0;
  auto term = [&](Eigen::Index i, Eigen::Index j, double weight) {
    if (weight == 0) return;
    loss -= weight * detail::clamped_log(plan(i, j));
    if (dplan) (*dplan)(i, j) = -weight * detail::clamped_dlog(plan(i, j));
  };
  for (Eigen::Index i = 0; i < n; ++i)
    for (Eigen::Index j = 0; j < m; ++j) term(i, j, 2.0 * g.a(i, j));
  for (Eigen::Index i = 0; i < n; ++i) term(i, m, g.x_phi[i]);
  for (Eigen::Index j = 0; j < m; ++j) term(n, j, g.y_phi[j]);
  return loss;
}

inline double loss_bidirectional(const TransportPlan& plan, const GoldAlignment& gold) {
  return loss_bidirectional(plan.p, gold);
}

}  // namespace chunkalign
