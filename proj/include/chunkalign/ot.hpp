#pragma once

// Bidirectional normalization by entropy-regularized optimal transport.
//
// Matrices are (n+1) x (m+1) with the φ row at index n and the φ column at
// index m. Only real rows 0..n-1 and real columns 0..m-1 carry marginal
// constraints; the φ row/column absorb the slack. The (φ, φ) corner has a
// zero kernel entry and never receives mass.

#include <cmath>
#include <cstddef>
#include <limits>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "chunkalign/error.hpp"
#include "chunkalign/net.hpp"

namespace chunkalign {

struct CostMatrix {
  MatrixXd c;  // (n+1) x (m+1); corner unused and kept at 0

  Eigen::Index n() const { return c.rows() - 1; }
  Eigen::Index m() const { return c.cols() - 1; }
};

enum class EpsilonPlacement {
  Kernel,  // k = exp(-c/λ) + ε
  Cost,    // k = exp(-(c + ε)/λ)
};

struct SinkhornConfig {
  double lambda = 0.6;
  double epsilon = 1e-8;
  int iterations = 20;
  EpsilonPlacement placement = EpsilonPlacement::Kernel;

  void check() const {
    if (!(lambda > 0)) throw ConfigError("sinkhorn lambda must be positive");
    if (!(epsilon > 0)) throw ConfigError("sinkhorn epsilon must be positive");
    if (iterations < 1) throw ConfigError("sinkhorn iterations must be at least 1");
  }
};

struct TransportPlan {
  MatrixXd p;
  double row_residual = 0;  // max |row sum − 1| over real rows
  double col_residual = 0;  // max |column sum − 1| over real columns
  double entropy = 0;       // −Σ p log p
};

/// Per-row minimizer chosen by the shift, for the reverse pass.
struct CostTape {
  std::vector<Eigen::Index> row_argmin;
};

/// Raw costs C_ij = −g^x_i g^y_j θ_ij, C_iφ = −(1 − g^x_i), C_φj = −(1 − g^y_j),
/// then every row (φ row included) shifted so its minimum is exactly 0.
inline CostMatrix build_cost(const ScoreMatrix& s, const GateVectors& g, CostTape* tape = nullptr) {
  const MatrixXd& th = s.effective();
  const Eigen::Index n = th.rows(), m = th.cols();
  CostMatrix out{MatrixXd::Zero(n + 1, m + 1)};
  MatrixXd& c = out.c;
  c.topLeftCorner(n, m) = -(g.g_x * g.g_y.transpose()).cwiseProduct(th);
  c.col(m).head(n) = -(1.0 - g.g_x.array()).matrix();
  c.row(n).head(m) = -(1.0 - g.g_y.array()).matrix().transpose();
  CostTape t;
  t.row_argmin.resize(static_cast<std::size_t>(n + 1));
  for (Eigen::Index i = 0; i <= n; ++i) {
    const Eigen::Index width = i < n ? m + 1 : m;
    Eigen::Index arg = 0;
    const double mn = c.row(i).head(width).minCoeff(&arg);
    c.row(i).head(width).array() -= mn;
    c(i, arg) = 0.0;
    t.row_argmin[static_cast<std::size_t>(i)] = arg;
  }
  if (tape) *tape = std::move(t);
  return out;
}

/// Reverse pass of build_cost: accumulates adjoints of θ′ and the gates.
inline void build_cost_backward(const CostTape& tape, const ScoreMatrix& s, const GateVectors& g,
                                const MatrixXd& dcost, ScoreGrad& up, VectorXd& dgx, VectorXd& dgy) {
  const MatrixXd& th = s.effective();
  const Eigen::Index n = th.rows(), m = th.cols();
  MatrixXd draw = dcost;
  draw(n, m) = 0.0;
  for (Eigen::Index i = 0; i <= n; ++i) {
    const Eigen::Index width = i < n ? m + 1 : m;
    draw(i, tape.row_argmin[static_cast<std::size_t>(i)]) -= dcost.row(i).head(width).sum();
  }
  for (Eigen::Index i = 0; i < n; ++i) {
    for (Eigen::Index j = 0; j < m; ++j) {
      dgx[i] -= draw(i, j) * g.g_y[j] * th(i, j);
      dgy[j] -= draw(i, j) * g.g_x[i] * th(i, j);
      up.theta(i, j) -= draw(i, j) * g.g_x[i] * g.g_y[j];
    }
    dgx[i] += draw(i, m);
  }
  for (Eigen::Index j = 0; j < m; ++j) dgy[j] += draw(n, j);
}

/// States recorded by the unrolled Sinkhorn iterations.
struct SinkhornTape {
  MatrixXd kernel;
  std::vector<MatrixXd> before_rows;  // matrix entering each row pass
  std::vector<MatrixXd> before_cols;  // matrix entering each column pass
  std::vector<VectorXd> row_sums;
  std::vector<VectorXd> col_sums;
};

namespace detail {

inline bool is_corner(Eigen::Index i, Eigen::Index j, Eigen::Index n, Eigen::Index m) { return i == n && j == m; }

inline double plan_entropy(const MatrixXd& p) {
  double h = 0;
  for (Eigen::Index k = 0; k < p.size(); ++k) {
    const double v = p.data()[k];
    if (v > 0) h -= v * std::log(v);
  }
  return h;
}

}  // namespace detail

inline MatrixXd sinkhorn_kernel(const CostMatrix& cost, const SinkhornConfig& cfg) {
  cfg.check();
  const Eigen::Index n = cost.n(), m = cost.m();
  MatrixXd k(n + 1, m + 1);
  for (Eigen::Index j = 0; j <= m; ++j)
    for (Eigen::Index i = 0; i <= n; ++i) {
      if (detail::is_corner(i, j, n, m)) {
        k(i, j) = 0.0;
        continue;
      }
      const double c = cost.c(i, j);
      if (!std::isfinite(c)) throw NumericError("non-finite cost entry at (" + std::to_string(i) + "," + std::to_string(j) + ")");
      if (c < 0) throw ValidationError("sinkhorn requires non-negative costs; got " + std::to_string(c));
      k(i, j) = cfg.placement == EpsilonPlacement::Kernel ? std::exp(-c / cfg.lambda) + cfg.epsilon
                                                           : std::exp(-(c + cfg.epsilon) / cfg.lambda);
      if (!std::isfinite(k(i, j)))
        throw NumericError("non-finite kernel entry; increase lambda or rescale the costs");
    }
  return k;
}

/// K alternating passes: normalize real rows to 1, then real columns to 1.
inline TransportPlan sinkhorn(const CostMatrix& cost, const SinkhornConfig& cfg, SinkhornTape* tape = nullptr) {
  const Eigen::Index n = cost.n(), m = cost.m();
  MatrixXd p = sinkhorn_kernel(cost, cfg);
  if (tape) {
    tape->kernel = p;
    tape->before_rows.clear();
    tape->before_cols.clear();
    tape->row_sums.clear();
    tape->col_sums.clear();
  }
  for (int it = 0; it < cfg.iterations; ++it) {
    VectorXd rs = p.topRows(n).rowwise().sum();
    if (tape) {
      tape->before_rows.push_back(p);
      tape->row_sums.push_back(rs);
    }
    for (Eigen::Index i = 0; i < n; ++i) {
      if (!(rs[i] > 0) || !std::isfinite(rs[i]))
        throw NumericError("sinkhorn row " + std::to_string(i) + " has no mass; increase lambda or rescale the costs");
      p.row(i) /= rs[i];
    }
    VectorXd cs = p.leftCols(m).colwise().sum().transpose();
    if (tape) {
      tape->before_cols.push_back(p);
      tape->col_sums.push_back(cs);
    }
    for (Eigen::Index j = 0; j < m; ++j) {
      if (!(cs[j] > 0) || !std::isfinite(cs[j]))
        throw NumericError("sinkhorn column " + std::to_string(j) + " has no mass; increase lambda or rescale the costs");
      p.col(j) /= cs[j];
    }
  }
  TransportPlan plan;
  plan.row_residual = (p.topRows(n).rowwise().sum().array() - 1.0).abs().maxCoeff();
  plan.col_residual = (p.leftCols(m).colwise().sum().array() - 1.0).abs().maxCoeff();
  plan.entropy = detail::plan_entropy(p);
  plan.p = std::move(p);
  return plan;
}

/// Exact reverse-mode gradient of the unrolled iterations, from dL/dp to dL/dcost.
inline MatrixXd sinkhorn_backward(const SinkhornTape& tape, const SinkhornConfig& cfg, const MatrixXd& dplan) {
  const Eigen::Index n = tape.kernel.rows() - 1, m = tape.kernel.cols() - 1;
  MatrixXd g = dplan;
  for (int it = static_cast<int>(tape.before_rows.size()) - 1; it >= 0; --it) {
    // Column pass: out = in / s_j for real columns.
    {
      const MatrixXd& in = tape.before_cols[static_cast<std::size_t>(it)];
      const VectorXd& cs = tape.col_sums[static_cast<std::size_t>(it)];
      for (Eigen::Index j = 0; j < m; ++j) {
        const double s = cs[j];
        const double dot = g.col(j).dot(in.col(j)) / s;  // Σ_i g_ij out_ij
        g.col(j) = (g.col(j).array() - dot) / s;
      }
    }
    // Row pass.
    {
      const MatrixXd& in = tape.before_rows[static_cast<std::size_t>(it)];
      const VectorXd& rs = tape.row_sums[static_cast<std::size_t>(it)];
      for (Eigen::Index i = 0; i < n; ++i) {
        const double s = rs[i];
        const double dot = g.row(i).dot(in.row(i)) / s;
        g.row(i) = (g.row(i).array() - dot) / s;
      }
    }
  }
  MatrixXd dcost = MatrixXd::Zero(n + 1, m + 1);
  for (Eigen::Index j = 0; j <= m; ++j)
    for (Eigen::Index i = 0; i <= n; ++i) {
      if (detail::is_corner(i, j, n, m)) continue;
      const double k = tape.kernel(i, j);
      const double e = cfg.placement == EpsilonPlacement::Kernel ? k - cfg.epsilon : k;
      dcost(i, j) = -g(i, j) * e / cfg.lambda;
    }
  return dcost;
}

}  // namespace chunkalign
