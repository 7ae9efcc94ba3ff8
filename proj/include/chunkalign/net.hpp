#pragma once

// Gated pointer network: pairwise chunk scores, φ scores, sigmoid gates and the
// row-softmax alignment model, each with a hand-written reverse pass.

#include <cmath>
#include <cstddef>
#include <functional>
#include <optional>
#include <random>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "json.hpp"

#include "chunkalign/embed.hpp"
#include "chunkalign/error.hpp"

namespace chunkalign {

using Eigen::MatrixXd;
using Eigen::VectorXd;

/// Learnable parameters. W1, W2, W3 are d x E; v and the φ chunk live in R^d and R^E.
struct PointerParams {
  MatrixXd w1, w2, w3;
  VectorXd v;
  VectorXd phi;
  double c1 = 1.0, c2 = 0.0, d1 = 1.0, d2 = 0.0;

  Eigen::Index input_dim() const { return w1.cols(); }
  Eigen::Index proj_dim() const { return w1.rows(); }

  static PointerParams zeros(Eigen::Index input_dim, Eigen::Index proj_dim) {
    PointerParams p;
    p.w1 = p.w2 = p.w3 = MatrixXd::Zero(proj_dim, input_dim);
    p.v = VectorXd::Zero(proj_dim);
    p.phi = VectorXd::Zero(input_dim);
    p.c1 = p.c2 = p.d1 = p.d2 = 0.0;
    return p;
  }

  /// W and v uniform in ±1/sqrt(E), φ zero, c1 = d1 = 1, c2 = d2 = 0.
  static PointerParams init(Eigen::Index input_dim, Eigen::Index proj_dim, std::uint64_t seed) {
    if (input_dim <= 0 || proj_dim <= 0) throw ShapeError("parameter dimensions must be positive");
    std::mt19937_64 rng(seed);
    const double s = 1.0 / std::sqrt(static_cast<double>(input_dim));
    std::uniform_real_distribution<double> u(-s, s);
    auto fill = [&](auto& m) {
      for (Eigen::Index k = 0; k < m.size(); ++k) m.data()[k] = u(rng);
    };
    PointerParams p = zeros(input_dim, proj_dim);
    fill(p.w1);
    fill(p.w2);
    fill(p.w3);
    fill(p.v);
    p.c1 = p.d1 = 1.0;
    return p;
  }

  void check_shapes() const {
    const auto d = proj_dim(), e = input_dim();
    if (d <= 0 || e <= 0 || w2.rows() != d || w2.cols() != e || w3.rows() != d || w3.cols() != e ||
        v.size() != d || phi.size() != e)
      throw ShapeError("inconsistent pointer parameter shapes");
  }

  std::size_t size() const {
    return static_cast<std::size_t>(w1.size() + w2.size() + w3.size() + v.size() + phi.size() + 4);
  }

  /// Visits every parameter group as (name, pointer, length).
  template <class F>
  void for_each_group(F&& f) {
    f("W1", w1.data(), static_cast<std::size_t>(w1.size()));
    f("W2", w2.data(), static_cast<std::size_t>(w2.size()));
    f("W3", w3.data(), static_cast<std::size_t>(w3.size()));
    f("v", v.data(), static_cast<std::size_t>(v.size()));
    f("phi", phi.data(), static_cast<std::size_t>(phi.size()));
    f("c1", &c1, std::size_t{1});
    f("c2", &c2, std::size_t{1});
    f("d1", &d1, std::size_t{1});
    f("d2", &d2, std::size_t{1});
  }
  template <class F>
  void for_each_group(F&& f) const {
    const_cast<PointerParams*>(this)->for_each_group(
        [&](const char* name, double* p, std::size_t n) { f(name, static_cast<const double*>(p), n); });
  }

  PointerParams& operator+=(const PointerParams& o) {
    w1 += o.w1;
    w2 += o.w2;
    w3 += o.w3;
    v += o.v;
    phi += o.phi;
    c1 += o.c1;
    c2 += o.c2;
    d1 += o.d1;
    d2 += o.d2;
    return *this;
  }

  bool all_finite() const {
    bool ok = true;
    for_each_group([&](const char*, const double* p, std::size_t n) {
      for (std::size_t k = 0; k < n; ++k) ok = ok && std::isfinite(p[k]);
    });
    return ok;
  }

  bool operator==(const PointerParams& o) const {
    return w1 == o.w1 && w2 == o.w2 && w3 == o.w3 && v == o.v && phi == o.phi && c1 == o.c1 && c2 == o.c2 &&
           d1 == o.d1 && d2 == o.d2;
  }
};

struct ScoreMatrix {
  MatrixXd theta;                       // n x m
  VectorXd b_x_phi;                     // n
  VectorXd b_y_phi;                     // m
  std::optional<MatrixXd> theta_prime;  // θ + ρ·m when constraints are active

  const MatrixXd& effective() const { return theta_prime ? *theta_prime : theta; }
  Eigen::Index n() const { return theta.rows(); }
  Eigen::Index m() const { return theta.cols(); }
};

struct GateVectors {
  VectorXd g_x;  // n
  VectorXd g_y;  // m
};

/// Row distributions over y ∪ {φ} (n x (m+1), φ last) and p(z_φj) = 1 − g^y_j.
struct UnidirectionalOutput {
  MatrixXd rows;
  VectorXd phi_col;
};

inline double sigmoid(double z) {
  return z >= 0 ? 1.0 / (1.0 + std::exp(-z)) : std::exp(z) / (1.0 + std::exp(z));
}

/// Intermediate values of score_matrix kept for the reverse pass.
struct ScoreTape {
  MatrixXd x, y;         // inputs
  MatrixXd hadamard;     // (n·m) x E, row i*m+j = x_i ⊙ y_j
  MatrixXd hidden;       // (n·m) x d, tanh activations of the pairwise scores
  MatrixXd hidden_x;     // n x d, tanh of W1 x_i + W2 φ
  MatrixXd hidden_y;     // m x d, tanh of W1 φ + W2 y_j
};

inline ScoreMatrix score_matrix(const MatrixXd& x, const MatrixXd& y, const PointerParams& params,
                                ScoreTape* tape = nullptr) {
  params.check_shapes();
  const Eigen::Index n = x.rows(), m = y.rows(), e = params.input_dim();
  if (x.cols() != e || y.cols() != e)
    throw ShapeError("chunk vectors have length " + std::to_string(x.cols()) + "/" + std::to_string(y.cols()) +
                     " but the parameters expect " + std::to_string(e));
  const MatrixXd a = x * params.w1.transpose();  // n x d
  const MatrixXd b = y * params.w2.transpose();  // m x d
  MatrixXd had(n * m, e);
  for (Eigen::Index i = 0; i < n; ++i)
    for (Eigen::Index j = 0; j < m; ++j) had.row(i * m + j) = x.row(i).cwiseProduct(y.row(j));
  MatrixXd hidden = had * params.w3.transpose();  // nm x d
  for (Eigen::Index i = 0; i < n; ++i)
    for (Eigen::Index j = 0; j < m; ++j) hidden.row(i * m + j) += a.row(i) + b.row(j);
  hidden = hidden.array().tanh().matrix();

  ScoreMatrix s;
  const VectorXd flat = hidden * params.v;
  s.theta = Eigen::Map<const Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>>(
      flat.data(), n, m);

  const Eigen::RowVectorXd u1 = (params.w1 * params.phi).transpose();
  const Eigen::RowVectorXd u2 = (params.w2 * params.phi).transpose();
  MatrixXd hx = (a.rowwise() + u2).array().tanh().matrix();
  MatrixXd hy = (b.rowwise() + u1).array().tanh().matrix();
  s.b_x_phi = hx * params.v;
  s.b_y_phi = hy * params.v;
  if (tape) {
    tape->x = x;
    tape->y = y;
    tape->hadamard = std::move(had);
    tape->hidden = std::move(hidden);
    tape->hidden_x = std::move(hx);
    tape->hidden_y = std::move(hy);
  }
  return s;
}

inline ScoreMatrix score_matrix(const std::vector<ChunkVector>& xs, const std::vector<ChunkVector>& ys,
                                const PointerParams& params) {
  auto stack = [](const std::vector<ChunkVector>& vs) {
    if (vs.empty()) throw ShapeError("empty chunk list");
    MatrixXd out(static_cast<Eigen::Index>(vs.size()), vs.front().values.size());
    for (std::size_t k = 0; k < vs.size(); ++k) {
      if (vs[k].values.size() != out.cols()) throw ShapeError("chunk vectors of mixed length");
      out.row(static_cast<Eigen::Index>(k)) = vs[k].values.transpose();
    }
    return out;
  };
  return score_matrix(stack(xs), stack(ys), params);
}

/// Adjoints of the score outputs.
struct ScoreGrad {
  MatrixXd theta;  // n x m (adjoint of the effective scores; θ′ = θ + const)
  VectorXd b_x_phi;
  VectorXd b_y_phi;
};

/// Accumulates parameter gradients of score_matrix into `grad`.
inline void score_matrix_backward(const ScoreTape& tape, const PointerParams& params, const ScoreGrad& up,
                                  PointerParams& grad) {
  const Eigen::Index n = tape.x.rows(), m = tape.y.rows();
  // dL/d(pre-activation) for every cell.
  VectorXd dtheta(n * m);
  for (Eigen::Index i = 0; i < n; ++i)
    for (Eigen::Index j = 0; j < m; ++j) dtheta[i * m + j] = up.theta(i, j);
  grad.v += tape.hidden.transpose() * dtheta;
  MatrixXd dpre = (dtheta * params.v.transpose()).array() * (1.0 - tape.hidden.array().square());

  MatrixXd da = MatrixXd::Zero(n, params.proj_dim());
  MatrixXd db = MatrixXd::Zero(m, params.proj_dim());
  for (Eigen::Index i = 0; i < n; ++i)
    for (Eigen::Index j = 0; j < m; ++j) {
      da.row(i) += dpre.row(i * m + j);
      db.row(j) += dpre.row(i * m + j);
    }
  grad.w3 += dpre.transpose() * tape.hadamard;

  grad.v += tape.hidden_x.transpose() * up.b_x_phi + tape.hidden_y.transpose() * up.b_y_phi;
  MatrixXd dpx = (up.b_x_phi * params.v.transpose()).array() * (1.0 - tape.hidden_x.array().square());
  MatrixXd dpy = (up.b_y_phi * params.v.transpose()).array() * (1.0 - tape.hidden_y.array().square());
  da += dpx;
  db += dpy;
  const VectorXd du2 = dpx.colwise().sum().transpose();  // through W2 φ
  const VectorXd du1 = dpy.colwise().sum().transpose();  // through W1 φ

  grad.w1 += da.transpose() * tape.x + du1 * params.phi.transpose();
  grad.w2 += db.transpose() * tape.y + du2 * params.phi.transpose();
  grad.phi += params.w1.transpose() * du1 + params.w2.transpose() * du2;
}

/// Gate inputs remembered for the reverse pass.
struct GateTape {
  VectorXd margin_x, margin_y;                  // max_j(θ_ij − b^x_iφ), max_i(θ_ij − b^y_φj)
  std::vector<Eigen::Index> argmax_x, argmax_y;  // maximizing column per row / row per column
};

/// g^x_i = σ(c1·max_j(θ_ij − b^x_iφ) + c2), g^y_j = σ(d1·max_i(θ_ij − b^y_φj) + d2),
/// using θ′ whenever constraints were applied.
inline GateVectors gates(const ScoreMatrix& s, const PointerParams& p, GateTape* tape = nullptr) {
  const MatrixXd& th = s.effective();
  const Eigen::Index n = th.rows(), m = th.cols();
  GateVectors g{VectorXd(n), VectorXd(m)};
  GateTape t{VectorXd(n), VectorXd(m), std::vector<Eigen::Index>(n), std::vector<Eigen::Index>(m)};
  for (Eigen::Index i = 0; i < n; ++i) {
    Eigen::Index arg = 0;
    const double best = th.row(i).maxCoeff(&arg);
    t.margin_x[i] = best - s.b_x_phi[i];
    t.argmax_x[i] = arg;
    g.g_x[i] = sigmoid(p.c1 * t.margin_x[i] + p.c2);
  }
  for (Eigen::Index j = 0; j < m; ++j) {
    Eigen::Index arg = 0;
    const double best = th.col(j).maxCoeff(&arg);
    t.margin_y[j] = best - s.b_y_phi[j];
    t.argmax_y[j] = arg;
    g.g_y[j] = sigmoid(p.d1 * t.margin_y[j] + p.d2);
  }
  if (tape) *tape = std::move(t);
  return g;
}

/// Given adjoints of the gates, accumulates into the score adjoints and the c/d scalars.
inline void gates_backward(const GateTape& tape, const GateVectors& g, const PointerParams& p,
                           const VectorXd& dgx, const VectorXd& dgy, ScoreGrad& up, PointerParams& grad) {
  for (Eigen::Index i = 0; i < g.g_x.size(); ++i) {
    const double dz = dgx[i] * g.g_x[i] * (1.0 - g.g_x[i]);
    grad.c1 += dz * tape.margin_x[i];
    grad.c2 += dz;
    const double dmargin = dz * p.c1;
    up.theta(i, tape.argmax_x[i]) += dmargin;
    up.b_x_phi[i] -= dmargin;
  }
  for (Eigen::Index j = 0; j < g.g_y.size(); ++j) {
    const double dz = dgy[j] * g.g_y[j] * (1.0 - g.g_y[j]);
    grad.d1 += dz * tape.margin_y[j];
    grad.d2 += dz;
    const double dmargin = dz * p.d1;
    up.theta(tape.argmax_y[j], j) += dmargin;
    up.b_y_phi[j] -= dmargin;
  }
}

/// Max-shifted softmax of each row.
inline MatrixXd softmax_rows(const MatrixXd& z) {
  MatrixXd out(z.rows(), z.cols());
  for (Eigen::Index i = 0; i < z.rows(); ++i) {
    const double mx = z.row(i).maxCoeff();
    out.row(i) = (z.row(i).array() - mx).exp().matrix();
    out.row(i) /= out.row(i).sum();
  }
  return out;
}

/// Pre-softmax activations [g^x_i g^y_j θ_ij ; 1 − g^x_i], φ in the last column.
inline MatrixXd unidirectional_logits(const ScoreMatrix& s, const GateVectors& g) {
  const MatrixXd& th = s.effective();
  const Eigen::Index n = th.rows(), m = th.cols();
  MatrixXd z(n, m + 1);
  z.leftCols(m) = (g.g_x * g.g_y.transpose()).cwiseProduct(th);
  z.col(m) = (1.0 - g.g_x.array()).matrix();
  return z;
}

inline UnidirectionalOutput forward_unidirectional(const ScoreMatrix& s, const GateVectors& g) {
  return {softmax_rows(unidirectional_logits(s, g)), (1.0 - g.g_y.array()).matrix()};
}

/// Reverse pass of forward_unidirectional: accumulates into the score and gate adjoints.
inline void unidirectional_backward(const ScoreMatrix& s, const GateVectors& g, const UnidirectionalOutput& out,
                                    const MatrixXd& d_rows, const VectorXd& d_phi_col, ScoreGrad& up,
                                    VectorXd& dgx, VectorXd& dgy) {
  const MatrixXd& th = s.effective();
  const Eigen::Index n = th.rows(), m = th.cols();
  for (Eigen::Index i = 0; i < n; ++i) {
    const double dot = out.rows.row(i).dot(d_rows.row(i));
    const Eigen::RowVectorXd dz = out.rows.row(i).cwiseProduct((d_rows.row(i).array() - dot).matrix());
    for (Eigen::Index j = 0; j < m; ++j) {
      dgx[i] += dz[j] * g.g_y[j] * th(i, j);
      dgy[j] += dz[j] * g.g_x[i] * th(i, j);
      up.theta(i, j) += dz[j] * g.g_x[i] * g.g_y[j];
    }
    dgx[i] -= dz[m];
  }
  dgy -= d_phi_col;
}

// ---------------------------------------------------------------------------
// Serialization

namespace detail {

inline nlohmann::json matrix_to_json(const MatrixXd& mtx) {
  nlohmann::json rows = nlohmann::json::array();
  for (Eigen::Index r = 0; r < mtx.rows(); ++r) {
    nlohmann::json row = nlohmann::json::array();
    for (Eigen::Index c = 0; c < mtx.cols(); ++c) row.push_back(mtx(r, c));
    rows.push_back(std::move(row));
  }
  return rows;
}

inline MatrixXd matrix_from_json(const nlohmann::json& j, Eigen::Index rows, Eigen::Index cols, const char* name) {
  if (!j.is_array() || static_cast<Eigen::Index>(j.size()) != rows)
    throw SchemaError("checkpoint", name, "expected " + std::to_string(rows) + " rows");
  MatrixXd out(rows, cols);
  for (Eigen::Index r = 0; r < rows; ++r) {
    const auto& row = j[static_cast<std::size_t>(r)];
    if (!row.is_array() || static_cast<Eigen::Index>(row.size()) != cols)
      throw SchemaError("checkpoint", name, "expected " + std::to_string(cols) + " columns");
    for (Eigen::Index c = 0; c < cols; ++c) out(r, c) = row[static_cast<std::size_t>(c)].get<double>();
  }
  return out;
}

inline VectorXd vector_from_json(const nlohmann::json& j, Eigen::Index size, const char* name) {
  if (!j.is_array() || static_cast<Eigen::Index>(j.size()) != size)
    throw SchemaError("checkpoint", name, "expected " + std::to_string(size) + " values");
  VectorXd out(size);
  for (Eigen::Index k = 0; k < size; ++k) out[k] = j[static_cast<std::size_t>(k)].get<double>();
  return out;
}

}  // namespace detail

inline nlohmann::json to_json(const PointerParams& p) {
  return {{"input_dim", p.input_dim()},
          {"proj_dim", p.proj_dim()},
          {"W1", detail::matrix_to_json(p.w1)},
          {"W2", detail::matrix_to_json(p.w2)},
          {"W3", detail::matrix_to_json(p.w3)},
          {"v", std::vector<double>(p.v.data(), p.v.data() + p.v.size())},
          {"phi", std::vector<double>(p.phi.data(), p.phi.data() + p.phi.size())},
          {"c1", p.c1},
          {"c2", p.c2},
          {"d1", p.d1},
          {"d2", p.d2}};
}

inline PointerParams params_from_json(const nlohmann::json& j) {
  auto need = [&](const char* f) -> const nlohmann::json& {
    auto it = j.find(f);
    if (it == j.end()) throw SchemaError("checkpoint", f, "missing");
    return *it;
  };
  const auto e = need("input_dim").get<Eigen::Index>();
  const auto d = need("proj_dim").get<Eigen::Index>();
  PointerParams p;
  p.w1 = detail::matrix_from_json(need("W1"), d, e, "W1");
  p.w2 = detail::matrix_from_json(need("W2"), d, e, "W2");
  p.w3 = detail::matrix_from_json(need("W3"), d, e, "W3");
  p.v = detail::vector_from_json(need("v"), d, "v");
  p.phi = detail::vector_from_json(need("phi"), e, "phi");
  p.c1 = need("c1").get<double>();
  p.c2 = need("c2").get<double>();
  p.d1 = need("d1").get<double>();
  p.d2 = need("d2").get<double>();
  p.check_shapes();
  if (!p.all_finite()) throw SchemaError("checkpoint", "<params>", "non-finite value");
  return p;
}

}  // namespace chunkalign
