#pragma once

// Shared fixtures for the test binaries.

#include <cstdint>
#include <random>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "chunkalign/chunkalign.hpp"

namespace testing_support {

using namespace chunkalign;

inline Sentence sentence(const std::vector<std::string>& words, const std::vector<Chunk>& chunks) {
  Sentence s;
  for (std::size_t t = 0; t < words.size(); ++t) s.tokens.push_back({words[t], "", std::nullopt, t});
  s.chunks = chunks;
  return s;
}

/// Pair of single-token chunks carrying random features and a random gold alignment.
struct RandomPair {
  ChunkedPair pair;
  PairExample example;
};

inline RandomPair random_pair(Eigen::Index n, Eigen::Index m, Eigen::Index e, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> g(0.0, 1.0);
  std::bernoulli_distribution coin(0.4);
  RandomPair r;
  std::vector<std::string> xs, ys;
  for (Eigen::Index i = 0; i < n; ++i) xs.push_back("x" + std::to_string(i));
  for (Eigen::Index j = 0; j < m; ++j) ys.push_back("y" + std::to_string(j));
  r.pair.id = "rand" + std::to_string(seed);
  r.pair.x = detail::single_token_sentence(xs);
  r.pair.y = detail::single_token_sentence(ys);
  GoldAlignment gold(static_cast<std::size_t>(n), static_cast<std::size_t>(m));
  for (Eigen::Index i = 0; i < n; ++i)
    for (Eigen::Index j = 0; j < m; ++j)
      if (coin(rng)) gold.add(static_cast<std::size_t>(i), static_cast<std::size_t>(j));
  r.pair.gold = gold;
  r.example.features.x = Eigen::MatrixXd::NullaryExpr(n, e, [&] { return g(rng); });
  r.example.features.y = Eigen::MatrixXd::NullaryExpr(m, e, [&] { return g(rng); });
  return r;
}

/// Randomizes the scalar gate parameters so every gradient path is exercised.
inline PointerParams random_params(Eigen::Index e, Eigen::Index d, std::uint64_t seed) {
  PointerParams p = PointerParams::init(e, d, seed);
  std::mt19937_64 rng(seed + 7);
  std::uniform_real_distribution<double> u(-0.5, 0.5);
  for (Eigen::Index k = 0; k < p.phi.size(); ++k) p.phi[k] = u(rng);
  p.c1 = 1.0 + u(rng);
  p.c2 = u(rng);
  p.d1 = 1.0 + u(rng);
  p.d2 = u(rng);
  return p;
}

inline CostMatrix random_cost(Eigen::Index n, Eigen::Index m, double hi, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> u(0.0, hi);
  CostMatrix c{Eigen::MatrixXd::NullaryExpr(n + 1, m + 1, [&] { return u(rng); })};
  c.c(n, m) = 0.0;
  return c;
}

}  // namespace testing_support
