#pragma once

// Synthetic corpora with known gold structure. Every chunk is a single token
// with a unique surface form, so mean pooling over the generated word-vector
// table returns exactly the generated chunk vector.

#include <algorithm>
#include <cstdint>
#include <numeric>
#include <random>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "chunkalign/corpus.hpp"
#include "chunkalign/embed.hpp"
#include "chunkalign/error.hpp"

namespace chunkalign {

enum class SyntheticMode { Identity, Permutation, Unaligned };

struct SyntheticSpec {
  std::size_t pairs = 200;
  std::size_t min_chunks = 2;
  std::size_t max_chunks = 6;
  std::size_t dim = 50;
  double sigma = 0.1;
  SyntheticMode mode = SyntheticMode::Identity;
  double unaligned_fraction = 0.0;  // used in Unaligned mode
  // Extra, gold-unaligned x chunks per pair, each a copy of an aligned x
  // chunk plus `duplicate_sigma` noise: they compete for the same y chunk.
  std::size_t near_duplicates = 0;
  double duplicate_sigma = 0.05;

  void check() const {
    if (sigma < 0 || duplicate_sigma < 0) throw ConfigError("noise scale must be non-negative");
    if (min_chunks < 1 || max_chunks < min_chunks) throw ConfigError("chunk-count range is empty");
    if (dim == 0) throw ConfigError("dimension must be positive");
    if (unaligned_fraction < 0 || unaligned_fraction > 1) throw ConfigError("unaligned fraction must lie in [0, 1]");
  }
};

struct SyntheticCorpus {
  std::vector<ChunkedPair> pairs;
  EmbeddingTable table;
};

namespace detail {

struct SyntheticRng {
  std::mt19937_64 engine;
  std::normal_distribution<double> normal{0.0, 1.0};

  Eigen::VectorXd gaussian(std::size_t dim) {
    Eigen::VectorXd v(static_cast<Eigen::Index>(dim));
    for (Eigen::Index k = 0; k < v.size(); ++k) v[k] = normal(engine);
    return v;
  }
  Eigen::VectorXd unit(std::size_t dim) {
    Eigen::VectorXd v = gaussian(dim);
    return v / v.norm();
  }
};

inline Sentence single_token_sentence(const std::vector<std::string>& surfaces) {
  Sentence s;
  for (std::size_t t = 0; t < surfaces.size(); ++t) {
    s.tokens.push_back({surfaces[t], "NOUN", std::size_t{0}, t});
    s.chunks.push_back({t, t + 1});
  }
  return s;
}

}  // namespace detail

inline SyntheticCorpus generate(const SyntheticSpec& spec, std::uint64_t seed) {
  spec.check();
  detail::SyntheticRng rng{std::mt19937_64(seed)};
  std::uniform_int_distribution<std::size_t> count(spec.min_chunks, spec.max_chunks);
  std::uniform_real_distribution<double> coin(0.0, 1.0);
  SyntheticCorpus out{{}, EmbeddingTable(spec.dim)};

  for (std::size_t p = 0; p < spec.pairs; ++p) {
    const std::size_t n = count(rng.engine);
    std::vector<std::size_t> perm(n);
    std::iota(perm.begin(), perm.end(), std::size_t{0});
    if (spec.mode == SyntheticMode::Permutation) std::shuffle(perm.begin(), perm.end(), rng.engine);

    std::vector<Eigen::VectorXd> xs, ys(n);
    std::vector<bool> aligned(n, true);
    for (std::size_t i = 0; i < n; ++i) {
      xs.push_back(rng.unit(spec.dim));
      if (spec.mode == SyntheticMode::Unaligned) aligned[i] = coin(rng.engine) >= spec.unaligned_fraction;
      ys[perm[i]] = aligned[i] ? Eigen::VectorXd(xs[i] + spec.sigma * rng.gaussian(spec.dim))
                               : rng.unit(spec.dim);
    }
    std::vector<std::size_t> aligned_idx;
    for (std::size_t i = 0; i < n; ++i)
      if (aligned[i]) aligned_idx.push_back(i);
    if (!aligned_idx.empty())
      for (std::size_t k = 0; k < spec.near_duplicates; ++k) {
        const std::size_t src = aligned_idx[std::uniform_int_distribution<std::size_t>(0, aligned_idx.size() - 1)(rng.engine)];
        xs.push_back(xs[src] + spec.duplicate_sigma * rng.gaussian(spec.dim));
      }

    const std::string stem = "s" + std::to_string(p);
    std::vector<std::string> sx, sy;
    for (std::size_t i = 0; i < xs.size(); ++i) {
      sx.push_back(stem + "x" + std::to_string(i));
      out.table.insert(sx.back(), xs[i]);
    }
    for (std::size_t j = 0; j < n; ++j) {
      sy.push_back(stem + "y" + std::to_string(j));
      out.table.insert(sy.back(), ys[j]);
    }
    ChunkedPair pair;
    pair.id = stem;
    pair.x = detail::single_token_sentence(sx);
    pair.y = detail::single_token_sentence(sy);
    GoldAlignment gold(xs.size(), n);
    for (std::size_t i = 0; i < n; ++i)
      if (aligned[i]) gold.add(i, perm[i]);
    pair.gold = std::move(gold);
    out.pairs.push_back(std::move(pair));
  }
  return out;
}

}  // namespace chunkalign
