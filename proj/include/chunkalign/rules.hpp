#pragma once

// Logic-rule side supervision. Two predicates fire on chunk pairs:
//   relation : a content-word unigram/bigram of x_i is related to one of y_j
//              in a relation lexicon (ConceptNet/PPDB-style triples);
//   syntax   : chunk-level syntactic similarity from dependency parses >= τ.
// A firing adds ρ to the pairwise score θ_ij.

#include <algorithm>
#include <array>
#include <cstddef>
#include <fstream>
#include <istream>
#include <optional>
#include <set>
#include <span>
#include <string>
#include <string_view>
#include <unordered_set>
#include <vector>

#include <Eigen/Dense>

#include "chunkalign/corpus.hpp"
#include "chunkalign/embed.hpp"
#include "chunkalign/error.hpp"
#include "chunkalign/net.hpp"

namespace chunkalign {

enum class Relation { Synonym, Antonym, IsA, SimilarTo, RelatedTo, DistinctFrom, FormOf };

inline constexpr std::array<std::pair<std::string_view, Relation>, 7> kRelationNames = {{
    {"Synonym", Relation::Synonym},
    {"Antonym", Relation::Antonym},
    {"IsA", Relation::IsA},
    {"SimilarTo", Relation::SimilarTo},
    {"RelatedTo", Relation::RelatedTo},
    {"DistinctFrom", Relation::DistinctFrom},
    {"FormOf", Relation::FormOf},
}};

/// Accepts the bare name or a ConceptNet URI ("/r/IsA"), case-insensitively.
inline std::optional<Relation> parse_relation(std::string_view name) {
  if (name.starts_with("/r/")) name.remove_prefix(3);
  const std::string lower = to_lower(name);
  for (const auto& [n, r] : kRelationNames)
    if (to_lower(n) == lower) return r;
  return std::nullopt;
}

inline bool is_symmetric(Relation r) { return r != Relation::IsA && r != Relation::FormOf; }

class RelationLexicon {
 public:
  void add(std::string_view a, std::string_view b, Relation r) {
    std::string la = normalize(a), lb = normalize(b);
    if (la.empty() || lb.empty()) throw ValidationError("empty lexicon term");
    directed_.insert(key(la, lb));
    if (is_symmetric(r)) directed_.insert(key(lb, la));
    ++size_;
  }

  /// True iff some triple relates term a to term b (either order for symmetric relations).
  bool related(std::string_view a, std::string_view b) const {
    return directed_.count(key(normalize(a), normalize(b))) > 0;
  }

  std::size_t size() const { return size_; }
  bool empty() const { return size_ == 0; }

 private:
  static std::string normalize(std::string_view s) {
    std::string out;
    for (const auto& w : detail::split_ws(s)) {
      if (!out.empty()) out += ' ';
      out += to_lower(w);
    }
    return out;
  }
  static std::string key(const std::string& a, const std::string& b) { return a + '\t' + b; }

  std::unordered_set<std::string> directed_;
  std::size_t size_ = 0;
};

/// One triple per line: term_a TAB term_b TAB relation.
inline RelationLexicon parse_triples(std::istream& in) {
  RelationLexicon lex;
  std::size_t lineno = 0;
  for (std::string line; std::getline(in, line);) {
    ++lineno;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (detail::trim(line).empty() || line.starts_with("#")) continue;
    std::vector<std::string> f;
    std::size_t start = 0;
    for (std::size_t tab; (tab = line.find('\t', start)) != std::string::npos; start = tab + 1)
      f.push_back(line.substr(start, tab - start));
    f.push_back(line.substr(start));
    if (f.size() != 3) throw ParseError("expected 3 tab-separated fields, got " + std::to_string(f.size()), lineno);
    auto rel = parse_relation(detail::trim(f[2]));
    if (!rel) throw ParseError("unknown relation '" + f[2] + "'", lineno);
    lex.add(f[0], f[1], *rel);
  }
  return lex;
}

inline RelationLexicon load_triples(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw Error("cannot open '" + path + "'");
  return parse_triples(in);
}

struct SynSimConfig {
  double tau = 0.8;
  std::set<std::string, std::less<>> content_tags = {"ADJ", "ADV", "INTJ", "NOUN", "PROPN", "VERB", "NUM"};
};

/// Unannotated tokens (empty POS) are treated as content words.
inline bool is_content(const Token& t, const SynSimConfig& cfg) {
  return t.pos.empty() || cfg.content_tags.count(t.pos) > 0;
}

namespace detail {

inline std::vector<std::string> lexicon_terms(std::span<const Token> chunk, const SynSimConfig& cfg) {
  std::vector<std::string> terms;
  for (std::size_t k = 0; k < chunk.size(); ++k) {
    if (!is_content(chunk[k], cfg)) continue;
    terms.push_back(to_lower(chunk[k].surface));
    if (k + 1 < chunk.size() && is_content(chunk[k + 1], cfg))
      terms.push_back(to_lower(chunk[k].surface) + " " + to_lower(chunk[k + 1].surface));
  }
  return terms;
}

}  // namespace detail

inline bool rel_predicate(std::span<const Token> xi, std::span<const Token> yj, const RelationLexicon& lex,
                          const SynSimConfig& cfg) {
  const auto xs = detail::lexicon_terms(xi, cfg);
  const auto ys = detail::lexicon_terms(yj, cfg);
  for (const auto& a : xs)
    for (const auto& b : ys)
      if (lex.related(a, b)) return true;
  return false;
}

namespace detail {

inline void require_parse(const Sentence& s) {
  if (!s.has_parse()) throw ValidationError("syntactic similarity needs POS tags and dependency heads");
}

/// POS tags on the path from token t to the root, exclusive of t.
inline std::set<std::string> ancestor_tags(const Sentence& s, std::size_t t) {
  std::set<std::string> tags;
  std::size_t cur = t;
  for (std::size_t steps = 0; *s.tokens[cur].head != cur; ++steps) {
    if (steps > s.tokens.size()) throw ValidationError("dependency heads contain a cycle");
    cur = *s.tokens[cur].head;
    tags.insert(s.tokens[cur].pos);
  }
  return tags;
}

inline std::set<std::string> child_tags(const Sentence& s, std::size_t t) {
  std::set<std::string> tags;
  for (std::size_t k = 0; k < s.tokens.size(); ++k)
    if (k != t && *s.tokens[k].head == t) tags.insert(s.tokens[k].pos);
  return tags;
}

/// Set Jaccard; two empty sets count as identical.
inline double jaccard(const std::set<std::string>& a, const std::set<std::string>& b) {
  if (a.empty() && b.empty()) return 1.0;
  std::size_t inter = 0;
  for (const auto& x : a) inter += b.count(x);
  return static_cast<double>(inter) / static_cast<double>(a.size() + b.size() - inter);
}

}  // namespace detail

/// Mean of ancestor-tag Jaccard, child-tag Jaccard and a both-roots indicator.
inline double word_syn_sim(const Sentence& s1, std::size_t w1, const Sentence& s2, std::size_t w2) {
  detail::require_parse(s1);
  detail::require_parse(s2);
  const double anc = detail::jaccard(detail::ancestor_tags(s1, w1), detail::ancestor_tags(s2, w2));
  const double ch = detail::jaccard(detail::child_tags(s1, w1), detail::child_tags(s2, w2));
  const double root = (*s1.tokens[w1].head == w1 && *s2.tokens[w2].head == w2) ? 1.0 : 0.0;
  return (anc + ch + root) / 3.0;
}

/// Average over words of x_i of the best word_syn_sim against words of y_j.
inline double chunk_syn_sim(const Sentence& sx, std::size_t xi, const Sentence& sy, std::size_t yj) {
  const Chunk& cx = sx.chunks.at(xi);
  const Chunk& cy = sy.chunks.at(yj);
  double total = 0;
  for (std::size_t w = cx.start; w < cx.end; ++w) {
    double best = 0;
    for (std::size_t v = cy.start; v < cy.end; ++v) best = std::max(best, word_syn_sim(sx, w, sy, v));
    total += best;
  }
  return total / static_cast<double>(cx.size());
}

struct ConstraintMatrix {
  MatrixXd m;  // n x m, entries in {0, 1}
  Eigen::Matrix<bool, Eigen::Dynamic, Eigen::Dynamic> rel_fired;
  Eigen::Matrix<bool, Eigen::Dynamic, Eigen::Dynamic> syn_fired;
  double rho = 0.0;
};

/// R1 is evaluated when `lex` is given, R2 when `use_syntax` is set. The
/// syntactic threshold is closed: similarity == τ fires.
inline ConstraintMatrix build_constraints(const ChunkedPair& pair, const RelationLexicon* lex, bool use_syntax,
                                          const SynSimConfig& cfg, double rho) {
  if (rho < 0) throw ConfigError("rule strength rho must be non-negative");
  const auto n = static_cast<Eigen::Index>(pair.n()), m = static_cast<Eigen::Index>(pair.m());
  ConstraintMatrix cm;
  cm.m = MatrixXd::Zero(n, m);
  cm.rel_fired.setConstant(n, m, false);
  cm.syn_fired.setConstant(n, m, false);
  cm.rho = rho;
  for (Eigen::Index i = 0; i < n; ++i)
    for (Eigen::Index j = 0; j < m; ++j) {
      const auto ui = static_cast<std::size_t>(i), uj = static_cast<std::size_t>(j);
      if (lex) cm.rel_fired(i, j) = rel_predicate(pair.x.chunk_tokens(ui), pair.y.chunk_tokens(uj), *lex, cfg);
      if (use_syntax) cm.syn_fired(i, j) = chunk_syn_sim(pair.x, ui, pair.y, uj) >= cfg.tau;
      cm.m(i, j) = (cm.rel_fired(i, j) || cm.syn_fired(i, j)) ? 1.0 : 0.0;
    }
  return cm;
}

/// θ′ = θ + ρ·m; θ itself is kept.
inline ScoreMatrix apply_constraints(ScoreMatrix s, const ConstraintMatrix& cm) {
  if (cm.m.rows() != s.n() || cm.m.cols() != s.m())
    throw ShapeError("constraint matrix is " + std::to_string(cm.m.rows()) + "x" + std::to_string(cm.m.cols()) +
                     ", scores are " + std::to_string(s.n()) + "x" + std::to_string(s.m()));
  s.theta_prime = s.theta + cm.rho * cm.m;
  return s;
}

}  // namespace chunkalign
