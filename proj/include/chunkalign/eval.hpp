#pragma once

// Discrete decoding of alignment probabilities and chunk-pair F1.

#include <cstddef>
#include <fstream>
#include <istream>
#include <map>
#include <ostream>
#include <set>
#include <span>
#include <sstream>
#include <string>
#include <utility>
#include <vector>

#include <Eigen/Dense>

#include "chunkalign/corpus.hpp"
#include "chunkalign/error.hpp"

namespace chunkalign {

struct DecodedAlignment {
  std::size_t n = 0, m = 0;
  std::set<std::pair<std::size_t, std::size_t>> pairs;  // 0-based
  std::set<std::size_t> x_unaligned, y_unaligned;

  bool operator==(const DecodedAlignment&) const = default;
};

/// `table` is (n+1) x (m+1) with the φ row and column last. The prediction is
/// the union (or, with `mutual`, the intersection) of row-argmax and
/// column-argmax links that do not point at φ. Ties go to the lowest index.
inline DecodedAlignment decode(const Eigen::MatrixXd& table, bool mutual = false) {
  const Eigen::Index n = table.rows() - 1, m = table.cols() - 1;
  if (n < 1 || m < 1) throw ShapeError("decode needs at least one chunk per side");
  DecodedAlignment d;
  d.n = static_cast<std::size_t>(n);
  d.m = static_cast<std::size_t>(m);
  std::set<std::pair<std::size_t, std::size_t>> by_row, by_col;
  for (Eigen::Index i = 0; i < n; ++i) {
    Eigen::Index arg = 0;
    table.row(i).maxCoeff(&arg);
    if (arg != m) by_row.emplace(i, arg);
  }
  for (Eigen::Index j = 0; j < m; ++j) {
    Eigen::Index arg = 0;
    table.col(j).maxCoeff(&arg);
    if (arg != n) by_col.emplace(arg, j);
  }
  if (mutual) {
    for (const auto& p : by_row)
      if (by_col.count(p)) d.pairs.insert(p);
  } else {
    d.pairs = by_row;
    d.pairs.insert(by_col.begin(), by_col.end());
  }
  for (std::size_t i = 0; i < d.n; ++i) d.x_unaligned.insert(i);
  for (std::size_t j = 0; j < d.m; ++j) d.y_unaligned.insert(j);
  for (auto [i, j] : d.pairs) {
    d.x_unaligned.erase(i);
    d.y_unaligned.erase(j);
  }
  return d;
}

/// Chunks taking part in more than one predicted link, counted on both sides.
inline std::size_t many_to_one_count(const DecodedAlignment& d) {
  std::map<std::size_t, int> xs, ys;
  for (auto [i, j] : d.pairs) {
    ++xs[i];
    ++ys[j];
  }
  std::size_t count = 0;
  for (const auto& [k, c] : xs) count += c > 1;
  for (const auto& [k, c] : ys) count += c > 1;
  return count;
}

struct ScoreReport {
  double precision = 0, recall = 0, f1 = 0;
  std::size_t predicted = 0, gold = 0, matched = 0;
};

/// P/R/F1 from counts. Empty prediction and empty gold score 1; exactly one empty scores 0.
inline ScoreReport score_counts(std::size_t predicted, std::size_t gold, std::size_t matched) {
  ScoreReport r{0, 0, 0, predicted, gold, matched};
  if (predicted == 0 && gold == 0) {
    r.precision = r.recall = r.f1 = 1.0;
    return r;
  }
  if (predicted == 0 || gold == 0) return r;
  r.precision = static_cast<double>(matched) / static_cast<double>(predicted);
  r.recall = static_cast<double>(matched) / static_cast<double>(gold);
  r.f1 = (r.precision + r.recall) > 0 ? 2 * r.precision * r.recall / (r.precision + r.recall) : 0.0;
  return r;
}

inline ScoreReport f1(const DecodedAlignment& pred, const GoldAlignment& gold) {
  if (pred.n != gold.n() || pred.m != gold.m())
    throw ShapeError("prediction is " + std::to_string(pred.n) + "x" + std::to_string(pred.m) + ", gold is " +
                     std::to_string(gold.n()) + "x" + std::to_string(gold.m()));
  std::size_t matched = 0;
  for (const auto& p : pred.pairs) matched += gold.pairs().count(p);
  return score_counts(pred.pairs.size(), gold.pairs().size(), matched);
}

struct CorpusReport {
  ScoreReport micro;
  double macro_f1 = 0;
  std::size_t pairs = 0;
};

/// Micro-averaged over pooled counts, with the per-pair macro F1 alongside.
inline CorpusReport evaluate_corpus(std::span<const DecodedAlignment> preds, std::span<const ChunkedPair> corpus) {
  if (corpus.empty()) throw ValidationError("nothing to evaluate: the corpus is empty");
  if (preds.size() != corpus.size())
    throw ShapeError(std::to_string(preds.size()) + " predictions for " + std::to_string(corpus.size()) + " pairs");
  std::size_t predicted = 0, gold = 0, matched = 0;
  double macro = 0;
  for (std::size_t k = 0; k < corpus.size(); ++k) {
    if (!corpus[k].gold) throw ValidationError("pair '" + corpus[k].id + "' has no gold alignment");
    const ScoreReport r = f1(preds[k], *corpus[k].gold);
    predicted += r.predicted;
    gold += r.gold;
    matched += r.matched;
    macro += r.f1;
  }
  return {score_counts(predicted, gold, matched), macro / static_cast<double>(corpus.size()), corpus.size()};
}

inline void write_report(std::ostream& out, const CorpusReport& r) {
  std::ostringstream s;
  s.setf(std::ios::fixed);
  s.precision(6);
  s << "pairs " << r.pairs << '\n'
    << "predicted " << r.micro.predicted << '\n'
    << "gold " << r.micro.gold << '\n'
    << "matched " << r.micro.matched << '\n'
    << "precision " << r.micro.precision << '\n'
    << "recall " << r.micro.recall << '\n'
    << "f1 " << r.micro.f1 << '\n'
    << "macro_f1 " << r.macro_f1 << '\n';
  out << s.str();
}

// ---------------------------------------------------------------------------
// Alignment output file: one line per pair,
//   id TAB i-j i-j ... TAB x_phi: i i ... TAB y_phi: j j ...
// with 1-based chunk indices.

inline void write_alignment_line(std::ostream& out, const std::string& id, const DecodedAlignment& d) {
  out << id << '\t';
  bool first = true;
  for (auto [i, j] : d.pairs) {
    out << (first ? "" : " ") << i + 1 << '-' << j + 1;
    first = false;
  }
  out << "\tx_phi:";
  for (std::size_t i : d.x_unaligned) out << ' ' << i + 1;
  out << "\ty_phi:";
  for (std::size_t j : d.y_unaligned) out << ' ' << j + 1;
  out << '\n';
}

struct AlignmentRecord {
  std::string id;
  DecodedAlignment alignment;  // n, m are inferred lower bounds until matched with a corpus
};

inline std::vector<AlignmentRecord> parse_alignments(std::istream& in) {
  std::vector<AlignmentRecord> out;
  std::size_t lineno = 0;
  for (std::string line; std::getline(in, line);) {
    ++lineno;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (detail::trim(line).empty()) continue;
    std::vector<std::string> f;
    std::size_t start = 0;
    for (std::size_t tab; (tab = line.find('\t', start)) != std::string::npos; start = tab + 1)
      f.push_back(line.substr(start, tab - start));
    f.push_back(line.substr(start));
    if (f.size() != 4 || !f[2].starts_with("x_phi:") || !f[3].starts_with("y_phi:"))
      throw ParseError("expected 'id<TAB>pairs<TAB>x_phi: ...<TAB>y_phi: ...'", lineno);
    AlignmentRecord rec;
    rec.id = f[0];
    auto index = [&](const std::string& w) {
      std::size_t v = 0;
      if (!detail::parse_index(w, v) || v == 0) throw ParseError("bad chunk index '" + w + "'", lineno);
      return v - 1;
    };
    for (const auto& w : detail::split_ws(f[1])) {
      auto dash = w.find('-');
      if (dash == std::string::npos) throw ParseError("bad pair '" + w + "'", lineno);
      rec.alignment.pairs.emplace(index(w.substr(0, dash)), index(w.substr(dash + 1)));
    }
    for (const auto& w : detail::split_ws(f[2].substr(6))) rec.alignment.x_unaligned.insert(index(w));
    for (const auto& w : detail::split_ws(f[3].substr(6))) rec.alignment.y_unaligned.insert(index(w));
    for (auto [i, j] : rec.alignment.pairs) {
      rec.alignment.n = std::max(rec.alignment.n, i + 1);
      rec.alignment.m = std::max(rec.alignment.m, j + 1);
    }
    for (auto i : rec.alignment.x_unaligned) rec.alignment.n = std::max(rec.alignment.n, i + 1);
    for (auto j : rec.alignment.y_unaligned) rec.alignment.m = std::max(rec.alignment.m, j + 1);
    out.push_back(std::move(rec));
  }
  return out;
}

/// Orders alignment records like `corpus` and fixes their dimensions from it.
inline std::vector<DecodedAlignment> match_alignments(const std::vector<AlignmentRecord>& recs,
                                                      std::span<const ChunkedPair> corpus) {
  std::map<std::string, const DecodedAlignment*> by_id;
  for (const auto& r : recs) by_id[r.id] = &r.alignment;
  std::vector<DecodedAlignment> out;
  for (const auto& p : corpus) {
    auto it = by_id.find(p.id);
    if (it == by_id.end()) throw ValidationError("no predicted alignment for pair '" + p.id + "'");
    DecodedAlignment d = *it->second;
    if (d.n > p.n() || d.m > p.m())
      throw ShapeError("predicted alignment for '" + p.id + "' references chunks beyond " + std::to_string(p.n()) +
                       "x" + std::to_string(p.m()));
    d.n = p.n();
    d.m = p.m();
    out.push_back(std::move(d));
  }
  return out;
}

}  // namespace chunkalign
