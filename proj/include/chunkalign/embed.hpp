#pragma once

// Chunk representations: mean of static word vectors, or concatenation of the
// contextual vectors of a chunk's first and last token.

#include <algorithm>
#include <cctype>
#include <charconv>
#include <cstddef>
#include <fstream>
#include <istream>
#include <map>
#include <span>
#include <sstream>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include <Eigen/Dense>

#include "json.hpp"

#include "chunkalign/corpus.hpp"
#include "chunkalign/error.hpp"

namespace chunkalign {

enum class Side { X, Y };

enum class ChunkMode { Mean, BoundaryConcat };

struct ChunkVector {
  Eigen::VectorXd values;
  ChunkMode mode = ChunkMode::Mean;
};

inline std::string to_lower(std::string_view s) {
  std::string out(s);
  std::transform(out.begin(), out.end(), out.begin(), [](unsigned char c) { return std::tolower(c); });
  return out;
}

/// Static word-vector table. Immutable after load.
class EmbeddingTable {
 public:
  EmbeddingTable() = default;
  explicit EmbeddingTable(std::size_t dim) : dim_(dim), unk_(Eigen::VectorXd::Zero(dim)) {
    if (dim == 0) throw ValidationError("embedding dimension must be positive");
  }

  std::size_t dim() const { return dim_; }
  std::size_t size() const { return entries_.size(); }
  bool contains(const std::string& w) const { return entries_.count(w) > 0; }

  void insert(const std::string& word, Eigen::VectorXd v) {
    if (static_cast<std::size_t>(v.size()) != dim_)
      throw ValidationError("vector for '" + word + "' has length " + std::to_string(v.size()) +
                            ", expected " + std::to_string(dim_));
    if (word == "<unk>") unk_ = v;
    entries_[word] = std::move(v);
  }

  /// Exact surface, then lowercased surface, then the unk vector.
  const Eigen::VectorXd& lookup(const std::string& surface) const {
    if (auto it = entries_.find(surface); it != entries_.end()) return it->second;
    if (auto it = entries_.find(to_lower(surface)); it != entries_.end()) return it->second;
    return unk_;
  }
  const Eigen::VectorXd& unk() const { return unk_; }

  template <class F>
  void for_each(F&& f) const {
    for (const auto& [w, v] : entries_) f(w, v);
  }

 private:
  std::size_t dim_ = 0;
  std::unordered_map<std::string, Eigen::VectorXd> entries_;
  Eigen::VectorXd unk_;
};

namespace detail {

inline double parse_double(std::string_view s, std::size_t line) {
  double v = 0.0;
  auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (ec != std::errc() || ptr != s.data() + s.size())
    throw ParseError("cannot parse number '" + std::string(s) + "'", line);
  return v;
}

}  // namespace detail

/// Text format: one entry per line, the surface form followed by `dim`
/// space-separated numbers.
inline EmbeddingTable parse_vectors(std::istream& in) {
  EmbeddingTable table;
  std::size_t lineno = 0;
  std::vector<std::string_view> fields;
  for (std::string line; std::getline(in, line);) {
    ++lineno;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    fields.clear();
    std::string_view rest(line);
    while (!rest.empty()) {
      auto b = rest.find_first_not_of(' ');
      if (b == std::string_view::npos) break;
      rest.remove_prefix(b);
      auto e = rest.find(' ');
      fields.push_back(rest.substr(0, e));
      rest.remove_prefix(e == std::string_view::npos ? rest.size() : e);
    }
    if (fields.empty()) continue;
    if (fields.size() < 2) throw ParseError("entry has no vector components", lineno);
    const std::size_t dim = fields.size() - 1;
    if (table.dim() == 0)
      table = EmbeddingTable(dim);
    else if (dim != table.dim())
      throw ParseError("dimension " + std::to_string(dim) + " differs from " + std::to_string(table.dim()) +
                           " on earlier lines",
                       lineno);
    Eigen::VectorXd v(dim);
    for (std::size_t k = 0; k < dim; ++k) v[k] = detail::parse_double(fields[k + 1], lineno);
    table.insert(std::string(fields[0]), std::move(v));
  }
  return table;
}

inline EmbeddingTable load_vectors(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw Error("cannot open '" + path + "'");
  return parse_vectors(in);
}

inline void save_vectors(const EmbeddingTable& table, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw Error("cannot write '" + path + "'");
  std::map<std::string, const Eigen::VectorXd*> sorted;
  table.for_each([&](const std::string& w, const Eigen::VectorXd& v) { sorted[w] = &v; });
  out.precision(17);
  for (const auto& [w, v] : sorted) {
    out << w;
    for (Eigen::Index k = 0; k < v->size(); ++k) out << ' ' << (*v)[k];
    out << '\n';
  }
}

inline ChunkVector chunk_mean(std::span<const Token> tokens, const EmbeddingTable& table) {
  ChunkVector out{Eigen::VectorXd::Zero(table.dim()), ChunkMode::Mean};
  if (tokens.empty()) return out;
  for (const Token& t : tokens) out.values += table.lookup(t.surface);
  out.values /= static_cast<double>(tokens.size());
  return out;
}

inline ChunkVector chunk_mean(const Sentence& s, std::size_t chunk, const EmbeddingTable& table) {
  return chunk_mean(s.chunk_tokens(chunk), table);
}

/// Precomputed per-token contextual vectors for one sentence pair.
struct ContextualAnnotation {
  std::string pair_id;
  std::vector<Eigen::VectorXd> x;
  std::vector<Eigen::VectorXd> y;

  const std::vector<Eigen::VectorXd>& side(Side s) const { return s == Side::X ? x : y; }
};

class ContextualStore {
 public:
  std::size_t dim() const { return dim_; }
  std::size_t size() const { return records_.size(); }

  void insert(ContextualAnnotation a) {
    for (const auto* vs : {&a.x, &a.y})
      for (const auto& v : *vs) {
        if (dim_ == 0) dim_ = static_cast<std::size_t>(v.size());
        if (static_cast<std::size_t>(v.size()) != dim_)
          throw ValidationError("annotation '" + a.pair_id + "' mixes vector lengths " +
                                std::to_string(v.size()) + " and " + std::to_string(dim_));
      }
    records_[a.pair_id] = std::move(a);
  }

  const ContextualAnnotation* find(const std::string& pair_id) const {
    auto it = records_.find(pair_id);
    return it == records_.end() ? nullptr : &it->second;
  }

  const ContextualAnnotation& at(const std::string& pair_id) const {
    if (const auto* a = find(pair_id)) return *a;
    throw ValidationError("no contextual annotation for pair '" + pair_id + "'");
  }

 private:
  std::size_t dim_ = 0;
  std::map<std::string, ContextualAnnotation> records_;
};

/// JSON lines with fields pair_id, vectors_x, vectors_y (arrays of per-token
/// vectors). Other fields, e.g. POS and heads, are ignored here.
inline ContextualStore parse_contextual(std::istream& in) {
  ContextualStore store;
  std::size_t lineno = 0;
  for (std::string line; std::getline(in, line);) {
    ++lineno;
    if (detail::trim(line).empty()) continue;
    nlohmann::json rec;
    try {
      rec = nlohmann::json::parse(line);
    } catch (const nlohmann::json::parse_error& e) {
      throw ParseError(std::string("invalid JSON: ") + e.what(), lineno);
    }
    const std::string fallback = "<line " + std::to_string(lineno) + ">";
    auto idit = rec.find("pair_id");
    if (idit == rec.end() || !idit->is_string()) throw SchemaError(fallback, "pair_id", "missing or not a string");
    ContextualAnnotation a;
    a.pair_id = idit->get<std::string>();
    auto read_side = [&](const char* field, std::vector<Eigen::VectorXd>& out) {
      auto it = rec.find(field);
      if (it == rec.end() || !it->is_array()) throw SchemaError(a.pair_id, field, "missing or not an array");
      for (std::size_t t = 0; t < it->size(); ++t) {
        const auto& vec = (*it)[t];
        if (!vec.is_array() || vec.empty())
          throw SchemaError(a.pair_id, std::string(field) + "[" + std::to_string(t) + "]", "expected a vector");
        Eigen::VectorXd v(vec.size());
        for (std::size_t k = 0; k < vec.size(); ++k) {
          if (!vec[k].is_number())
            throw SchemaError(a.pair_id, std::string(field) + "[" + std::to_string(t) + "]", "non-numeric entry");
          v[k] = vec[k].get<double>();
        }
        out.push_back(std::move(v));
      }
    };
    read_side("vectors_x", a.x);
    read_side("vectors_y", a.y);
    store.insert(std::move(a));
  }
  return store;
}

inline ContextualStore load_contextual(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw Error("cannot open '" + path + "'");
  return parse_contextual(in);
}

/// [vec(first token); vec(last token)] of the chunk. A one-token chunk repeats its vector.
inline ChunkVector chunk_boundary(const Sentence& s, std::size_t chunk, const ContextualAnnotation& ann,
                                  Side side) {
  const auto& vecs = ann.side(side);
  const char* name = side == Side::X ? "x" : "y";
  if (vecs.size() != s.tokens.size())
    throw ValidationError("annotation '" + ann.pair_id + "' has " + std::to_string(vecs.size()) +
                          " vectors for " + name + ", which has " + std::to_string(s.tokens.size()) + " tokens");
  const Chunk& c = s.chunks.at(chunk);
  if (c.end > vecs.size() || c.end <= c.start)
    throw ValidationError("annotation '" + ann.pair_id + "' does not cover " + name + " token " +
                          std::to_string(c.end - 1));
  const auto& first = vecs[c.start];
  const auto& last = vecs[c.end - 1];
  ChunkVector out{Eigen::VectorXd(first.size() + last.size()), ChunkMode::BoundaryConcat};
  out.values << first, last;
  return out;
}

/// Chunk vectors for a whole pair, one row per chunk.
struct PairFeatures {
  Eigen::MatrixXd x;  // n x E
  Eigen::MatrixXd y;  // m x E
};

inline PairFeatures mean_features(const ChunkedPair& p, const EmbeddingTable& table) {
  PairFeatures f{Eigen::MatrixXd(p.n(), table.dim()), Eigen::MatrixXd(p.m(), table.dim())};
  for (std::size_t i = 0; i < p.n(); ++i) f.x.row(i) = chunk_mean(p.x, i, table).values.transpose();
  for (std::size_t j = 0; j < p.m(); ++j) f.y.row(j) = chunk_mean(p.y, j, table).values.transpose();
  return f;
}

inline PairFeatures boundary_features(const ChunkedPair& p, const ContextualStore& store) {
  const ContextualAnnotation& ann = store.at(p.annotation_key());
  const Eigen::Index e = 2 * static_cast<Eigen::Index>(store.dim());
  PairFeatures f{Eigen::MatrixXd(p.n(), e), Eigen::MatrixXd(p.m(), e)};
  for (std::size_t i = 0; i < p.n(); ++i) f.x.row(i) = chunk_boundary(p.x, i, ann, Side::X).values.transpose();
  for (std::size_t j = 0; j < p.m(); ++j) f.y.row(j) = chunk_boundary(p.y, j, ann, Side::Y).values.transpose();
  return f;
}

}  // namespace chunkalign
