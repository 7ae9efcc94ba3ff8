#pragma once

// Chunked sentence pairs with gold alignments: in-memory model, SemEval `.wa`
// reader, and the canonical JSON-lines interchange format.
//
// Internally every index is 0-based. External formats are 1-based
// (gold pairs, `.wa` token ids, dependency heads with 0 = root); the
// conversion happens only in the readers and writers in this header.

#include <algorithm>
#include <array>
#include <cctype>
#include <cstddef>
#include <fstream>
#include <map>
#include <optional>
#include <set>
#include <span>
#include <sstream>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "json.hpp"

#include "chunkalign/error.hpp"

namespace chunkalign {

/// Universal POS tags accepted in token annotations. Empty means "not annotated".
inline constexpr std::array<std::string_view, 17> kPosTags = {
    "ADJ", "ADP", "ADV", "AUX", "CCONJ", "DET", "INTJ", "NOUN", "NUM",
    "PART", "PRON", "PROPN", "PUNCT", "SCONJ", "SYM", "VERB", "X"};

inline bool is_known_pos(std::string_view tag) {
  return std::find(kPosTags.begin(), kPosTags.end(), tag) != kPosTags.end();
}

struct Token {
  std::string surface;
  std::string pos;                  // empty when unannotated
  std::optional<std::size_t> head;  // self-index for the root; nullopt when unparsed
  std::size_t index = 0;

  bool operator==(const Token&) const = default;
};

/// Half-open token span [start, end).
struct Chunk {
  std::size_t start = 0;
  std::size_t end = 0;

  std::size_t size() const { return end - start; }
  bool operator==(const Chunk&) const = default;
};

struct Sentence {
  std::vector<Token> tokens;
  std::vector<Chunk> chunks;

  std::size_t chunk_count() const { return chunks.size(); }
  std::span<const Token> chunk_tokens(std::size_t c) const {
    const Chunk& ch = chunks.at(c);
    return std::span<const Token>(tokens).subspan(ch.start, ch.size());
  }
  bool has_parse() const {
    return !tokens.empty() && std::all_of(tokens.begin(), tokens.end(), [](const Token& t) {
      return t.head.has_value() && !t.pos.empty();
    });
  }
  bool operator==(const Sentence&) const = default;
};

/// Gold chunk alignment. Only aligned pairs are stored; the φ indicators are derived.
class GoldAlignment {
 public:
  GoldAlignment() = default;
  GoldAlignment(std::size_t n, std::size_t m, std::set<std::pair<std::size_t, std::size_t>> pairs = {})
      : n_(n), m_(m), pairs_(std::move(pairs)) {}

  std::size_t n() const { return n_; }
  std::size_t m() const { return m_; }
  const std::set<std::pair<std::size_t, std::size_t>>& pairs() const { return pairs_; }

  void add(std::size_t i, std::size_t j) { pairs_.emplace(i, j); }
  bool aligned(std::size_t i, std::size_t j) const { return pairs_.count({i, j}) > 0; }
  bool x_unaligned(std::size_t i) const {
    return std::none_of(pairs_.begin(), pairs_.end(), [i](const auto& p) { return p.first == i; });
  }
  bool y_unaligned(std::size_t j) const {
    return std::none_of(pairs_.begin(), pairs_.end(), [j](const auto& p) { return p.second == j; });
  }

  bool operator==(const GoldAlignment&) const = default;

 private:
  std::size_t n_ = 0;
  std::size_t m_ = 0;
  std::set<std::pair<std::size_t, std::size_t>> pairs_;
};

struct ChunkedPair {
  std::string id;
  Sentence x;
  Sentence y;
  std::optional<GoldAlignment> gold;
  std::string annotation_ref;  // key into contextual files; empty means "use id"

  std::size_t n() const { return x.chunk_count(); }
  std::size_t m() const { return y.chunk_count(); }
  const std::string& annotation_key() const { return annotation_ref.empty() ? id : annotation_ref; }

  bool operator==(const ChunkedPair&) const = default;
};

// ---------------------------------------------------------------------------
// Validation

struct Violation {
  enum class Kind { EmptySentence, EmptySpan, SpanOverlap, SpanGap, SpanOutOfRange, TokenIndex,
                    HeadOutOfRange, UnknownPos, GoldIndex, GoldShape };
  Kind kind;
  std::string message;
};

namespace detail {

inline void validate_sentence(const Sentence& s, const char* side, std::vector<Violation>& out) {
  using K = Violation::Kind;
  const std::string tag = std::string(side) + ": ";
  if (s.tokens.empty()) out.push_back({K::EmptySentence, tag + "no tokens"});
  if (s.chunks.empty()) out.push_back({K::EmptySentence, tag + "no chunks"});
  for (std::size_t t = 0; t < s.tokens.size(); ++t) {
    const Token& tok = s.tokens[t];
    if (tok.index != t)
      out.push_back({K::TokenIndex, tag + "token " + std::to_string(t) + " carries index " +
                                        std::to_string(tok.index)});
    if (tok.head && *tok.head >= s.tokens.size())
      out.push_back({K::HeadOutOfRange, tag + "token " + std::to_string(t) + " head " +
                                            std::to_string(*tok.head) + " out of range"});
    if (!tok.pos.empty() && !is_known_pos(tok.pos))
      out.push_back({K::UnknownPos, tag + "token " + std::to_string(t) + " has unknown POS '" +
                                        tok.pos + "'"});
  }
  std::size_t expected = 0;
  for (std::size_t c = 0; c < s.chunks.size(); ++c) {
    const Chunk& ch = s.chunks[c];
    const std::string name = tag + "chunk " + std::to_string(c) + " (" + std::to_string(ch.start) +
                             "," + std::to_string(ch.end) + ")";
    if (ch.end <= ch.start) out.push_back({K::EmptySpan, name + " is empty"});
    if (ch.end > s.tokens.size()) out.push_back({K::SpanOutOfRange, name + " exceeds token count"});
    if (ch.start < expected)
      out.push_back({K::SpanOverlap, name + " overlaps the previous chunk"});
    else if (ch.start > expected)
      out.push_back({K::SpanGap, name + " leaves tokens " + std::to_string(expected) + ".." +
                                     std::to_string(ch.start - 1) + " uncovered"});
    expected = std::max(expected, ch.end);
  }
  if (!s.chunks.empty() && expected < s.tokens.size())
    out.push_back({K::SpanGap, tag + "trailing tokens from " + std::to_string(expected) + " uncovered"});
}

}  // namespace detail

/// Every invariant violation of the pair; an empty result means the pair is well formed.
inline std::vector<Violation> validate(const ChunkedPair& pair) {
  std::vector<Violation> out;
  detail::validate_sentence(pair.x, "x", out);
  detail::validate_sentence(pair.y, "y", out);
  if (pair.gold) {
    const GoldAlignment& g = *pair.gold;
    if (g.n() != pair.n() || g.m() != pair.m())
      out.push_back({Violation::Kind::GoldShape, "gold shape " + std::to_string(g.n()) + "x" +
                                                     std::to_string(g.m()) + " does not match " +
                                                     std::to_string(pair.n()) + "x" +
                                                     std::to_string(pair.m())});
    for (auto [i, j] : g.pairs())
      if (i >= pair.n() || j >= pair.m())
        out.push_back({Violation::Kind::GoldIndex, "gold pair (" + std::to_string(i + 1) + "," +
                                                       std::to_string(j + 1) + ") out of range"});
  }
  return out;
}

inline void require_valid(const ChunkedPair& pair) {
  auto v = validate(pair);
  if (v.empty()) return;
  std::string msg = "pair '" + pair.id + "':";
  for (const auto& e : v) msg += " " + e.message + ";";
  throw ValidationError(msg);
}

// ---------------------------------------------------------------------------
// SemEval `.wa` reader

namespace detail {

inline std::vector<std::string> split_ws(std::string_view s) {
  std::vector<std::string> out;
  std::istringstream in{std::string(s)};
  for (std::string w; in >> w;) out.push_back(w);
  return out;
}

inline std::string_view trim(std::string_view s) {
  const auto b = s.find_first_not_of(" \t\r\n");
  if (b == std::string_view::npos) return {};
  const auto e = s.find_last_not_of(" \t\r\n");
  return s.substr(b, e - b + 1);
}

inline bool parse_index(const std::string& w, std::size_t& out) {
  if (w.empty() || !std::all_of(w.begin(), w.end(), [](unsigned char c) { return std::isdigit(c); }))
    return false;
  out = std::stoul(w);
  return true;
}

struct WaAlignmentLine {
  std::vector<std::size_t> left;   // 1-based token ids, empty = φ
  std::vector<std::size_t> right;
  std::size_t line = 0;
};

struct WaBlock {
  std::string id;
  std::size_t line = 0;
  std::vector<std::string> source;
  std::vector<std::string> translation;
  std::vector<WaAlignmentLine> alignments;
};

inline std::vector<std::size_t> parse_wa_side(std::string_view text, std::size_t line) {
  std::vector<std::size_t> ids;
  for (const auto& w : split_ws(text)) {
    std::size_t v = 0;
    if (!parse_index(w, v)) throw ParseError("expected token index, got '" + w + "'", line);
    ids.push_back(v);
  }
  if (ids.empty()) throw ParseError("empty side in alignment line", line);
  if (std::find(ids.begin(), ids.end(), 0) != ids.end()) {
    if (ids.size() != 1) throw ParseError("index 0 mixed with real token indices", line);
    return {};
  }
  return ids;
}

/// Groups of token ids (1-based) referenced on one side -> chunk spans (0-based)
/// and, per group, the chunk indices it covers.
inline std::pair<std::vector<Chunk>, std::vector<std::vector<std::size_t>>> recover_chunks(
    const std::vector<std::pair<std::vector<std::size_t>, std::size_t>>& groups,
    std::size_t token_count, const std::string& block_id) {
  // A group is split into contiguous runs; each run is a candidate chunk.
  std::vector<std::vector<Chunk>> group_runs;
  std::vector<std::pair<Chunk, std::size_t>> runs;  // run, source line
  for (const auto& [ids, line] : groups) {
    std::vector<std::size_t> sorted = ids;
    std::sort(sorted.begin(), sorted.end());
    sorted.erase(std::unique(sorted.begin(), sorted.end()), sorted.end());
    std::vector<Chunk> mine;
    for (std::size_t k = 0; k < sorted.size();) {
      std::size_t e = k + 1;
      while (e < sorted.size() && sorted[e] == sorted[e - 1] + 1) ++e;
      if (sorted[e - 1] > token_count)
        throw ValidationError("line " + std::to_string(line) + ": block '" + block_id + "' references token " +
                              std::to_string(sorted[e - 1]) + " but the sentence has " +
                              std::to_string(token_count) + " tokens");
      mine.push_back({sorted[k] - 1, sorted[e - 1]});
      runs.push_back({mine.back(), line});
      k = e;
    }
    group_runs.push_back(std::move(mine));
  }
  // Shortest runs first: a longer run is either disjoint from accepted chunks
  // or exactly tiled by them; any partial overlap is an error.
  std::stable_sort(runs.begin(), runs.end(), [](const auto& a, const auto& b) {
    return a.first.size() != b.first.size() ? a.first.size() < b.first.size() : a.first.start < b.first.start;
  });
  std::vector<Chunk> accepted;
  for (const auto& [run, line] : runs) {
    std::size_t covered = 0;
    bool partial = false;
    for (const Chunk& c : accepted) {
      const bool overlap = c.start < run.end && run.start < c.end;
      if (!overlap) continue;
      if (c.start >= run.start && c.end <= run.end)
        covered += c.size();
      else
        partial = true;
    }
    if (partial || (covered != 0 && covered != run.size()))
      throw ValidationError("line " + std::to_string(line) + ": block '" + block_id + "' has overlapping chunk spans around tokens " +
                            std::to_string(run.start + 1) + ".." + std::to_string(run.end));
    if (covered == 0) accepted.push_back(run);
  }
  // Tokens referenced by no alignment line form chunks of their own (one per maximal run).
  std::vector<bool> used(token_count, false);
  for (const Chunk& c : accepted)
    for (std::size_t t = c.start; t < c.end; ++t) used[t] = true;
  for (std::size_t t = 0; t < token_count;) {
    if (used[t]) { ++t; continue; }
    std::size_t e = t;
    while (e < token_count && !used[e]) ++e;
    accepted.push_back({t, e});
    t = e;
  }
  std::sort(accepted.begin(), accepted.end(), [](const Chunk& a, const Chunk& b) { return a.start < b.start; });

  std::vector<std::vector<std::size_t>> group_chunks;
  for (const auto& mine : group_runs) {
    std::vector<std::size_t> idx;
    for (const Chunk& r : mine)
      for (std::size_t c = 0; c < accepted.size(); ++c)
        if (accepted[c].start >= r.start && accepted[c].end <= r.end) idx.push_back(c);
    group_chunks.push_back(std::move(idx));
  }
  return {std::move(accepted), std::move(group_chunks)};
}

inline Sentence make_sentence(const std::vector<std::string>& surfaces) {
  Sentence s;
  for (std::size_t t = 0; t < surfaces.size(); ++t) s.tokens.push_back({surfaces[t], "", std::nullopt, t});
  return s;
}

inline ChunkedPair build_wa_pair(const WaBlock& b) {
  if (b.source.empty() || b.translation.empty())
    throw ParseError("sentence block '" + b.id + "' lacks source or translation tokens", b.line);
  std::vector<std::pair<std::vector<std::size_t>, std::size_t>> left, right;
  for (const auto& a : b.alignments) {
    if (!a.left.empty()) left.push_back({a.left, a.line});
    if (!a.right.empty()) right.push_back({a.right, a.line});
  }
  auto [cx, gx] = recover_chunks(left, b.source.size(), b.id);
  auto [cy, gy] = recover_chunks(right, b.translation.size(), b.id);

  ChunkedPair p;
  p.id = b.id;
  p.x = make_sentence(b.source);
  p.y = make_sentence(b.translation);
  p.x.chunks = std::move(cx);
  p.y.chunks = std::move(cy);
  GoldAlignment gold(p.n(), p.m());
  std::size_t li = 0, ri = 0;
  for (const auto& a : b.alignments) {
    const std::vector<std::size_t>* xs = a.left.empty() ? nullptr : &gx[li++];
    const std::vector<std::size_t>* ys = a.right.empty() ? nullptr : &gy[ri++];
    if (!xs || !ys) continue;
    for (std::size_t i : *xs)
      for (std::size_t j : *ys) gold.add(i, j);
  }
  p.gold = std::move(gold);
  require_valid(p);
  return p;
}

inline std::string attr_value(std::string_view tag, std::string_view name) {
  const std::string key = std::string(name) + "=\"";
  auto pos = tag.find(key);
  if (pos == std::string_view::npos) return {};
  pos += key.size();
  auto end = tag.find('"', pos);
  if (end == std::string_view::npos) return {};
  return std::string(tag.substr(pos, end - pos));
}

}  // namespace detail

/// Parses the alignment-section subset of the SemEval interpretable-STS `.wa`
/// format. Relation types and scores are read past and discarded.
inline std::vector<ChunkedPair> parse_wa(std::string_view text) {
  using namespace detail;
  enum class State { Outside, Sentence, Source, Translation, Alignment };
  State state = State::Outside;
  std::vector<ChunkedPair> out;
  WaBlock block;
  std::size_t lineno = 0;
  std::size_t anonymous = 0;

  std::istringstream in{std::string(text)};
  for (std::string raw; std::getline(in, raw);) {
    ++lineno;
    const std::string_view line = trim(raw);
    if (line.empty()) continue;
    if (line.starts_with("<sentence")) {
      if (state != State::Outside) throw ParseError("nested <sentence> block", lineno);
      block = WaBlock{};
      block.line = lineno;
      block.id = attr_value(line, "id");
      if (block.id.empty()) block.id = "pair" + std::to_string(++anonymous);
      state = State::Sentence;
      continue;
    }
    if (state == State::Outside) {
      if (line.starts_with("//")) continue;
      throw ParseError("text outside a <sentence> block", lineno);
    }
    if (line == "</sentence>") {
      if (state != State::Sentence) throw ParseError("</sentence> inside an open section", lineno);
      out.push_back(build_wa_pair(block));
      state = State::Outside;
      continue;
    }
    if (state == State::Sentence) {
      if (line == "<source>") state = State::Source;
      else if (line == "<translation>") state = State::Translation;
      else if (line == "<alignment>") state = State::Alignment;
      else if (!line.starts_with("//")) throw ParseError("unexpected line in sentence block: '" + std::string(line) + "'", lineno);
      continue;
    }
    if (state == State::Source || state == State::Translation) {
      const bool src = state == State::Source;
      if (line == (src ? "</source>" : "</translation>")) {
        state = State::Sentence;
        continue;
      }
      auto fields = split_ws(line);
      std::size_t idx = 0;
      auto& tokens = src ? block.source : block.translation;
      if (fields.size() < 2 || !parse_index(fields[0], idx))
        throw ParseError("malformed token line '" + std::string(line) + "'", lineno);
      if (idx != tokens.size() + 1)
        throw ParseError("token index " + fields[0] + " out of sequence", lineno);
      tokens.push_back(fields[1]);
      continue;
    }
    // Alignment section.
    if (line == "</alignment>") {
      state = State::Sentence;
      continue;
    }
    const auto body = line.substr(0, line.find("//"));
    const auto arrow = body.find("<==>");
    if (arrow == std::string_view::npos)
      throw ParseError("alignment line lacks '<==>'", lineno);
    WaAlignmentLine a;
    a.line = lineno;
    a.left = parse_wa_side(body.substr(0, arrow), lineno);
    a.right = parse_wa_side(body.substr(arrow + 4), lineno);
    block.alignments.push_back(std::move(a));
  }
  if (state != State::Outside) throw ParseError("unterminated <sentence> block '" + block.id + "'", lineno);
  return out;
}

inline std::vector<ChunkedPair> read_wa_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw Error("cannot open '" + path + "'");
  std::stringstream buf;
  buf << in.rdbuf();
  return parse_wa(buf.str());
}

// ---------------------------------------------------------------------------
// Canonical JSON-lines format (schema/canonical_record.schema.json).

namespace detail {

using nlohmann::json;

inline json tokens_to_json(const Sentence& s) {
  json arr = json::array();
  for (const Token& t : s.tokens) {
    json o = {{"surface", t.surface}};
    if (!t.pos.empty()) o["pos"] = t.pos;
    if (t.head) o["head"] = (*t.head == t.index) ? 0 : *t.head + 1;
    arr.push_back(std::move(o));
  }
  return arr;
}

inline json chunks_to_json(const Sentence& s) {
  json arr = json::array();
  for (const Chunk& c : s.chunks) arr.push_back({c.start, c.end});
  return arr;
}

inline const json& need(const json& rec, const std::string& id, const char* field) {
  auto it = rec.find(field);
  if (it == rec.end()) throw SchemaError(id, field, "missing");
  return *it;
}

inline std::size_t as_index(const json& v, const std::string& id, const std::string& field) {
  if (!v.is_number_unsigned() && !(v.is_number_integer() && v.get<long long>() >= 0))
    throw SchemaError(id, field, "expected a non-negative integer");
  return v.get<std::size_t>();
}

inline std::vector<Token> tokens_from_json(const json& arr, const std::string& id, const char* field) {
  if (!arr.is_array()) throw SchemaError(id, field, "expected an array");
  std::vector<Token> out;
  for (std::size_t t = 0; t < arr.size(); ++t) {
    const json& o = arr[t];
    const std::string f = std::string(field) + "[" + std::to_string(t) + "]";
    if (!o.is_object()) throw SchemaError(id, f, "expected an object");
    auto s = o.find("surface");
    if (s == o.end() || !s->is_string()) throw SchemaError(id, f + ".surface", "missing or not a string");
    Token tok{s->get<std::string>(), "", std::nullopt, t};
    if (auto p = o.find("pos"); p != o.end() && !p->is_null()) {
      if (!p->is_string()) throw SchemaError(id, f + ".pos", "expected a string");
      tok.pos = p->get<std::string>();
    }
    if (auto h = o.find("head"); h != o.end() && !h->is_null()) {
      const std::size_t head = as_index(*h, id, f + ".head");
      tok.head = head == 0 ? t : head - 1;
    }
    out.push_back(std::move(tok));
  }
  return out;
}

inline std::vector<Chunk> chunks_from_json(const json& arr, const std::string& id, const char* field) {
  if (!arr.is_array()) throw SchemaError(id, field, "expected an array");
  std::vector<Chunk> out;
  for (std::size_t c = 0; c < arr.size(); ++c) {
    const json& span = arr[c];
    const std::string f = std::string(field) + "[" + std::to_string(c) + "]";
    if (!span.is_array() || span.size() != 2) throw SchemaError(id, f, "expected [start, end]");
    out.push_back({as_index(span[0], id, f), as_index(span[1], id, f)});
  }
  return out;
}

}  // namespace detail

inline nlohmann::json to_json(const ChunkedPair& p) {
  using detail::json;
  json rec = {{"id", p.id},
              {"tokens_x", detail::tokens_to_json(p.x)},
              {"tokens_y", detail::tokens_to_json(p.y)},
              {"chunks_x", detail::chunks_to_json(p.x)},
              {"chunks_y", detail::chunks_to_json(p.y)}};
  if (p.gold) {
    json g = json::array();
    for (auto [i, j] : p.gold->pairs()) g.push_back({i + 1, j + 1});
    rec["gold"] = std::move(g);
  }
  if (!p.annotation_ref.empty()) rec["annotation_ref"] = p.annotation_ref;
  return rec;
}

inline ChunkedPair pair_from_json(const nlohmann::json& rec, const std::string& fallback_id) {
  using namespace detail;
  if (!rec.is_object()) throw SchemaError(fallback_id, "<record>", "expected a JSON object");
  std::string id = fallback_id;
  const json& jid = need(rec, id, "id");
  if (!jid.is_string()) throw SchemaError(id, "id", "expected a string");
  id = jid.get<std::string>();

  ChunkedPair p;
  p.id = id;
  p.x.tokens = tokens_from_json(need(rec, id, "tokens_x"), id, "tokens_x");
  p.y.tokens = tokens_from_json(need(rec, id, "tokens_y"), id, "tokens_y");
  p.x.chunks = chunks_from_json(need(rec, id, "chunks_x"), id, "chunks_x");
  p.y.chunks = chunks_from_json(need(rec, id, "chunks_y"), id, "chunks_y");
  if (auto g = rec.find("gold"); g != rec.end() && !g->is_null()) {
    if (!g->is_array()) throw SchemaError(id, "gold", "expected an array of [i, j]");
    GoldAlignment gold(p.n(), p.m());
    for (std::size_t k = 0; k < g->size(); ++k) {
      const json& ij = (*g)[k];
      const std::string f = "gold[" + std::to_string(k) + "]";
      if (!ij.is_array() || ij.size() != 2) throw SchemaError(id, f, "expected [i, j]");
      const std::size_t i = as_index(ij[0], id, f), j = as_index(ij[1], id, f);
      if (i == 0 || j == 0) throw SchemaError(id, f, "gold indices are 1-based");
      gold.add(i - 1, j - 1);
    }
    p.gold = std::move(gold);
  }
  if (auto a = rec.find("annotation_ref"); a != rec.end() && !a->is_null()) {
    if (!a->is_string()) throw SchemaError(id, "annotation_ref", "expected a string");
    p.annotation_ref = a->get<std::string>();
  }
  if (auto v = validate(p); !v.empty()) throw SchemaError(id, "<record>", v.front().message);
  return p;
}

inline std::vector<ChunkedPair> parse_canonical(std::istream& in) {
  std::vector<ChunkedPair> out;
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
    out.push_back(pair_from_json(rec, "<line " + std::to_string(lineno) + ">"));
  }
  return out;
}

inline std::vector<ChunkedPair> load_canonical(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw Error("cannot open '" + path + "'");
  return parse_canonical(in);
}

inline void write_canonical(std::ostream& out, std::span<const ChunkedPair> pairs) {
  for (const auto& p : pairs) out << to_json(p).dump() << '\n';
}

inline void save_canonical(std::span<const ChunkedPair> pairs, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw Error("cannot write '" + path + "'");
  write_canonical(out, pairs);
}

/// Loads a corpus by extension: `.wa` files through the SemEval reader,
/// anything else as canonical JSON lines.
inline std::vector<ChunkedPair> load_corpus(const std::string& path) {
  if (path.size() >= 3 && path.compare(path.size() - 3, 3, ".wa") == 0) return read_wa_file(path);
  return load_canonical(path);
}

/// Copies POS tags and dependency heads from an annotation file (fields
/// pair_id, pos_x, heads_x, pos_y, heads_y; heads 1-based with 0 = root)
/// onto the matching pairs. Pairs without a record are left untouched.
/// Returns the number of pairs enriched.
inline std::size_t merge_parse_annotations(std::vector<ChunkedPair>& pairs, std::istream& in) {
  std::map<std::string, ChunkedPair*> by_key;
  for (auto& p : pairs) by_key[p.annotation_key()] = &p;
  std::size_t merged = 0, lineno = 0;
  auto apply = [](Sentence& s, const nlohmann::json& rec, const std::string& id, const char* pos_f,
                  const char* head_f) {
    auto pit = rec.find(pos_f);
    auto hit = rec.find(head_f);
    if (pit == rec.end() && hit == rec.end()) return;
    if (pit != rec.end()) {
      if (!pit->is_array() || pit->size() != s.tokens.size())
        throw SchemaError(id, pos_f, "expected one tag per token (" + std::to_string(s.tokens.size()) + ")");
      for (std::size_t t = 0; t < s.tokens.size(); ++t) s.tokens[t].pos = (*pit)[t].get<std::string>();
    }
    if (hit != rec.end()) {
      if (!hit->is_array() || hit->size() != s.tokens.size())
        throw SchemaError(id, head_f, "expected one head per token (" + std::to_string(s.tokens.size()) + ")");
      for (std::size_t t = 0; t < s.tokens.size(); ++t) {
        const std::size_t h = detail::as_index((*hit)[t], id, head_f);
        s.tokens[t].head = h == 0 ? t : h - 1;
      }
    }
  };
  for (std::string line; std::getline(in, line);) {
    ++lineno;
    if (detail::trim(line).empty()) continue;
    nlohmann::json rec;
    try {
      rec = nlohmann::json::parse(line);
    } catch (const nlohmann::json::parse_error& e) {
      throw ParseError(std::string("invalid JSON: ") + e.what(), lineno);
    }
    auto idit = rec.find("pair_id");
    if (idit == rec.end() || !idit->is_string())
      throw SchemaError("<line " + std::to_string(lineno) + ">", "pair_id", "missing or not a string");
    const std::string id = idit->get<std::string>();
    auto target = by_key.find(id);
    if (target == by_key.end()) continue;
    apply(target->second->x, rec, id, "pos_x", "heads_x");
    apply(target->second->y, rec, id, "pos_y", "heads_y");
    require_valid(*target->second);
    ++merged;
  }
  return merged;
}

}  // namespace chunkalign
