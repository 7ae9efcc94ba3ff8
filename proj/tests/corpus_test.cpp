#include <gtest/gtest.h>

#include <sstream>

#include "support.hpp"

using namespace chunkalign;
using namespace testing_support;

namespace {

std::string wa_block(const std::string& id, const std::vector<std::string>& x, const std::vector<std::string>& y,
                     const std::vector<std::string>& alignments) {
  std::string s = "<sentence id=\"" + id + "\" status=\"\">\n// comment line\n<source>\n";
  for (std::size_t t = 0; t < x.size(); ++t) s += std::to_string(t + 1) + " " + x[t] + " : \n";
  s += "</source>\n<translation>\n";
  for (std::size_t t = 0; t < y.size(); ++t) s += std::to_string(t + 1) + " " + y[t] + " : \n";
  s += "</translation>\n<alignment>\n";
  for (const auto& a : alignments) s += a + "\n";
  s += "</alignment>\n</sentence>\n";
  return s;
}

const std::vector<std::string> kDog{"A", "dog", "runs"};
const std::vector<std::string> kCat{"A", "cat", "runs"};

ChunkedPair parsed_pair() {
  ChunkedPair p;
  p.id = "p1";
  p.x = sentence({"The", "cat", "sat"}, {{0, 2}, {2, 3}});
  p.y = sentence({"A", "cat", "was", "sitting"}, {{0, 2}, {2, 4}});
  p.x.tokens[0].pos = "DET";
  p.x.tokens[0].head = 1;
  p.x.tokens[1].pos = "NOUN";
  p.x.tokens[1].head = 2;
  p.x.tokens[2].pos = "VERB";
  p.x.tokens[2].head = 2;
  p.gold = GoldAlignment(2, 2, {{0, 0}, {1, 1}});
  p.annotation_ref = "ann-1";
  return p;
}

bool has_kind(const std::vector<Violation>& v, Violation::Kind k) {
  return std::any_of(v.begin(), v.end(), [k](const Violation& x) { return x.kind == k; });
}

}  // namespace

TEST(ParseWa, TwoEquivalentChunks) {
  const auto pairs = parse_wa(wa_block("1", kDog, kCat,
                                       {"1 2 <==> 1 2 // EQUI // 5 // A dog <==> A cat",
                                        "3 <==> 3 // EQUI // 5 // runs <==> runs"}));
  ASSERT_EQ(pairs.size(), 1u);
  const ChunkedPair& p = pairs[0];
  EXPECT_EQ(p.id, "1");
  EXPECT_EQ(p.n(), 2u);
  EXPECT_EQ(p.m(), 2u);
  EXPECT_EQ(p.x.chunks[0], (Chunk{0, 2}));
  EXPECT_EQ(p.gold->pairs(), (std::set<std::pair<std::size_t, std::size_t>>{{0, 0}, {1, 1}}));
  EXPECT_EQ(p.y.tokens[1].surface, "cat");
}

TEST(ParseWa, NoAlignmentMapsToPhi) {
  const auto pairs = parse_wa(wa_block("2", kDog, kCat,
                                       {"1 2 <==> 0 // NOALI // 0 // A dog <==> -not aligned-",
                                        "3 <==> 3 // EQUI // 5 // runs <==> runs"}));
  const ChunkedPair& p = pairs[0];
  EXPECT_TRUE(p.gold->x_unaligned(0));
  EXPECT_FALSE(p.gold->x_unaligned(1));
  EXPECT_EQ(p.m(), 2u);
  EXPECT_TRUE(p.gold->y_unaligned(0));
}

TEST(ParseWa, OutOfRangeTokenRejected) {
  EXPECT_THROW(parse_wa(wa_block("3", kDog, kCat, {"9 <==> 1 // EQUI // 5 // x <==> y"})), ValidationError);
}

TEST(ParseWa, MalformedBlockReportsLine) {
  const std::string text = wa_block("4", kDog, kCat, {"1 2 3 // EQUI // 5 // missing arrow"});
  try {
    parse_wa(text);
    FAIL();
  } catch (const ParseError& e) {
    EXPECT_EQ(e.line(), 14u);
  }
}

TEST(ParseWa, OverlappingGroupsRejected) {
  EXPECT_THROW(parse_wa(wa_block("5", kDog, kCat, {"1 2 <==> 1 // EQUI // 5 // a", "2 3 <==> 2 // EQUI // 5 // b"})),
               ValidationError);
}

TEST(ParseWa, ManyToOneStoredVerbatim) {
  const auto pairs = parse_wa(wa_block("6", kDog, kCat,
                                       {"1 <==> 1 2 // SPE1 // 3 // A <==> A cat",
                                        "2 <==> 1 2 // SPE1 // 3 // dog <==> A cat", "3 <==> 3 // EQUI // 5 // r"}));
  EXPECT_EQ(pairs[0].gold->pairs(), (std::set<std::pair<std::size_t, std::size_t>>{{0, 0}, {1, 0}, {2, 1}}));
}

TEST(ParseWa, UnreferencedTokensFormOwnChunk) {
  const auto pairs = parse_wa(wa_block("7", kDog, kCat, {"3 <==> 3 // EQUI // 5 // runs"}));
  EXPECT_EQ(pairs[0].x.chunks, (std::vector<Chunk>{{0, 2}, {2, 3}}));
  EXPECT_TRUE(pairs[0].gold->x_unaligned(0));
}

TEST(ParseWa, UnterminatedBlockRejected) {
  EXPECT_THROW(parse_wa("<sentence id=\"1\">\n<source>\n1 A :\n"), ParseError);
}

TEST(Canonical, RoundTripIsIdentity) {
  const std::vector<ChunkedPair> pairs{parsed_pair()};
  const std::string path = ::testing::TempDir() + "canonical_roundtrip.jsonl";
  save_canonical(pairs, path);
  EXPECT_EQ(load_canonical(path), pairs);
}

TEST(Canonical, WaThroughCanonicalPreservesSpansAndGold) {
  const auto pairs = parse_wa(wa_block("1", kDog, kCat, {"1 <==> 1 2 // SPE1 // 3 // x", "3 <==> 0 // NOALI // 0 // y"}));
  std::stringstream buf;
  write_canonical(buf, pairs);
  EXPECT_EQ(parse_canonical(buf), pairs);
}

TEST(Canonical, MissingFieldNamed) {
  std::istringstream in(R"({"id": "r7", "tokens_x": [{"surface": "a"}], "tokens_y": [{"surface": "b"}], "chunks_y": [[0, 1]]})"
                        "\n");
  try {
    parse_canonical(in);
    FAIL();
  } catch (const SchemaError& e) {
    EXPECT_EQ(e.record_id(), "r7");
    EXPECT_EQ(e.field(), "chunks_x");
  }
}

TEST(Canonical, EmptyFileGivesEmptyCorpus) {
  std::istringstream in("");
  EXPECT_TRUE(parse_canonical(in).empty());
}

TEST(Canonical, ZeroBasedGoldRejected) {
  std::istringstream in(R"({"id": "r", "tokens_x": [{"surface": "a"}], "tokens_y": [{"surface": "b"}], )"
                        R"("chunks_x": [[0, 1]], "chunks_y": [[0, 1]], "gold": [[0, 1]]})" "\n");
  EXPECT_THROW(parse_canonical(in), SchemaError);
}

TEST(Validate, WellFormedPair) {
  EXPECT_TRUE(validate(parsed_pair()).empty());
}

TEST(Validate, OverlapDetected) {
  ChunkedPair p = parsed_pair();
  p.y.chunks = {{0, 2}, {1, 3}, {3, 4}};
  p.gold = std::nullopt;
  EXPECT_TRUE(has_kind(validate(p), Violation::Kind::SpanOverlap));
}

TEST(Validate, GoldIndexOutOfRange) {
  ChunkedPair p = parsed_pair();
  p.gold->add(4, 0);
  EXPECT_TRUE(has_kind(validate(p), Violation::Kind::GoldIndex));
}

TEST(Validate, ReportsEveryViolation) {
  ChunkedPair p = parsed_pair();
  p.x.chunks = {{0, 1}, {2, 3}};
  p.y.tokens[0].pos = "NOTATAG";
  p.gold->add(0, 7);
  const auto v = validate(p);
  EXPECT_TRUE(has_kind(v, Violation::Kind::SpanGap));
  EXPECT_TRUE(has_kind(v, Violation::Kind::UnknownPos));
  EXPECT_TRUE(has_kind(v, Violation::Kind::GoldIndex));
}

TEST(MergeAnnotations, CopiesTagsAndHeads) {
  std::vector<ChunkedPair> pairs = parse_wa(wa_block("1", kDog, kCat, {"1 2 <==> 1 2 // E // 5 // a", "3 <==> 3 // E // 5 // b"}));
  std::istringstream in(R"({"pair_id": "1", "pos_x": ["DET", "NOUN", "VERB"], "heads_x": [2, 3, 0], )"
                        R"("pos_y": ["DET", "NOUN", "VERB"], "heads_y": [2, 3, 0]})" "\n"
                        R"({"pair_id": "other", "pos_x": []})" "\n");
  EXPECT_EQ(merge_parse_annotations(pairs, in), 1u);
  EXPECT_TRUE(pairs[0].x.has_parse());
  EXPECT_EQ(*pairs[0].x.tokens[0].head, 1u);
  EXPECT_EQ(*pairs[0].x.tokens[2].head, 2u);
}

TEST(MergeAnnotations, LengthMismatchRejected) {
  std::vector<ChunkedPair> pairs = parse_wa(wa_block("1", kDog, kCat, {"1 2 3 <==> 1 2 3 // E // 5 // a"}));
  std::istringstream in(R"({"pair_id": "1", "pos_x": ["DET"]})" "\n");
  EXPECT_THROW(merge_parse_annotations(pairs, in), SchemaError);
}
