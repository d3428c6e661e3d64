#include <gtest/gtest.h>

#include <filesystem>
#include <fstream>
#include <set>
#include <sstream>

#include "specloc/patterns.hpp"

using namespace specloc;

namespace {

std::set<std::size_t> neighbor_set(const SparsityPattern& p, std::size_t x) {
  const auto nb = p.neighbors(x);
  return {nb.begin(), nb.end()};
}

void expect_regular(const SparsityPattern& p) {
  for (std::size_t x = 0; x < p.n(); ++x) {
    ASSERT_EQ(neighbor_set(p, x).size(), p.degree()) << "vertex " << x;
  }
  EXPECT_TRUE(validate_pattern(p).ok());
}

SparsityPattern parse(const std::string& text) {
  std::istringstream in(text);
  return read_pattern(in);
}

}  // namespace

TEST(Generate, BandNeighborsWrapAround) {
  const auto p = generate_pattern(PatternKind::band, 6, 3, 0);
  EXPECT_EQ(neighbor_set(p, 0), (std::set<std::size_t>{5, 0, 1}));
  expect_regular(p);
}

TEST(Generate, DiagonalIsSelfLoops) {
  const auto p = generate_pattern(PatternKind::diagonal, 4, 1, 0);
  const std::vector<Edge> want{{0, 0}, {1, 1}, {2, 2}, {3, 3}};
  EXPECT_EQ(p.edges(), want);
}

TEST(Generate, BlockComponentsAreCompleteWithLoops) {
  const auto p = generate_pattern(PatternKind::block, 6, 3, 0);
  expect_regular(p);
  for (std::size_t x = 0; x < 3; ++x) EXPECT_EQ(neighbor_set(p, x), (std::set<std::size_t>{0, 1, 2}));
  for (std::size_t x = 3; x < 6; ++x) EXPECT_EQ(neighbor_set(p, x), (std::set<std::size_t>{3, 4, 5}));
}

TEST(Generate, RandomRegularValidAndDeterministic) {
  const auto a = generate_pattern(PatternKind::random_regular, 100, 4, 7);
  const auto b = generate_pattern(PatternKind::random_regular, 100, 4, 7);
  expect_regular(a);
  EXPECT_EQ(a, b);
  for (const auto& e : a.edges()) EXPECT_FALSE(e.is_loop());
  EXPECT_NE(a, generate_pattern(PatternKind::random_regular, 100, 4, 8));
}

TEST(Generate, RandomRegularDenserAndOddDegree) {
  expect_regular(generate_pattern(PatternKind::random_regular, 200, 31, 1));
  expect_regular(generate_pattern(PatternKind::random_regular, 64, 3, 2));
  expect_regular(generate_pattern(PatternKind::random_regular, 4096, 2, 3));
}

TEST(Generate, CompleteVariants) {
  const auto p = generate_pattern(PatternKind::complete, 5, 5, 0);
  expect_regular(p);
  const auto q = generate_pattern(PatternKind::complete, 5, 4, 0, PatternOptions{true});
  expect_regular(q);
  for (const auto& e : q.edges()) EXPECT_FALSE(e.is_loop());
}

TEST(Generate, ReductionsBetweenKinds) {
  EXPECT_EQ(generate_pattern(PatternKind::band, 7, 7, 0).edges(), generate_pattern(PatternKind::complete, 7, 7, 0).edges());
  EXPECT_EQ(generate_pattern(PatternKind::block, 6, 6, 0).edges(), generate_pattern(PatternKind::complete, 6, 6, 0).edges());
  EXPECT_EQ(generate_pattern(PatternKind::block, 6, 1, 0).edges(), generate_pattern(PatternKind::diagonal, 6, 1, 0).edges());
}

TEST(Generate, SeedIgnoredForDeterministicKinds) {
  EXPECT_EQ(generate_pattern(PatternKind::band, 9, 5, 1), generate_pattern(PatternKind::band, 9, 5, 99));
}

TEST(Generate, InvalidParams) {
  EXPECT_THROW(generate_pattern(PatternKind::complete, 5, 4, 0), InvalidParams);
  EXPECT_THROW(generate_pattern(PatternKind::diagonal, 5, 2, 0), InvalidParams);
  EXPECT_THROW(generate_pattern(PatternKind::band, 8, 4, 0), InvalidParams);
  EXPECT_THROW(generate_pattern(PatternKind::band, 3, 5, 0), InvalidParams);
  EXPECT_THROW(generate_pattern(PatternKind::block, 6, 4, 0), InvalidParams);
  EXPECT_THROW(generate_pattern(PatternKind::random_regular, 5, 3, 0), InvalidParams);
  EXPECT_THROW(generate_pattern(PatternKind::random_regular, 5, 5, 0), InvalidParams);
  EXPECT_THROW(generate_pattern(PatternKind::band, 0, 1, 0), InvalidParams);
}

TEST(Generate, KindNamesRoundTrip) {
  for (auto k : {PatternKind::complete, PatternKind::diagonal, PatternKind::band, PatternKind::block,
                 PatternKind::random_regular}) {
    EXPECT_EQ(pattern_kind_from_string(to_string(k)), k);
  }
  EXPECT_THROW(pattern_kind_from_string("lattice"), InvalidParams);
}

TEST(Validate, Examples) {
  EXPECT_TRUE(validate_pattern(generate_pattern(PatternKind::complete, 5, 5, 0)).ok());
  EXPECT_TRUE(validate_pattern(SparsityPattern(2, 1, {{0, 1}})).ok());
  const auto bad = validate_pattern(SparsityPattern(2, 1, {{0, 1}, {0, 0}}));
  ASSERT_FALSE(bad.ok());
  bool vertex0 = false;
  for (const auto& v : bad.violations) vertex0 |= v.vertex == 0;
  EXPECT_TRUE(vertex0);
}

TEST(Validate, ListsEveryViolatingVertex) {
  // Degrees: 0 -> 2, 1 -> 1, 2 -> 1, 3 -> 0 with declared d = 1.
  const auto r = validate_pattern(SparsityPattern(4, 1, {{0, 1}, {0, 2}}));
  std::set<std::size_t> bad;
  for (const auto& v : r.violations) bad.insert(v.vertex);
  EXPECT_EQ(bad, (std::set<std::size_t>{0, 3}));
}

TEST(Validate, DuplicateEdges) {
  const auto r = validate_pattern(SparsityPattern(2, 1, {{0, 1}, {0, 1}}));
  EXPECT_FALSE(r.ok());
}

TEST(Io, LoadExamples) {
  const auto p = parse("2 1\n0 0\n1 1\n");
  EXPECT_EQ(p.n(), 2u);
  EXPECT_EQ(p.degree(), 1u);
  EXPECT_EQ(p.edges(), (std::vector<Edge>{{0, 0}, {1, 1}}));
  try {
    parse("2 1\n0 0\n0 1\n");
    FAIL() << "expected ValidationError";
  } catch (const ValidationError& e) {
    EXPECT_EQ(e.vertex(), 0u);
  }
}

TEST(Io, RoundTripThroughFile) {
  const auto p = generate_pattern(PatternKind::band, 8, 3, 0);
  const auto path = std::filesystem::temp_directory_path() / "specloc_roundtrip_pattern.txt";
  save_pattern(path.string(), p);
  EXPECT_EQ(load_pattern(path.string()), p);
  std::filesystem::remove(path);
}

TEST(Io, RoundTripRandomRegular) {
  const auto p = generate_pattern(PatternKind::random_regular, 50, 6, 3);
  std::stringstream ss;
  write_pattern(ss, p);
  EXPECT_EQ(read_pattern(ss), p);
}

TEST(Io, MalformedInput) {
  EXPECT_THROW(parse(""), ParseError);
  EXPECT_THROW(parse("2\n"), ParseError);
  EXPECT_THROW(parse("2 1\n0 x\n1 1\n"), ParseError);
  EXPECT_THROW(parse("2 1\n0 0\n1 2\n"), ParseError);
  EXPECT_THROW(parse("2 1\n1 0\n"), ParseError);
  EXPECT_THROW(parse("2 1\n1 1\n0 0\n"), ParseError);
  EXPECT_THROW(parse("2 1\n0 0\n\n1 1\n"), ParseError);
  EXPECT_THROW(parse("2 1\n0 0\n0 0\n"), ValidationError);
  EXPECT_THROW(parse("3 1\n0 0\n1 1\n"), ValidationError);
}

TEST(Io, ParseErrorCarriesLine) {
  try {
    parse("3 1\n0 0\n1 q\n");
    FAIL();
  } catch (const ParseError& e) {
    EXPECT_EQ(e.line(), 3u);
  }
}

TEST(Io, MissingFile) { EXPECT_THROW(load_pattern("/nonexistent/specloc.txt"), Error); }
