#include "bsaction/bass_serre.hpp"
#include "bsaction/random.hpp"
#include "bsaction/saturation.hpp"

#include "support.hpp"

#include <gtest/gtest.h>

#include <regex>

using namespace bsaction;
using bsaction::testing::standard_pairs;

namespace {

const GroupParams bs23(2, 3);

PreAction five_loop() {
  PreAction p(bs23);
  p.add_orbit("O", 5);
  p.add_arrow({0, 0}, {0, 1});
  return p;
}

PreAction single(const GroupParams& g = bs23, Label L = 1) {
  PreAction p(g);
  p.add_orbit("O", L);
  return p;
}

}  // namespace

TEST(BassSerreGraph, FiveLoop) {
  auto g = bass_serre_graph(five_loop());
  ASSERT_EQ(g.vertices().size(), 1u);
  ASSERT_EQ(g.edges().size(), 1u);
  EXPECT_EQ(g.vertices()[0].label, Label(5));
  EXPECT_EQ(g.edges()[0].label, Label(5));
  EXPECT_TRUE(g.is_saturated());
  EXPECT_EQ(g.connected_phenotype(), Phenotype(5));
}

TEST(BassSerreGraph, SingleVertex) {
  auto g = bass_serre_graph(single());
  EXPECT_TRUE(g.edges().empty());
  EXPECT_FALSE(g.is_saturated());
  auto d = g.deficits();
  ASSERT_EQ(d.size(), 1u);
  EXPECT_EQ(d[0].missing_out, Int(1));
  EXPECT_EQ(d[0].missing_in, Int(1));
  EXPECT_EQ(g.connected_phenotype(), Phenotype(1));
}

TEST(BassSerreGraph, RejectsInvalidInput) {
  PreAction bad(bs23);
  bad.add_orbit("A", 1);
  bad.add_orbit("B", 3);
  bad.add_arrow({0, 0}, {1, 0});
  EXPECT_THROW(bass_serre_graph(bad), InvalidPreAction);
}

TEST(BassSerreGraph, DisjointUnionIsGraphUnion) {
  auto [u, shift] = disjoint_union(five_loop(), single());
  auto g = bass_serre_graph(u);
  EXPECT_EQ(g.vertices().size(), 2u);
  EXPECT_EQ(g.edges().size(), 1u);
  EXPECT_FALSE(g.is_connected());
  EXPECT_THROW(g.connected_phenotype(), DomainError);
}

TEST(BassSerreGraph, FifteenCoreTruncationHasPhenotypeFive) {
  LazySaturation s({single(bs23, 15), {0, 0}}, TransferRule::max());
  s.grow_to_depth(3);
  auto g = bass_serre_graph(s.current());
  for (const auto& v : g.vertices()) EXPECT_EQ(phenotype_of_label(bs23, v.label), Phenotype(5));
  EXPECT_EQ(g.connected_phenotype(), Phenotype(5));
}

TEST(BassSerreGraph, DegreeBoundsCountsAndSaturationCrossCheck) {
  Rng rng(21);
  for (auto [m, n] : standard_pairs()) {
    GroupParams gp(m, n);
    for (int trial = 0; trial < 30; ++trial) {
      auto p = trial % 2 ? random_finite_action(gp, rng) : random_core(gp, Phenotype(1), rng);
      auto g = bass_serre_graph(p.pre);
      EXPECT_EQ(g.vertices().size(), p.pre.orbit_count());
      EXPECT_EQ(g.edges().size(), p.pre.arrow_count());
      for (const auto& e : g.edges()) {
        EXPECT_TRUE(transfer_ok(gp, g.vertices()[e.source].label, g.vertices()[e.target].label));
      }
      // saturation iff tau is defined in both directions at every point
      bool pointwise = true;
      for (OrbitIndex o = 0; o < p.pre.orbit_count(); ++o) {
        for (Int k = 0; k < p.pre.length(o).value(); ++k) {
          pointwise = pointwise && p.pre.in_domain({o, k}) && p.pre.in_range({o, k});
        }
      }
      EXPECT_EQ(g.is_saturated(), pointwise);
      EXPECT_NO_THROW(g.connected_phenotype());
    }
  }
}

TEST(ExportDot, HeaderOnlyForEmptyGraph) {
  EXPECT_EQ(export_dot(PreAction(bs23)), "digraph bass_serre {\n}\n");
}

// Counts node and edge statements with a small DOT statement grammar.
TEST(ExportDot, StatementsRoundTripCounts) {
  Rng rng(8);
  std::regex node(R"re(^  "(?:[^"\\]|\\.)*" \[label="(?:[^"\\]|\\.)*"\];$)re");
  std::regex edge(R"re(^  "(?:[^"\\]|\\.)*" -> "(?:[^"\\]|\\.)*" \[label="(?:[0-9]+|inf)"\];$)re");
  for (int trial = 0; trial < 30; ++trial) {
    auto p = random_core(bs23, Phenotype(trial % 2 ? 1 : 5), rng);
    std::string dot = export_dot(p.pre);
    std::istringstream in(dot);
    std::string line;
    std::getline(in, line);
    ASSERT_EQ(line, "digraph bass_serre {");
    std::size_t nodes = 0, edges = 0;
    bool closed = false;
    while (std::getline(in, line)) {
      if (line == "}") {
        closed = true;
        continue;
      }
      if (std::regex_match(line, edge)) ++edges;
      else if (std::regex_match(line, node)) ++nodes;
      else ADD_FAILURE() << "unparsed DOT line: " << line;
    }
    EXPECT_TRUE(closed);
    EXPECT_EQ(nodes, p.pre.orbit_count());
    EXPECT_EQ(edges, p.pre.arrow_count());
  }
  EXPECT_EQ(export_dot(five_loop()), "digraph bass_serre {\n  \"O\" [label=\"O\\nL=5\"];\n  \"O\" -> \"O\" [label=\"5\"];\n}\n");
}
