#include "bsaction/classify.hpp"
#include "bsaction/random.hpp"

#include "support.hpp"

#include <gtest/gtest.h>

#include <set>

using namespace bsaction;
using Kind = Classification::Kind;

namespace {

const GroupParams bs23(2, 3);
constexpr auto D = Genericity::dense_gdelta;
constexpr auto E = Genericity::empty;

PointedPreAction single(const GroupParams& g, Label L) {
  PreAction p(g);
  p.add_orbit("O", L);
  return {std::move(p), Point{0, 0}};
}

PointedPreAction five_loop() {
  PreAction p(bs23);
  p.add_orbit("O", 5);
  p.add_arrow({0, 0}, {0, 1});
  return {std::move(p), Point{0, 0}};
}

// BS(2,2) on Z with t acting as the identity.
PointedPreAction identity_t() {
  GroupParams g(2, 2);
  PreAction p(g);
  p.add_orbit("Z", Label::infinite());
  p.add_arrow({0, 0}, {0, 0});
  p.add_arrow({0, 1}, {0, 1});
  return {std::move(p), Point{0, 0}};
}

}  // namespace

TEST(Classify, Examples) {
  EXPECT_EQ(classify_subgroup(five_loop()).kind, Kind::finite_index);
  auto c = classify_subgroup(identity_t());
  EXPECT_EQ(c.kind, Kind::c_infinity);
  EXPECT_EQ(c.phenotype, Phenotype::infinite());
  auto k = classify_subgroup(single(bs23, 1));
  EXPECT_EQ(k.kind, Kind::perfect_kernel);
  EXPECT_EQ(k.phenotype, Phenotype(1));
  EXPECT_EQ(classify_subgroup(single(bs23, 15)).phenotype, Phenotype(5));
}

TEST(Classify, RejectsDisconnected) {
  PreAction p(bs23);
  p.add_orbit("A", 1);
  p.add_orbit("B", 1);
  EXPECT_THROW(classify_subgroup({std::move(p), {0, 0}}), DomainError);
}

TEST(Classify, RuleIndependentOnRandomCores) {
  Rng rng(12);
  for (auto [m, n] : bsaction::testing::standard_pairs()) {
    GroupParams g(m, n);
    for (int trial = 0; trial < 20; ++trial) {
      auto core = random_core(g, trial % 2 ? Phenotype(1) : Phenotype::infinite(), rng);
      auto a = classify_subgroup(core, TransferRule::max());
      auto b = classify_subgroup(core, TransferRule::min());
      EXPECT_EQ(a.kind, Kind::perfect_kernel);
      EXPECT_EQ(a.kind, b.kind);
      EXPECT_EQ(a.phenotype, b.phenotype);
    }
  }
}

// The structural perfect-kernel test rests on the forest never closing:
// truncations of a non-saturated core keep growing.
TEST(Classify, TruncationsOfNonSaturatedCoresStrictlyGrow) {
  Rng rng(6);
  for (auto rule : {TransferRule::max(), TransferRule::min()}) {
    for (int trial = 0; trial < 5; ++trial) {
      auto core = random_core(bs23, trial % 2 ? Phenotype(1) : Phenotype(5), rng, {.max_orbits = 2});
      LazySaturation s(core, rule);
      std::size_t prev = 0;
      for (unsigned k = 0; k <= 8; ++k) {
        s.grow_to_depth(k);
        std::size_t size = s.truncation(k).pre.orbit_count();
        EXPECT_GT(size, prev) << "depth " << k;
        prev = size;
      }
    }
  }
}

TEST(Feasibility, TableCells) {
  GroupParams g23(2, 3), g22(2, 2);
  EXPECT_EQ(feasibility(g23, Phenotype(1)), (Feasibility{D, D}));
  EXPECT_EQ(feasibility(g23, Phenotype::infinite()), (Feasibility{D, D}));
  EXPECT_EQ(feasibility(g23, Phenotype(5)), (Feasibility{E, D}));
  EXPECT_EQ(feasibility(g22, Phenotype(1)), (Feasibility{D, E}));
  EXPECT_EQ(feasibility(g22, Phenotype::infinite()), (Feasibility{E, D}));
  EXPECT_EQ(feasibility(g22, Phenotype(5)), (Feasibility{E, E}));
  EXPECT_EQ(feasibility(classify_subgroup(identity_t()), g22), (Feasibility{E, E}));
  EXPECT_THROW(feasibility(g23, Phenotype(2)), DomainError);  // 2 | m but not n
}

TEST(ReducedClasses, Examples) {
  PreAction five(bs23);
  five.add_orbit("O", 5);
  auto c5 = reduced_classes(five, Phenotype(5));
  EXPECT_EQ(c5.classes_in(0), Int(1));
  EXPECT_EQ(*c5.class_size(), Int(5));

  PreAction fifteen(bs23);
  fifteen.add_orbit("O", 15);
  auto c15 = reduced_classes(fifteen, Phenotype(5));
  EXPECT_EQ(c15.classes_in(0), Int(3));
  for (int k = 0; k < 15; ++k) EXPECT_EQ(c15.class_of({0, k}).second, Int(k % 3));

  PreAction six(bs23);
  six.add_orbit("O", 6);
  auto c1 = reduced_classes(six, Phenotype(1));
  EXPECT_EQ(c1.classes_in(0), Int(6));
  EXPECT_EQ(*c1.class_size(), Int(1));

  EXPECT_THROW(reduced_classes(six, Phenotype(5)), DomainError);
}

TEST(PrimitivityObstruction, FiveLoopHasOneClass) {
  auto r = check_primitivity_obstruction(five_loop().pre, Phenotype(5));
  EXPECT_TRUE(r.invariant);
  EXPECT_EQ(r.classes, 1u);
  EXPECT_FALSE(r.nontrivial);
}

TEST(PrimitivityObstruction, DepthThreeTruncationOfFifteenCore) {
  LazySaturation s(single(bs23, 15), TransferRule::max());
  s.grow_to_depth(3);
  auto t = s.truncation(3);
  auto r = check_primitivity_obstruction(t.pre, Phenotype(5));
  EXPECT_TRUE(r.invariant) << *r.counterexample;
  EXPECT_TRUE(r.nontrivial);
  // brute force: every class has exactly 5 points
  auto rc = reduced_classes(t.pre, Phenotype(5));
  std::map<std::pair<OrbitIndex, Int>, int> count;
  for (OrbitIndex o = 0; o < t.pre.orbit_count(); ++o) {
    for (Int k = 0; k < t.pre.length(o).value(); ++k) ++count[rc.class_of({o, k})];
  }
  for (const auto& [c, n] : count) EXPECT_EQ(n, 5);
}

TEST(PrimitivityObstruction, HoldsOnRandomValidInputs) {
  Rng rng(19);
  for (int trial = 0; trial < 40; ++trial) {
    Phenotype q = trial % 2 ? Phenotype(5) : Phenotype(7);
    LazySaturation s(random_core(bs23, q, rng, {.max_orbits = 3, .extra_arrows = 2, .label_cap = 6}),
                     TransferRule::max());
    s.grow_to_depth(2);
    auto r = check_primitivity_obstruction(s.current(), q);
    EXPECT_TRUE(r.invariant) << *r.counterexample;
  }
  auto r = check_primitivity_obstruction(identity_t().pre, Phenotype::infinite());
  EXPECT_TRUE(r.invariant);
}

TEST(PrimitivityObstruction, CorruptedTransitionIsCaught) {
  LazySaturation s(single(bs23, 15), TransferRule::max());
  s.grow_to_depth(2);
  auto tr = realized_transitions(s.current());
  // swap the t-images of two points from different classes
  Point x{0, 0}, y{0, 1};
  ASSERT_TRUE(tr.t.count(x) && tr.t.count(y));
  std::swap(tr.t[x], tr.t[y]);
  auto r = check_primitivity_obstruction(s.current(), Phenotype(5), tr);
  EXPECT_FALSE(r.invariant);
  EXPECT_TRUE(r.counterexample);
}

TEST(ClassificationJson, Shape) {
  Json j = to_json(classify_subgroup(single(bs23, 15)), bs23);
  EXPECT_EQ(j.dump(),
            R"({"class":"PerfectKernel","phenotype":5,"feasibility":{"ht":"empty","faithful":"dense-G-delta"},)"
            R"("reason":"core is not saturated: the Bass-Serre quotient is infinite"})");
}
