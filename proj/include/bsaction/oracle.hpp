#pragma once

// Brute-force oracles and random instance generators shared by the CLI
// self-test and the acceptance suite. The oracles use plain 64-bit
// arithmetic and exhaustive search, never the library's formulas.

#include "bsaction/classify.hpp"
#include "bsaction/random.hpp"
#include "bsaction/welding.hpp"

#include <boost/pending/disjoint_sets.hpp>

#include <cstdint>
#include <map>
#include <numeric>
#include <optional>
#include <vector>

namespace bsaction::oracle {

// Transfer equation on a positive edge, straight from its definition.
inline bool transfer_holds(std::int64_t m, std::int64_t n, std::int64_t source, std::int64_t target) {
  return source / std::gcd(source, n) == target / std::gcd(target, m);
}

// Canonical class ids (first occurrence order) of a labelling.
inline std::vector<int> canonical(const std::vector<std::int64_t>& key) {
  std::map<std::int64_t, int> ids;
  std::vector<int> out;
  for (auto k : key) out.push_back(ids.emplace(k, static_cast<int>(ids.size())).first->second);
  return out;
}

// Classes of {1..N} under the equivalence generated by admissible edges
// with both labels <= bound, by union-find.
inline std::vector<int> transfer_closure_partition(std::int64_t m, std::int64_t n, std::int64_t N, std::int64_t bound) {
  std::vector<std::int64_t> rank(bound + 1), parent(bound + 1);
  boost::disjoint_sets<std::int64_t*, std::int64_t*> ds(rank.data(), parent.data());
  for (std::int64_t L = 1; L <= bound; ++L) ds.make_set(L);
  for (std::int64_t s = 1; s <= bound; ++s) {
    for (std::int64_t t = 1; t <= bound; ++t) {
      if (transfer_holds(m, n, s, t)) ds.union_set(s, t);
    }
  }
  std::vector<std::int64_t> key;
  for (std::int64_t L = 1; L <= N; ++L) key.push_back(ds.find_set(L));
  return canonical(key);
}

inline std::vector<int> phenotype_partition(const GroupParams& g, std::int64_t N) {
  std::vector<std::int64_t> key;
  std::map<Int, std::int64_t> ids;
  for (std::int64_t L = 1; L <= N; ++L) {
    Int q = phenotype_of_label(g, Label(L)).value();
    key.push_back(ids.emplace(q, static_cast<std::int64_t>(ids.size())).first->second);
  }
  return canonical(key);
}

// Least child label on the given side by exhaustive search.
inline std::int64_t min_successor(std::int64_t m, std::int64_t n, std::int64_t L, Orientation o, std::int64_t bound) {
  for (std::int64_t c = 1; c <= bound; ++c) {
    if (o == Orientation::positive ? transfer_holds(m, n, L, c) : transfer_holds(m, n, c, L)) return c;
  }
  return 0;
}

// Largest child label by exhaustive search up to `bound`.
inline std::int64_t max_successor(std::int64_t m, std::int64_t n, std::int64_t L, Orientation o, std::int64_t bound) {
  std::int64_t best = 0;
  for (std::int64_t c = 1; c <= bound; ++c) {
    if (o == Orientation::positive ? transfer_holds(m, n, L, c) : transfer_holds(m, n, c, L)) best = c;
  }
  return best;
}

// Two MAX or MIN saturations of one core grown with different enumeration
// seeds, compared on the orbits at depth <= depth.
inline bool saturations_agree(const PointedPreAction& core, const TransferRule& rule, unsigned depth,
                              std::uint64_t seed_a, std::uint64_t seed_b, std::uint64_t fuel) {
  LazySaturation a(core, rule, fuel), b(core, rule, fuel);
  a.grow_to_depth(depth, seed_a);
  b.grow_to_depth(depth, seed_b);
  if (a.max_depth() <= depth && b.max_depth() <= depth) {
    return pointed_isomorphic(a.current(), a.basepoint(), b.current(), b.basepoint()).isomorphic;
  }
  return pointed_isomorphic(a.truncation(depth), b.truncation(depth)).isomorphic;
}

struct HtInstance {
  PointedPreAction core;
  std::vector<NormalForm> g;
  unsigned R;
};

// A random HT request: a core of phenotype q, d <= dmax, R <= rmax and 2d
// words of length <= R with pairwise distinct images of the basepoint.
inline HtInstance random_ht_instance(const GroupParams& g, const Phenotype& q, Rng& rng, std::size_t dmax,
                                     unsigned rmax, std::uint64_t fuel = LazySaturation::kDefaultFuel) {
  for (;;) {
    std::size_t d = static_cast<std::size_t>(uniform(rng, 1, static_cast<std::int64_t>(dmax)));
    auto R = static_cast<unsigned>(uniform(rng, 1, rmax));
    auto core = random_core(g, q, rng, {.max_orbits = 3, .extra_arrows = 1, .label_cap = 12});
    LazySaturation probe(core, TransferRule::max(), fuel);
    std::vector<NormalForm> words;
    std::vector<Point> images;
    for (int guard = 0; words.size() < 2 * d && guard < 200; ++guard) {
      NormalForm w = britton_reduce(g, random_short_word(rng, static_cast<int>(R)));
      if (w.to_word().length() > Int(R)) continue;
      Point p = probe.lazy_apply(core.basepoint, w.to_word());
      if (std::find(images.begin(), images.end(), p) != images.end()) continue;
      images.push_back(p);
      words.push_back(std::move(w));
    }
    if (words.size() == 2 * d) return {std::move(core), std::move(words), R};
  }
}

struct HttInstance {
  std::vector<PointedPreAction> cores;
  unsigned R;
};

inline HttInstance random_htt_instance(const GroupParams& g, const Phenotype& q, Rng& rng, std::size_t dmax,
                                       unsigned rmax) {
  HttInstance inst;
  std::size_t d = static_cast<std::size_t>(uniform(rng, 1, static_cast<std::int64_t>(dmax)));
  inst.R = static_cast<unsigned>(uniform(rng, 0, rmax));
  for (std::size_t i = 0; i < 2 * d; ++i) {
    inst.cores.push_back(random_core(g, q, rng, {.max_orbits = 3, .extra_arrows = 1, .label_cap = 12}));
  }
  return inst;
}

}  // namespace bsaction::oracle
