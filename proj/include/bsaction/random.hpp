#pragma once

// Seeded generators of cores, finite actions and words, shared by the
// self-test, the acceptance suite and the unit tests.

#include "bsaction/preaction.hpp"

#include <algorithm>
#include <random>
#include <string>
#include <vector>

namespace bsaction {

using Rng = std::mt19937_64;

inline std::int64_t uniform(Rng& rng, std::int64_t lo, std::int64_t hi) {
  return std::uniform_int_distribution<std::int64_t>(lo, hi)(rng);
}

// A label of the given phenotype, found by rejection below `cap`.
inline Label random_label_with_phenotype(const GroupParams& g, const Phenotype& q, Rng& rng, std::int64_t cap = 60) {
  if (q.is_infinite()) return Label::infinite();
  std::int64_t top = cap * q.value().to_int64();
  for (int attempt = 0; attempt < 100000; ++attempt) {
    Label L(uniform(rng, 1, top));
    if (phenotype_of_label(g, L) == q) return L;
  }
  return Label(q.value());
}

namespace detail {

// Coset representatives of one side of an orbit not yet used by an arrow.
inline std::vector<Int> free_cosets(const PreAction& p, OrbitIndex o, Orientation side) {
  Int g = gcd_label(p.length(o), side == Orientation::positive ? p.params().n() : p.params().m());
  std::vector<Int> out;
  for (Int r = 0; r < g; ++r) {
    if (!p.covering_arrow(Point{o, r}, side)) out.push_back(r);
  }
  return out;
}

// A random member of the coset of r modulo g inside orbit o.
inline Int coset_member(const PreAction& p, OrbitIndex o, const Int& r, const Int& g, Rng& rng) {
  return p.normalize(o, r + g * Int(uniform(rng, -3, 3)));
}

}  // namespace detail

struct CoreShape {
  int max_orbits = 4;
  int extra_arrows = 2;  // attempts at closing cycles
  std::int64_t label_cap = 40;
};

// A connected, valid, non-saturated pre-action whose labels all have
// phenotype q: a random tree of one-orbit extensions with random admissible
// labels, plus a few arrows between existing orbits.
inline PointedPreAction random_core(const GroupParams& g, const Phenotype& q, Rng& rng, CoreShape shape = {}) {
  for (;;) {
    PreAction p(g);
    p.add_orbit("o0", random_label_with_phenotype(g, q, rng, shape.label_cap));
    int target = static_cast<int>(uniform(rng, 1, shape.max_orbits));
    for (int guard = 0; static_cast<int>(p.orbit_count()) < target && guard < 50; ++guard) {
      auto o = static_cast<OrbitIndex>(uniform(rng, 0, static_cast<std::int64_t>(p.orbit_count()) - 1));
      Orientation s = uniform(rng, 0, 1) ? Orientation::positive : Orientation::negative;
      auto free = detail::free_cosets(p, o, s);
      if (free.empty()) continue;
      const Int& r = free[uniform(rng, 0, static_cast<std::int64_t>(free.size()) - 1)];
      Int gx = gcd_label(p.length(o), s == Orientation::positive ? g.n() : g.m());
      Point x{o, detail::coset_member(p, o, r, gx, rng)};
      auto options = admissible_successors(g, p.length(o), s);
      Label child = options[uniform(rng, 0, static_cast<std::int64_t>(options.size()) - 1)];
      OrbitIndex c = p.add_orbit("o" + std::to_string(p.orbit_count()), child);
      Point y{c, child.is_infinite() ? Int(uniform(rng, -3, 3)) : Int(uniform(rng, 0, child.value().to_int64() - 1))};
      if (s == Orientation::positive) {
        p.add_arrow(x, y);
      } else {
        p.add_arrow(y, x);
      }
    }
    for (int k = 0; k < shape.extra_arrows; ++k) {
      auto a = static_cast<OrbitIndex>(uniform(rng, 0, static_cast<std::int64_t>(p.orbit_count()) - 1));
      auto b = static_cast<OrbitIndex>(uniform(rng, 0, static_cast<std::int64_t>(p.orbit_count()) - 1));
      if (!transfer_ok(g, p.length(a), p.length(b))) continue;
      auto fa = detail::free_cosets(p, a, Orientation::positive);
      auto fb = detail::free_cosets(p, b, Orientation::negative);
      if (fa.empty() || fb.empty()) continue;
      Int ga = gcd_label(p.length(a), g.n()), gb = gcd_label(p.length(b), g.m());
      Point src{a, detail::coset_member(p, a, fa[uniform(rng, 0, static_cast<std::int64_t>(fa.size()) - 1)], ga, rng)};
      Point dst{b, detail::coset_member(p, b, fb[uniform(rng, 0, static_cast<std::int64_t>(fb.size()) - 1)], gb, rng)};
      p.add_arrow(src, dst);
      if (p.validate()) throw std::logic_error("random core generator produced an invalid arrow");
    }
    p.require_valid();
    if (p.is_saturated()) continue;
    auto b = static_cast<OrbitIndex>(uniform(rng, 0, static_cast<std::int64_t>(p.orbit_count()) - 1));
    Int off = p.length(b).is_infinite() ? Int(uniform(rng, -2, 2)) : Int(uniform(rng, 0, p.length(b).value().to_int64() - 1));
    return {std::move(p), Point{b, off}};
  }
}

// Single-orbit action on Z/N with x.t = a x + c, where a n = m (mod N) and a
// is a unit; N is drawn coprime to mn so that a exists.
inline PointedPreAction random_affine_action(const GroupParams& g, Rng& rng, std::int64_t max_n = 40) {
  for (;;) {
    std::int64_t N = uniform(rng, 1, max_n);
    if (gcd(Int(N), g.m() * g.n()) != 1) continue;
    Int c = uniform(rng, 0, N - 1);
    PreAction p(g);
    p.add_orbit("z", Label(N));
    // gcd(N, n) = 1 leaves a single b^n-coset: 0 -> c gives x.t = c + x m/n
    p.add_arrow({0, 0}, {0, c});
    p.require_valid();
    if (!p.is_saturated()) throw std::logic_error("affine action is not saturated");
    return {std::move(p), Point{0, Int(uniform(rng, 0, N - 1))}};
  }
}

// A finite transitive action: random orbit labels whose b^n-cosets and
// b^m-cosets can be paired by size, joined by a random size-preserving
// pairing. Falls back to an affine action after `retries` failures.
inline PointedPreAction random_finite_action(const GroupParams& g, Rng& rng, int max_orbits = 4,
                                             std::int64_t max_label = 12, int retries = 400) {
  for (int attempt = 0; attempt < retries; ++attempt) {
    int k = static_cast<int>(uniform(rng, 1, max_orbits));
    std::vector<std::int64_t> labels;
    for (int i = 0; i < k; ++i) labels.push_back(uniform(rng, 1, max_label));
    // (size, orbit, representative) for each side
    std::map<std::int64_t, std::vector<std::pair<OrbitIndex, std::int64_t>>> src, dst;
    for (OrbitIndex o = 0; o < labels.size(); ++o) {
      Int L = labels[o];
      std::int64_t gn = gcd(L, g.n()).to_int64(), gm = gcd(L, g.m()).to_int64();
      for (std::int64_t r = 0; r < gn; ++r) src[labels[o] / gn].push_back({o, r});
      for (std::int64_t r = 0; r < gm; ++r) dst[labels[o] / gm].push_back({o, r});
    }
    bool balanced = src.size() == dst.size();
    for (auto& [size, list] : src) balanced = balanced && dst.count(size) && dst[size].size() == list.size();
    if (!balanced) continue;
    PreAction p(g);
    for (std::size_t i = 0; i < labels.size(); ++i) p.add_orbit("o" + std::to_string(i), Label(labels[i]));
    for (auto& [size, list] : src) {
      auto& targets = dst[size];
      std::shuffle(targets.begin(), targets.end(), rng);
      for (std::size_t i = 0; i < list.size(); ++i) {
        auto [so, sr] = list[i];
        auto [to, tr] = targets[i];
        std::int64_t gn = gcd(Int(labels[so]), g.n()).to_int64(), gm = gcd(Int(labels[to]), g.m()).to_int64();
        Int soff = floor_mod(Int(sr + gn * uniform(rng, 0, size - 1)), Int(labels[so]));
        Int toff = floor_mod(Int(tr + gm * uniform(rng, 0, size - 1)), Int(labels[to]));
        p.add_arrow({so, soff}, {to, toff});
      }
    }
    if (!p.is_connected()) continue;
    p.require_valid();
    if (!p.is_saturated()) throw std::logic_error("coset pairing left a deficit");
    auto b = static_cast<OrbitIndex>(uniform(rng, 0, k - 1));
    return {std::move(p), Point{b, Int(uniform(rng, 0, labels[b] - 1))}};
  }
  return random_affine_action(g, rng);
}

inline Word random_word(Rng& rng, int letters, int max_b = 3) {
  Word w;
  for (int i = 0; i < letters; ++i) {
    if (uniform(rng, 0, 1)) {
      w.append(Letter::b, Int(uniform(rng, 0, 1) ? 1 : -1) * Int(uniform(rng, 1, max_b)));
    } else {
      w.append(Letter::t, uniform(rng, 0, 1) ? 1 : -1);
    }
  }
  return w;
}

// A word with at most `letters` letters counting b^k as |k| letters.
inline Word random_short_word(Rng& rng, int letters) {
  Word w;
  int n = static_cast<int>(uniform(rng, 0, letters));
  for (int i = 0; i < n; ++i) {
    switch (uniform(rng, 0, 3)) {
      case 0: w.append(Letter::b, 1); break;
      case 1: w.append(Letter::b, -1); break;
      case 2: w.append(Letter::t, 1); break;
      default: w.append(Letter::t, -1); break;
    }
  }
  return w;
}

}  // namespace bsaction
