#pragma once

// Test-only helpers: independent oracles and hand-rolled generators.

#include "bsaction/words.hpp"

#include <boost/multiprecision/cpp_int.hpp>

#include <random>
#include <vector>

namespace bsaction::testing {

using Rational = boost::multiprecision::cpp_rational;

// The affine representation x.b = x + 1, x.t = (m/n) x of BS(m,n) over Q.
// It is a homomorphism (t b^m t^-1 acts as x -> x + n), so equal elements
// have equal images; it is blind to the kernel, so it only refutes.
struct Affine {
  Rational scale = 1;
  Rational shift = 0;
  friend bool operator==(const Affine&, const Affine&) = default;
};

inline Affine affine_image(const GroupParams& g, const Word& w) {
  Affine a;
  Rational ratio = Rational(g.m().to_big()) / Rational(g.n().to_big());
  for (const auto& s : w.syllables()) {
    if (s.letter == Letter::b) {
      a.shift += Rational(s.exp.to_big());
    } else {
      Rational f = 1;
      auto e = s.exp.to_int64();
      for (std::int64_t i = 0; i < (e < 0 ? -e : e); ++i) f *= ratio;
      if (e < 0) f = 1 / f;
      a.scale *= f;
      a.shift *= f;
    }
  }
  return a;
}

inline Word random_word(std::mt19937_64& rng, int syllables, int max_b = 6, int max_t = 2) {
  Word w;
  std::uniform_int_distribution<int> bdist(-max_b, max_b), tdist(-max_t, max_t), coin(0, 1);
  for (int i = 0; i < syllables; ++i) {
    if (coin(rng)) {
      w.append(Letter::b, bdist(rng));
    } else {
      w.append(Letter::t, tdist(rng));
    }
  }
  return w;
}

inline const std::vector<std::pair<int, int>>& standard_pairs() {
  static const std::vector<std::pair<int, int>> pairs{{2, 3}, {2, 4}, {2, 2}, {3, 3}, {6, 4}, {2, -2}};
  return pairs;
}

}  // namespace bsaction::testing
