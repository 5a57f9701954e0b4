#pragma once

#include "bsaction/words.hpp"

#include <map>
#include <optional>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

namespace bsaction {

// A positive integer or infinity. Instantiated separately for orbit labels
// and for phenotypes so the two cannot be mixed up silently.
template <class Tag>
class Extended {
 public:
  Extended() : value_(1) {}
  Extended(Int v) : value_(std::move(v)) {
    if (value_.sign() <= 0) [[unlikely]] throw_nonpositive(value_);
  }
  template <std::integral T>
  Extended(T v) : Extended(Int(v)) {}

  static Extended infinite() {
    Extended e;
    e.infinite_ = true;
    e.value_ = 0;
    return e;
  }

  bool is_infinite() const { return infinite_; }
  bool is_finite() const { return !infinite_; }
  const Int& value() const {
    if (infinite_) [[unlikely]] throw_infinite();
    return value_;
  }

  std::string str() const { return infinite_ ? "inf" : value_.str(); }

  friend bool operator==(const Extended& a, const Extended& b) {
    return a.infinite_ == b.infinite_ && a.value_ == b.value_;
  }
  // Finite values in numeric order, infinity last.
  friend std::strong_ordering operator<=>(const Extended& a, const Extended& b) {
    if (a.infinite_ != b.infinite_) return a.infinite_ ? std::strong_ordering::greater : std::strong_ordering::less;
    return a.value_ <=> b.value_;
  }

 private:
  [[noreturn, gnu::cold, gnu::noinline]] static void throw_infinite() {
    throw std::logic_error(std::string(Tag::name) + " is infinite");
  }
  [[noreturn, gnu::cold, gnu::noinline]] static void throw_nonpositive(const Int& v) {
    throw std::invalid_argument(std::string(Tag::name) + " must be >= 1, got " + v.str());
  }
  bool infinite_ = false;
  Int value_;
};

struct LabelTag {
  static constexpr const char* name = "label";
};
struct PhenotypeTag {
  static constexpr const char* name = "phenotype";
};
using Label = Extended<LabelTag>;
using Phenotype = Extended<PhenotypeTag>;

enum class Orientation { positive = 1, negative = -1 };

inline int sign_of(Orientation o) { return static_cast<int>(o); }
inline Orientation flip(Orientation o) {
  return o == Orientation::positive ? Orientation::negative : Orientation::positive;
}
inline const char* to_string(Orientation o) { return o == Orientation::positive ? "+" : "-"; }

// gcd(L, k) with the convention gcd(inf, k) = |k|.
inline Int gcd_label(const Label& L, const Int& k) { return L.is_infinite() ? abs(k) : gcd(L.value(), k); }

// Maximal number of positive edges leaving (resp. entering) a vertex.
inline Int out_degree_bound(const GroupParams& g, const Label& L) { return gcd_label(L, g.n()); }
inline Int in_degree_bound(const GroupParams& g, const Label& L) { return gcd_label(L, g.m()); }

// Size of a b^n-coset (source side) or b^m-coset (target side) of an orbit.
inline Label source_coset_size(const GroupParams& g, const Label& L) {
  return L.is_infinite() ? Label::infinite() : Label(L.value() / gcd(L.value(), g.n()));
}
inline Label target_coset_size(const GroupParams& g, const Label& L) {
  return L.is_infinite() ? Label::infinite() : Label(L.value() / gcd(L.value(), g.m()));
}

// Transfer equation L(s)/gcd(L(s),n) = L(e) = L(t)/gcd(L(t),m); returns the
// edge label when it holds.
inline std::optional<Label> transfer_ok(const GroupParams& g, const Label& source, const Label& target) {
  Label a = source_coset_size(g, source), b = target_coset_size(g, target);
  if (a == b) return a;
  return std::nullopt;
}

// Phe(L) = prod of p^{|L|_p} over primes p with |m|_p = |n|_p < |L|_p.
// Primes not dividing mn have |m|_p = |n|_p = 0, so they survive whenever
// they divide L; only the primes of mn need inspecting.
inline Phenotype phenotype_of_label(const GroupParams& g, const Label& L) {
  if (L.is_infinite()) return Phenotype::infinite();
  Int q = L.value();
  for (const auto& pp : g.primes()) {
    unsigned v = 0;
    Int pv = 1;
    while (divides(pp.prime, q)) {
      q /= pp.prime;
      pv *= pp.prime;
      ++v;
    }
    if (pp.vm == pp.vn && v > pp.vn) q *= pv;
  }
  return Phenotype(q);
}

// Human-readable per-prime account of the phenotype computation.
struct PhenotypeEvidence {
  Int prime;
  unsigned vm, vn, vL;
  bool kept;
};

inline std::vector<PhenotypeEvidence> phenotype_evidence(const GroupParams& g, const Label& L) {
  std::vector<PhenotypeEvidence> out;
  if (L.is_infinite()) return out;
  Int rest = L.value();
  for (const auto& pp : g.primes()) {
    unsigned v = 0;
    while (divides(pp.prime, rest)) {
      rest /= pp.prime;
      ++v;
    }
    out.push_back({pp.prime, pp.vm, pp.vn, v, pp.vm == pp.vn && v > pp.vn});
  }
  if (rest > 1) out.push_back({rest, 0, 0, 1, true});  // cofactor coprime to mn, not factored further
  return out;
}

inline bool is_phenotype(const GroupParams& g, const Phenotype& q) {
  if (q.is_infinite()) return true;
  return phenotype_of_label(g, Label(q.value())) == q;
}

// q/gcd(q,m), which equals q/gcd(q,n) for a genuine phenotype.
inline Int reduced_phenotype(const GroupParams& g, const Phenotype& q) {
  if (q.is_infinite()) throw std::invalid_argument("reduced phenotype is only defined for finite phenotypes");
  if (!is_phenotype(g, q)) {
    throw std::invalid_argument(q.str() + " is not a " + g.str() + "-phenotype");
  }
  Int a = q.value() / gcd(q.value(), g.m());
  Int b = q.value() / gcd(q.value(), g.n());
  if (a != b) throw std::logic_error("phenotype with unequal reduced quotients");
  return a;
}

// Every L' that may sit at the other end of an edge leaving L with the given
// orientation, ascending. Writing e for the edge label, L' = e * gcd(L', m)
// on the positive side, so L' ranges over e*c with c | |m| and gcd(e*c, m) = c.
inline std::vector<Label> admissible_successors(const GroupParams& g, const Label& L, Orientation o) {
  if (L.is_infinite()) return {Label::infinite()};
  Int e = o == Orientation::positive ? source_coset_size(g, L).value() : target_coset_size(g, L).value();
  const Int far = o == Orientation::positive ? g.abs_m() : g.abs_n();
  std::vector<Label> out;
  for (Int c = 1; c <= far; ++c) {
    if (!divides(c, far)) continue;
    if (gcd(e * c, far) == c) out.emplace_back(e * c);
  }
  return out;
}

// Choice of the child label for one-orbit free extensions.
class TransferRule {
 public:
  enum class Kind { max, min, custom };

  static TransferRule max() { return TransferRule(Kind::max); }
  static TransferRule min() { return TransferRule(Kind::min); }

  // A table of explicit choices; entries are checked against the transfer
  // equation. Labels missing from the table fall back to MAX or MIN.
  static TransferRule custom(const GroupParams& g, std::map<std::pair<Int, Orientation>, Int> table,
                             Kind fallback = Kind::max) {
    if (fallback == Kind::custom) throw std::invalid_argument("custom rule fallback must be max or min");
    for (const auto& [key, child] : table) {
      Label parent(key.first), c(child);
      bool ok = key.second == Orientation::positive ? transfer_ok(g, parent, c).has_value()
                                                    : transfer_ok(g, c, parent).has_value();
      if (!ok) {
        throw std::invalid_argument("custom rule entry (" + key.first.str() + "," + to_string(key.second) + ") -> " +
                                    child.str() + " violates the transfer equation");
      }
    }
    TransferRule r(Kind::custom);
    r.table_ = std::move(table);
    r.fallback_ = fallback;
    return r;
  }

  Kind kind() const { return kind_; }
  std::string name() const {
    switch (kind_) {
      case Kind::max: return "max";
      case Kind::min: return "min";
      default: return "custom";
    }
  }

  Label apply(const GroupParams& g, const Label& L, Orientation o) const {
    if (L.is_infinite()) return Label::infinite();
    Kind k = kind_;
    if (k == Kind::custom) {
      auto it = table_.find({L.value(), o});
      if (it != table_.end()) return Label(it->second);
      k = fallback_;
    }
    if (k == Kind::max) {
      // |m| L / gcd(L, n) and |n| L / gcd(L, m)
      return o == Orientation::positive ? Label(g.abs_m() * source_coset_size(g, L).value())
                                        : Label(g.abs_n() * target_coset_size(g, L).value());
    }
    // least element of admissible_successors
    Int e = o == Orientation::positive ? source_coset_size(g, L).value() : target_coset_size(g, L).value();
    const Int& far = o == Orientation::positive ? g.abs_m() : g.abs_n();
    for (Int c = 1;; ++c) {
      if (divides(c, far) && gcd(e * c, far) == c) return Label(e * c);
    }
  }

 private:
  explicit TransferRule(Kind k) : kind_(k) {}
  Kind kind_;
  Kind fallback_ = Kind::max;
  std::map<std::pair<Int, Orientation>, Int> table_;
};

inline Label rule_apply(const GroupParams& g, const TransferRule& r, const Label& L, Orientation o) {
  return r.apply(g, L, o);
}

// Thrown when the U-turn iteration leaves the range where it provably stops.
struct UturnDivergence : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// Upper bound on the number of U-turn steps, read off the valuations of L0.
// Each step maps |L|_p to 0 when |L|_p <= |m|_p and to |L|_p - |m|_p + |n|_p
// otherwise, so primes with |m|_p > |n|_p shrink until they vanish and
// primes with |m|_p = |n|_p settle after one step. Primes with
// |m|_p < |n|_p and |L0|_p > |m|_p grow forever: nullopt.
inline std::optional<Int> uturn_step_bound(const GroupParams& g, const Int& L0) {
  Int bound = 1;
  for (const auto& pp : g.primes()) {
    unsigned v = valuation(pp.prime, L0);
    if (v <= pp.vm) continue;
    if (pp.vm < pp.vn) return std::nullopt;
    if (pp.vm == pp.vn) continue;
    unsigned drop = pp.vm - pp.vn;
    Int steps = Int((v - pp.vm + drop - 1) / drop) + 1;
    if (steps > bound) bound = steps;
  }
  return bound;
}

// l^{j+1} = least L' with L'/gcd(L',n) = l^j/gcd(l^j,m), until stationary.
// The returned list ends at the fixed point (not repeated).
inline std::vector<Int> uturn_sequence(const GroupParams& g, const Int& L0) {
  if (L0 < 1) throw std::invalid_argument("U-turn start label must be >= 1");
  auto bound = uturn_step_bound(g, L0);
  if (!bound) {
    throw UturnDivergence("U-turn from " + L0.str() + " in " + g.str() +
                          " never stabilises: a prime with |m|_p < |n|_p exceeds |m|_p in the start label");
  }
  std::vector<Int> seq{L0};
  for (Int step = 0;; ++step) {
    if (step > *bound) throw std::logic_error("U-turn exceeded its step bound from " + L0.str());
    Int next = admissible_successors(g, Label(seq.back()), Orientation::negative).front().value();
    if (next == seq.back()) return seq;
    seq.push_back(std::move(next));
  }
}

// Label profile reached at the end of a seed-leaving path: |L|_p = |m|_p
// where |m|_p < |n|_p, and |L|_p = max(|q|_p, |m|_p) where |m|_p = |n|_p.
inline bool satisfies_exit_profile(const GroupParams& g, const Int& L, const Int& q) {
  for (const auto& pp : g.primes()) {
    unsigned v = valuation(pp.prime, L);
    if (pp.vm < pp.vn && v != pp.vm) return false;
    if (pp.vm == pp.vn && v != std::max(valuation(pp.prime, q), pp.vm)) return false;
  }
  return true;
}

}  // namespace bsaction
