#pragma once

#include "bsaction/saturation.hpp"

#include <map>
#include <optional>
#include <string>
#include <vector>

namespace bsaction {

// Where a pointed pre-action's subgroup lies in the space of infinite-index
// subgroups (or that it has finite index).
struct Classification {
  enum class Kind { finite_index, c_infinity, perfect_kernel };
  Kind kind;
  std::optional<Phenotype> phenotype;  // set for perfect_kernel and c_infinity
  std::string reason;
};

inline const char* to_string(Classification::Kind k) {
  switch (k) {
    case Classification::Kind::finite_index: return "FiniteIndex";
    case Classification::Kind::c_infinity: return "CInfinity";
    case Classification::Kind::perfect_kernel: return "PerfectKernel";
  }
  return "?";
}

// A saturated core is already the whole Schreier graph, so its quotient of
// the Bass-Serre tree is finite. A non-saturated core has an infinite one:
// every orbit a ruled extension adds has total degree bound
// gcd(L,n) + gcd(L,m) >= 2 but only its parent link, so the forest never
// closes. The rule therefore cannot change the answer; it is accepted for
// interface symmetry with the saturation module.
inline Classification classify_subgroup(const PointedPreAction& p, const TransferRule& rule = TransferRule::max()) {
  (void)rule;
  p.pre.require_valid();
  if (p.pre.orbit_count() == 0) throw DomainError("pre-action has no orbits");
  if (!p.pre.is_connected()) throw DomainError("pre-action is not connected");
  const GroupParams& g = p.pre.params();
  Phenotype q = phenotype_of_label(g, p.pre.length(p.basepoint.orbit));
  if (!p.pre.is_saturated()) {
    return {Classification::Kind::perfect_kernel, q, "core is not saturated: the Bass-Serre quotient is infinite"};
  }
  if (p.pre.all_finite()) return {Classification::Kind::finite_index, std::nullopt, "saturated with finite orbits"};
  if (!g.balanced()) {
    throw std::logic_error("saturated action with infinite orbits in " + g.str() + " where |m| != |n|");
  }
  return {Classification::Kind::c_infinity, q, "saturated with infinite orbits and |m| = |n|"};
}

enum class Genericity { dense_gdelta, empty };

inline const char* to_string(Genericity g) { return g == Genericity::dense_gdelta ? "dense-G-delta" : "empty"; }

struct Feasibility {
  Genericity ht;
  Genericity faithful;
  friend bool operator==(const Feasibility&, const Feasibility&) = default;
};

// Genericity of highly transitive and of faithful actions inside the piece
// K_q of the perfect kernel.
inline Feasibility feasibility(const GroupParams& g, const Phenotype& q) {
  if (!is_phenotype(g, q)) throw DomainError(q.str() + " is not a phenotype of " + g.str());
  const auto D = Genericity::dense_gdelta, E = Genericity::empty;
  bool one = !q.is_infinite() && q.value() == 1;
  if (!g.balanced()) {
    if (one || q.is_infinite()) return {D, D};
    return {E, D};
  }
  if (one) return {D, E};
  if (q.is_infinite()) return {E, D};
  return {E, E};
}

// Actions with subgroups in C-infinity are never highly transitive or
// faithful, and the set is countable so neither property is generic there.
inline Feasibility feasibility(const Classification& c, const GroupParams& g) {
  switch (c.kind) {
    case Classification::Kind::perfect_kernel: return feasibility(g, *c.phenotype);
    default: return {Genericity::empty, Genericity::empty};
  }
}

// Partition of a pre-action's points into classes of the reduced b-orbit
// relation. A point (o, k) of an orbit of length L lies in class
// (o, k mod L/s) where s is the reduced phenotype; these are the orbits of
// b^{L/s}, each of size s. For q infinite with |m| = |n| the classes are
// the b^m-orbits, (o, k mod |m|).
class ReducedClasses {
 public:
  ReducedClasses(const PreAction& p, const Phenotype& q) : params_(p.params()) {
    if (q.is_infinite()) {
      if (!params_.balanced()) throw DomainError("reduced classes of infinite phenotype need |m| = |n|");
      for (OrbitIndex o = 0; o < p.orbit_count(); ++o) period_.push_back(params_.abs_m());
      class_size_ = std::nullopt;
      return;
    }
    Int s = reduced_phenotype(params_, q);
    class_size_ = s;
    for (OrbitIndex o = 0; o < p.orbit_count(); ++o) {
      const Label& L = p.length(o);
      if (L.is_infinite()) throw DomainError("orbit '" + p.orbit(o).id + "' is infinite, phenotype is " + q.str());
      if (!divides(q.value(), L.value())) {
        throw DomainError("orbit '" + p.orbit(o).id + "' of length " + L.str() + " is not divisible by " + q.str());
      }
      period_.push_back(L.value() / s);
    }
  }

  std::pair<OrbitIndex, Int> class_of(const Point& x) const { return {x.orbit, floor_mod(x.offset, period_.at(x.orbit))}; }
  // Points per class, absent for infinite orbits.
  const std::optional<Int>& class_size() const { return class_size_; }
  // Number of classes in an orbit.
  const Int& classes_in(OrbitIndex o) const { return period_.at(o); }

 private:
  GroupParams params_;
  std::vector<Int> period_;
  std::optional<Int> class_size_;
};

inline ReducedClasses reduced_classes(const PreAction& p, const Phenotype& q) { return ReducedClasses(p, q); }

// Explicit b- and t-images of a finite point set. Built from a pre-action
// it lists every point of the finite orbits and a window of offsets in the
// infinite ones; tests may corrupt entries to check that the obstruction
// check notices.
struct RealizedTransitions {
  std::vector<Point> points;
  std::map<Point, Point> b;
  std::map<Point, Point> t;
};

inline RealizedTransitions realized_transitions(const PreAction& p, std::int64_t window = 24) {
  RealizedTransitions r;
  for (OrbitIndex o = 0; o < p.orbit_count(); ++o) {
    const Label& L = p.length(o);
    Int lo = L.is_infinite() ? Int(-window) : Int(0);
    Int hi = L.is_infinite() ? Int(window) : L.value() - 1;
    for (Int k = lo; k <= hi; ++k) {
      Point x{o, k};
      r.points.push_back(x);
      r.b.emplace(x, p.apply_b(x, 1));
      if (auto y = p.apply_t(x, Orientation::positive)) r.t.emplace(x, *y);
    }
  }
  return r;
}

struct ObstructionReport {
  bool invariant = true;
  std::optional<std::string> counterexample;
  std::size_t points = 0;
  std::size_t transitions = 0;
  std::size_t classes = 0;
  // some class is neither a single point nor everything
  bool nontrivial = false;
};

// Checks that b and t map every reduced class into a single class, at every
// transition present in `tr`.
inline ObstructionReport check_primitivity_obstruction(const PreAction& p, const Phenotype& q,
                                                       const RealizedTransitions& tr) {
  ReducedClasses rc(p, q);
  ObstructionReport rep;
  rep.points = tr.points.size();
  std::map<std::pair<OrbitIndex, Int>, std::size_t> members;
  for (const auto& x : tr.points) ++members[rc.class_of(x)];
  rep.classes = members.size();
  for (const auto& [c, count] : members) rep.nontrivial = rep.nontrivial || (count > 1 && count < rep.points);
  for (const char* gen : {"b", "t"}) {
    const auto& table = gen[0] == 'b' ? tr.b : tr.t;
    std::map<std::pair<OrbitIndex, Int>, std::pair<Point, std::pair<OrbitIndex, Int>>> image;
    for (const auto& [x, y] : table) {
      ++rep.transitions;
      auto cx = rc.class_of(x), cy = rc.class_of(y);
      auto [it, fresh] = image.emplace(cx, std::make_pair(x, cy));
      if (fresh || it->second.second == cy) continue;
      rep.invariant = false;
      if (!rep.counterexample) {
        const Point& w = it->second.first;
        rep.counterexample = p.point_name(w) + " and " + p.point_name(x) + " share a class, but their " + gen +
                             "-images " + p.point_name(table.at(w)) + " and " + p.point_name(y) + " do not";
      }
    }
  }
  return rep;
}

inline ObstructionReport check_primitivity_obstruction(const PreAction& p, const Phenotype& q) {
  return check_primitivity_obstruction(p, q, realized_transitions(p));
}

inline Json to_json(const ObstructionReport& r) {
  Json j{{"invariant", r.invariant}, {"points", r.points}, {"transitions", r.transitions},
         {"classes", r.classes}, {"nontrivial", r.nontrivial}};
  if (r.counterexample) j["counterexample"] = *r.counterexample;
  return j;
}

inline Json to_json(const Classification& c, const GroupParams& g) {
  Json j{{"class", to_string(c.kind)}};
  j["phenotype"] = c.phenotype ? to_json(*c.phenotype) : Json(nullptr);
  Feasibility f = feasibility(c, g);
  j["feasibility"] = {{"ht", to_string(f.ht)}, {"faithful", to_string(f.faithful)}};
  j["reason"] = c.reason;
  return j;
}

}  // namespace bsaction
