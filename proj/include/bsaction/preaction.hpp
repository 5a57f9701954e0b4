#pragma once

#include "bsaction/phenotype.hpp"

#include <boost/container/small_vector.hpp>

#include <array>
#include <concepts>
#include <cstdint>
#include <deque>
#include <limits>
#include <map>
#include <optional>
#include <sstream>
#include <stdexcept>
#include <string>
#include <unordered_map>
#include <utility>
#include <vector>

namespace bsaction {

using OrbitIndex = std::uint32_t;
inline constexpr OrbitIndex kNoOrbit = std::numeric_limits<OrbitIndex>::max();

// A point of X: an orbit of b together with an offset from the orbit's base
// point. Offsets of finite orbits live in [0, L).
struct Point {
  OrbitIndex orbit = 0;
  Int offset = 0;
  friend bool operator==(const Point&, const Point&) = default;
  friend std::strong_ordering operator<=>(const Point& a, const Point& b) {
    if (auto c = a.orbit <=> b.orbit; c != 0) return c;
    return a.offset <=> b.offset;
  }
};

struct Orbit {
  std::string id;
  Label length;
};

// x b^{jn} t = y b^{jm} for all j: one b^n-coset of the source orbit mapped
// onto one b^m-coset of the target orbit.
struct Arrow {
  Point source;
  Point target;
  std::string id;  // optional, for diagnostics
};

enum class ValidationReason {
  unknown_orbit,
  duplicate_orbit_id,
  offset_out_of_range,
  transfer_equation,
  overlapping_domain,
  overlapping_range,
};

inline const char* to_string(ValidationReason r) {
  switch (r) {
    case ValidationReason::unknown_orbit: return "unknown-orbit";
    case ValidationReason::duplicate_orbit_id: return "duplicate-orbit-id";
    case ValidationReason::offset_out_of_range: return "offset-out-of-range";
    case ValidationReason::transfer_equation: return "transfer-equation";
    case ValidationReason::overlapping_domain: return "overlapping-domain";
    case ValidationReason::overlapping_range: return "overlapping-range";
  }
  return "?";
}

struct ValidationError {
  ValidationReason reason;
  std::string message;
  std::vector<std::string> offending;  // arrow and orbit ids
};

// Raised for inputs that are not pre-actions, or for domain errors such as
// evaluating where a structure is not defined.
struct DomainError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct InvalidPreAction : DomainError {
  explicit InvalidPreAction(ValidationError e) : DomainError(e.message), error(std::move(e)) {}
  ValidationError error;
};

using ArrowList = boost::container::small_vector<std::uint32_t, 4>;

// A pre-action (beta, tau) of BS(m,n): beta is given by the orbit lengths, tau
// by a list of arrows. Both directions of tau are answered by solving a linear
// congruence inside the unique arrow whose coset contains the point.
class PreAction {
 public:
  explicit PreAction(GroupParams params) : params_(std::move(params)) {}

  const GroupParams& params() const { return params_; }
  std::size_t orbit_count() const { return orbits_.size(); }
  std::size_t arrow_count() const { return arrows_.size(); }
  const Orbit& orbit(OrbitIndex i) const { return orbits_.at(i); }
  const std::vector<Orbit>& orbits() const { return orbits_; }
  const Arrow& arrow(std::size_t i) const { return arrows_.at(i); }
  const std::vector<Arrow>& arrows() const { return arrows_; }
  const ArrowList& out_arrows(OrbitIndex o) const { return out_[o]; }
  const ArrowList& in_arrows(OrbitIndex o) const { return in_[o]; }
  const Label& length(OrbitIndex o) const { return orbits_[o].length; }

  std::optional<OrbitIndex> find_orbit(const std::string& id) const {
    index_ids();
    auto it = by_id_.find(id);
    if (it == by_id_.end()) return std::nullopt;
    return it->second;
  }
  OrbitIndex orbit_index(const std::string& id) const {
    auto o = find_orbit(id);
    if (!o) throw DomainError("no orbit with id '" + id + "'");
    return *o;
  }

  OrbitIndex add_orbit(std::string id, Label length) {
    auto idx = try_add_orbit(id, std::move(length));
    if (!idx) throw InvalidPreAction({ValidationReason::duplicate_orbit_id, "duplicate orbit id '" + id + "'", {id}});
    return *idx;
  }

  // add_orbit, or nullopt if the id is taken.
  std::optional<OrbitIndex> try_add_orbit(const std::string& id, Label length) {
    index_ids();
    auto idx = static_cast<OrbitIndex>(orbits_.size());
    if (!by_id_.try_emplace(id, idx).second) return std::nullopt;
    ++indexed_;
    push_orbit(id, std::move(length));
    return idx;
  }

  // Adds an orbit whose id the caller guarantees to be unused. The id index
  // catches up on the next lookup, so bulk growth skips the hashing.
  OrbitIndex add_orbit_unchecked(std::string id, Label length) {
    auto idx = static_cast<OrbitIndex>(orbits_.size());
    push_orbit(std::move(id), std::move(length));
    return idx;
  }

  // Returns an id not used by any orbit, derived from `base`.
  std::string fresh_id(const std::string& base) const {
    index_ids();
    if (!by_id_.count(base)) return base;
    for (std::size_t k = 1;; ++k) {
      std::string c = base + "." + std::to_string(k);
      if (!by_id_.count(c)) return c;
    }
  }

  // No checks beyond index bounds; call validate() afterwards.
  std::size_t add_arrow(Point source, Point target, std::string id = {}) {
    if (source.orbit >= orbits_.size() || target.orbit >= orbits_.size()) {
      throw InvalidPreAction({ValidationReason::unknown_orbit, "arrow refers to a missing orbit", {id}});
    }
    auto idx = arrows_.size();
    out_[source.orbit].push_back(static_cast<std::uint32_t>(idx));
    in_[target.orbit].push_back(static_cast<std::uint32_t>(idx));
    arrows_.push_back({std::move(source), std::move(target), std::move(id)});
    return idx;
  }

  std::string arrow_name(std::size_t i) const {
    return arrows_[i].id.empty() ? "arrow#" + std::to_string(i) : arrows_[i].id;
  }

  Int normalize(OrbitIndex o, const Int& offset) const {
    const Label& L = orbits_[o].length;
    return L.is_infinite() ? offset : floor_mod(offset, L.value());
  }

  Point apply_b(const Point& x, const Int& k) const { return {x.orbit, normalize(x.orbit, x.offset + k)}; }

  // Index of the arrow whose source coset (positive) or target coset
  // (negative) contains x.
  std::optional<std::size_t> covering_arrow(const Point& x, Orientation o) const {
    const Int& g = sides_[x.orbit][o == Orientation::positive ? 0 : 1].g;
    for (auto a : o == Orientation::positive ? out_[x.orbit] : in_[x.orbit]) {
      const Point& anchor = o == Orientation::positive ? arrows_[a].source : arrows_[a].target;
      if (divides(g, x.offset - anchor.offset)) return a;
    }
    return std::nullopt;
  }

  // x t (positive) or x t^-1 (negative), if defined.
  std::optional<Point> apply_t(const Point& x, Orientation o) const {
    auto a = covering_arrow(x, o);
    if (!a) return std::nullopt;
    const Arrow& ar = arrows_[*a];
    bool pos = o == Orientation::positive;
    const Point& from = pos ? ar.source : ar.target;
    const Point& to = pos ? ar.target : ar.source;
    const Int& there = pos ? params_.m() : params_.n();
    Int delta = x.offset - from.offset;
    const SideData& sd = sides_[x.orbit][pos ? 0 : 1];
    // j * here = delta (mod L); for infinite orbits g = |here| and inv = sign(here)
    Int j = delta / sd.g * sd.inv;
    if (!sd.Lg.is_zero()) j = floor_mod(j, sd.Lg);
    return Point{to.orbit, normalize(to.orbit, to.offset + j * there)};
  }

  bool in_domain(const Point& x) const { return covering_arrow(x, Orientation::positive).has_value(); }
  bool in_range(const Point& x) const { return covering_arrow(x, Orientation::negative).has_value(); }

  std::optional<ValidationError> validate() const {
    for (std::size_t i = 0; i < arrows_.size(); ++i) {
      const Arrow& a = arrows_[i];
      for (const Point* p : {&a.source, &a.target}) {
        const Label& L = orbits_[p->orbit].length;
        if (L.is_finite() && (p->offset.sign() < 0 || p->offset >= L.value())) {
          return ValidationError{ValidationReason::offset_out_of_range,
                                 arrow_name(i) + ": offset " + p->offset.str() + " outside orbit '" +
                                     orbits_[p->orbit].id + "' of length " + L.str(),
                                 {arrow_name(i), orbits_[p->orbit].id}};
        }
      }
      const Label& Ls = orbits_[a.source.orbit].length;
      const Label& Lt = orbits_[a.target.orbit].length;
      if (!transfer_ok(params_, Ls, Lt)) {
        return ValidationError{ValidationReason::transfer_equation,
                               arrow_name(i) + ": labels " + Ls.str() + " -> " + Lt.str() +
                                   " violate the transfer equation for " + params_.str(),
                               {arrow_name(i), orbits_[a.source.orbit].id, orbits_[a.target.orbit].id}};
      }
    }
    for (OrbitIndex o = 0; o < orbits_.size(); ++o) {
      for (int side = 0; side < 2; ++side) {
        const auto& list = side == 0 ? out_[o] : in_[o];
        Int g = gcd_label(orbits_[o].length, side == 0 ? params_.n() : params_.m());
        for (std::size_t i = 0; i < list.size(); ++i) {
          for (std::size_t j = i + 1; j < list.size(); ++j) {
            const Point& p = side == 0 ? arrows_[list[i]].source : arrows_[list[i]].target;
            const Point& q = side == 0 ? arrows_[list[j]].source : arrows_[list[j]].target;
            if (divides(g, p.offset - q.offset)) {
              auto reason = side == 0 ? ValidationReason::overlapping_domain : ValidationReason::overlapping_range;
              return ValidationError{reason,
                                     arrow_name(list[i]) + " and " + arrow_name(list[j]) + " cover the same " +
                                         (side == 0 ? "b^n" : "b^m") + "-coset of orbit '" + orbits_[o].id + "'",
                                     {arrow_name(list[i]), arrow_name(list[j]), orbits_[o].id}};
            }
          }
        }
      }
    }
    return std::nullopt;
  }

  void require_valid() const {
    if (auto e = validate()) throw InvalidPreAction(*e);
  }

  // Saturated iff tau is a bijection of X: every orbit carries gcd(L,n)
  // outgoing and gcd(L,m) incoming arrows.
  bool is_saturated() const {
    for (OrbitIndex o = 0; o < orbits_.size(); ++o) {
      if (Int(out_[o].size()) != out_degree_bound(params_, orbits_[o].length)) return false;
      if (Int(in_[o].size()) != in_degree_bound(params_, orbits_[o].length)) return false;
    }
    return true;
  }

  bool is_connected() const {
    if (orbits_.empty()) return true;
    std::vector<char> seen(orbits_.size(), 0);
    std::vector<OrbitIndex> stack{0};
    seen[0] = 1;
    std::size_t count = 1;
    while (!stack.empty()) {
      OrbitIndex o = stack.back();
      stack.pop_back();
      for (int side = 0; side < 2; ++side) {
        for (auto a : side == 0 ? out_[o] : in_[o]) {
          OrbitIndex other = side == 0 ? arrows_[a].target.orbit : arrows_[a].source.orbit;
          if (!seen[other]) {
            seen[other] = 1;
            ++count;
            stack.push_back(other);
          }
        }
      }
    }
    return count == orbits_.size();
  }

  bool all_finite() const {
    for (const auto& o : orbits_) {
      if (o.length.is_infinite()) return false;
    }
    return true;
  }

  std::string point_name(const Point& p) const { return "(" + orbits_.at(p.orbit).id + "," + p.offset.str() + ")"; }

 private:
  void push_orbit(std::string id, Label length) {
    sides_.push_back({side_data(length, params_.n()), side_data(length, params_.m())});
    orbits_.push_back({std::move(id), std::move(length)});
    out_.emplace_back();
    in_.emplace_back();
  }

  void index_ids() const {
    for (; indexed_ < orbits_.size(); ++indexed_) {
      if (!by_id_.try_emplace(orbits_[indexed_].id, static_cast<OrbitIndex>(indexed_)).second) {
        throw std::logic_error("unchecked orbit id '" + orbits_[indexed_].id + "' is a duplicate");
      }
    }
  }

  // Per orbit and direction: g = gcd(L, step), and the inverse of step/g
  // modulo L/g (Lg = 0 for infinite orbits).
  struct SideData {
    Int g, inv, Lg;
  };
  static SideData side_data(const Label& L, const Int& step) {
    if (L.is_infinite()) return {abs(step), Int(step.sign()), Int(0)};
    Int g = gcd(L.value(), step);
    Int Lg = L.value() / g;
    return {g, mod_inverse(step / g, Lg), Lg};
  }

  GroupParams params_;
  std::vector<std::array<SideData, 2>> sides_;
  std::vector<Orbit> orbits_;
  std::vector<Arrow> arrows_;
  std::vector<ArrowList> out_, in_;
  mutable std::unordered_map<std::string, OrbitIndex> by_id_;
  mutable std::size_t indexed_ = 0;  // orbits [0, indexed_) are in by_id_
};

struct PointedPreAction {
  PreAction pre;
  Point basepoint;
};

// Anything that answers b- and t-moves; the lazy saturation answers t-moves
// by growing.
template <class S>
concept TransitionSource = requires(S& s, const Point& p, const Int& k, Orientation o) {
  { s.apply_b(p, k) } -> std::same_as<Point>;
  { s.apply_t(p, o) } -> std::same_as<std::optional<Point>>;
};

struct Evaluation {
  std::optional<Point> end;       // set when every letter was defined
  Point reached;                  // last point reached
  Int letters_consumed = 0;       // length of the defined prefix
  std::optional<Word> failing_prefix;  // prefix after which t was undefined

  bool defined() const { return end.has_value(); }
};

template <TransitionSource S>
Evaluation evaluate(S& src, const Point& x, const Word& w) {
  Evaluation ev;
  ev.reached = x;
  Word prefix;
  for (const auto& s : w.syllables()) {
    if (s.letter == Letter::b) {
      ev.reached = src.apply_b(ev.reached, s.exp);
      ev.letters_consumed += abs(s.exp);
      prefix.append(Letter::b, s.exp);
      continue;
    }
    Orientation o = s.exp.sign() > 0 ? Orientation::positive : Orientation::negative;
    for (Int i = abs(s.exp); i.sign() > 0; --i) {
      auto next = src.apply_t(ev.reached, o);
      if (!next) {
        ev.failing_prefix = prefix;
        return ev;
      }
      ev.reached = std::move(*next);
      ev.letters_consumed += 1;
      prefix.append(Letter::t, sign_of(o));
    }
  }
  ev.end = ev.reached;
  return ev;
}

// Radius-R ball of the Schreier graph around x. Vertices are numbered in
// breadth-first order, generators tried as b, b^-1, t, t^-1. Each row lists
// the four neighbours of a vertex: its number, kOutside for a neighbour that
// exists but lies beyond radius R, or kUndefined when the move is undefined.
struct BallEncoding {
  static constexpr std::int64_t kOutside = -1;
  static constexpr std::int64_t kUndefined = -2;
  std::vector<std::array<std::int64_t, 4>> rows;

  friend bool operator==(const BallEncoding&, const BallEncoding&) = default;

  std::string str() const {
    std::ostringstream os;
    for (std::size_t i = 0; i < rows.size(); ++i) {
      if (i) os << ';';
      os << i << ':';
      for (int g = 0; g < 4; ++g) {
        if (g) os << ',';
        auto v = rows[i][g];
        if (v == kOutside) os << '*';
        else if (v == kUndefined) os << '_';
        else os << v;
      }
    }
    return os.str();
  }
};

struct Ball {
  BallEncoding encoding;
  std::vector<Point> vertices;  // in numbering order
  std::vector<unsigned> distance;
};

template <TransitionSource S>
std::optional<Point> schreier_step(S& src, const Point& x, int generator) {
  switch (generator) {
    case 0: return src.apply_b(x, Int(1));
    case 1: return src.apply_b(x, Int(-1));
    case 2: return src.apply_t(x, Orientation::positive);
    default: return src.apply_t(x, Orientation::negative);
  }
}

template <TransitionSource S>
Ball schreier_ball(S& src, const Point& x, unsigned R) {
  Ball ball;
  std::map<Point, std::int64_t> index;
  std::vector<std::array<std::optional<Point>, 4>> moves;
  index.emplace(x, 0);
  ball.vertices.push_back(x);
  ball.distance.push_back(0);
  for (std::size_t head = 0; head < ball.vertices.size(); ++head) {
    Point here = ball.vertices[head];
    unsigned d = ball.distance[head];
    moves.emplace_back();
    for (int g = 0; g < 4; ++g) {
      auto next = schreier_step(src, here, g);
      if (next && d < R && !index.count(*next)) {
        index.emplace(*next, static_cast<std::int64_t>(ball.vertices.size()));
        ball.vertices.push_back(*next);
        ball.distance.push_back(d + 1);
      }
      moves.back()[g] = std::move(next);
    }
  }
  for (const auto& mv : moves) {
    std::array<std::int64_t, 4> row{};
    for (int g = 0; g < 4; ++g) {
      if (!mv[g]) {
        row[g] = BallEncoding::kUndefined;
      } else {
        auto it = index.find(*mv[g]);
        row[g] = it == index.end() ? BallEncoding::kOutside : it->second;
      }
    }
    ball.encoding.rows.push_back(row);
  }
  return ball;
}

inline bool ball_equal(const BallEncoding& a, const BallEncoding& b) { return a == b; }

// Sub-pre-action on a set of orbits, keeping the arrows accepted by `keep_arrow`
// whose ends both survive. Orbit ids are preserved.
struct Restriction {
  PreAction pre;
  std::vector<OrbitIndex> orbit_map;  // old index -> new index or kNoOrbit
  std::vector<std::size_t> arrow_origin;  // new arrow -> old arrow
};

template <class KeepArrow>
Restriction restrict_pre_action(const PreAction& p, const std::vector<char>& keep_orbit, KeepArrow keep_arrow) {
  Restriction r{PreAction(p.params()), std::vector<OrbitIndex>(p.orbit_count(), kNoOrbit), {}};
  for (OrbitIndex o = 0; o < p.orbit_count(); ++o) {
    if (keep_orbit[o]) r.orbit_map[o] = r.pre.add_orbit(p.orbit(o).id, p.orbit(o).length);
  }
  for (std::size_t i = 0; i < p.arrow_count(); ++i) {
    const Arrow& a = p.arrow(i);
    OrbitIndex s = r.orbit_map[a.source.orbit], t = r.orbit_map[a.target.orbit];
    if (s == kNoOrbit || t == kNoOrbit || !keep_arrow(i)) continue;
    r.pre.add_arrow({s, a.source.offset}, {t, a.target.offset}, a.id);
    r.arrow_origin.push_back(i);
  }
  return r;
}

inline Restriction restrict_pre_action(const PreAction& p, const std::vector<char>& keep_orbit) {
  return restrict_pre_action(p, keep_orbit, [](std::size_t) { return true; });
}

// Keeps the orbits meeting the radius-R ball around the basepoint, with all
// arrows among them. Its radius-(R-1) ball agrees with the original; use
// R+1 to preserve the radius-R ball including the moves leaving it.
template <TransitionSource S>
Restriction core_restriction(S& src, const PreAction& current, const Point& x, unsigned R) {
  Ball ball = schreier_ball(src, x, R);
  std::vector<char> keep(current.orbit_count(), 0);
  for (const auto& v : ball.vertices) keep[v.orbit] = 1;
  return restrict_pre_action(current, keep);
}

inline PointedPreAction core_restriction(const PointedPreAction& p, unsigned R) {
  Restriction r = core_restriction(p.pre, p.pre, p.basepoint, R);
  Point base{r.orbit_map[p.basepoint.orbit], p.basepoint.offset};
  return {std::move(r.pre), base};
}

// Basepoint-preserving isomorphism test. An isomorphism commutes with b, so it
// rotates each orbit; the rotation of the basepoint orbit is forced and every
// arrow then forces the rotation of its other end. Both inputs must be
// connected; the traversal either covers everything or finds a clash.
struct IsoResult {
  bool isomorphic = false;
  std::string reason;
  std::vector<std::pair<OrbitIndex, Int>> orbit_map;  // orbit -> (image orbit, rotation)
};

inline IsoResult pointed_isomorphic(const PreAction& a, const Point& xa, const PreAction& b, const Point& xb) {
  IsoResult res;
  auto fail = [&](std::string why) {
    res.isomorphic = false;
    res.reason = std::move(why);
    res.orbit_map.clear();
    return res;
  };
  if (!(a.params() == b.params())) return fail("different group parameters");
  if (a.orbit_count() != b.orbit_count()) return fail("different numbers of orbits");
  if (a.arrow_count() != b.arrow_count()) return fail("different numbers of arrows");
  std::vector<std::optional<std::pair<OrbitIndex, Int>>> map(a.orbit_count());
  std::vector<char> used(b.orbit_count(), 0);
  std::deque<OrbitIndex> queue;

  auto assign = [&](OrbitIndex oa, OrbitIndex ob, const Int& shift) -> std::optional<std::string> {
    const Label& L = a.length(oa);
    if (!(L == b.length(ob))) return "orbit '" + a.orbit(oa).id + "' and '" + b.orbit(ob).id + "' differ in length";
    Int s = L.is_infinite() ? shift : floor_mod(shift, L.value());
    if (map[oa]) {
      if (map[oa]->first != ob || map[oa]->second != s) {
        return "inconsistent image for orbit '" + a.orbit(oa).id + "'";
      }
      return std::nullopt;
    }
    if (used[ob]) return "two orbits map to '" + b.orbit(ob).id + "'";
    used[ob] = 1;
    map[oa] = std::make_pair(ob, s);
    queue.push_back(oa);
    return std::nullopt;
  };

  if (auto e = assign(xa.orbit, xb.orbit, xb.offset - xa.offset)) return fail(*e);
  while (!queue.empty()) {
    OrbitIndex oa = queue.front();
    queue.pop_front();
    auto [ob, shift] = *map[oa];
    for (Orientation o : {Orientation::positive, Orientation::negative}) {
      bool pos = o == Orientation::positive;
      const auto& la = pos ? a.out_arrows(oa) : a.in_arrows(oa);
      const auto& lb = pos ? b.out_arrows(ob) : b.in_arrows(ob);
      if (la.size() != lb.size()) return fail("degree mismatch at orbit '" + a.orbit(oa).id + "'");
      for (auto ai : la) {
        const Arrow& ar = a.arrow(ai);
        const Point& from = pos ? ar.source : ar.target;
        const Point& to = pos ? ar.target : ar.source;
        Point image{ob, b.normalize(ob, from.offset + shift)};
        auto moved = b.apply_t(image, o);
        if (!moved) return fail("move undefined at image of " + a.point_name(from));
        if (auto e = assign(to.orbit, moved->orbit, moved->offset - to.offset)) return fail(*e);
      }
    }
  }
  for (const auto& m : map) {
    if (!m) return fail("first pre-action is not connected");
  }
  res.isomorphic = true;
  for (const auto& m : map) res.orbit_map.push_back(*m);
  return res;
}

inline IsoResult pointed_isomorphic(const PointedPreAction& A, const PointedPreAction& B) {
  return pointed_isomorphic(A.pre, A.basepoint, B.pre, B.basepoint);
}

// Disjoint union; orbits of the second operand are renamed on collision.
// Returns the union and the index offset of the second operand's orbits.
inline std::pair<PreAction, OrbitIndex> disjoint_union(const PreAction& a, const PreAction& b) {
  if (!(a.params() == b.params())) throw DomainError("disjoint union of pre-actions of different groups");
  PreAction u(a.params());
  for (const auto& o : a.orbits()) u.add_orbit(o.id, o.length);
  auto shift = static_cast<OrbitIndex>(a.orbit_count());
  for (const auto& o : b.orbits()) u.add_orbit(u.fresh_id(o.id), o.length);
  for (const auto& ar : a.arrows()) u.add_arrow(ar.source, ar.target, ar.id);
  for (const auto& ar : b.arrows()) {
    u.add_arrow({ar.source.orbit + shift, ar.source.offset}, {ar.target.orbit + shift, ar.target.offset}, ar.id);
  }
  return {std::move(u), shift};
}

}  // namespace bsaction
