#pragma once

#include "bsaction/bass_serre.hpp"
#include "bsaction/json_io.hpp"

#include <algorithm>
#include <cstdint>
#include <deque>
#include <map>
#include <optional>
#include <random>
#include <string>
#include <vector>

namespace bsaction {

// One-orbit free extension: a fresh orbit of length rule(L_x, sign) whose base
// point y (offset 0) becomes x.t (positive) or x.t^-1 (negative).
struct ExtensionRecord {
  Orientation sign;
  Point witness;
  Label witness_label;
  OrbitIndex new_orbit;
  Label new_label;
  std::size_t arrow;
};

inline Json to_json(const PreAction& p, const ExtensionRecord& r) {
  return Json{{"sign", to_string(r.sign)},
              {"witness", point_to_json(p, r.witness)},
              {"witness_len", to_json(r.witness_label)},
              {"new_orbit", p.orbit(r.new_orbit).id},
              {"len", to_json(r.new_label)},
              {"base", point_to_json(p, Point{r.new_orbit, 0})}};
}

// Thrown when growth exceeds its extension budget.
struct FuelExhausted : std::runtime_error {
  using std::runtime_error::runtime_error;
};

namespace detail {

// With `unique_id` set the caller guarantees `id` is unused.
inline ExtensionRecord extend_in_place(PreAction& p, const Point& x, Orientation sign, const TransferRule& rule,
                                       std::string id, bool unique_id = false) {
  if (p.covering_arrow(x, sign)) {
    throw DomainError(p.point_name(x) + " is already saturated in direction " + to_string(sign));
  }
  const Label Lx = p.length(x.orbit);
  Label Ly = rule.apply(p.params(), Lx, sign);
  OrbitIndex y = unique_id ? p.add_orbit_unchecked(std::move(id), Ly) : p.add_orbit(p.fresh_id(id), Ly);
  std::size_t a = sign == Orientation::positive ? p.add_arrow(x, Point{y, 0}) : p.add_arrow(Point{y, 0}, x);
  return {sign, x, Lx, y, std::move(Ly), a};
}

}  // namespace detail

inline std::pair<PreAction, ExtensionRecord> one_orbit_extension(const PreAction& p, const Point& x, Orientation sign,
                                                                  const TransferRule& rule) {
  PreAction q = p;
  auto rec = detail::extend_in_place(q, x, sign, rule, "y");
  return {std::move(q), std::move(rec)};
}

// A ruled forest saturation of a core, grown on demand. The first orbits
// and arrows of current() are exactly the core's; every later orbit hangs
// off the core by a tree, each added by one logged extension.
class LazySaturation {
 public:
  static constexpr std::uint64_t kDefaultFuel = 1'000'000;

  LazySaturation(PointedPreAction core, TransferRule rule, std::uint64_t fuel = kDefaultFuel)
      : core_(std::move(core)), rule_(std::move(rule)), current_(core_.pre), fuel_(fuel) {
    core_.pre.require_valid();
    core_orbits_ = core_.pre.orbit_count();
    depth_.assign(core_orbits_, 0);
    parent_.assign(core_orbits_, kNoOrbit);
    std::vector<OrbitIndex> level0(core_orbits_);
    for (OrbitIndex i = 0; i < core_orbits_; ++i) level0[i] = i;
    std::sort(level0.begin(), level0.end(),
              [&](OrbitIndex a, OrbitIndex b) { return core_.pre.orbit(a).id < core_.pre.orbit(b).id; });
    by_depth_.push_back(std::move(level0));
    // forest ids are prefix_ followed by digits; pick a prefix no core id uses that way
    auto clashes = [&](const std::string& id) {
      return id.size() > prefix_.size() && id.starts_with(prefix_) &&
             id.find_first_not_of("0123456789", prefix_.size()) == std::string::npos;
    };
    while (std::any_of(core_.pre.orbits().begin(), core_.pre.orbits().end(),
                       [&](const Orbit& o) { return clashes(o.id); })) {
      prefix_ += "_";
    }
  }

  const PointedPreAction& core() const { return core_; }
  const PreAction& current() const { return current_; }
  const TransferRule& rule() const { return rule_; }
  const GroupParams& params() const { return current_.params(); }
  const Point& basepoint() const { return core_.basepoint; }
  const std::vector<ExtensionRecord>& log() const { return log_; }
  std::uint64_t fuel() const { return fuel_; }
  void set_fuel(std::uint64_t f) { fuel_ = f; }

  bool is_core(OrbitIndex o) const { return o < core_orbits_; }
  std::size_t core_orbit_count() const { return core_orbits_; }
  // Bass-Serre distance to the core; the forest makes this the tree depth.
  unsigned depth(OrbitIndex o) const { return depth_.at(o); }
  OrbitIndex parent(OrbitIndex o) const { return parent_.at(o); }
  // Arrow joining a forest orbit to its parent.
  std::size_t parent_arrow(OrbitIndex o) const { return parent_arrow_.at(o - core_orbits_); }

  Point apply_b(const Point& x, const Int& k) const { return current_.apply_b(x, k); }

  std::optional<Point> apply_t(const Point& x, Orientation o) {
    if (auto y = current_.apply_t(x, o)) return y;
    charge();
    const ExtensionRecord& r = extend(x, o);
    return Point{r.new_orbit, 0};
  }

  Point lazy_apply(const Point& x, const Word& w) {
    spent_ = 0;
    Evaluation ev = evaluate(*this, x, w);
    if (!ev.end) throw std::logic_error("lazy evaluation left a move undefined");
    return *ev.end;
  }

  bool stabilizer_contains(const Word& w) { return lazy_apply(basepoint(), w) == basepoint(); }

  // Saturates every orbit at Bass-Serre distance < depth, so the forest
  // reaches exactly distance `depth`. Level by level; within a level orbits
  // by id (core) or creation order (forest), + before -, coset
  // representatives ascending. A seed shuffles all of these choices and picks
  // a random point in each missing coset instead of its least offset.
  void grow_to_depth(unsigned depth, std::optional<std::uint64_t> seed = std::nullopt) {
    spent_ = 0;
    std::optional<std::mt19937_64> rng;
    if (seed) rng.emplace(*seed);
    for (unsigned level = 0; level < depth; ++level) {
      if (level >= by_depth_.size()) break;
      std::vector<OrbitIndex> todo = by_depth_[level];
      if (rng) std::shuffle(todo.begin(), todo.end(), *rng);
      for (OrbitIndex o : todo) saturate_orbit(o, rng ? &*rng : nullptr);
    }
  }

  // Fills every missing coset of one orbit.
  void saturate_orbit(OrbitIndex o, std::mt19937_64* rng = nullptr) {
    std::array<Orientation, 2> dirs{Orientation::positive, Orientation::negative};
    if (rng && ((*rng)() & 1u)) std::swap(dirs[0], dirs[1]);
    for (Orientation s : dirs) {
      const Label L = current_.length(o);
      Int g = gcd_label(L, s == Orientation::positive ? params().n() : params().m());
      std::vector<Int> reps;
      reps.reserve(g.to_int64());
      for (Int r = 0; r < g; ++r) reps.push_back(r);
      if (rng) std::shuffle(reps.begin(), reps.end(), *rng);
      for (const Int& r : reps) {
        Point x{o, r};
        if (current_.covering_arrow(x, s)) continue;
        if (rng) {
          std::int64_t k = static_cast<std::int64_t>((*rng)() % 1000) - 500;
          x = current_.apply_b(x, g * k);
        }
        charge();
        extend(x, s);
      }
    }
  }

  unsigned max_depth() const { return static_cast<unsigned>(by_depth_.size() - 1); }

  // Orbits at depth <= d with the arrows among them, pointed at the basepoint.
  PointedPreAction truncation(unsigned d) const {
    std::vector<char> keep(current_.orbit_count(), 0);
    for (OrbitIndex o = 0; o < current_.orbit_count(); ++o) keep[o] = depth_[o] <= d;
    Restriction r = restrict_pre_action(current_, keep);
    return {std::move(r.pre), Point{r.orbit_map[basepoint().orbit], basepoint().offset}};
  }

  // Checks the forest shape: each forest orbit is joined to lower depths by
  // exactly its parent arrow, and every arrow leaving the core side is a
  // parent arrow. Returns a description of the first violation.
  std::optional<std::string> forest_violation() const {
    for (std::size_t i = 0; i < current_.arrow_count(); ++i) {
      const Arrow& a = current_.arrow(i);
      OrbitIndex s = a.source.orbit, t = a.target.orbit;
      if (is_core(s) && is_core(t)) {
        if (i >= core_.pre.arrow_count()) return "arrow between core orbits was added";
        continue;
      }
      OrbitIndex child = depth_[s] > depth_[t] ? s : t;
      OrbitIndex par = child == s ? t : s;
      if (depth_[child] != depth_[par] + 1) return "arrow joins non-adjacent levels";
      if (parent_[child] != par || parent_arrow(child) != i) return "forest orbit has a second link towards the core";
    }
    return std::nullopt;
  }

  const ExtensionRecord& extend(const Point& x, Orientation o) {
    log_.push_back(detail::extend_in_place(current_, x, o, rule_, prefix_ + std::to_string(log_.size()), true));
    const ExtensionRecord& r = log_.back();
    unsigned d = depth_[x.orbit] + 1;
    depth_.push_back(d);
    parent_.push_back(x.orbit);
    parent_arrow_.push_back(r.arrow);
    if (by_depth_.size() <= d) by_depth_.resize(d + 1);
    by_depth_[d].push_back(r.new_orbit);
    return r;
  }

 private:
  void charge() {
    if (++spent_ > fuel_) {
      throw FuelExhausted("saturation exceeded its budget of " + std::to_string(fuel_) + " extensions");
    }
  }

  PointedPreAction core_;
  TransferRule rule_;
  PreAction current_;
  std::uint64_t fuel_;
  std::uint64_t spent_ = 0;
  std::size_t core_orbits_ = 0;
  std::vector<unsigned> depth_;
  std::vector<OrbitIndex> parent_;
  std::vector<std::size_t> parent_arrow_;
  std::vector<std::vector<OrbitIndex>> by_depth_;
  std::vector<ExtensionRecord> log_;
  std::string prefix_ = "s";
};

struct SaturationResult {
  PreAction pre;
  std::vector<ExtensionRecord> log;
};

inline SaturationResult saturate_to_depth(const PointedPreAction& p, const TransferRule& rule, unsigned depth,
                                          std::optional<std::uint64_t> seed = std::nullopt,
                                          std::uint64_t fuel = LazySaturation::kDefaultFuel) {
  LazySaturation s(p, rule, fuel);
  s.grow_to_depth(depth, seed);
  return {s.current(), s.log()};
}

enum class Tristate { yes, no, unknown };

// Compares two lazy saturations on their depth-d truncations. "unknown" means
// the truncations agree but the saturations continue beyond d.
inline Tristate pointed_isomorphic_to_depth(LazySaturation& a, LazySaturation& b, unsigned d) {
  a.grow_to_depth(d);
  b.grow_to_depth(d);
  PointedPreAction ta = a.truncation(d), tb = b.truncation(d);
  if (!pointed_isomorphic(ta, tb).isomorphic) return Tristate::no;
  if (ta.pre.is_saturated() && tb.pre.is_saturated()) return Tristate::yes;
  return Tristate::unknown;
}

// Generators of the image of the fundamental group of the Schreier graph in
// BS(m,n): one word per edge outside a breadth-first spanning tree.
inline std::vector<NormalForm> pi1_generators(const PointedPreAction& p) {
  const PreAction& pre = p.pre;
  if (!pre.all_finite()) throw DomainError("pi1_generators needs a finite Schreier graph");
  std::map<Point, std::size_t> index;
  std::vector<Point> verts{p.basepoint};
  std::vector<std::size_t> parent{0};
  std::vector<int> via{-1};
  std::vector<Word> path{Word{}};
  index.emplace(p.basepoint, 0);
  auto letter = [](int g) {
    return g < 2 ? Word::letter(Letter::b, g == 0 ? 1 : -1) : Word::letter(Letter::t, g == 2 ? 1 : -1);
  };
  for (std::size_t head = 0; head < verts.size(); ++head) {
    for (int g = 0; g < 4; ++g) {
      auto next = schreier_step(pre, verts[head], g);
      if (!next || index.count(*next)) continue;
      index.emplace(*next, verts.size());
      verts.push_back(*next);
      parent.push_back(head);
      via.push_back(g);
      path.push_back(path[head] * letter(g));
    }
  }
  std::vector<NormalForm> gens;
  for (std::size_t v = 0; v < verts.size(); ++v) {
    for (int g : {0, 2}) {
      auto next = schreier_step(pre, verts[v], g);
      if (!next) continue;
      std::size_t w = index.at(*next);
      bool tree = (parent[w] == v && via[w] == g && w != 0) || (parent[v] == w && via[v] == g + 1 && v != 0);
      if (tree) continue;
      Word cycle = path[v] * letter(g) * path[w].inverse();
      NormalForm nf = britton_reduce(pre.params(), cycle);
      auto ev = evaluate(pre, p.basepoint, nf.to_word());
      if (!ev.end || !(*ev.end == p.basepoint)) throw std::logic_error("cycle word does not fix the basepoint");
      gens.push_back(std::move(nf));
    }
  }
  return gens;
}

// Prop. generator for a logged extension: c (basepoint -> witness) conjugating
// t^e b^{L_y} t^-e.
inline NormalForm added_generator(const GroupParams& g, const ExtensionRecord& r, const Word& c) {
  if (r.new_label.is_infinite()) throw DomainError("an infinite orbit adds no stabilizer generator");
  int e = sign_of(r.sign);
  Word loop = Word::letter(Letter::t, e) * Word::letter(Letter::b, r.new_label.value()) * Word::letter(Letter::t, -e);
  return britton_reduce(g, c * loop * c.inverse());
}

}  // namespace bsaction
