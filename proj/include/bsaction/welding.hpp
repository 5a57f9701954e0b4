#pragma once

#include "bsaction/saturation.hpp"

#include <algorithm>
#include <deque>
#include <map>
#include <memory>
#include <optional>
#include <set>
#include <string>
#include <utility>
#include <vector>

namespace bsaction {

// ---------------------------------------------------------------------------
// Leaving the seed

// A point whose walk along the seed word is followed inside a lazy saturation.
// Several targets may share one saturation.
struct SeedTarget {
  LazySaturation* sat;
  Point start;
};

struct SeedWalk {
  std::vector<Point> points;        // start, then the point after each step
  std::vector<std::size_t> arrows;  // arrow of current() crossed by each step
  std::optional<std::size_t> entry;  // first step landing outside the core

  const Point& end() const { return points.back(); }
};

struct SeedPath {
  NormalForm word;  // tail 0; after leave_seed the last step is positive
  std::vector<SeedWalk> walks;
  std::vector<Label> end_labels;
  unsigned certified_depth = 0;  // deepest forest level the certificate looked at
};

// Number of further MAX positive steps after which every prime with
// |m|_p < |n|_p has |L|_p = |m|_p: each step maps |L|_p to
// max(|m|_p, |L|_p - (|n|_p - |m|_p)).
inline unsigned positive_ray_length(const GroupParams& g, const Label& L) {
  if (L.is_infinite()) return 0;
  unsigned steps = 0;
  for (const auto& pp : g.primes()) {
    if (pp.vm >= pp.vn) continue;
    unsigned v = valuation(pp.prime, L.value());
    if (v <= pp.vm) continue;
    unsigned drop = pp.vn - pp.vm;
    steps = std::max(steps, (v - pp.vm + drop - 1) / drop);
  }
  return steps;
}

// Checks |L(t)|_p = max(|m|_p, |L(s)|_p - (|n|_p - |m|_p)) for every prime
// with |m|_p <= |n|_p, the law of MAX positive edges.
inline bool positive_ray_law(const GroupParams& g, const Label& source, const Label& target) {
  if (source.is_infinite() || target.is_infinite()) return source.is_infinite() && target.is_infinite();
  for (const auto& pp : g.primes()) {
    if (pp.vm > pp.vn) continue;
    int vs = static_cast<int>(valuation(pp.prime, source.value()));
    int vt = static_cast<int>(valuation(pp.prime, target.value()));
    int vm = static_cast<int>(pp.vm), vn = static_cast<int>(pp.vn);
    if (vt != std::max(vm, vs - (vn - vm))) return false;
  }
  return true;
}

// Appends normal-form steps to a word and follows every target along them,
// growing the saturations on demand. Once a walk has left its core, each
// step must go one level deeper into the forest; anything else is a broken
// invariant and throws std::logic_error.
class SeedWalker {
 public:
  explicit SeedWalker(std::vector<SeedTarget> targets) : targets_(std::move(targets)) {
    if (targets_.empty()) throw std::invalid_argument("leave_seed needs at least one target");
    for (const auto& t : targets_) {
      if (!(t.sat->params() == params())) throw DomainError("seed targets use different group parameters");
      path_.walks.push_back(SeedWalk{{t.start}, {}, std::nullopt});
    }
  }

  const GroupParams& params() const { return targets_.front().sat->params(); }
  const std::vector<SeedTarget>& targets() const { return targets_; }
  const SeedPath& path() const { return path_; }
  SeedPath& path() { return path_; }
  int last_eps() const { return path_.word.steps.empty() ? 0 : path_.word.steps.back().eps; }

  void append(const NormalForm::Step& st) {
    const Int& bound = st.eps > 0 ? params().abs_n() : params().abs_m();
    if (st.k.sign() < 0 || st.k >= bound || (st.k.is_zero() && last_eps() == -st.eps) || (st.eps != 1 && st.eps != -1)) {
      throw std::logic_error("seed step would leave normal form");
    }
    path_.word.steps.push_back(st);
    for (std::size_t i = 0; i < targets_.size(); ++i) step(targets_[i], path_.walks[i], st);
  }

  // Replays an existing word from every start (used when the saturation changes).
  void replay(const NormalForm& w) {
    for (const auto& st : w.steps) append(st);
  }

 private:
  void step(const SeedTarget& t, SeedWalk& walk, const NormalForm::Step& st) {
    LazySaturation& s = *t.sat;
    Orientation o = st.eps > 0 ? Orientation::positive : Orientation::negative;
    Point from = walk.end();
    Point p = s.apply_b(from, st.k);
    auto q = s.apply_t(p, o);
    auto a = s.current().covering_arrow(p, o);
    if (!q || !a) throw std::logic_error("lazy saturation left a t-move undefined");
    if (walk.entry) {
      if (s.depth(q->orbit) != s.depth(from.orbit) + 1) {
        throw std::logic_error("seed walk backtracks inside the forest at " + s.current().point_name(*q));
      }
      if (o == Orientation::positive && s.rule().kind() == TransferRule::Kind::max &&
          !positive_ray_law(params(), s.current().length(from.orbit), s.current().length(q->orbit))) {
        throw std::logic_error("MAX positive edge breaks the p-adic ray law");
      }
    } else if (!s.is_core(q->orbit)) {
      walk.entry = walk.arrows.size();
    }
    walk.arrows.push_back(*a);
    walk.points.push_back(*q);
  }

  std::vector<SeedTarget> targets_;
  SeedPath path_;
};

namespace detail {

// Shortest reduced continuation from p (reached by a step of sign last_eps,
// 0 for none) whose final move is undefined in the core or leaves it.
// Breadth first over (point, last sign); moves already present are read off
// current() without growing anything.
inline std::vector<NormalForm::Step> exit_route(const LazySaturation& s, const Point& p, int last_eps,
                                                std::uint64_t fuel) {
  using State = std::pair<Point, int>;
  const PreAction& cur = s.current();
  std::map<State, std::pair<State, NormalForm::Step>> parent;
  std::deque<State> queue{{p, last_eps}};
  parent.emplace(State{p, last_eps}, std::make_pair(State{p, last_eps}, NormalForm::Step{0, 0}));
  auto route_to = [&](State st, NormalForm::Step last) {
    std::vector<NormalForm::Step> route{std::move(last)};
    while (!(st == State{p, last_eps})) {
      auto& [prev, step] = parent.at(st);
      route.push_back(step);
      st = prev;
    }
    std::reverse(route.begin(), route.end());
    return route;
  };
  std::uint64_t spent = 0;
  while (!queue.empty()) {
    State st = queue.front();
    queue.pop_front();
    for (int eps : {1, -1}) {
      Int bound = eps > 0 ? s.params().abs_n() : s.params().abs_m();
      Orientation o = eps > 0 ? Orientation::positive : Orientation::negative;
      for (Int k = 0; k < bound; ++k) {
        if (k.is_zero() && st.second == -eps) continue;  // pinch
        if (++spent > fuel) throw FuelExhausted("no exit from the core within the fuel budget");
        Point x = cur.apply_b(st.first, k);
        auto next = cur.apply_t(x, o);
        if (!next || !s.is_core(next->orbit)) return route_to(st, {k, eps});
        State ns{*next, eps};
        if (parent.count(ns)) continue;
        parent.emplace(ns, std::make_pair(st, NormalForm::Step{k, eps}));
        queue.push_back(ns);
      }
    }
  }
  throw DomainError("the core is saturated: no path leaves it");
}

// Orbits of the core plus those visited by one walk, with the core arrows and
// the walk's arrows except `skip_last` trailing ones; is `target` reachable
// from the core?
inline bool reachable_from_core(const LazySaturation& s, const SeedWalk& walk, std::size_t skip_last,
                                OrbitIndex target) {
  const PreAction& cur = s.current();
  std::map<OrbitIndex, std::vector<OrbitIndex>> adj;
  auto link = [&](std::size_t a) {
    OrbitIndex u = cur.arrow(a).source.orbit, v = cur.arrow(a).target.orbit;
    adj[u].push_back(v);
    adj[v].push_back(u);
  };
  for (std::size_t a = 0; a < s.core().pre.arrow_count(); ++a) link(a);
  for (std::size_t i = 0; i + skip_last < walk.arrows.size(); ++i) link(walk.arrows[i]);
  std::set<OrbitIndex> seen;
  std::vector<OrbitIndex> stack;
  for (OrbitIndex o = 0; o < s.core_orbit_count(); ++o) {
    seen.insert(o);
    stack.push_back(o);
  }
  while (!stack.empty()) {
    OrbitIndex o = stack.back();
    stack.pop_back();
    if (o == target) return true;
    for (OrbitIndex v : adj[o]) {
      if (seen.insert(v).second) stack.push_back(v);
    }
  }
  return false;
}

}  // namespace detail

// Certifies the current word: every walk has left its core, its last edge
// alone joins the endpoint to the core, and for finite phenotypes the end
// label has the exit profile. Throws std::logic_error on failure.
inline void certify_seed_path(SeedWalker& walker, const std::vector<Phenotype>& phenotypes) {
  SeedPath& path = walker.path();
  path.end_labels.clear();
  path.certified_depth = 0;
  for (std::size_t i = 0; i < walker.targets().size(); ++i) {
    const LazySaturation& s = *walker.targets()[i].sat;
    const SeedWalk& walk = path.walks[i];
    if (!walk.entry) throw std::logic_error("seed walk " + std::to_string(i) + " never left its core");
    OrbitIndex end = walk.end().orbit;
    if (detail::reachable_from_core(s, walk, 1, end)) {
      throw std::logic_error("last edge of seed walk " + std::to_string(i) + " does not separate");
    }
    const Label& L = s.current().length(end);
    if (phenotypes[i].is_finite() && !satisfies_exit_profile(s.params(), L.value(), phenotypes[i].value())) {
      throw std::logic_error("seed walk " + std::to_string(i) + " ends on label " + L.str() +
                             " without the exit profile");
    }
    path.end_labels.push_back(L);
    path.certified_depth = std::max(path.certified_depth, s.depth(end));
  }
}

// Builds a word along which every target leaves its core for good, ending in
// a positive edge, with the label profile of finite phenotypes reached. The
// saturations must use the MAX rule and have non-saturated cores.
inline SeedPath leave_seed(SeedWalker& walker, const std::vector<Phenotype>& phenotypes,
                           std::uint64_t fuel = LazySaturation::kDefaultFuel) {
  const auto& targets = walker.targets();
  if (phenotypes.size() != targets.size()) throw std::invalid_argument("one phenotype per seed target");
  for (const auto& t : targets) {
    if (t.sat->rule().kind() != TransferRule::Kind::max) throw std::invalid_argument("leave_seed needs MAX saturations");
    if (t.sat->core().pre.is_saturated()) throw DomainError("the core is saturated: no path leaves it");
  }
  for (std::size_t i = 0; i < targets.size(); ++i) {
    if (walker.path().walks[i].entry) continue;
    auto route = detail::exit_route(*targets[i].sat, walker.path().walks[i].end(), walker.last_eps(), fuel);
    for (const auto& st : route) walker.append(st);
    if (!walker.path().walks[i].entry) throw std::logic_error("exit route stayed inside the core");
  }
  if (walker.last_eps() < 0) walker.append({1, 1});
  unsigned extra = 0;
  for (std::size_t i = 0; i < targets.size(); ++i) {
    if (phenotypes[i].is_infinite()) continue;
    const auto& w = walker.path().walks[i];
    extra = std::max(extra, positive_ray_length(walker.params(), targets[i].sat->current().length(w.end().orbit)));
  }
  for (unsigned j = 0; j < extra; ++j) walker.append({0, 1});
  certify_seed_path(walker, phenotypes);
  return walker.path();
}

// Convenience form over whole cores: each gets its own MAX lazy saturation,
// walked from its basepoint, with its own connected phenotype.
struct SeedRun {
  std::vector<std::unique_ptr<LazySaturation>> sats;
  SeedPath path;
};

inline SeedRun leave_seed(const std::vector<PointedPreAction>& cores,
                          std::uint64_t fuel = LazySaturation::kDefaultFuel) {
  SeedRun run;
  std::vector<SeedTarget> targets;
  std::vector<Phenotype> q;
  for (const auto& c : cores) {
    run.sats.push_back(std::make_unique<LazySaturation>(c, TransferRule::max(), fuel));
    targets.push_back({run.sats.back().get(), c.basepoint});
    q.push_back(bass_serre_graph(c.pre).connected_phenotype());
  }
  SeedWalker walker(std::move(targets));
  run.path = leave_seed(walker, q, fuel);
  return run;
}

// ---------------------------------------------------------------------------
// Mirror isomorphism BS(m,n) -> BS(n,m), b -> b, t -> t^-1

inline GroupParams mirror(const GroupParams& g) { return GroupParams(g.n(), g.m()); }

inline PreAction mirror(const PreAction& p) {
  PreAction q(mirror(p.params()));
  for (const auto& o : p.orbits()) q.add_orbit(o.id, o.length);
  for (const auto& a : p.arrows()) q.add_arrow(a.target, a.source, a.id);
  return q;
}

inline Word mirror(const Word& w) {
  Word out;
  for (const auto& s : w.syllables()) out.append(s.letter, s.letter == Letter::t ? -s.exp : s.exp);
  return out;
}

// Normal form of the mirrored word, reduced in `target` parameters.
inline NormalForm mirror(const GroupParams& target, const NormalForm& nf) {
  return britton_reduce(target, mirror(nf.to_word()));
}

// ---------------------------------------------------------------------------
// Witnesses

enum class WitnessKind { ht_phen1, ht_inf, htt_finite, htt_inf };

inline const char* to_string(WitnessKind k) {
  switch (k) {
    case WitnessKind::ht_phen1: return "HT-phen1";
    case WitnessKind::ht_inf: return "HT-inf";
    case WitnessKind::htt_finite: return "HTT-finite-q";
    case WitnessKind::htt_inf: return "HTT-inf";
  }
  return "?";
}

inline std::optional<WitnessKind> witness_kind_from_string(const std::string& s) {
  for (auto k : {WitnessKind::ht_phen1, WitnessKind::ht_inf, WitnessKind::htt_finite, WitnessKind::htt_inf}) {
    if (s == to_string(k)) return k;
  }
  return std::nullopt;
}

inline bool is_ht(WitnessKind k) { return k == WitnessKind::ht_phen1 || k == WitnessKind::ht_inf; }

// A welded pre-action with its marked points: HT cores carry the single
// basepoint x, HTT cores carry x_i and x_{i+d}.
struct WeldedCore {
  PreAction pre;
  std::vector<Point> basepoints;
};

// What the witness claims something about: HT uses one core and the 2d
// words g; HTT uses 2d cores and no words.
struct WitnessInputs {
  std::vector<PointedPreAction> cores;
  std::vector<NormalForm> g;
};

struct WeldingWitness {
  WitnessKind kind = WitnessKind::ht_phen1;
  NormalForm gamma;
  unsigned R = 0;
  Phenotype q;
  std::vector<WeldedCore> cores;
  WitnessInputs inputs;
  // construction record, informative only
  NormalForm seed_word;
  unsigned certified_depth = 0;
  std::optional<Int> separation_k;
  std::vector<std::vector<Int>> uturns;
  bool mirrored = false;

  const GroupParams& params() const { return inputs.cores.front().pre.params(); }
  std::size_t d() const { return is_ht(kind) ? inputs.g.size() / 2 : inputs.cores.size() / 2; }
};

namespace detail {

inline void require_core(const PointedPreAction& c, const char* what) {
  c.pre.require_valid();
  if (c.pre.orbit_count() == 0) throw DomainError(std::string(what) + " has no orbits");
  if (!c.pre.is_connected()) throw DomainError(std::string(what) + " is not connected");
  if (c.pre.is_saturated()) throw DomainError(std::string(what) + " is saturated, so it is not in the perfect kernel");
}

// Orbits of the saturation's core plus those the walks visit, with the core
// arrows and the walks' arrows.
inline Restriction core_plus_walks(const LazySaturation& s, const std::vector<const SeedWalk*>& walks) {
  const PreAction& cur = s.current();
  std::vector<char> keep(cur.orbit_count(), 0);
  std::vector<char> keep_arrow(cur.arrow_count(), 0);
  for (OrbitIndex o = 0; o < s.core_orbit_count(); ++o) keep[o] = 1;
  for (std::size_t a = 0; a < s.core().pre.arrow_count(); ++a) keep_arrow[a] = 1;
  for (const SeedWalk* w : walks) {
    for (const auto& p : w->points) keep[p.orbit] = 1;
    for (auto a : w->arrows) keep_arrow[a] = 1;
  }
  return restrict_pre_action(cur, keep, [&](std::size_t a) { return keep_arrow[a] != 0; });
}

inline Point mapped(const Restriction& r, const Point& p) {
  OrbitIndex o = r.orbit_map.at(p.orbit);
  if (o == kNoOrbit) throw std::logic_error("point lost in restriction");
  return {o, p.offset};
}

// Restriction of a MAX saturation to the orbits meeting the radius-(R+1)
// ball at the basepoint, with every arrow among them. Any extension of it
// has the same radius-R ball at the basepoint.
struct Seed {
  std::unique_ptr<LazySaturation> sat;  // MAX saturation of the input core
  PointedPreAction alpha0;
  std::vector<OrbitIndex> orbit_map;    // sat orbit -> alpha0 orbit
};

inline Seed make_seed(const PointedPreAction& core, unsigned R, std::uint64_t fuel) {
  auto sat = std::make_unique<LazySaturation>(core, TransferRule::max(), fuel);
  Restriction r = core_restriction(*sat, sat->current(), core.basepoint, R + 1);
  Point base = mapped(r, core.basepoint);
  return {std::move(sat), {std::move(r.pre), base}, std::move(r.orbit_map)};
}

inline Word t_power(int e) { return Word::letter(Letter::t, e); }
inline Word b_power(const Int& e) { return Word::letter(Letter::b, e); }

inline Phenotype common_phenotype(const std::vector<PointedPreAction>& cores) {
  Phenotype q = bass_serre_graph(cores.front().pre).connected_phenotype();
  for (const auto& c : cores) {
    Phenotype qi = bass_serre_graph(c.pre).connected_phenotype();
    if (!(qi == q)) throw DomainError("mixed phenotypes " + q.str() + " and " + qi.str() + ": no welding exists");
  }
  return q;
}

inline void check_welded(const WeldedCore& c, const Phenotype& q) {
  c.pre.require_valid();
  if (!c.pre.is_connected()) throw std::logic_error("welded core is disconnected");
  Phenotype got = bass_serre_graph(c.pre).connected_phenotype();
  if (!(got == q)) throw std::logic_error("welded core has phenotype " + got.str() + ", expected " + q.str());
}

}  // namespace detail

// High topological transitivity witness: 2d pointed cores of one phenotype
// q, welded pairwise (core_i with core_{i+d}) so that a single gamma carries
// x_i to x_{i+d} while both radius-R balls survive in every saturation.
inline WeldingWitness htt_witness(const std::vector<PointedPreAction>& cores, unsigned R,
                                  std::uint64_t fuel = LazySaturation::kDefaultFuel) {
  if (cores.empty() || cores.size() % 2) throw DomainError("htt_witness needs 2d cores with d >= 1");
  const GroupParams& g = cores.front().pre.params();
  for (const auto& c : cores) {
    if (!(c.pre.params() == g)) throw DomainError("cores use different group parameters");
    detail::require_core(c, "core");
  }
  const Phenotype q = detail::common_phenotype(cores);
  const std::size_t d = cores.size() / 2;

  std::vector<detail::Seed> seeds;
  std::vector<std::unique_ptr<LazySaturation>> A;
  std::vector<SeedTarget> targets;
  for (const auto& c : cores) {
    seeds.push_back(detail::make_seed(c, R, fuel));
    A.push_back(std::make_unique<LazySaturation>(seeds.back().alpha0, TransferRule::max(), fuel));
    targets.push_back({A.back().get(), seeds.back().alpha0.basepoint});
  }
  SeedWalker walker(std::move(targets));
  const SeedPath path = leave_seed(walker, std::vector<Phenotype>(cores.size(), q), fuel);
  const Word w = path.word.to_word();

  // xi_i: alpha0_i plus the walk, with y_i its endpoint
  std::vector<PreAction> xi;
  std::vector<Point> x, y;
  for (std::size_t i = 0; i < cores.size(); ++i) {
    Restriction r = detail::core_plus_walks(*A[i], {&path.walks[i]});
    x.push_back(detail::mapped(r, A[i]->basepoint()));
    y.push_back(detail::mapped(r, path.walks[i].end()));
    xi.push_back(std::move(r.pre));
  }

  WeldingWitness wit;
  wit.R = R;
  wit.q = q;
  wit.inputs.cores = cores;
  wit.seed_word = path.word;
  wit.certified_depth = path.certified_depth;

  if (q.is_infinite()) {
    wit.kind = WitnessKind::htt_inf;
    for (std::size_t i = 0; i < d; ++i) {
      auto [u, shift] = disjoint_union(xi[i], xi[i + d]);
      Point target{y[i + d].orbit + shift, y[i + d].offset + 1};
      u.add_arrow(y[i], target, "weld");
      wit.cores.push_back({std::move(u), {x[i], {x[i + d].orbit + shift, x[i + d].offset}}});
    }
    wit.gamma = britton_reduce(g, w * detail::t_power(1) * detail::b_power(-1) * w.inverse());
  } else {
    wit.kind = WitnessKind::htt_finite;
    // U-turn chains y^0 = y_i b <- y^1 <- ... <- y^r, padded to a common r
    std::size_t r = 0;
    for (std::size_t i = 0; i < cores.size(); ++i) {
      auto seq = uturn_sequence(g, path.end_labels[i].value());
      if (seq.back() != q.value()) throw std::logic_error("U-turn settles on " + seq.back().str() + ", not q");
      r = std::max(r, seq.size() - 1);
      wit.uturns.push_back(std::move(seq));
    }
    std::vector<Point> yr;
    for (std::size_t i = 0; i < cores.size(); ++i) {
      auto& seq = wit.uturns[i];
      while (seq.size() < r + 1) seq.push_back(q.value());
      Point prev = xi[i].apply_b(y[i], 1);
      for (std::size_t j = 1; j <= r; ++j) {
        OrbitIndex o = xi[i].add_orbit(xi[i].fresh_id("u" + std::to_string(j)), Label(seq[j]));
        xi[i].add_arrow({o, 0}, prev, "uturn" + std::to_string(j));
        prev = {o, 0};
      }
      yr.push_back(prev);
    }
    Int weld_len = lcm(g.abs_n(), q.value());
    for (std::size_t i = 0; i < d; ++i) {
      auto [u, shift] = disjoint_union(xi[i], xi[i + d]);
      OrbitIndex z = u.add_orbit(u.fresh_id("weld"), Label(weld_len));
      u.add_arrow({z, 0}, yr[i], "weld0");
      u.add_arrow({z, 1}, {yr[i + d].orbit + shift, yr[i + d].offset}, "weld1");
      wit.cores.push_back({std::move(u), {x[i], {x[i + d].orbit + shift, x[i + d].offset}}});
    }
    Word head = w * detail::b_power(1) * detail::t_power(-static_cast<int>(r + 1));
    wit.gamma = britton_reduce(g, head * detail::b_power(1) * head.inverse());
    // realised U-turn labels, read back from the welded cores
    for (std::size_t i = 0; i < wit.cores.size(); ++i) {
      for (int side = 0; side < 2; ++side) {
        const PreAction& p = wit.cores[i].pre;
        auto ev = evaluate(p, wit.cores[i].basepoints[side], w * detail::b_power(1));
        if (!ev.end) throw std::logic_error("seed word undefined in the welded core");
        Point cur = *ev.end;
        const auto& seq = wit.uturns[i + side * d];
        for (std::size_t j = 0; j <= r; ++j) {
          if (p.length(cur.orbit) != Label(seq[j])) throw std::logic_error("realised U-turn labels differ");
          if (j == r) break;
          auto nx = p.apply_t(cur, Orientation::negative);
          if (!nx) throw std::logic_error("U-turn chain broken");
          cur = *nx;
        }
      }
    }
  }
  for (const auto& c : wit.cores) detail::check_welded(c, q);
  return wit;
}

namespace detail {

inline bool has_shrinking_prime(const GroupParams& g) {
  return std::any_of(g.primes().begin(), g.primes().end(), [](const auto& pp) { return pp.vm < pp.vn; });
}

}  // namespace detail

// High transitivity witness for one pointed core of phenotype 1, or of
// infinite phenotype with |m| != |n|: a welded core keeping the radius-R
// ball at x and a gamma with x g_i gamma = x g_{i+d}.
inline WeldingWitness ht_witness(const PointedPreAction& core, const std::vector<NormalForm>& g_words, unsigned R,
                                 std::uint64_t fuel = LazySaturation::kDefaultFuel) {
  const GroupParams& g = core.pre.params();
  detail::require_core(core, "core");
  if (g_words.empty() || g_words.size() % 2) throw DomainError("ht_witness needs 2d words with d >= 1");
  const Phenotype q = bass_serre_graph(core.pre).connected_phenotype();
  if (!(q == Phenotype(1)) && !q.is_infinite()) {
    throw DomainError("phenotype " + q.str() + " admits no highly transitive action (reduced b-orbits are blocks)");
  }
  if (q.is_infinite() && g.balanced()) {
    throw DomainError("infinite phenotype with |m| = |n| admits no primitive transitive action");
  }
  for (const auto& w : g_words) {
    if (w.to_word().length() > Int(R)) throw DomainError("word " + w.str() + " is longer than R");
  }

  if (q.is_infinite() && !detail::has_shrinking_prime(g)) {
    GroupParams mg = mirror(g);
    std::vector<NormalForm> mw;
    for (const auto& w : g_words) mw.push_back(mirror(mg, w));
    WeldingWitness wit = ht_witness({mirror(core.pre), core.basepoint}, mw, R, fuel);
    wit.mirrored = true;
    wit.gamma = mirror(g, wit.gamma);
    wit.seed_word = mirror(g, wit.seed_word);
    for (auto& c : wit.cores) c.pre = mirror(c.pre);
    wit.inputs = {{core}, g_words};
    for (const auto& c : wit.cores) detail::check_welded(c, q);
    return wit;
  }

  const std::size_t d = g_words.size() / 2;
  detail::Seed seed = detail::make_seed(core, R, fuel);
  std::vector<Point> xs;
  for (const auto& w : g_words) {
    Point p = seed.sat->lazy_apply(core.basepoint, w.to_word());
    if (std::find(xs.begin(), xs.end(), p) != xs.end()) {
      throw DomainError("the points x g_i are not pairwise distinct");
    }
    xs.push_back(p);
  }
  LazySaturation A(seed.alpha0, TransferRule::max(), fuel);
  std::vector<SeedTarget> targets;
  for (const auto& p : xs) {
    OrbitIndex o = seed.orbit_map.at(p.orbit);
    if (o == kNoOrbit) throw std::logic_error("x g_i outside the seed");
    targets.push_back({&A, {o, p.offset}});
  }
  SeedWalker walker(std::move(targets));
  leave_seed(walker, std::vector<Phenotype>(2 * d, q), fuel);
  // positive segment r, longer than c
  std::size_t c_len = walker.path().word.t_length();
  for (std::size_t j = 0; j <= c_len; ++j) walker.append({0, 1});
  certify_seed_path(walker, std::vector<Phenotype>(2 * d, q));

  WeldingWitness wit;
  wit.R = R;
  wit.q = q;
  wit.inputs = {{core}, g_words};

  auto all_walks = [](const SeedPath& p) {
    std::vector<const SeedWalk*> out;
    for (const auto& w : p.walks) out.push_back(&w);
    return out;
  };

  if (q.is_infinite()) {
    wit.kind = WitnessKind::ht_inf;
    // smallest k putting the points x_i g t^k in distinct b-orbits; the
    // p-adic valuation of their offset differences bounds it
    const auto& pp = *std::find_if(g.primes().begin(), g.primes().end(), [](const auto& e) { return e.vm < e.vn; });
    unsigned cap = 0;
    const auto& walks0 = walker.path().walks;
    for (std::size_t i = 0; i < walks0.size(); ++i) {
      for (std::size_t j = i + 1; j < walks0.size(); ++j) {
        if (walks0[i].end().orbit != walks0[j].end().orbit) continue;
        cap = std::max(cap, valuation(pp.prime, walks0[i].end().offset - walks0[j].end().offset));
      }
    }
    auto separated = [&] {
      std::set<OrbitIndex> seen;
      for (const auto& w : walker.path().walks) {
        if (!seen.insert(w.end().orbit).second) return false;
      }
      return true;
    };
    unsigned k = 0;
    while (!separated()) {
      if (k > cap + 1) throw std::logic_error("t^k separation exceeded its p-adic bound");
      walker.append({0, 1});
      ++k;
    }
    wit.separation_k = Int(k);
    certify_seed_path(walker, std::vector<Phenotype>(2 * d, q));
    const SeedPath& path = walker.path();
    Restriction r = detail::core_plus_walks(A, all_walks(path));
    PreAction xi = std::move(r.pre);
    Point x = detail::mapped(r, A.basepoint());
    for (std::size_t j = 0; j < d; ++j) {
      OrbitIndex z = xi.add_orbit(xi.fresh_id("z" + std::to_string(j + 1)), Label::infinite());
      Point yj = detail::mapped(r, path.walks[j].end()), yjd = detail::mapped(r, path.walks[j + d].end());
      xi.add_arrow({z, 0}, xi.apply_b(yj, 1), "weld" + std::to_string(j + 1) + "a");
      xi.add_arrow({z, 1}, xi.apply_b(yjd, 1), "weld" + std::to_string(j + 1) + "b");
    }
    wit.seed_word = path.word;
    wit.certified_depth = path.certified_depth;
    Word u = path.word.to_word() * detail::b_power(1) * detail::t_power(-1);
    wit.gamma = britton_reduce(g, u * detail::b_power(1) * u.inverse());
    wit.cores.push_back({std::move(xi), {x}});
  } else {
    wit.kind = WitnessKind::ht_phen1;
    const SeedPath& cr = walker.path();
    Restriction r = detail::core_plus_walks(A, all_walks(cr));
    PointedPreAction xi{std::move(r.pre), detail::mapped(r, A.basepoint())};
    // minimal saturation of xi, then a negative ray down to label 1
    LazySaturation M(xi, TransferRule::min(), fuel);
    std::vector<SeedTarget> mt;
    for (const auto& w : cr.walks) mt.push_back({&M, detail::mapped(r, w.points.front())});
    SeedWalker down(std::move(mt));
    down.replay(cr.word);
    auto all_one = [&] {
      for (const auto& w : down.path().walks) {
        if (!(M.current().length(w.end().orbit) == Label(1))) return false;
      }
      return true;
    };
    down.append({1, -1});
    for (unsigned steps = 1; !all_one(); ++steps) {
      if (steps > 4096) throw std::logic_error("negative MIN ray never reached label 1");
      down.append({0, -1});
    }
    const SeedPath& full = down.path();
    std::set<OrbitIndex> ends;
    for (const auto& w : full.walks) {
      if (!w.entry) throw std::logic_error("negative ray stayed inside xi");
      if (!ends.insert(w.end().orbit).second) throw std::logic_error("negative ray endpoints coincide");
    }
    Restriction e = detail::core_plus_walks(M, all_walks(full));
    PreAction eta = std::move(e.pre);
    Point x = detail::mapped(e, M.basepoint());
    for (std::size_t j = 0; j < d; ++j) {
      OrbitIndex z = eta.add_orbit(eta.fresh_id("z" + std::to_string(j + 1)), Label(g.abs_n()));
      eta.add_arrow({z, 0}, detail::mapped(e, full.walks[j].end()), "weld" + std::to_string(j + 1) + "a");
      eta.add_arrow({z, 1}, detail::mapped(e, full.walks[j + d].end()), "weld" + std::to_string(j + 1) + "b");
    }
    wit.seed_word = full.word;
    wit.certified_depth = cr.certified_depth;
    Word G = full.word.to_word();
    wit.gamma = britton_reduce(g, G * detail::t_power(-1) * detail::b_power(1) * detail::t_power(1) * G.inverse());
    wit.cores.push_back({std::move(eta), {x}});
  }
  detail::check_welded(wit.cores.front(), q);
  return wit;
}

// ---------------------------------------------------------------------------
// Verification

struct VerifyReport {
  bool ok = true;
  std::vector<std::string> passed;
  std::vector<std::string> failed;

  void check(bool cond, const std::string& what) {
    (cond ? passed : failed).push_back(what);
    ok = ok && cond;
  }
};

inline Json to_json(const VerifyReport& r) {
  return Json{{"ok", r.ok}, {"passed", r.passed}, {"failed", r.failed}};
}

// Re-derives every claim from the inputs and the welded cores alone, on fresh
// MAX and MIN saturations: balls of radius R at the marked points, transport
// by gamma, validity, connectivity and phenotype.
inline VerifyReport verify_witness(const WeldingWitness& wit, std::uint64_t fuel = LazySaturation::kDefaultFuel) {
  VerifyReport rep;
  const std::size_t d = wit.d();
  const Word gamma = wit.gamma.to_word();
  auto guarded = [&](const std::string& what, auto&& body) {
    try {
      body();
    } catch (const std::exception& e) {
      rep.check(false, what + ": " + e.what());
    }
  };
  if (is_ht(wit.kind)) {
    if (wit.inputs.cores.size() != 1 || wit.cores.size() != 1 || wit.inputs.g.size() != 2 * d || d == 0 ||
        wit.cores[0].basepoints.size() != 1) {
      rep.check(false, "HT witness shape");
      return rep;
    }
  } else if (wit.inputs.cores.size() != 2 * d || wit.cores.size() != d || d == 0) {
    rep.check(false, "HTT witness shape");
    return rep;
  }
  for (std::size_t c = 0; c < wit.cores.size(); ++c) {
    const WeldedCore& core = wit.cores[c];
    std::string tag = "core " + std::to_string(c);
    guarded(tag + " structure", [&] {
      auto err = core.pre.validate();
      rep.check(!err, tag + " validates" + (err ? ": " + err->message : std::string{}));
      if (err) return;
      rep.check(core.pre.is_connected(), tag + " connected");
      rep.check(!core.pre.is_saturated(), tag + " not saturated");
      Phenotype got = bass_serre_graph(core.pre).connected_phenotype();
      rep.check(got == wit.q, tag + " phenotype " + got.str() + " = " + wit.q.str());
    });
    if (!rep.ok) continue;
    for (auto rule : {TransferRule::max(), TransferRule::min()}) {
      std::string rtag = tag + " [" + rule.name() + "]";
      guarded(rtag, [&] {
        LazySaturation s({core.pre, core.basepoints.front()}, rule, fuel);
        for (std::size_t b = 0; b < core.basepoints.size(); ++b) {
          const PointedPreAction& in = is_ht(wit.kind) ? wit.inputs.cores[0] : wit.inputs.cores[c + b * d];
          LazySaturation ref(in, TransferRule::max(), fuel);
          auto want = schreier_ball(ref, in.basepoint, wit.R).encoding;
          auto got = schreier_ball(s, core.basepoints[b], wit.R).encoding;
          rep.check(ball_equal(want, got), rtag + " ball_" + std::to_string(wit.R) + " at marked point " +
                                               std::to_string(b) + " preserved");
        }
        if (is_ht(wit.kind)) {
          const Point& x = core.basepoints.front();
          for (std::size_t i = 0; i < d; ++i) {
            Point lhs = s.lazy_apply(x, wit.inputs.g[i].to_word() * gamma);
            Point rhs = s.lazy_apply(x, wit.inputs.g[i + d].to_word());
            rep.check(lhs == rhs, rtag + " x g_" + std::to_string(i + 1) + " gamma = x g_" + std::to_string(i + 1 + d));
          }
        } else {
          Point lhs = s.lazy_apply(core.basepoints[0], gamma);
          rep.check(lhs == core.basepoints[1], rtag + " x_" + std::to_string(c + 1) + " gamma = x_" +
                                                   std::to_string(c + 1 + d));
        }
      });
    }
  }
  return rep;
}

// ---------------------------------------------------------------------------
// JSON

inline Json witness_to_json(const WeldingWitness& w, const std::optional<VerifyReport>& report = std::nullopt) {
  Json j;
  j["kind"] = to_string(w.kind);
  j["m"] = to_json(w.params().m());
  j["n"] = to_json(w.params().n());
  j["gamma"] = w.gamma.str();
  j["R"] = w.R;
  j["phenotype"] = to_json(w.q);
  j["cores"] = Json::array();
  for (const auto& c : w.cores) {
    Json cj = preaction_to_json(c.pre);
    cj["basepoints"] = Json::array();
    for (const auto& p : c.basepoints) cj["basepoints"].push_back(point_to_json(c.pre, p));
    j["cores"].push_back(std::move(cj));
  }
  Json in;
  in["cores"] = Json::array();
  for (const auto& c : w.inputs.cores) in["cores"].push_back(pointed_to_json(c));
  in["g"] = Json::array();
  for (const auto& g : w.inputs.g) in["g"].push_back(g.str());
  j["inputs"] = std::move(in);
  Json con;
  con["seed_word"] = w.seed_word.str();
  con["certified_depth"] = w.certified_depth;
  if (w.separation_k) con["k"] = to_json(*w.separation_k);
  if (!w.uturns.empty()) {
    con["uturns"] = Json::array();
    for (const auto& seq : w.uturns) {
      Json s = Json::array();
      for (const auto& v : seq) s.push_back(to_json(v));
      con["uturns"].push_back(std::move(s));
    }
  }
  con["mirrored"] = w.mirrored;
  j["construction"] = std::move(con);
  if (report) j["report"] = to_json(*report);
  return j;
}

inline WeldingWitness witness_from_json(const Json& j) {
  if (!j.is_object() || !j.contains("kind") || !j["kind"].is_string()) throw DomainError("witness needs a \"kind\"");
  auto kind = witness_kind_from_string(j["kind"].get<std::string>());
  if (!kind) throw DomainError("unknown witness kind " + j["kind"].dump());
  for (const char* key : {"gamma", "R", "phenotype", "cores", "inputs"}) {
    if (!j.contains(key)) throw DomainError(std::string("witness lacks \"") + key + "\"");
  }
  GroupParams g = params_from_json(j);
  WeldingWitness w;
  w.kind = *kind;
  if (!j["R"].is_number_unsigned()) throw DomainError("\"R\" must be a nonnegative integer");
  w.R = j["R"].get<unsigned>();
  try {
    w.gamma = britton_reduce(g, parse_word(j["gamma"].get<std::string>()));
  } catch (const std::exception& e) {
    throw DomainError(std::string("bad gamma: ") + e.what());
  }
  Json qj = j["phenotype"];
  w.q = qj.is_string() && qj.get<std::string>() == "inf" ? Phenotype::infinite()
                                                          : Phenotype(int_from_json(qj, "phenotype"));
  for (const auto& cj : j["cores"]) {
    WeldedCore c{preaction_from_json(cj, g), {}};
    if (!cj.contains("basepoints") || !cj["basepoints"].is_array()) throw DomainError("welded core lacks basepoints");
    for (const auto& p : cj["basepoints"]) c.basepoints.push_back(point_from_json(c.pre, p, "basepoint"));
    w.cores.push_back(std::move(c));
  }
  const Json& in = j["inputs"];
  if (!in.contains("cores")) throw DomainError("witness inputs lack cores");
  for (const auto& cj : in["cores"]) {
    auto c = load_pointed(cj);
    if (!(c.pre.params() == g)) throw DomainError("witness input uses other group parameters");
    w.inputs.cores.push_back(std::move(c));
  }
  if (in.contains("g")) {
    for (const auto& s : in["g"]) w.inputs.g.push_back(britton_reduce(g, parse_word(s.get<std::string>())));
  }
  if (w.inputs.cores.empty()) throw DomainError("witness inputs are empty");
  if (j.contains("construction")) {
    const Json& con = j["construction"];
    if (con.contains("seed_word")) w.seed_word = britton_reduce(g, parse_word(con["seed_word"].get<std::string>()));
    if (con.contains("certified_depth")) w.certified_depth = con["certified_depth"].get<unsigned>();
    if (con.contains("k")) w.separation_k = int_from_json(con["k"], "k");
    if (con.contains("mirrored")) w.mirrored = con["mirrored"].get<bool>();
    if (con.contains("uturns")) {
      for (const auto& seq : con["uturns"]) {
        std::vector<Int> s;
        for (const auto& v : seq) s.push_back(int_from_json(v, "uturn label"));
        w.uturns.push_back(std::move(s));
      }
    }
  }
  return w;
}

}  // namespace bsaction
