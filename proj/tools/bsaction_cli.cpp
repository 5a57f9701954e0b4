#include "bsaction/classify.hpp"
#include "bsaction/oracle.hpp"
#include "bsaction/welding.hpp"

#include <CLI11.hpp>

#include <cstdint>
#include <fstream>
#include <iomanip>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

using namespace bsaction;

namespace {

struct Globals {
  std::uint64_t seed = 1;
  std::uint64_t fuel = LazySaturation::kDefaultFuel;
  bool json = false;
};

// Exit status of a subcommand: 0 success, 1 domain failure.
using Status = int;

void emit(const Json& j) { std::cout << j.dump() << '\n'; }

std::optional<TransferRule> parse_rule(const std::string& s) {
  if (s == "max") return TransferRule::max();
  if (s == "min") return TransferRule::min();
  if (s == "none") return std::nullopt;
  throw DomainError("unknown rule '" + s + "'");
}

Point parse_at(const PreAction& p, const std::string& at) {
  auto colon = at.rfind(':');
  if (colon == std::string::npos) throw DomainError("--at expects id:offset, got '" + at + "'");
  auto o = p.find_orbit(at.substr(0, colon));
  if (!o) throw DomainError("unknown orbit '" + at.substr(0, colon) + "'");
  try {
    return {*o, p.normalize(*o, Int::parse(at.substr(colon + 1)))};
  } catch (const std::invalid_argument&) {
    throw DomainError("bad offset in --at '" + at + "'");
  }
}

// Loads a pre-action file and requires it to validate.
LoadedPreAction load_valid(const std::string& path) {
  LoadedPreAction l = load_preaction(read_json_file(path));
  l.pre.require_valid();
  if (l.pre.orbit_count() == 0) throw DomainError("pre-action has no orbits");
  return l;
}

Point start_point(const LoadedPreAction& l, const std::string& at) {
  if (!at.empty()) return parse_at(l.pre, at);
  return l.basepoint ? *l.basepoint : Point{0, 0};
}

Status cmd_validate(const Globals& g, const std::string& path) {
  LoadedPreAction l = load_preaction(read_json_file(path));
  auto err = l.pre.validate();
  if (g.json) {
    Json j{{"valid", !err}};
    if (err) {
      j["reason"] = to_string(err->reason);
      j["message"] = err->message;
      j["offending"] = err->offending;
    } else {
      j["group"] = l.pre.params().str();
      j["orbits"] = l.pre.orbit_count();
      j["arrows"] = l.pre.arrow_count();
      j["saturated"] = l.pre.is_saturated();
      j["connected"] = l.pre.is_connected();
    }
    emit(j);
  } else if (err) {
    std::cout << "invalid: " << to_string(err->reason) << ": " << err->message << '\n';
    std::cout << "offending:";
    for (const auto& id : err->offending) std::cout << ' ' << id;
    std::cout << '\n';
  } else {
    std::cout << "valid: " << l.pre.params().str() << ", " << l.pre.orbit_count() << " orbits, " << l.pre.arrow_count()
              << " arrows, " << (l.pre.is_saturated() ? "saturated" : "not saturated") << ", "
              << (l.pre.is_connected() ? "connected" : "disconnected") << '\n';
  }
  return err ? 1 : 0;
}

Status cmd_ball(const Globals& g, const std::string& path, unsigned R, const std::string& rule_name,
                const std::string& at) {
  LoadedPreAction l = load_valid(path);
  Point x = start_point(l, at);
  auto rule = parse_rule(rule_name);
  Ball ball;
  std::vector<std::string> names;
  if (rule) {
    LazySaturation s({l.pre, x}, *rule, g.fuel);
    ball = schreier_ball(s, x, R);
    for (const auto& v : ball.vertices) names.push_back(s.current().point_name(v));
  } else {
    ball = schreier_ball(l.pre, x, R);
    for (const auto& v : ball.vertices) names.push_back(l.pre.point_name(v));
  }
  if (g.json) {
    emit(Json{{"R", R}, {"rule", rule_name}, {"size", ball.vertices.size()}, {"encoding", ball.encoding.str()},
              {"vertices", names}});
  } else {
    std::cout << "ball of radius " << R << " at " << l.pre.point_name(x) << ": " << ball.vertices.size()
              << " points\n";
    for (std::size_t i = 0; i < names.size(); ++i) {
      std::cout << "  " << i << ' ' << names[i] << " d=" << ball.distance[i] << '\n';
    }
    std::cout << "encoding " << ball.encoding.str() << '\n';
  }
  return 0;
}

Status cmd_eval(const Globals& g, const std::string& path, const std::string& word, const std::string& rule_name,
                const std::string& at) {
  LoadedPreAction l = load_valid(path);
  Point x = start_point(l, at);
  Word w = parse_word(word);
  auto rule = parse_rule(rule_name);
  Evaluation ev;
  std::string end_name;
  if (rule) {
    LazySaturation s({l.pre, x}, *rule, g.fuel);
    ev = evaluate(s, x, w);
    end_name = s.current().point_name(ev.reached);
  } else {
    ev = evaluate(l.pre, x, w);
    end_name = l.pre.point_name(ev.reached);
  }
  std::string nf = britton_reduce(l.pre.params(), w).str();
  if (g.json) {
    Json j{{"word", w.str()}, {"normal_form", nf}, {"defined", ev.defined()}, {"reached", end_name},
           {"letters", to_json(ev.letters_consumed)}};
    if (ev.failing_prefix) j["failing_prefix"] = ev.failing_prefix->str();
    emit(j);
  } else if (ev.defined()) {
    std::cout << l.pre.point_name(x) << " . " << w.str() << " = " << end_name << '\n';
  } else {
    std::cout << "undefined: t-move missing at " << end_name << " after prefix '" << ev.failing_prefix->str()
              << "'\n";
  }
  return ev.defined() ? 0 : 1;
}

Status cmd_graph(const Globals& g, const std::string& path, const std::string& dot) {
  LoadedPreAction l = load_valid(path);
  BassSerreGraph bs = bass_serre_graph(l.pre);
  if (!dot.empty()) {
    if (dot == "-") {
      std::cout << bs.export_dot();
      return 0;
    }
    std::ofstream out(dot);
    if (!out) throw DomainError("cannot write '" + dot + "'");
    out << bs.export_dot();
  }
  std::optional<Phenotype> q;
  if (bs.is_connected()) q = bs.connected_phenotype();
  if (g.json) {
    Json j{{"vertices", bs.vertices().size()}, {"edges", bs.edges().size()}, {"saturated", bs.is_saturated()},
           {"connected", bs.is_connected()}};
    j["phenotype"] = q ? to_json(*q) : Json(nullptr);
    j["deficits"] = Json::array();
    for (const auto& d : bs.deficits()) {
      j["deficits"].push_back({{"vertex", d.vertex}, {"out", to_json(d.missing_out)}, {"in", to_json(d.missing_in)}});
    }
    emit(j);
  } else {
    std::cout << bs.vertices().size() << " vertices, " << bs.edges().size() << " edges, "
              << (bs.is_saturated() ? "saturated" : "not saturated");
    if (q) std::cout << ", phenotype " << q->str();
    std::cout << '\n';
    for (const auto& d : bs.deficits()) {
      std::cout << "  " << d.vertex << " missing " << d.missing_out.str() << " out, " << d.missing_in.str()
                << " in\n";
    }
  }
  return 0;
}

Status cmd_phenotype(const Globals& g, const std::string& m, const std::string& n, const std::string& L) {
  GroupParams params(Int::parse(m), Int::parse(n));
  Label label = L == "inf" ? Label::infinite() : Label(Int::parse(L));
  Phenotype q = phenotype_of_label(params, label);
  auto ev = phenotype_evidence(params, label);
  if (g.json) {
    Json j{{"phenotype", to_json(q)}, {"evidence", Json::array()}};
    for (const auto& e : ev) {
      j["evidence"].push_back(
          {{"p", to_json(e.prime)}, {"vm", e.vm}, {"vn", e.vn}, {"vL", e.vL}, {"kept", e.kept}});
    }
    emit(j);
    return 0;
  }
  std::cout << q.str() << '\n';
  for (const auto& e : ev) {
    std::cout << "  p=" << e.prime.str() << " |m|_p=" << e.vm << " |n|_p=" << e.vn << " |L|_p=" << e.vL << ' '
              << (e.kept ? "kept" : "dropped") << '\n';
  }
  return 0;
}

Status cmd_saturate(const Globals& g, const std::string& path, const std::string& rule_name, unsigned depth,
                    const std::string& dot) {
  LoadedPreAction l = load_valid(path);
  auto rule = parse_rule(rule_name);
  if (!rule) throw DomainError("saturate needs --rule max or min");
  if (!l.pre.is_connected()) throw DomainError("pre-action is not connected");
  LazySaturation s({l.pre, l.basepoint ? *l.basepoint : Point{0, 0}}, *rule, g.fuel);
  s.grow_to_depth(depth);
  for (const auto& r : s.log()) emit(to_json(s.current(), r));
  if (!dot.empty()) {
    std::ofstream out(dot);
    if (!out) throw DomainError("cannot write '" + dot + "'");
    out << export_dot(s.current());
  }
  return 0;
}

Status cmd_classify(const std::string& path) {
  PointedPreAction p = load_pointed(read_json_file(path));
  Classification c = classify_subgroup(p);
  emit(to_json(c, p.pre.params()));
  return 0;
}

void report(const Globals& g, const WeldingWitness& w, const VerifyReport& rep) {
  if (g.json) {
    emit(Json{{"kind", to_string(w.kind)}, {"gamma", w.gamma.str()}, {"verified", rep.ok}, {"report", to_json(rep)}});
    return;
  }
  std::cout << to_string(w.kind) << " witness in " << w.params().str() << ", R = " << w.R << ", phenotype "
            << w.q.str() << '\n';
  std::cout << "gamma = " << w.gamma.str() << '\n';
  std::cout << rep.passed.size() << " checks passed, " << rep.failed.size() << " failed\n";
  for (const auto& f : rep.failed) std::cout << "  FAIL " << f << '\n';
  std::cout << (rep.ok ? "verified" : "NOT verified") << '\n';
}

Status cmd_weld(const Globals& g, const std::string& kind, const std::string& path, unsigned R,
                const std::vector<std::string>& g_flags, const std::string& out) {
  Json in = read_json_file(path);
  WeldingWitness w;
  if (kind == "ht") {
    PointedPreAction core = load_pointed(in.contains("core") ? in["core"] : in);
    std::vector<std::string> words = g_flags;
    if (words.empty() && in.contains("g")) {
      for (const auto& s : in["g"]) words.push_back(s.get<std::string>());
    }
    std::vector<NormalForm> nfs;
    for (const auto& s : words) nfs.push_back(britton_reduce(core.pre.params(), parse_word(s)));
    w = ht_witness(core, nfs, R, g.fuel);
  } else {
    if (!in.contains("cores") || !in["cores"].is_array()) throw DomainError("htt input needs a \"cores\" array");
    std::vector<PointedPreAction> cores;
    for (const auto& c : in["cores"]) cores.push_back(load_pointed(c));
    w = htt_witness(cores, R, g.fuel);
  }
  VerifyReport rep = verify_witness(w, g.fuel);
  Json j = witness_to_json(w, rep);
  if (out.empty()) {
    std::cout << j.dump(2) << '\n';
  } else {
    write_json_file(out, j);
    report(g, w, rep);
  }
  return rep.ok ? 0 : 1;
}

Status cmd_verify(const Globals& g, const std::string& path) {
  WeldingWitness w = witness_from_json(read_json_file(path));
  VerifyReport rep = verify_witness(w, g.fuel);
  report(g, w, rep);
  return rep.ok ? 0 : 1;
}

// Small versions of the brute-force oracle suites.
Status cmd_selftest(const Globals& g) {
  struct Row {
    std::string suite;
    std::size_t cases = 0;
    std::size_t failures = 0;
  };
  std::vector<Row> rows;
  const std::vector<std::pair<int, int>> pairs{{2, 3}, {2, 4}, {2, 2}, {3, 3}, {6, 4}, {2, -2}};
  Rng rng(g.seed);

  Row phen{"transfer closure = phenotype partition"};
  for (auto [m, n] : pairs) {
    ++phen.cases;
    if (oracle::transfer_closure_partition(m, n, 60, 200) != oracle::phenotype_partition(GroupParams(m, n), 60)) {
      ++phen.failures;
    }
  }
  rows.push_back(phen);

  Row rules{"MAX/MIN rules = brute force"};
  for (auto [m, n] : pairs) {
    GroupParams gp(m, n);
    for (std::int64_t L = 1; L <= 200; ++L) {
      for (Orientation o : {Orientation::positive, Orientation::negative}) {
        rules.cases += 2;
        std::int64_t bound = L * std::abs(m) * std::abs(n);
        if (TransferRule::min().apply(gp, Label(L), o).value() != Int(oracle::min_successor(m, n, L, o, bound))) {
          ++rules.failures;
        }
        if (TransferRule::max().apply(gp, Label(L), o).value() != Int(oracle::max_successor(m, n, L, o, bound))) {
          ++rules.failures;
        }
      }
    }
  }
  rows.push_back(rules);

  Row uniq{"saturation uniqueness (depth 3)"};
  for (auto [m, n] : pairs) {
    GroupParams gp(m, n);
    for (int k = 0; k < 3; ++k) {
      auto core = random_core(gp, Phenotype(1), rng, {.max_orbits = 3});
      for (auto rule : {TransferRule::max(), TransferRule::min()}) {
        ++uniq.cases;
        if (!oracle::saturations_agree(core, rule, 3, rng(), rng(), g.fuel)) ++uniq.failures;
      }
    }
  }
  rows.push_back(uniq);

  Row wit{"witness verification"};
  GroupParams g23(2, 3), g22(2, 2);
  for (int k = 0; k < 4; ++k) {
    ++wit.cases;
    try {
      auto hi = oracle::random_ht_instance(g23, k % 2 ? Phenotype(1) : Phenotype::infinite(), rng, 2, 2, g.fuel);
      if (!verify_witness(ht_witness(hi.core, hi.g, hi.R, g.fuel), g.fuel).ok) ++wit.failures;
    } catch (const std::exception&) {
      ++wit.failures;
    }
    ++wit.cases;
    try {
      auto ti = oracle::random_htt_instance(k % 2 ? g23 : g22, k % 2 ? Phenotype(5) : Phenotype::infinite(), rng, 2, 2);
      if (!verify_witness(htt_witness(ti.cores, ti.R, g.fuel), g.fuel).ok) ++wit.failures;
    } catch (const std::exception&) {
      ++wit.failures;
    }
  }
  rows.push_back(wit);

  bool ok = true;
  if (g.json) {
    Json j = Json::array();
    for (const auto& r : rows) j.push_back({{"suite", r.suite}, {"cases", r.cases}, {"failures", r.failures}});
    emit(j);
  }
  for (const auto& r : rows) {
    ok = ok && r.failures == 0;
    if (!g.json) {
      std::cout << std::left << std::setw(42) << r.suite << std::right << std::setw(6) << r.cases << "  "
                << (r.failures ? "FAIL (" + std::to_string(r.failures) + ")" : std::string("pass")) << '\n';
    }
  }
  return ok ? 0 : 1;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Baumslag-Solitar pre-actions, saturations and welding witnesses", "bsaction"};
  app.require_subcommand(1);
  app.fallthrough();
  Globals g;
  app.add_option("--seed", g.seed, "seed for randomised checks");
  app.add_option("--fuel", g.fuel, "extension budget for saturations");
  app.add_flag("--json", g.json, "machine-readable output");

  std::string file, word, rule = "none", at, dot, out, kind, m, n, L;
  unsigned R = 1, depth = 1;
  std::vector<std::string> words;
  Status status = 0;

  auto* validate = app.add_subcommand("validate", "check a pre-action file");
  validate->add_option("file", file)->required();
  validate->callback([&] { status = cmd_validate(g, file); });

  auto* ball = app.add_subcommand("ball", "radius-R Schreier ball at a point");
  ball->add_option("file", file)->required();
  ball->add_option("--R", R, "radius")->required();
  ball->add_option("--rule", rule, "none, max or min (saturate lazily)")->check(CLI::IsMember({"none", "max", "min"}));
  ball->add_option("--at", at, "point id:offset (default: basepoint)");
  ball->callback([&] { status = cmd_ball(g, file, R, rule, at); });

  auto* eval = app.add_subcommand("eval", "act by a word");
  eval->add_option("file", file)->required();
  eval->add_option("word", word)->required();
  eval->add_option("--rule", rule, "none, max or min (saturate lazily)")->check(CLI::IsMember({"none", "max", "min"}));
  eval->add_option("--at", at, "point id:offset (default: basepoint)");
  eval->callback([&] { status = cmd_eval(g, file, word, rule, at); });

  auto* graph = app.add_subcommand("graph", "Bass-Serre graph summary and DOT export");
  graph->add_option("file", file)->required();
  graph->add_option("--dot", dot, "write DOT here ('-' for stdout)");
  graph->callback([&] { status = cmd_graph(g, file, dot); });

  auto* phen = app.add_subcommand("phenotype", "phenotype of a label");
  phen->add_option("m", m)->required();
  phen->add_option("n", n)->required();
  phen->add_option("L", L, "label, or inf")->required();
  phen->callback([&] { status = cmd_phenotype(g, m, n, L); });

  auto* sat = app.add_subcommand("saturate", "ruled forest saturation to a depth, as JSON lines");
  sat->add_option("file", file)->required();
  sat->add_option("--rule", rule)->required()->check(CLI::IsMember({"max", "min"}));
  sat->add_option("--depth", depth)->required();
  sat->add_option("--dot", dot, "write the saturated Bass-Serre graph as DOT");
  sat->callback([&] { status = cmd_saturate(g, file, rule, depth, dot); });

  auto* cls = app.add_subcommand("classify", "place a pointed pre-action in the subgroup space");
  cls->add_option("file", file)->required();
  cls->callback([&] { status = cmd_classify(file); });

  auto* weld = app.add_subcommand("weld", "build and verify a welding witness");
  weld->add_option("kind", kind)->required()->check(CLI::IsMember({"ht", "htt"}));
  weld->add_option("file", file, "ht: {core, g}; htt: {cores}")->required();
  weld->add_option("--R", R, "radius to preserve")->required();
  weld->add_option("--g", words, "words g_1..g_2d for ht (override the file)");
  weld->add_option("--out", out, "witness file (default: stdout)");
  weld->callback([&] { status = cmd_weld(g, kind, file, R, words, out); });

  auto* verify = app.add_subcommand("verify", "re-check a witness file");
  verify->add_option("file", file)->required();
  verify->callback([&] { status = cmd_verify(g, file); });

  auto* self = app.add_subcommand("selftest", "brute-force oracle suites");
  self->callback([&] { status = cmd_selftest(g); });

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    std::cerr << app.help();
    return 2;
  } catch (const InvalidPreAction& e) {
    std::cerr << "error: invalid pre-action: " << to_string(e.error.reason) << ": " << e.what() << '\n';
    if (!e.error.offending.empty()) {
      std::cerr << "offending:";
      for (const auto& id : e.error.offending) std::cerr << ' ' << id;
      std::cerr << '\n';
    }
    return 1;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  }
  return status;
}
