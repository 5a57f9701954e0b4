#pragma once

#include "bsaction/preaction.hpp"

#include <json.hpp>

#include <fstream>
#include <optional>
#include <sstream>
#include <string>

namespace bsaction {

using Json = nlohmann::ordered_json;

// Integers travel as JSON numbers when they fit in 64 bits, as decimal
// strings otherwise; both are accepted on input.
inline Json to_json(const Int& v) {
  if (v.fits_int64()) return Json(v.to_int64());
  return Json(v.str());
}

inline Int int_from_json(const Json& j, const std::string& what) {
  if (j.is_number_integer()) {
    if (j.is_number_unsigned()) return Int(j.get<std::uint64_t>());
    return Int(j.get<std::int64_t>());
  }
  if (j.is_string()) {
    try {
      return Int::parse(j.get<std::string>());
    } catch (const std::invalid_argument&) {
    }
  }
  throw DomainError(what + ": expected an integer, got " + j.dump());
}

inline Json to_json(const Label& L) { return L.is_infinite() ? Json("inf") : to_json(L.value()); }

inline Label label_from_json(const Json& j, const std::string& what) {
  if (j.is_string() && (j == "inf" || j == "infinity")) return Label::infinite();
  Int v = int_from_json(j, what);
  if (v < 1) throw DomainError(what + ": orbit length must be >= 1 or \"inf\", got " + v.str());
  return Label(v);
}

inline Json to_json(const Phenotype& q) { return q.is_infinite() ? Json("inf") : to_json(q.value()); }

inline Json point_to_json(const PreAction& p, const Point& x) {
  return Json::array({p.orbit(x.orbit).id, to_json(x.offset)});
}

inline Point point_from_json(const PreAction& p, const Json& j, const std::string& what) {
  if (!j.is_array() || j.size() != 2 || !j[0].is_string()) {
    throw DomainError(what + ": a point is written [orbit-id, offset], got " + j.dump());
  }
  auto o = p.find_orbit(j[0].get<std::string>());
  if (!o) throw DomainError(what + ": unknown orbit '" + j[0].get<std::string>() + "'");
  return {*o, int_from_json(j[1], what)};
}

inline GroupParams params_from_json(const Json& j) {
  if (!j.is_object() || !j.contains("m") || !j.contains("n")) throw DomainError("missing \"m\" or \"n\"");
  try {
    return GroupParams(int_from_json(j["m"], "m"), int_from_json(j["n"], "n"));
  } catch (const std::invalid_argument& e) {
    throw DomainError(e.what());
  }
}

// The orbit and arrow lists of a pre-action; offsets are kept as written so
// that validate() can report out-of-range values.
inline PreAction preaction_from_json(const Json& j, const GroupParams& params) {
  PreAction p(params);
  if (!j.contains("orbits") || !j["orbits"].is_array()) throw DomainError("missing \"orbits\" array");
  for (const auto& o : j["orbits"]) {
    if (!o.is_object() || !o.contains("id") || !o.contains("len") || !o["id"].is_string()) {
      throw DomainError("orbit entries need \"id\" (string) and \"len\": " + o.dump());
    }
    p.add_orbit(o["id"].get<std::string>(), label_from_json(o["len"], "orbit '" + o["id"].get<std::string>() + "'"));
  }
  if (j.contains("arrows")) {
    if (!j["arrows"].is_array()) throw DomainError("\"arrows\" must be an array");
    std::size_t k = 0;
    for (const auto& a : j["arrows"]) {
      std::string name = a.contains("id") && a["id"].is_string() ? a["id"].get<std::string>() : "arrow#" + std::to_string(k);
      if (!a.is_object() || !a.contains("src") || !a.contains("dst")) {
        throw DomainError(name + ": arrows need \"src\" and \"dst\"");
      }
      p.add_arrow(point_from_json(p, a["src"], name), point_from_json(p, a["dst"], name),
                  a.contains("id") ? name : std::string{});
      ++k;
    }
  }
  return p;
}

struct LoadedPreAction {
  PreAction pre;
  std::optional<Point> basepoint;
};

inline LoadedPreAction load_preaction(const Json& j) {
  GroupParams params = params_from_json(j);
  PreAction p = preaction_from_json(j, params);
  std::optional<Point> base;
  if (j.contains("basepoint") && !j["basepoint"].is_null()) {
    base = point_from_json(p, j["basepoint"], "basepoint");
    Int off = base->offset;
    if (p.length(base->orbit).is_finite() && (off.sign() < 0 || off >= p.length(base->orbit).value())) {
      throw DomainError("basepoint offset outside its orbit");
    }
  }
  return {std::move(p), std::move(base)};
}

// Validated, connected, with a basepoint (defaulting to offset 0 of the
// first orbit).
inline PointedPreAction load_pointed(const Json& j) {
  LoadedPreAction l = load_preaction(j);
  l.pre.require_valid();
  if (l.pre.orbit_count() == 0) throw DomainError("pre-action has no orbits");
  if (!l.pre.is_connected()) throw DomainError("pre-action is not connected");
  Point base = l.basepoint ? *l.basepoint : Point{0, 0};
  return {std::move(l.pre), base};
}

inline Json preaction_to_json(const PreAction& p) {
  Json j;
  j["m"] = to_json(p.params().m());
  j["n"] = to_json(p.params().n());
  j["orbits"] = Json::array();
  for (const auto& o : p.orbits()) j["orbits"].push_back({{"id", o.id}, {"len", to_json(o.length)}});
  j["arrows"] = Json::array();
  for (const auto& a : p.arrows()) {
    Json aj;
    if (!a.id.empty()) aj["id"] = a.id;
    aj["src"] = point_to_json(p, a.source);
    aj["dst"] = point_to_json(p, a.target);
    j["arrows"].push_back(std::move(aj));
  }
  return j;
}

inline Json pointed_to_json(const PointedPreAction& p) {
  Json j = preaction_to_json(p.pre);
  j["basepoint"] = point_to_json(p.pre, p.basepoint);
  return j;
}

inline Json read_json_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw DomainError("cannot open '" + path + "'");
  try {
    return Json::parse(in);
  } catch (const Json::parse_error& e) {
    throw DomainError("'" + path + "' is not valid JSON: " + e.what());
  }
}

inline void write_json_file(const std::string& path, const Json& j) {
  std::ofstream out(path);
  if (!out) throw DomainError("cannot write '" + path + "'");
  out << j.dump(2) << '\n';
}

}  // namespace bsaction
