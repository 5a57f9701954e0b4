#pragma once

#include "bsaction/preaction.hpp"

#include <algorithm>
#include <deque>
#include <sstream>
#include <string>
#include <vector>

namespace bsaction {

// Quotient of the Schreier graph by b: one vertex per orbit, one positive
// edge per arrow. Negative edges are the formal opposites and are not stored.
class BassSerreGraph {
 public:
  struct Vertex {
    std::string id;
    Label label;
    std::vector<std::size_t> out, in;
  };
  struct Edge {
    std::string id;
    std::size_t source, target;
    Label label;
  };
  struct Deficit {
    std::string vertex;
    Int missing_out, missing_in;
  };

  explicit BassSerreGraph(const PreAction& p) : params_(p.params()) {
    p.require_valid();
    for (const auto& o : p.orbits()) vertices_.push_back({o.id, o.length, {}, {}});
    for (std::size_t i = 0; i < p.arrow_count(); ++i) {
      const Arrow& a = p.arrow(i);
      auto e = transfer_ok(params_, p.length(a.source.orbit), p.length(a.target.orbit));
      if (!e) throw std::logic_error("validated arrow fails the transfer equation");
      edges_.push_back({p.arrow_name(i), a.source.orbit, a.target.orbit, *e});
      vertices_[a.source.orbit].out.push_back(i);
      vertices_[a.target.orbit].in.push_back(i);
    }
    for (const auto& v : vertices_) {
      if (Int(v.out.size()) > out_degree_bound(params_, v.label) ||
          Int(v.in.size()) > in_degree_bound(params_, v.label)) {
        throw std::logic_error("vertex '" + v.id + "' exceeds its degree bound");
      }
    }
  }

  const GroupParams& params() const { return params_; }
  const std::vector<Vertex>& vertices() const { return vertices_; }
  const std::vector<Edge>& edges() const { return edges_; }
  std::size_t deg_out(std::size_t v) const { return vertices_[v].out.size(); }
  std::size_t deg_in(std::size_t v) const { return vertices_[v].in.size(); }

  std::vector<Deficit> deficits() const {
    std::vector<Deficit> out;
    for (const auto& v : vertices_) {
      Int mo = out_degree_bound(params_, v.label) - Int(v.out.size());
      Int mi = in_degree_bound(params_, v.label) - Int(v.in.size());
      if (mo.sign() > 0 || mi.sign() > 0) out.push_back({v.id, mo, mi});
    }
    return out;
  }

  bool is_saturated() const { return deficits().empty(); }

  bool is_connected() const {
    if (vertices_.empty()) return true;
    auto d = distances_from({0});
    return std::find(d.begin(), d.end(), -1) == d.end();
  }

  // Undirected edge distance from a set of vertices; -1 when unreachable.
  std::vector<long> distances_from(const std::vector<std::size_t>& sources) const {
    std::vector<long> dist(vertices_.size(), -1);
    std::deque<std::size_t> q;
    for (auto s : sources) {
      if (dist[s] < 0) {
        dist[s] = 0;
        q.push_back(s);
      }
    }
    while (!q.empty()) {
      auto v = q.front();
      q.pop_front();
      auto visit = [&](std::size_t w) {
        if (dist[w] < 0) {
          dist[w] = dist[v] + 1;
          q.push_back(w);
        }
      };
      for (auto e : vertices_[v].out) visit(edges_[e].target);
      for (auto e : vertices_[v].in) visit(edges_[e].source);
    }
    return dist;
  }

  // Common phenotype of all labels. Edge validity forces it to be constant;
  // a mismatch is reported as a logic error since it would be a bug.
  Phenotype connected_phenotype() const {
    if (vertices_.empty()) throw DomainError("empty graph has no phenotype");
    if (!is_connected()) throw DomainError("connected_phenotype needs a connected graph");
    Phenotype q = phenotype_of_label(params_, vertices_[0].label);
    for (const auto& v : vertices_) {
      Phenotype p = phenotype_of_label(params_, v.label);
      if (!(p == q)) {
        throw std::logic_error("phenotype mismatch between '" + vertices_[0].id + "' (" + q.str() + ") and '" + v.id +
                               "' (" + p.str() + ")");
      }
    }
    return q;
  }

  std::string export_dot() const {
    std::ostringstream os;
    os << "digraph bass_serre {\n";
    std::vector<std::size_t> order(vertices_.size());
    for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
    std::sort(order.begin(), order.end(), [&](auto a, auto b) { return vertices_[a].id < vertices_[b].id; });
    for (auto v : order) {
      os << "  \"" << escape(vertices_[v].id) << "\" [label=\"" << escape(vertices_[v].id)
         << "\\nL=" << vertices_[v].label.str() << "\"];\n";
    }
    std::vector<std::size_t> eorder(edges_.size());
    for (std::size_t i = 0; i < eorder.size(); ++i) eorder[i] = i;
    std::sort(eorder.begin(), eorder.end(), [&](auto a, auto b) {
      const auto &x = edges_[a], &y = edges_[b];
      return std::tie(vertices_[x.source].id, vertices_[x.target].id, x.id) <
             std::tie(vertices_[y.source].id, vertices_[y.target].id, y.id);
    });
    for (auto e : eorder) {
      os << "  \"" << escape(vertices_[edges_[e].source].id) << "\" -> \"" << escape(vertices_[edges_[e].target].id)
         << "\" [label=\"" << edges_[e].label.str() << "\"];\n";
    }
    os << "}\n";
    return os.str();
  }

 private:
  static std::string escape(const std::string& s) {
    std::string out;
    for (char c : s) {
      if (c == '"' || c == '\\') out += '\\';
      out += c;
    }
    return out;
  }

  GroupParams params_;
  std::vector<Vertex> vertices_;
  std::vector<Edge> edges_;
};

inline BassSerreGraph bass_serre_graph(const PreAction& p) { return BassSerreGraph(p); }

inline std::string export_dot(const PreAction& p) { return BassSerreGraph(p).export_dot(); }

}  // namespace bsaction
