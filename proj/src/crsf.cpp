#include "flatlap/crsf.hpp"

#include <cmath>
#include <numbers>
#include <random>
#include <sstream>

#include <Eigen/LU>

namespace flatlap {

void TinyConnectionGraph::validate() const {
  if (num_vertices < 1 || num_vertices > kMaxCrsfVertices) {
    throw ValidationError("connection graph needs 1.." + std::to_string(kMaxCrsfVertices) + " vertices");
  }
  if (static_cast<int>(edges.size()) > kMaxCrsfEdges) {
    throw ValidationError("connection graph has too many edges for enumeration");
  }
  for (const Edge& e : edges) {
    if (e.u < 0 || e.u >= num_vertices || e.v < 0 || e.v >= num_vertices) {
      throw ValidationError("edge endpoint out of range");
    }
    if (std::abs(std::abs(e.w) - 1.0) > 1e-12) throw ValidationError("edge weight is not of unit modulus");
  }
}

CMatrix crsf_laplacian(const TinyConnectionGraph& g) {
  g.validate();
  CMatrix l = CMatrix::Zero(g.num_vertices, g.num_vertices);
  for (const auto& e : g.edges) {
    l(e.u, e.u) += 1.0;
    l(e.v, e.v) += 1.0;
    l(e.u, e.v) -= std::conj(e.w);
    l(e.v, e.u) -= e.w;
  }
  return l;
}

double determinant(const TinyConnectionGraph& g) {
  return CMatrix(crsf_laplacian(g)).partialPivLu().determinant().real();
}

namespace {

// For an edge subset in which every component has as many edges as vertices,
// returns the product of (2 - w - 1/w) over the component cycles; returns
// nothing (via ok = false) when the subset is not a CRSF.
double forest_weight(const TinyConnectionGraph& g, const std::vector<int>& chosen, bool& ok) {
  const int nv = g.num_vertices;
  std::vector<std::vector<int>> incident(nv);
  for (int k : chosen) {
    incident[g.edges[k].u].push_back(k);
    if (g.edges[k].v != g.edges[k].u) incident[g.edges[k].v].push_back(k);
  }
  // Peel leaves; what remains in each component is its unique cycle.
  std::vector<int> degree(nv, 0);
  for (int k : chosen) {
    degree[g.edges[k].u] += 1;
    degree[g.edges[k].v] += 1;
  }
  std::vector<bool> removed_edge(g.edges.size(), false), removed_vertex(nv, false);
  std::vector<int> stack;
  for (int v = 0; v < nv; ++v) {
    if (degree[v] == 0) {
      ok = false;
      return 0.0;
    }
    if (degree[v] == 1) stack.push_back(v);
  }
  while (!stack.empty()) {
    const int v = stack.back();
    stack.pop_back();
    if (removed_vertex[v]) continue;
    removed_vertex[v] = true;
    for (int k : incident[v]) {
      if (removed_edge[k]) continue;
      removed_edge[k] = true;
      const int o = g.edges[k].u == v ? g.edges[k].v : g.edges[k].u;
      if (--degree[o] == 1) stack.push_back(o);
      --degree[v];
    }
  }
  // Every surviving vertex must have degree exactly 2 on its cycle.
  for (int v = 0; v < nv; ++v) {
    if (!removed_vertex[v] && degree[v] != 2) {
      ok = false;
      return 0.0;
    }
  }
  double weight = 1.0;
  std::vector<bool> visited(nv, false);
  for (int start = 0; start < nv; ++start) {
    if (removed_vertex[start] || visited[start]) continue;
    Complex w = 1.0;
    int v = start, prev_edge = -1;
    do {
      visited[v] = true;
      int next_edge = -1;
      for (int k : incident[v]) {
        if (!removed_edge[k] && k != prev_edge) {
          next_edge = k;
          break;
        }
      }
      if (next_edge < 0) {
        ok = false;
        return 0.0;
      }
      const auto& e = g.edges[next_edge];
      if (e.u == e.v) {
        w *= e.w;
        v = e.u;
      } else if (e.u == v) {
        w *= e.w;
        v = e.v;
      } else {
        w *= std::conj(e.w);
        v = e.u;
      }
      prev_edge = next_edge;
    } while (v != start);
    weight *= 2.0 - 2.0 * w.real();
  }
  ok = true;
  return weight;
}

}  // namespace

double crsf_sum(const TinyConnectionGraph& g) {
  g.validate();
  const int m = static_cast<int>(g.edges.size());
  const int nv = g.num_vertices;
  double total = 0.0;
  std::vector<int> chosen;
  for (std::uint32_t mask = 0; mask < (1u << m); ++mask) {
    if (__builtin_popcount(mask) != nv) continue;
    chosen.clear();
    for (int k = 0; k < m; ++k) {
      if (mask & (1u << k)) chosen.push_back(k);
    }
    bool ok = false;
    const double w = forest_weight(g, chosen, ok);
    if (ok) total += w;
  }
  return total;
}

TinyConnectionGraph gauge_at(const TinyConnectionGraph& g, int x, Complex phase) {
  TinyConnectionGraph out = g;
  for (auto& e : out.edges) {
    if (e.u == e.v) continue;
    if (e.u == x) e.w *= std::conj(phase);
    if (e.v == x) e.w *= phase;
  }
  return out;
}

TinyConnectionGraph random_connection_graph(int vertices, int edges, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::uniform_int_distribution<int> vert(0, vertices - 1);
  std::uniform_real_distribution<double> angle(0.0, 2 * std::numbers::pi);
  TinyConnectionGraph g;
  g.num_vertices = vertices;
  for (int k = 0; k < edges; ++k) {
    const int u = vert(rng), v = vert(rng);
    g.edges.push_back({u, v, std::polar(1.0, angle(rng))});
  }
  return g;
}

TinyConnectionGraph parse_connection_graph(std::string_view text) {
  TinyConnectionGraph g;
  bool have_vertices = false;
  std::istringstream in{std::string(text)};
  std::string line;
  int line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (const auto hash = line.find('#'); hash != std::string::npos) line.resize(hash);
    std::istringstream ls(line);
    std::string key;
    if (!(ls >> key)) continue;
    auto fail = [&](const std::string& msg) {
      throw ParseError("line " + std::to_string(line_no) + ": " + msg);
    };
    if (key == "vertices:") {
      if (!(ls >> g.num_vertices)) fail("expected a vertex count");
      have_vertices = true;
    } else if (key == "edge:") {
      int u = 0, v = 0;
      double theta = 0.0;
      if (!(ls >> u >> v >> theta)) fail("expected 'edge: u v theta'");
      g.edges.push_back({u, v, std::polar(1.0, theta)});
    } else {
      fail("unknown key '" + key + "'");
    }
    std::string extra;
    if (ls >> extra) fail("trailing text '" + extra + "'");
  }
  if (!have_vertices) throw ParseError("missing 'vertices:'");
  g.validate();
  return g;
}

}  // namespace flatlap
