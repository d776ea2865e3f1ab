#include "flatlap/discretize.hpp"

#include <algorithm>
#include <map>
#include <numeric>
#include <utility>

#include <fmt/format.h>

namespace flatlap {

namespace {

// Boundary cell of `square` along side `side` at parameter t.
Cell side_cell(int square, Side side, int t, int n) {
  switch (side) {
    case Side::E: return {square, n - 1, t};
    case Side::W: return {square, 0, t};
    case Side::N: return {square, t, n - 1};
    case Side::S: return {square, t, 0};
  }
  return {};
}

}  // namespace

Cell corner_cell(int square, Corner c, int n) {
  const auto p = corner_position(c);
  return {square, p[0] * (n - 1), p[1] * (n - 1)};
}

Cell DiscretizationGraph::cell(int v) const {
  const int nn = n_ * n_;
  return {v / nn, v % n_, (v % nn) / n_};
}

SurfacePoint DiscretizationGraph::embed(int v) const {
  const Cell c = cell(v);
  return {c.square, (c.i + 0.5) / n_, (c.j + 0.5) / n_};
}

DiscretizationGraph DiscretizationGraph::build(const SquareTiledSurface& s,
                                               const FlatUnitaryBundle& b, int n) {
  if (n < 1) throw ValidationError("subdivision parameter n must be at least 1");
  if (b.num_seams() != static_cast<int>(s.seams().size())) {
    throw ValidationError("bundle has " + std::to_string(b.num_seams()) + " seams, surface has " +
                          std::to_string(s.seams().size()));
  }
  DiscretizationGraph g(s);
  g.n_ = n;
  g.rank_ = b.rank();
  const int r = b.rank();
  const CMatrix id = CMatrix::Identity(r, r);
  g.neighbors_.assign(static_cast<std::size_t>(s.num_squares()) * n * n, {});

  auto link = [&g](int t, Side dt, int h, Side dh, int seam, CMatrix u, bool flipped) {
    const int e = static_cast<int>(g.edges_.size());
    g.edges_.push_back({t, h, seam, std::move(u)});
    g.neighbors_[t][static_cast<int>(dt)] = {h, e, true, flipped};
    g.neighbors_[h][static_cast<int>(dh)] = {t, e, false, flipped};
  };

  for (int q = 0; q < s.num_squares(); ++q) {
    for (int j = 0; j < n; ++j) {
      for (int i = 0; i < n; ++i) {
        const int v = g.vertex({q, i, j});
        if (i + 1 < n) link(v, Side::E, v + 1, Side::W, -1, id, false);
        if (j + 1 < n) link(v, Side::N, v + n, Side::S, -1, id, false);
      }
    }
  }

  for (int k = 0; k < static_cast<int>(s.seams().size()); ++k) {
    const Seam& seam = s.seams()[k];
    const bool half = seam.iso == Isometry::HalfTurn;
    for (int t = 0; t < n; ++t) {
      const int tail = g.vertex(side_cell(seam.first.square, seam.first.side, t, n));
      const int head = g.vertex(side_cell(seam.second.square, seam.second.side, half ? n - 1 - t : t, n));
      link(tail, seam.first.side, head, seam.second.side, k, b.transport(k), half);
    }
  }
  return g;
}

int DiscretizationGraph::degree(int v) const {
  int d = 0;
  for (const NeighborSlot& s : neighbors_[v]) d += s.valid() ? 1 : 0;
  return d;
}

CMatrix DiscretizationGraph::transport_out(const NeighborSlot& slot) const {
  const CMatrix& u = edges_.at(slot.edge).transport;
  return slot.is_tail ? u : CMatrix(u.adjoint());
}

CMatrix DiscretizationGraph::transport_in(const NeighborSlot& slot) const {
  const CMatrix& u = edges_.at(slot.edge).transport;
  return slot.is_tail ? CMatrix(u.adjoint()) : u;
}

std::vector<int> DiscretizationGraph::cone_neighbors(int cycle) const {
  const auto& cycles = surface_.vertex_cycles();
  if (cycle < 0 || cycle >= static_cast<int>(cycles.size())) {
    throw ValidationError("unknown vertex cycle " + std::to_string(cycle));
  }
  if (!cycles[cycle].singular()) {
    throw ValidationError("vertex cycle " + std::to_string(cycle) + " is not a singular point");
  }
  if (n_ < 2) throw ValidationError("cone neighbor sets need n >= 2");
  std::vector<int> out;
  for (const CornerRef& c : cycles[cycle].corners) out.push_back(vertex(corner_cell(c.square, c.corner, n_)));
  return out;
}

std::vector<std::vector<int>> DiscretizationGraph::all_cone_neighbors() const {
  std::vector<std::vector<int>> out;
  for (int p : surface_.singular_points()) out.push_back(cone_neighbors(p));
  return out;
}

int DiscretizationGraph::doubled_edge_count() const {
  std::map<std::pair<int, int>, int> mult;
  for (const GraphEdge& e : edges_) {
    if (e.tail == e.head) continue;
    ++mult[std::minmax(e.tail, e.head)];
  }
  return static_cast<int>(std::count_if(mult.begin(), mult.end(), [](const auto& kv) { return kv.second >= 2; }));
}

int DiscretizationGraph::num_components() const {
  std::vector<int> parent(num_vertices());
  std::iota(parent.begin(), parent.end(), 0);
  auto find = [&parent](int x) {
    while (parent[x] != x) x = parent[x] = parent[parent[x]];
    return x;
  };
  int comps = num_vertices();
  for (const GraphEdge& e : edges_) {
    const int a = find(e.tail), c = find(e.head);
    if (a != c) {
      parent[a] = c;
      --comps;
    }
  }
  return comps;
}

DiscretizationGraph DiscretizationGraph::gauge_transformed(const std::vector<CMatrix>& w) const {
  if (static_cast<int>(w.size()) != num_vertices()) {
    throw ValidationError("gauge needs one unitary per vertex");
  }
  DiscretizationGraph g = *this;
  for (GraphEdge& e : g.edges_) e.transport = w[e.head] * e.transport * w[e.tail].adjoint();
  return g;
}

void DiscretizationGraph::write_csv(std::ostream& os) const {
  os << "tail,head,seam_id";
  for (int i = 0; i < rank_; ++i) {
    for (int j = 0; j < rank_; ++j) os << fmt::format(",re_{}{},im_{}{}", i, j, i, j);
  }
  os << "\n";
  for (const GraphEdge& e : edges_) {
    os << e.tail << "," << e.head << "," << e.seam;
    for (int i = 0; i < rank_; ++i) {
      for (int j = 0; j < rank_; ++j) {
        os << fmt::format(",{:.17g},{:.17g}", e.transport(i, j).real(), e.transport(i, j).imag());
      }
    }
    os << "\n";
  }
}

}  // namespace flatlap
