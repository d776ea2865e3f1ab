#pragma once

#include <array>
#include <optional>
#include <ostream>
#include <vector>

#include "flatlap/bundle.hpp"
#include "flatlap/common.hpp"
#include "flatlap/surface.hpp"

namespace flatlap {

/// Cell (square, i, j) of the n x n subdivision, 0 <= i, j < n.
struct Cell {
  int square = 0;
  int i = 0;
  int j = 0;

  friend bool operator==(const Cell&, const Cell&) = default;
};

/// Point of the surface in the chart of one square.
struct SurfacePoint {
  int square = 0;
  double x = 0.0;
  double y = 0.0;
};

/// One geometric edge. The transport maps the tail fiber into the head fiber;
/// the reverse orientation uses its adjoint.
struct GraphEdge {
  int tail = 0;
  int head = 0;
  int seam = -1;  // -1 for edges inside a square
  CMatrix transport;
};

/// What a vertex sees in one lattice direction.
struct NeighborSlot {
  int vertex = -1;
  int edge = -1;
  bool is_tail = true;   // the vertex is the tail of `edge`
  bool flipped = false;  // the neighbor's chart is rotated by a half turn
  bool valid() const { return vertex >= 0; }
};

/// Nearest-neighbor multigraph with unitary transports on its edges.
class DiscretizationGraph {
 public:
  /// Throws ValidationError for n < 1 or when the bundle does not fit the surface.
  static DiscretizationGraph build(const SquareTiledSurface& s, const FlatUnitaryBundle& b, int n);

  int n() const { return n_; }
  int rank() const { return rank_; }
  int num_vertices() const { return static_cast<int>(neighbors_.size()); }
  int num_edges() const { return static_cast<int>(edges_.size()); }
  const SquareTiledSurface& surface() const { return surface_; }
  const std::vector<GraphEdge>& edges() const { return edges_; }

  /// Vertex index s*n^2 + j*n + i.
  int vertex(const Cell& c) const { return (c.square * n_ + c.j) * n_ + c.i; }
  Cell cell(int v) const;
  SurfacePoint embed(int v) const;

  /// Neighbor in direction d (Side::E = +x, ...) in the vertex's own chart.
  const NeighborSlot& neighbor(int v, Side d) const {
    return neighbors_[v][static_cast<int>(d)];
  }
  int degree(int v) const;

  /// Transport from the fiber at `v` to the fiber across `slot`.
  CMatrix transport_out(const NeighborSlot& slot) const;
  /// Transport from the fiber across `slot` back to the fiber at `v`.
  CMatrix transport_in(const NeighborSlot& slot) const;

  /// Cells touching a singular point, listed along its vertex cycle. Index
  /// `cycle` refers to SquareTiledSurface::vertex_cycles(). Needs n >= 2.
  std::vector<int> cone_neighbors(int cycle) const;
  /// cone_neighbors() for every singular point, in singular_points() order.
  std::vector<std::vector<int>> all_cone_neighbors() const;

  /// Number of unordered vertex pairs joined by two or more edges.
  int doubled_edge_count() const;
  int num_components() const;

  /// Copy with fiber frames changed by unitaries w[v]: U_e -> w[h] U_e w[t]^H.
  DiscretizationGraph gauge_transformed(const std::vector<CMatrix>& w) const;

  /// CSV lines `tail,head,seam_id,re,im,...` with row-major transport entries.
  void write_csv(std::ostream& os) const;

 private:
  explicit DiscretizationGraph(const SquareTiledSurface& s) : surface_(s) {}

  SquareTiledSurface surface_;
  int n_ = 0;
  int rank_ = 1;
  std::vector<GraphEdge> edges_;
  std::vector<std::array<NeighborSlot, 4>> neighbors_;
};

/// Cell of `square` at tile corner `c`.
Cell corner_cell(int square, Corner c, int n);

}  // namespace flatlap
