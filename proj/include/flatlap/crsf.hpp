#pragma once

#include <cstdint>
#include <string>
#include <string_view>
#include <vector>

#include "flatlap/common.hpp"

namespace flatlap {

/// Rank-1 connection graph small enough for exhaustive enumeration.
struct TinyConnectionGraph {
  struct Edge {
    int u = 0;
    int v = 0;
    Complex w = 1.0;  // transport from u to v, |w| = 1
  };
  int num_vertices = 0;
  std::vector<Edge> edges;

  /// Throws ValidationError on bad endpoints, non-unit weights or more than
  /// 10 vertices.
  void validate() const;
};

inline constexpr int kMaxCrsfVertices = 10;
inline constexpr int kMaxCrsfEdges = 24;

/// Hermitian Laplacian: a loop contributes 2 - w - conj(w) to its vertex.
CMatrix crsf_laplacian(const TinyConnectionGraph& g);

/// Real part of det of crsf_laplacian().
double determinant(const TinyConnectionGraph& g);

/// Sum over cycle-rooted spanning forests of the product over their cycles
/// of (2 - w - 1/w), w the cycle monodromy.
double crsf_sum(const TinyConnectionGraph& g);

/// Multiplies the weights at vertex x by a phase: outgoing edges pick up
/// conj(phase), incoming ones phase.
TinyConnectionGraph gauge_at(const TinyConnectionGraph& g, int x, Complex phase);

/// Random graph with unit weights; loops and parallel edges allowed.
TinyConnectionGraph random_connection_graph(int vertices, int edges, std::uint64_t seed);

/// Text format: `vertices: k` then lines `edge: u v theta` (w = exp(i theta)).
TinyConnectionGraph parse_connection_graph(std::string_view text);

}  // namespace flatlap
