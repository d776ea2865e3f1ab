#include "flatlap/operators.hpp"

#include <algorithm>
#include <cmath>
#include <vector>

#include <fmt/format.h>

namespace flatlap {

namespace {

using Triplet = Eigen::Triplet<Complex, int>;

void add_block(std::vector<Triplet>& out, int row, int col, int r, const CMatrix& m) {
  for (int a = 0; a < r; ++a) {
    for (int b = 0; b < r; ++b) {
      if (m(a, b) != Complex(0.0)) out.emplace_back(row * r + a, col * r + b, m(a, b));
    }
  }
}

}  // namespace

SparseMatrix assemble_laplacian(const DiscretizationGraph& g) {
  const int r = g.rank();
  const int dim = g.num_vertices() * r;
  const CMatrix id = CMatrix::Identity(r, r);
  std::vector<Triplet> trip;
  trip.reserve(static_cast<std::size_t>(g.num_edges()) * 4 * r * r);
  for (const GraphEdge& e : g.edges()) {
    add_block(trip, e.tail, e.tail, r, id);
    add_block(trip, e.head, e.head, r, id);
    add_block(trip, e.tail, e.head, r, -e.transport.adjoint());
    add_block(trip, e.head, e.tail, r, -e.transport);
  }
  SparseMatrix a(dim, dim);
  a.setFromTriplets(trip.begin(), trip.end());
  a.prune(Complex(0.0), 0.0);
  a.makeCompressed();
  return a;
}

SparseMatrix gradient(const DiscretizationGraph& g) {
  const int r = g.rank();
  std::vector<Triplet> trip;
  const CMatrix id = CMatrix::Identity(r, r);
  for (int k = 0; k < g.num_edges(); ++k) {
    const GraphEdge& e = g.edges()[k];
    if (e.tail == e.head) {
      add_block(trip, k, e.tail, r, id - e.transport.adjoint());
    } else {
      add_block(trip, k, e.tail, r, id);
      add_block(trip, k, e.head, r, -e.transport.adjoint());
    }
  }
  SparseMatrix d(g.num_edges() * r, g.num_vertices() * r);
  d.setFromTriplets(trip.begin(), trip.end());
  d.makeCompressed();
  return d;
}

SparseMatrix divergence(const DiscretizationGraph& g) {
  return SparseMatrix(gradient(g).adjoint());
}

double rayleigh(const SparseMatrix& a, const DiscreteSection& f) {
  const double nf = f.squaredNorm();
  if (nf == 0.0) throw ValidationError("Rayleigh quotient of the zero section");
  return inner(f, a * f).real() / nf;
}

double max_entry_difference(const SparseMatrix& a, const SparseMatrix& b) {
  const SparseMatrix d = a - b;
  double m = 0.0;
  for (int k = 0; k < d.outerSize(); ++k) {
    for (SparseMatrix::InnerIterator it(d, k); it; ++it) m = std::max(m, std::abs(it.value()));
  }
  return m;
}

double hermitian_defect(const SparseMatrix& a) {
  return max_entry_difference(a, SparseMatrix(a.adjoint()));
}

void write_coordinate(std::ostream& os, const SparseMatrix& a) {
  for (int k = 0; k < a.outerSize(); ++k) {
    for (SparseMatrix::InnerIterator it(a, k); it; ++it) {
      os << fmt::format("{} {} {:.17g} {:.17g}\n", it.row(), it.col(), it.value().real(),
                        it.value().imag());
    }
  }
}

}  // namespace flatlap
