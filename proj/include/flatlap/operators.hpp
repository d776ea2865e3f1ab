#pragma once

#include <ostream>

#include <Eigen/SparseCore>

#include "flatlap/common.hpp"
#include "flatlap/discretize.hpp"

namespace flatlap {

using SparseMatrix = Eigen::SparseMatrix<Complex, Eigen::ColMajor, int>;

/// Discrete sections are flattened vertex-major: entry v*r + a is component a
/// of the fiber at vertex v.
using DiscreteSection = CVector;

/// Bundle Laplacian: (Lf)(v) = deg(v) f(v) - sum over incident edges of the
/// neighbor value transported into the fiber at v. Parallel edges and loops
/// are counted with multiplicity.
SparseMatrix assemble_laplacian(const DiscretizationGraph& g);

/// Gradient on edges with the edge fiber identified with the tail fiber:
/// (Df)(e) = f(tail) - U_e^H f(head). Rows are edge-major, e*r + a.
SparseMatrix gradient(const DiscretizationGraph& g);

/// L2 adjoint of gradient().
SparseMatrix divergence(const DiscretizationGraph& g);

/// <f, g> = sum conj(f_k) g_k.
inline Complex inner(const CVector& f, const CVector& g) { return f.dot(g); }

/// <Af, f> / <f, f>. Throws ValidationError for the zero section.
double rayleigh(const SparseMatrix& a, const DiscreteSection& f);

/// max |A - A^H| over entries.
double hermitian_defect(const SparseMatrix& a);

/// max |A - B| over entries.
double max_entry_difference(const SparseMatrix& a, const SparseMatrix& b);

/// Coordinate dump: one `row col re im` line per stored nonzero.
void write_coordinate(std::ostream& os, const SparseMatrix& a);

}  // namespace flatlap
