#pragma once

#include <array>
#include <functional>
#include <optional>
#include <ostream>
#include <vector>

#include "flatlap/common.hpp"
#include "flatlap/discretize.hpp"
#include "flatlap/operators.hpp"
#include "flatlap/spectral.hpp"

namespace flatlap {

/// Scalar weight on the surface.
using WeightFunction = std::function<double(const SurfacePoint&)>;

/// Restriction: evaluates a continuum section at every cell center.
DiscreteSection restrict_section(const SectionFunction& f, const DiscretizationGraph& g);

/// Replaces the values on each singular neighbor set by their mean, taken
/// after transporting along the set to a common frame. Needs n >= 2.
DiscreteSection average(const DiscreteSection& f, const DiscretizationGraph& g);

/// One affine piece F(u, w) = a + du*u + dw*w of a linearized section.
///
/// Each cell is split into four quarters at its center. The quarter with
/// signs (sx, sy) covers x = (i + 1/2 + sx*u)/n, y = (j + 1/2 + sy*w)/n for
/// u, w in [0, 1/2] and is named after the lattice point at its far corner.
/// Quarters whose lattice point carries the fixed lower-left to upper-right
/// diagonal are cut along u = w into two triangles.
struct FieldPiece {
  enum class Kind { Constant, Boundary, Affine };
  enum class Region { Quarter, BelowDiagonal, AboveDiagonal };  // u >= w, w >= u
  int vertex = 0;
  int sx = 1;
  int sy = 1;
  Kind kind = Kind::Constant;
  Region region = Region::Quarter;
  CVector a, du, dw;

  CVector at(double u, double w) const { return a + du * u + dw * w; }
  /// Area in surface units for subdivision level n.
  double area(int n) const;
};

/// Linearization L_n: continuous, piecewise affine, constant near singular
/// points, varying only along the boundary in boundary strips.
class PiecewiseLinearField {
 public:
  int n() const { return n_; }
  int rank() const { return rank_; }
  const std::vector<FieldPiece>& pieces() const { return pieces_; }

  /// Pieces (one or two) covering quarter (v, sx, sy).
  std::vector<const FieldPiece*> quarter(int v, int sx, int sy) const;

  CVector evaluate(const SurfacePoint& p) const;
  /// Evaluates in local quarter coordinates; on the diagonal the lower piece wins.
  CVector evaluate_local(int v, int sx, int sy, double u, double w) const;

 private:
  friend PiecewiseLinearField linearize(const DiscreteSection& f, const DiscretizationGraph& g);
  int n_ = 0;
  int rank_ = 1;
  int num_vertices_ = 0;
  std::vector<FieldPiece> pieces_;
  // Per (vertex, quarter) the first piece index and the count.
  std::vector<std::array<int, 2>> quarter_index_;
};

/// Applies average() and builds the piecewise-affine field. Needs n >= 2.
PiecewiseLinearField linearize(const DiscreteSection& f, const DiscretizationGraph& g);

/// Exact integral of <grad u, grad v>. Throws ValidationError when the two
/// fields do not share a decomposition.
Complex dirichlet_energy(const PiecewiseLinearField& u, const PiecewiseLinearField& v);

/// Integral of weight * <u, v>: exact when no weight is given, 6-point
/// degree-4 triangle rule otherwise.
Complex l2_pairing(const PiecewiseLinearField& u, const PiecewiseLinearField& v,
                   const std::optional<WeightFunction>& weight = std::nullopt);

/// <F, f> against a continuum section with the 6-point rule.
Complex l2_pairing(const PiecewiseLinearField& u, const SectionFunction& f);

/// L2 norm of F - f with the 6-point rule.
double l2_distance(const PiecewiseLinearField& u, const SectionFunction& f);

/// Largest jump between adjacent pieces, sampled at the ends and midpoint
/// of every shared segment, with values transported into a common frame.
double continuity_defect(const PiecewiseLinearField& u, const DiscretizationGraph& g);

/// CSV `square,x,y,re_1,im_1,...`.
void write_samples(std::ostream& os, const PiecewiseLinearField& u,
                   const std::vector<SurfacePoint>& points);

/// Residual classes of n^2 (L R_n f) - (Lap f) over vertices.
struct ConsistencyResidual {
  double interior = 0.0;  // full degree, not next to a singular point
  double edge = 0.0;      // missing neighbors, not next to a singular point
  double corner = 0.0;    // in some singular neighbor set
  double all = 0.0;
};

/// `lap` is the positive continuum Laplacian of f, -(f_xx + f_yy).
ConsistencyResidual consistency_residual(const SectionFunction& f, const SectionFunction& lap,
                                         const DiscretizationGraph& g, const SparseMatrix& op);

struct EigenvectorRow {
  int n = 0;
  int group = 0;
  int multiplicity = 0;
  double lambda_ref = 0.0;
  std::vector<double> lambda_n;
  double aligned_error = 0.0;  // max over the group after unitary alignment
  double direct_error = 0.0;   // max over the group without alignment
  bool flagged = false;        // discrete group not separated at this n
};

/// Eigenvector convergence for the `group`-th distinct reference eigenvalue
/// (1-based). Discrete sections are scaled to squared norm n^2.
std::vector<EigenvectorRow> eigenvector_convergence(const SquareTiledSurface& s,
                                                    const FlatUnitaryBundle& b,
                                                    const ReferenceModel& model, int group,
                                                    const std::vector<int>& ns,
                                                    const EigenOptions& opt = {});

}  // namespace flatlap
