#pragma once

#include <ostream>
#include <vector>

#include "flatlap/bundle.hpp"
#include "flatlap/discretize.hpp"
#include "flatlap/spectral.hpp"

namespace flatlap {

/// Real function on a box of lattice points (a, b), zero outside its support.
class LatticeFunction {
 public:
  LatticeFunction() = default;
  LatticeFunction(int amin, int amax, int bmin, int bmax);

  bool in_box(int a, int b) const { return a >= amin_ && a <= amax_ && b >= bmin_ && b <= bmax_; }
  bool in_support(int a, int b) const { return in_box(a, b) && support_[index(a, b)]; }
  double operator()(int a, int b) const { return in_support(a, b) ? values_[index(a, b)] : 0.0; }
  void set_support(int a, int b, bool on) { support_[index(a, b)] = on; }
  double& value(int a, int b) { return values_[index(a, b)]; }

  int amin() const { return amin_; }
  int amax() const { return amax_; }
  int bmin() const { return bmin_; }
  int bmax() const { return bmax_; }
  int support_size() const;

  /// CSV `a,b,value` over the support, row-major in a then b.
  void write_csv(std::ostream& os) const;

 private:
  std::size_t index(int a, int b) const {
    return static_cast<std::size_t>(a - amin_) * (bmax_ - bmin_ + 1) + (b - bmin_);
  }
  int amin_ = 0, amax_ = -1, bmin_ = 0, bmax_ = -1;
  std::vector<double> values_;
  std::vector<char> support_;
};

/// Green function of B(n) = {a^2 + b^2 <= n^2} in Z^2: (4 - adjacency) G = delta_0
/// inside the ball, G = 0 outside.
LatticeFunction green_ball(int n);

/// The proof's averaging iteration G <- (sum of neighbours + delta_0) / 4,
/// started from zero. Throws SolverError when `max_iter` is reached first.
LatticeFunction green_ball_iterative(int n, double tol = 1e-12, int max_iter = 1000000);

/// max |(4 - adjacency) G - delta| over the support, using the Z^2 graph.
double ball_residual(const LatticeFunction& g);

/// Maximum of G over the lattice sphere S(n) = B(n) \ B(n-1).
double sphere_max(const LatticeFunction& g, int n);

struct FullPlaneFit {
  double c = 0.0;              // mean of G(z) - G(0) + log|z| / (2 pi) on the annulus
  double max_deviation = 0.0;  // largest distance of the samples from c
  int samples = 0;
};

/// Fit over n/4 <= |z| <= n/2 of the ball Green function of radius n.
/// Needs n >= 16 so the annulus is several lattice spacings wide.
FullPlaneFit fullplane_asymptotic_check(int n);
FullPlaneFit fullplane_fit(const LatticeFunction& g, int n);

/// Quasi-ball QB(r, P) in N x Z under (a, b) -> b + i(a + 1/2).
bool in_quasi_ball(int a, int b, int pa, int pb, int r);

/// Green function of N x Z (row 0 has degree 3) supported on QB(r, P).
LatticeFunction green_halfplane(int pa, int pb, int r);

/// Same problem solved on Z^2 over QB(r, P) and its mirror a -> -1 - a with
/// sources at P and its mirror, restricted to a >= 0.
LatticeFunction green_halfplane_by_reflection(int pa, int pb, int r);

/// Green function of Z^2 (degree 4 everywhere) supported on QB(r, P).
LatticeFunction green_z2_on_quasi_ball(int pa, int pb, int r);

/// max |L G - delta_P| over the support, L the N x Z Laplacian.
double halfplane_residual(const LatticeFunction& g, int pa, int pb);

/// Flow on the quadrant graph N^2 carried by edges whose tail has a + b <= n - 1.
class LatticeFlow {
 public:
  explicit LatticeFlow(int n);
  int n() const { return n_; }
  /// Value on the edge (a,b) -> (a+1,b), zero off the support.
  double east(int a, int b) const;
  /// Value on the edge (a,b) -> (a,b+1), zero off the support.
  double north(int a, int b) const;
  /// Inflow minus outflow at (a, b).
  double divergence(int a, int b) const;
  /// Sum of squared edge values.
  double squared_norm() const;

 private:
  int n_;
};

LatticeFlow corner_flow(int n);

struct FlowCheck {
  double max_divergence_error = 0.0;  // against -1 at 0, 1/(n+1) on a+b=n, 0 elsewhere
  double squared_norm = 0.0;
  double harmonic_bound = 0.0;  // 2 H_n
};

FlowCheck check_corner_flow(const LatticeFlow& e);

struct BarrierReport {
  std::vector<long long> h;        // squared graph distance to the singular neighbor set
  std::vector<int> distance;
  int checked = 0;                 // full-degree vertices at distance < n
  long long max_laplacian = 0;     // over checked vertices
  std::vector<int> violations;     // checked vertices with laplacian > -1
};

/// h(Q) = dist(Q, V_n(P))^2 and its scalar Laplacian, in integers.
BarrierReport convex_barrier(const DiscretizationGraph& g, int cycle);

struct HarnackRow {
  int n = 0;
  double lambda = 0.0;          // rescaled eigenvalue
  double max_edge_gap = 0.0;
  double sup_over_sqrt_log = 0.0;
  double interior_sup = 0.0;    // over cells at distance >= c from singular points
  double predicted_gap = 0.0;   // torus closed form, NaN when not applicable
};

/// Euclidean distance from a cell center to the nearest singular corner of
/// its own square (infinity when there is none).
double singular_distance(const DiscretizationGraph& g, int v);

/// Edge-gap prediction 2 sin(pi/n) * amplitude for a section on the
/// one-square torus with trivial bundle, scaled to squared norm n^2. The
/// amplitude is the larger of |c(1,0)| + |c(-1,0)| and |c(0,1)| + |c(0,-1)|
/// for the discrete Fourier coefficients c.
double torus_gap_prediction(const DiscreteSection& f, const DiscretizationGraph& g);

/// Diagnostics of the i-th eigenvector (1-based) scaled to squared norm n^2.
std::vector<HarnackRow> harnack_diagnostics(const SquareTiledSurface& s,
                                            const FlatUnitaryBundle& b, int i,
                                            const std::vector<int>& ns, double c = 0.25,
                                            const EigenOptions& opt = {});

/// Same diagnostics for a given section.
HarnackRow harnack_row(const DiscreteSection& f, const DiscretizationGraph& g, double c = 0.25);

}  // namespace flatlap
