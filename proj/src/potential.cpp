#include "flatlap/potential.hpp"

#include <algorithm>
#include <cmath>
#include <deque>
#include <limits>
#include <numbers>

#include <Eigen/IterativeLinearSolvers>
#include <Eigen/SparseCholesky>
#include <fmt/format.h>

#include "flatlap/operators.hpp"

namespace flatlap {

namespace {

constexpr double kPi = std::numbers::pi;
constexpr int kDirectLimit = 100000;

using RealSparse = Eigen::SparseMatrix<double>;

// Solves L G = sources on the support of `g` with zero values outside.
// With `halfplane`, row a = 0 has no neighbour below and degree 3.
void solve_on_support(LatticeFunction& g, const std::vector<std::array<int, 3>>& sources,
                      bool halfplane) {
  std::vector<std::array<int, 2>> pts;
  std::vector<int> id(static_cast<std::size_t>(g.amax() - g.amin() + 1) * (g.bmax() - g.bmin() + 1), -1);
  auto slot = [&g](int a, int b) {
    return static_cast<std::size_t>(a - g.amin()) * (g.bmax() - g.bmin() + 1) + (b - g.bmin());
  };
  for (int a = g.amin(); a <= g.amax(); ++a) {
    for (int b = g.bmin(); b <= g.bmax(); ++b) {
      if (g.in_support(a, b)) {
        id[slot(a, b)] = static_cast<int>(pts.size());
        pts.push_back({a, b});
      }
    }
  }
  const int m = static_cast<int>(pts.size());
  std::vector<Eigen::Triplet<double>> trip;
  trip.reserve(static_cast<std::size_t>(m) * 5);
  constexpr int da[4] = {1, -1, 0, 0};
  constexpr int db[4] = {0, 0, 1, -1};
  for (int k = 0; k < m; ++k) {
    const auto [a, b] = pts[k];
    int deg = 0;
    for (int d = 0; d < 4; ++d) {
      const int na = a + da[d], nb = b + db[d];
      if (halfplane && na < 0) continue;
      ++deg;
      if (g.in_support(na, nb)) trip.emplace_back(k, id[slot(na, nb)], -1.0);
    }
    trip.emplace_back(k, k, static_cast<double>(deg));
  }
  RealSparse l(m, m);
  l.setFromTriplets(trip.begin(), trip.end());
  Eigen::VectorXd rhs = Eigen::VectorXd::Zero(m);
  for (const auto& [a, b, w] : sources) {
    if (!g.in_support(a, b)) throw ValidationError("source outside the support");
    rhs[id[slot(a, b)]] += w;
  }
  Eigen::VectorXd x;
  if (m <= kDirectLimit) {
    Eigen::SimplicialLDLT<RealSparse> solver(l);
    if (solver.info() != Eigen::Success) throw SolverError("lattice Green factorization failed");
    x = solver.solve(rhs);
  } else {
    Eigen::ConjugateGradient<RealSparse, Eigen::Lower | Eigen::Upper> cg(l);
    cg.setTolerance(1e-14);
    cg.setMaxIterations(20 * m);
    x = cg.solve(rhs);
    if (cg.info() != Eigen::Success) throw SolverError("lattice Green conjugate gradient did not converge");
  }
  for (int k = 0; k < m; ++k) g.value(pts[k][0], pts[k][1]) = x[k];
}

LatticeFunction ball_domain(int n) {
  LatticeFunction g(-n, n, -n, n);
  for (int a = -n; a <= n; ++a) {
    for (int b = -n; b <= n; ++b) g.set_support(a, b, a * a + b * b <= n * n);
  }
  return g;
}

LatticeFunction quasi_ball_domain(int pa, int pb, int r, bool mirrored) {
  // |z - z_P| |z - conj z_P| <= r^2 forces |z - z_P| <= r.
  const int amin = mirrored ? -pa - 1 - r - 1 : 0;
  LatticeFunction g(amin, pa + r + 1, pb - r - 1, pb + r + 1);
  for (int a = g.amin(); a <= g.amax(); ++a) {
    for (int b = g.bmin(); b <= g.bmax(); ++b) {
      const int ar = a >= 0 ? a : -1 - a;
      g.set_support(a, b, (a >= 0 || mirrored) && in_quasi_ball(ar, b, pa, pb, r));
    }
  }
  return g;
}

}  // namespace

LatticeFunction::LatticeFunction(int amin, int amax, int bmin, int bmax)
    : amin_(amin), amax_(amax), bmin_(bmin), bmax_(bmax) {
  const std::size_t size = static_cast<std::size_t>(amax - amin + 1) * (bmax - bmin + 1);
  values_.assign(size, 0.0);
  support_.assign(size, 0);
}

int LatticeFunction::support_size() const {
  return static_cast<int>(std::count(support_.begin(), support_.end(), 1));
}

void LatticeFunction::write_csv(std::ostream& os) const {
  os << "a,b,value\n";
  for (int a = amin_; a <= amax_; ++a) {
    for (int b = bmin_; b <= bmax_; ++b) {
      if (in_support(a, b)) os << fmt::format("{},{},{:.17g}\n", a, b, (*this)(a, b));
    }
  }
}

LatticeFunction green_ball(int n) {
  if (n < 1) throw ValidationError("ball radius must be at least 1");
  LatticeFunction g = ball_domain(n);
  solve_on_support(g, {{0, 0, 1}}, false);
  return g;
}

LatticeFunction green_ball_iterative(int n, double tol, int max_iter) {
  if (n < 1) throw ValidationError("ball radius must be at least 1");
  LatticeFunction g = ball_domain(n);
  LatticeFunction next = g;
  for (int it = 0; it < max_iter; ++it) {
    double change = 0.0;
    for (int a = -n; a <= n; ++a) {
      for (int b = -n; b <= n; ++b) {
        if (!g.in_support(a, b)) continue;
        const double s = g(a + 1, b) + g(a - 1, b) + g(a, b + 1) + g(a, b - 1) + (a == 0 && b == 0 ? 1.0 : 0.0);
        const double v = 0.25 * s;
        change = std::max(change, std::abs(v - g(a, b)));
        next.value(a, b) = v;
      }
    }
    std::swap(g, next);
    if (change <= tol) return g;
  }
  throw SolverError("averaging iteration for the ball Green function did not converge");
}

double ball_residual(const LatticeFunction& g) {
  double worst = 0.0;
  for (int a = g.amin(); a <= g.amax(); ++a) {
    for (int b = g.bmin(); b <= g.bmax(); ++b) {
      if (!g.in_support(a, b)) continue;
      const double lap = 4 * g(a, b) - g(a + 1, b) - g(a - 1, b) - g(a, b + 1) - g(a, b - 1);
      worst = std::max(worst, std::abs(lap - (a == 0 && b == 0 ? 1.0 : 0.0)));
    }
  }
  return worst;
}

double sphere_max(const LatticeFunction& g, int n) {
  double m = 0.0;
  for (int a = -n; a <= n; ++a) {
    for (int b = -n; b <= n; ++b) {
      const int r2 = a * a + b * b;
      if (r2 <= n * n && r2 > (n - 1) * (n - 1)) m = std::max(m, g(a, b));
    }
  }
  return m;
}

FullPlaneFit fullplane_fit(const LatticeFunction& g, int n) {
  if (n < 16) throw ValidationError("full-plane fit needs n >= 16");
  FullPlaneFit fit;
  std::vector<double> samples;
  const double g0 = g(0, 0);
  for (int a = -n; a <= n; ++a) {
    for (int b = -n; b <= n; ++b) {
      const double r = std::hypot(a, b);
      if (r < n / 4.0 || r > n / 2.0) continue;
      samples.push_back(g(a, b) - g0 + std::log(r) / (2 * kPi));
    }
  }
  if (samples.empty()) throw ValidationError("fit annulus contains no lattice points");
  double sum = 0.0;
  for (double s : samples) sum += s;
  fit.c = sum / samples.size();
  for (double s : samples) fit.max_deviation = std::max(fit.max_deviation, std::abs(s - fit.c));
  fit.samples = static_cast<int>(samples.size());
  return fit;
}

FullPlaneFit fullplane_asymptotic_check(int n) { return fullplane_fit(green_ball(n), n); }

bool in_quasi_ball(int a, int b, int pa, int pb, int r) {
  // (z - zP)(z - conj zP) with z = b + i(a + 1/2), zP = pb + i(pa + 1/2).
  const double x = b - pb;
  const double y1 = a - pa, y2 = a + pa + 1.0;
  const double mod2 = (x * x + y1 * y1) * (x * x + y2 * y2);
  return mod2 <= static_cast<double>(r) * r * r * r;
}

LatticeFunction green_halfplane(int pa, int pb, int r) {
  if (r < 1 || pa < 0) throw ValidationError("half-plane Green function needs r >= 1 and a row a >= 0");
  LatticeFunction g = quasi_ball_domain(pa, pb, r, false);
  solve_on_support(g, {{pa, pb, 1}}, true);
  return g;
}

LatticeFunction green_halfplane_by_reflection(int pa, int pb, int r) {
  if (r < 1 || pa < 0) throw ValidationError("half-plane Green function needs r >= 1 and a row a >= 0");
  LatticeFunction full = quasi_ball_domain(pa, pb, r, true);
  solve_on_support(full, {{pa, pb, 1}, {-1 - pa, pb, 1}}, false);
  LatticeFunction g = quasi_ball_domain(pa, pb, r, false);
  for (int a = g.amin(); a <= g.amax(); ++a) {
    for (int b = g.bmin(); b <= g.bmax(); ++b) {
      if (g.in_support(a, b)) g.value(a, b) = full(a, b);
    }
  }
  return g;
}

LatticeFunction green_z2_on_quasi_ball(int pa, int pb, int r) {
  LatticeFunction g = quasi_ball_domain(pa, pb, r, false);
  solve_on_support(g, {{pa, pb, 1}}, false);
  return g;
}

double halfplane_residual(const LatticeFunction& g, int pa, int pb) {
  double worst = 0.0;
  for (int a = g.amin(); a <= g.amax(); ++a) {
    for (int b = g.bmin(); b <= g.bmax(); ++b) {
      if (!g.in_support(a, b)) continue;
      double lap = (a == 0 ? 3 : 4) * g(a, b) - g(a + 1, b) - g(a, b + 1) - g(a, b - 1);
      if (a > 0) lap -= g(a - 1, b);
      worst = std::max(worst, std::abs(lap - (a == pa && b == pb ? 1.0 : 0.0)));
    }
  }
  return worst;
}

LatticeFlow::LatticeFlow(int n) : n_(n) {
  if (n < 1) throw ValidationError("corner flow needs n >= 1");
}

double LatticeFlow::east(int a, int b) const {
  if (a < 0 || b < 0 || a + b > n_ - 1) return 0.0;
  const double s = a + b;
  return (a + 1) * (1.0 / (s + 1) - 1.0 / (s + 2));
}

double LatticeFlow::north(int a, int b) const {
  if (a < 0 || b < 0 || a + b > n_ - 1) return 0.0;
  const double s = a + b;
  return 1.0 / (s + 2) - a * (1.0 / (s + 1) - 1.0 / (s + 2));
}

double LatticeFlow::divergence(int a, int b) const {
  return east(a - 1, b) + north(a, b - 1) - east(a, b) - north(a, b);
}

double LatticeFlow::squared_norm() const {
  double s = 0.0;
  for (int a = 0; a < n_; ++a) {
    for (int b = 0; a + b < n_; ++b) s += east(a, b) * east(a, b) + north(a, b) * north(a, b);
  }
  return s;
}

LatticeFlow corner_flow(int n) { return LatticeFlow(n); }

FlowCheck check_corner_flow(const LatticeFlow& e) {
  const int n = e.n();
  FlowCheck c;
  for (int a = 0; a <= n + 1; ++a) {
    for (int b = 0; a + b <= n + 1; ++b) {
      double expected = 0.0;
      if (a == 0 && b == 0) expected = -1.0;
      else if (a + b == n) expected = 1.0 / (n + 1);
      c.max_divergence_error = std::max(c.max_divergence_error, std::abs(e.divergence(a, b) - expected));
    }
  }
  c.squared_norm = e.squared_norm();
  double h = 0.0;
  for (int i = 1; i <= n; ++i) h += 1.0 / i;
  c.harmonic_bound = 2 * h;
  return c;
}

BarrierReport convex_barrier(const DiscretizationGraph& g, int cycle) {
  const auto sources = g.cone_neighbors(cycle);
  const int nv = g.num_vertices();
  BarrierReport rep;
  rep.distance.assign(nv, -1);
  std::deque<int> queue;
  for (int v : sources) {
    if (rep.distance[v] < 0) {
      rep.distance[v] = 0;
      queue.push_back(v);
    }
  }
  while (!queue.empty()) {
    const int v = queue.front();
    queue.pop_front();
    for (int d = 0; d < 4; ++d) {
      const NeighborSlot& s = g.neighbor(v, static_cast<Side>(d));
      if (s.valid() && rep.distance[s.vertex] < 0) {
        rep.distance[s.vertex] = rep.distance[v] + 1;
        queue.push_back(s.vertex);
      }
    }
  }
  rep.h.assign(nv, 0);
  for (int v = 0; v < nv; ++v) {
    const long long d = rep.distance[v];
    rep.h[v] = d * d;
  }
  rep.max_laplacian = std::numeric_limits<long long>::min();
  for (int v = 0; v < nv; ++v) {
    if (rep.distance[v] < 0 || rep.distance[v] >= g.n() || g.degree(v) < 4) continue;
    long long lap = 0;
    for (int d = 0; d < 4; ++d) lap += rep.h[v] - rep.h[g.neighbor(v, static_cast<Side>(d)).vertex];
    ++rep.checked;
    rep.max_laplacian = std::max(rep.max_laplacian, lap);
    if (lap > -1) rep.violations.push_back(v);
  }
  return rep;
}

double singular_distance(const DiscretizationGraph& g, int v) {
  const SurfacePoint p = g.embed(v);
  const SquareTiledSurface& s = g.surface();
  double best = std::numeric_limits<double>::infinity();
  for (int c = 0; c < 4; ++c) {
    const Corner corner = static_cast<Corner>(c);
    if (!s.vertex_cycles()[s.cycle_of({p.square, corner})].singular()) continue;
    const auto pos = corner_position(corner);
    best = std::min(best, std::hypot(p.x - pos[0], p.y - pos[1]));
  }
  return best;
}

double torus_gap_prediction(const DiscreteSection& f, const DiscretizationGraph& g) {
  if (g.rank() != 1 || g.surface().num_squares() != 1) {
    throw ValidationError("gap prediction is defined for rank-1 sections on the one-square torus");
  }
  const int n = g.n();
  auto coeff = [&](int p, int q) {
    Complex c = 0.0;
    for (int v = 0; v < g.num_vertices(); ++v) {
      const SurfacePoint pt = g.embed(v);
      c += std::exp(Complex(0.0, -2 * kPi * (p * pt.x + q * pt.y))) * f[v];
    }
    return c / (static_cast<double>(n) * n);
  };
  const double ax = std::abs(coeff(1, 0)) + std::abs(coeff(-1, 0));
  const double ay = std::abs(coeff(0, 1)) + std::abs(coeff(0, -1));
  return 2 * std::abs(std::sin(kPi / n)) * std::max(ax, ay);
}

HarnackRow harnack_row(const DiscreteSection& f, const DiscretizationGraph& g, double c) {
  const int r = g.rank(), n = g.n();
  HarnackRow row;
  row.n = n;
  row.predicted_gap = std::numeric_limits<double>::quiet_NaN();
  const DiscreteSection grad = gradient(g) * f;
  for (int e = 0; e < g.num_edges(); ++e) {
    row.max_edge_gap = std::max(row.max_edge_gap, grad.segment(static_cast<Eigen::Index>(e) * r, r).norm());
  }
  double sup = 0.0;
  for (int v = 0; v < g.num_vertices(); ++v) {
    const double m = f.segment(static_cast<Eigen::Index>(v) * r, r).norm();
    sup = std::max(sup, m);
    if (singular_distance(g, v) >= c) row.interior_sup = std::max(row.interior_sup, m);
  }
  row.sup_over_sqrt_log = sup / std::sqrt(std::log(static_cast<double>(n)));
  return row;
}

std::vector<HarnackRow> harnack_diagnostics(const SquareTiledSurface& s,
                                            const FlatUnitaryBundle& b, int i,
                                            const std::vector<int>& ns, double c,
                                            const EigenOptions& opt) {
  if (i < 1) throw ValidationError("eigenvector index is 1-based");
  std::vector<HarnackRow> rows;
  for (int n : ns) {
    if (n < 2) throw ValidationError("Harnack diagnostics need n >= 2");
    const auto g = DiscretizationGraph::build(s, b, n);
    const auto e = lowest_eigenpairs(assemble_laplacian(g), i, opt);
    DiscreteSection f = e.vectors.col(i - 1);
    f *= n / f.norm();
    HarnackRow row = harnack_row(f, g, c);
    row.lambda = static_cast<double>(n) * n * e.values[i - 1];
    const bool torus = s.num_squares() == 1 && s.closed() && b.rank() == 1 && b.is_trivial();
    if (torus) row.predicted_gap = torus_gap_prediction(f, g);
    rows.push_back(row);
  }
  return rows;
}

}  // namespace flatlap
