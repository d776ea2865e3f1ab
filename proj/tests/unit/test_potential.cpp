#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <map>
#include <numbers>
#include <sstream>

#include <Eigen/Dense>

#include "flatlap/potential.hpp"
#include "oracles.hpp"

using namespace flatlap;

namespace {

double max_abs_diff(const LatticeFunction& f, const LatticeFunction& g) {
  double m = 0.0;
  for (int a = std::min(f.amin(), g.amin()); a <= std::max(f.amax(), g.amax()); ++a) {
    for (int b = std::min(f.bmin(), g.bmin()); b <= std::max(f.bmax(), g.bmax()); ++b) {
      m = std::max(m, std::abs(f(a, b) - g(a, b)));
    }
  }
  return m;
}

// Dense solve of the N x Z Green problem on QB(r, P).
std::map<std::pair<int, int>, double> dense_halfplane(int pa, int pb, int r) {
  std::vector<std::pair<int, int>> pts;
  const int reach = r * r + pa + 2;
  for (int a = 0; a <= reach; ++a)
    for (int b = pb - reach; b <= pb + reach; ++b)
      if (in_quasi_ball(a, b, pa, pb, r)) pts.push_back({a, b});
  std::map<std::pair<int, int>, int> index;
  for (std::size_t k = 0; k < pts.size(); ++k) index[pts[k]] = static_cast<int>(k);
  const int m = static_cast<int>(pts.size());
  Eigen::MatrixXd l = Eigen::MatrixXd::Zero(m, m);
  Eigen::VectorXd rhs = Eigen::VectorXd::Zero(m);
  for (int k = 0; k < m; ++k) {
    const auto [a, b] = pts[k];
    const std::pair<int, int> nbrs[4] = {{a + 1, b}, {a - 1, b}, {a, b + 1}, {a, b - 1}};
    for (const auto& q : nbrs) {
      if (q.first < 0) continue;
      l(k, k) += 1.0;
      if (auto it = index.find(q); it != index.end()) l(k, it->second) -= 1.0;
    }
    if (a == pa && b == pb) rhs(k) = 1.0;
  }
  const Eigen::VectorXd x = l.partialPivLu().solve(rhs);
  std::map<std::pair<int, int>, double> out;
  for (int k = 0; k < m; ++k) out[pts[k]] = x(k);
  return out;
}

}  // namespace

TEST_CASE("ball of radius 1 matches the 5 x 5 solve") {
  const auto g = green_ball(1);
  CHECK(g.support_size() == 5);
  // 4 G0 - 4 G1 = 1, 4 G1 - G0 = 0.
  CHECK(g(0, 0) == doctest::Approx(1.0 / 3).epsilon(1e-14));
  CHECK(g(1, 0) == doctest::Approx(1.0 / 12).epsilon(1e-14));
  CHECK(g(1, 1) == 0.0);
}

TEST_CASE("ball Green functions: residual, sign, maximum principle, monotonicity") {
  LatticeFunction prev;
  for (int n = 2; n <= 24; n += 1) {
    const auto g = green_ball(n);
    CHECK(ball_residual(g) <= 1e-10);
    double max = 0.0, min = 1.0;
    for (int a = -n; a <= n; ++a) {
      for (int b = -n; b <= n; ++b) {
        CHECK(g.in_support(a, b) == (a * a + b * b <= n * n));
        max = std::max(max, g(a, b));
        if (g.in_support(a, b)) min = std::min(min, g(a, b));
      }
    }
    CHECK(max == g(0, 0));
    CHECK(min > 0.0);
    if (n > 2) {
      for (int a = -n; a <= n; ++a)
        for (int b = -n; b <= n; ++b) CHECK(g(a, b) >= prev(a, b) - 1e-12);
    }
    prev = g;
  }
}

TEST_CASE("averaging iteration agrees with the direct solve") {
  for (int n : {1, 3, 6}) {
    CHECK(max_abs_diff(green_ball_iterative(n, 1e-14), green_ball(n)) < 1e-11);
  }
  CHECK_THROWS_AS(green_ball_iterative(10, 1e-14, 5), SolverError);
}

TEST_CASE("sphere maxima decay like 1/n") {
  for (int n : {16, 32}) {
    const double ratio = sphere_max(green_ball(2 * n), 2 * n) / sphere_max(green_ball(n), n);
    CHECK(ratio == doctest::Approx(0.5).epsilon(0.2));
  }
}

TEST_CASE("full-plane expansion") {
  SUBCASE("fitted constant is stable in n and deviations shrink") {
    const auto f64 = fullplane_asymptotic_check(64);
    const auto f128 = fullplane_asymptotic_check(128);
    CHECK(f64.samples > 0);
    CHECK(std::abs(f64.c - f128.c) < 1e-2);
    CHECK(f128.max_deviation < f64.max_deviation);
  }
  SUBCASE("axis and diagonal agree at equal radius up to O(1/|z|)") {
    const auto g = green_ball(128);
    // (20, 15) and (25, 0) have radius 25; (48, 36) and (60, 0) radius 60.
    const double d25 = std::abs(g(20, 15) - g(25, 0));
    const double d60 = std::abs(g(48, 36) - g(60, 0));
    CHECK(d25 < 5e-3);
    CHECK(d60 < d25);
  }
  CHECK_THROWS_AS(fullplane_asymptotic_check(4), ValidationError);
}

TEST_CASE("half-plane Green functions") {
  SUBCASE("residual") {
    for (int r : {2, 4, 7}) CHECK(halfplane_residual(green_halfplane(1, 0, r), 1, 0) <= 1e-10);
  }
  SUBCASE("row 0, r = 2 matches a dense solve") {
    const auto g = green_halfplane(0, 0, 2);
    const auto ref = dense_halfplane(0, 0, 2);
    CHECK(static_cast<std::size_t>(g.support_size()) == ref.size());
    for (const auto& [pt, v] : ref) CHECK(std::abs(g(pt.first, pt.second) - v) < 1e-12);
  }
  SUBCASE("general dense cross-check") {
    for (int pa : {0, 1, 3}) {
      const auto g = green_halfplane(pa, 2, 4);
      for (const auto& [pt, v] : dense_halfplane(pa, 2, 4)) CHECK(std::abs(g(pt.first, pt.second) - v) < 1e-10);
    }
  }
  SUBCASE("reflection principle") {
    for (int pa : {0, 1, 2, 5}) {
      CHECK(max_abs_diff(green_halfplane(pa, 0, 4), green_halfplane_by_reflection(pa, 0, 4)) < 1e-10);
    }
  }
  SUBCASE("far from the boundary the half-plane is invisible") {
    const int r = 12, pa = 40;
    const auto g = green_halfplane(pa, 3, r);
    for (int b = g.bmin(); b <= g.bmax(); ++b) CHECK_FALSE(g.in_support(0, b));
    CHECK(max_abs_diff(g, green_z2_on_quasi_ball(pa, 3, r)) <= 1e-8);
  }
}

TEST_CASE("corner flow") {
  const auto e = corner_flow(1);
  CHECK(corner_flow(8).east(0, 0) == doctest::Approx(0.5));
  CHECK(corner_flow(8).north(0, 0) == doctest::Approx(0.5));
  CHECK(corner_flow(8).divergence(0, 0) == doctest::Approx(-1.0));
  CHECK(e.east(5, 5) == 0.0);
  for (int n : {1, 2, 5, 64, 1024}) {
    CAPTURE(n);
    const auto flow = corner_flow(n);
    const auto check = check_corner_flow(flow);
    CHECK(check.max_divergence_error <= 1e-12);
    CHECK(check.squared_norm <= check.harmonic_bound);
    double h = 0.0;
    for (int i = 1; i <= n; ++i) h += 1.0 / i;
    CHECK(check.harmonic_bound == doctest::Approx(2 * h));
  }
  // Spot check of the closed form.
  const auto f = corner_flow(10);
  CHECK(f.east(2, 3) == doctest::Approx(3 * (1.0 / 6 - 1.0 / 7)));
  CHECK(f.north(2, 3) == doctest::Approx(1.0 / 7 - 2 * (1.0 / 6 - 1.0 / 7)));
}

TEST_CASE("convex barrier") {
  SUBCASE("zero on the singular set and -2 on straight runs") {
    const auto doc = oracle::load("lshape.surf");
    const auto g = DiscretizationGraph::build(doc.surface, doc.bundle, 8);
    const int reflex = doc.surface.cycle_of({0, Corner::NE});
    const auto rep = convex_barrier(g, reflex);
    for (int v : g.cone_neighbors(reflex)) CHECK(rep.h[v] == 0);
    CHECK(rep.checked > 0);
    CHECK(rep.violations.empty());
    CHECK(rep.max_laplacian <= -1);
  }
  for (const std::string name : {"lshape.surf", "pillowcase.surf", "unit_square.surf"}) {
    CAPTURE(name);
    const auto doc = oracle::load(name);
    for (int n : {4, 9, 16}) {
      const auto g = DiscretizationGraph::build(doc.surface, doc.bundle, n);
      for (int c : doc.surface.singular_points()) {
        const auto rep = convex_barrier(g, c);
        CHECK(rep.violations.empty());
      }
    }
  }
  SUBCASE("genus 2: the inequality holds up to the cut locus") {
    // Self-glued columns have circumference n, so fronts leaving the cone
    // upwards and downwards meet at distance n / 2.
    const auto doc = oracle::load("genus2.surf");
    for (int n : {4, 9, 16}) {
      const auto g = DiscretizationGraph::build(doc.surface, doc.bundle, n);
      const auto rep = convex_barrier(g, doc.surface.cone_points()[0]);
      CHECK_FALSE(rep.violations.empty());
      for (int v : rep.violations) CHECK(rep.distance[v] >= n / 2);
    }
  }
}

TEST_CASE("Harnack diagnostics") {
  SUBCASE("constants") {
    const auto doc = oracle::load("torus.surf");
    const auto g = DiscretizationGraph::build(doc.surface, doc.bundle, 16);
    const auto row = harnack_row(CVector::Ones(g.num_vertices()), g);
    CHECK(row.max_edge_gap == 0.0);
    CHECK(row.interior_sup == doctest::Approx(1.0));
    CHECK(row.sup_over_sqrt_log == doctest::Approx(1.0 / std::sqrt(std::log(16.0))));
  }
  SUBCASE("torus mode (1,0) matches the closed form") {
    const auto doc = oracle::load("torus.surf");
    for (int n : {8, 16, 32}) {
      const auto g = DiscretizationGraph::build(doc.surface, doc.bundle, n);
      CVector f(g.num_vertices());
      for (int v = 0; v < g.num_vertices(); ++v) f(v) = std::cos(2 * oracle::kPi * g.embed(v).x);
      // Squared norm n^2 makes the cosine amplitude sqrt(2).
      f *= n / f.norm();
      const auto row = harnack_row(f, g);
      const double predicted = torus_gap_prediction(f, g);
      CHECK(predicted == doctest::Approx(2 * std::sin(oracle::kPi / n) * std::sqrt(2.0)));
      // The largest sampled increment of the cosine is at most the prediction
      // and within the sampling error of it.
      CHECK(row.max_edge_gap <= predicted * (1 + 1e-12));
      CHECK(row.max_edge_gap >= predicted * std::cos(oracle::kPi / n));
    }
  }
  SUBCASE("L-shape second eigenvector") {
    const auto doc = oracle::load("lshape.surf");
    const auto rows = harnack_diagnostics(doc.surface, doc.bundle, 2, {8, 16, 32});
    for (std::size_t k = 1; k < rows.size(); ++k) CHECK(rows[k].max_edge_gap < rows[k - 1].max_edge_gap);
    for (const auto& r : rows) CHECK(std::isnan(r.predicted_gap));
  }
  SUBCASE("singular distance") {
    const auto doc = oracle::load("lshape.surf");
    const auto g = DiscretizationGraph::build(doc.surface, doc.bundle, 4);
    CHECK(singular_distance(g, g.vertex({0, 3, 3})) == doctest::Approx(std::sqrt(2.0) / 8));
    const auto t = oracle::load("torus.surf");
    const auto gt = DiscretizationGraph::build(t.surface, t.bundle, 4);
    CHECK(std::isinf(singular_distance(gt, 0)));
  }
}

TEST_CASE("lattice function export") {
  const auto g = green_ball(1);
  std::ostringstream os;
  g.write_csv(os);
  std::istringstream in(os.str());
  std::string line;
  std::getline(in, line);
  CHECK(line == "a,b,value");
  int rows = 0;
  while (std::getline(in, line)) ++rows;
  CHECK(rows == 5);
}
