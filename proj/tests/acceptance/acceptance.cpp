// Acceptance suite: one PASS/FAIL line per criterion.
#include <chrono>
#include <climits>
#include <cmath>
#include <cstdio>
#include <functional>
#include <numbers>
#include <random>
#include <string>
#include <vector>

#include <fmt/core.h>

#include "flatlap/crsf.hpp"
#include "flatlap/interp.hpp"
#include "flatlap/operators.hpp"
#include "flatlap/potential.hpp"
#include "flatlap/spectral.hpp"
#include "oracles.hpp"

using namespace flatlap;

namespace {

constexpr double kPi = std::numbers::pi;
constexpr double kEulerGamma = 0.57721566490153286061;

struct Outcome {
  bool pass = true;
  std::string detail;
  void require(bool ok, const std::string& what) {
    if (!ok) pass = false;
    if (!detail.empty()) detail += "; ";
    detail += (ok ? "" : "!") + what;
  }
};

DiscretizationGraph graph(const SurfaceDocument& doc, int n) {
  return DiscretizationGraph::build(doc.surface, doc.bundle, n);
}

CVector random_section(int dim, std::mt19937_64& rng) {
  std::normal_distribution<double> g;
  CVector f(dim);
  for (int k = 0; k < dim; ++k) f(k) = Complex(g(rng), g(rng));
  return f;
}

Outcome eigenvalue_convergence() {
  Outcome out;
  const auto doc = oracle::load("rectangle_2x1.surf");
  const auto rows =
      convergence_table(doc.surface, doc.bundle, 6, {8, 16, 32, 64}, ReferenceModel::parse("rectangle:2,1"));
  for (int i = 1; i <= 6; ++i) {
    std::vector<ConvergenceRow> mine;
    for (const auto& r : rows)
      if (r.i == i) mine.push_back(r);
    bool decreasing = true;
    for (std::size_t k = 1; k < mine.size(); ++k) {
      if (i > 1 && !(mine[k].abs_err < mine[k - 1].abs_err)) decreasing = false;
      if (i == 1 && mine[k].abs_err > 1e-8) decreasing = false;
    }
    const double rel = relative_error(mine.back().lambda_n, mine.back().lambda_ref);
    double min_order = INFINITY;
    for (std::size_t k = 1; k < mine.size(); ++k) min_order = std::min(min_order, mine[k].order);
    out.require(decreasing, fmt::format("i={} decreasing", i));
    out.require(rel <= 1e-2, fmt::format("i={} rel@64={:.2e}", i, rel));
    if (i >= 2 && i <= 4) out.require(min_order >= 1.5, fmt::format("i={} order>={:.3f}", i, min_order));
  }
  return out;
}

Outcome twisted_convergence() {
  Outcome out;
  const auto doc = oracle::load("torus_twist_pi.surf");
  const auto model = ReferenceModel::parse("torus:1,1,3.141592653589793,0");
  const double ref = reference_spectrum(model, 1)[0];
  out.require(std::abs(ref - kPi * kPi) < 1e-12, fmt::format("lambda_1={:.12f}", ref));
  double lowest = INFINITY;
  double rel64 = 0.0;
  for (int n : {8, 16, 32, 64}) {
    const double l1 = spectrum(doc.surface, doc.bundle, n, 1).rescaled_eigs[0];
    lowest = std::min(lowest, l1);
    if (n == 64) rel64 = std::abs(l1 - ref) / ref;
  }
  out.require(rel64 <= 1e-2, fmt::format("rel@64={:.2e}", rel64));
  out.require(lowest >= kPi * kPi / 2, fmt::format("min lambda_1^n={:.4f}", lowest));
  return out;
}

Outcome eigenvector_convergence_check() {
  Outcome out;
  const auto doc = oracle::load("unit_square.surf");
  const auto rows = eigenvector_convergence(doc.surface, doc.bundle, ReferenceModel::parse("rectangle:1,1"), 2,
                                            {8, 16, 32, 64});
  bool decreasing = true;
  for (std::size_t k = 1; k < rows.size(); ++k)
    if (!(rows[k].aligned_error < rows[k - 1].aligned_error)) decreasing = false;
  std::string errs;
  for (const auto& r : rows) errs += fmt::format("{}{:.3e}", errs.empty() ? "" : ",", r.aligned_error);
  out.require(rows.size() == 4 && rows.back().multiplicity == 2, "group {pi^2, pi^2}");
  out.require(decreasing, "decreasing [" + errs + "]");
  out.require(rows.back().aligned_error <= 5e-2, fmt::format("err@64={:.3e}", rows.back().aligned_error));
  for (const auto& r : rows) out.require(!r.flagged, fmt::format("n={} separated", r.n));
  return out;
}

Outcome energy_identity() {
  Outcome out;
  std::mt19937_64 rng(42);
  double worst = 0.0;
  for (const char* name : {"torus.surf", "lshape.surf", "pillowcase.surf"}) {
    const auto doc = oracle::load(name);
    for (int n : {4, 8}) {
      const auto g = graph(doc, n);
      const auto d = gradient(g);
      const int dim = g.num_vertices() * g.rank();
      for (int trial = 0; trial < 20; ++trial) {
        const CVector f = average(random_section(dim, rng), g);
        const CVector h = average(random_section(dim, rng), g);
        const Complex discrete = inner(CVector(d * f), CVector(d * h));
        const Complex continuum = dirichlet_energy(linearize(f, g), linearize(h, g));
        const double ef = CVector(d * f).squaredNorm(), eh = CVector(d * h).squaredNorm();
        worst = std::max(worst, std::abs(discrete - continuum) / (1 + ef + eh));
      }
    }
  }
  out.require(worst <= 1e-12, fmt::format("max scaled gap={:.2e}", worst));
  return out;
}

Outcome operator_algebra() {
  Outcome out;
  double dd = 0.0, herm = 0.0, lo = INFINITY, hi = -INFINITY;
  bool kernel_ok = true, bound_ok = true;
  for (const char* name : {"torus.surf", "torus_twist_pi.surf", "torus_twist_half_pi.surf", "unit_square.surf",
                           "rectangle_2x1.surf", "lshape.surf", "pillowcase.surf", "genus2.surf"}) {
    const auto doc = oracle::load(name);
    for (int n : {1, 2, 4}) {
      const auto g = graph(doc, n);
      const auto a = assemble_laplacian(g);
      dd = std::max(dd, max_entry_difference(a, SparseMatrix(divergence(g) * gradient(g))));
      herm = std::max(herm, hermitian_defect(a));
      const auto ev = oracle::dense_spectrum(a);
      lo = std::min(lo, ev.front());
      hi = std::max(hi, ev.back());
      const int r = doc.bundle.rank();
      if (ev.front() < -1e-10 || ev.back() > 8.0 * r + 1e-10) bound_ok = false;
      if (doc.surface.closed() && doc.bundle.is_trivial()) {
        int zeros = 0;
        for (double x : ev) zeros += std::abs(x) < 1e-10;
        if (zeros != r) kernel_ok = false;
      }
    }
  }
  out.require(dd <= 1e-13, fmt::format("|L - D*D|={:.1e}", dd));
  out.require(herm <= 1e-13, fmt::format("|L - L^H|={:.1e}", herm));
  out.require(bound_ok, fmt::format("spectrum in [{:.2e}, {:.4f}]", lo, hi));
  out.require(kernel_ok, "kernel dim = r");
  return out;
}

Outcome consistency() {
  Outcome out;
  const auto doc = oracle::load("unit_square.surf");
  const SectionFunction f = [](const SurfacePoint& p) {
    return CVector::Constant(1, std::cos(kPi * p.x) * std::cos(kPi * p.y));
  };
  const SectionFunction lap = [](const SurfacePoint& p) {
    return CVector::Constant(1, 2 * kPi * kPi * std::cos(kPi * p.x) * std::cos(kPi * p.y));
  };
  ConsistencyResidual r32, r64;
  for (int n : {32, 64}) {
    const auto g = graph(doc, n);
    (n == 32 ? r32 : r64) = consistency_residual(f, lap, g, assemble_laplacian(g));
  }
  // Boundary-adjacent vertices: edge and corner classes together.
  const double b32 = std::max(r32.edge, r32.corner), b64 = std::max(r64.edge, r64.corner);
  const double rb = b64 / b32, ri = r64.interior / r32.interior;
  out.require(rb >= 0.4 && rb <= 0.6, fmt::format("boundary ratio={:.4f}", rb));
  out.require(ri >= 0.2 && ri <= 0.3, fmt::format("interior ratio={:.4f}", ri));
  out.require(r64.all * 64 <= r32.all * 32 * 1.05, fmt::format("n*max residual {:.3f} -> {:.3f}", 32 * r32.all,
                                                               64 * r64.all));
  return out;
}

Outcome corner_flow_check() {
  Outcome out;
  const auto c = check_corner_flow(corner_flow(1024));
  out.require(c.max_divergence_error <= 1e-12, fmt::format("div err={:.1e}", c.max_divergence_error));
  out.require(c.squared_norm <= c.harmonic_bound,
              fmt::format("|E|^2={:.6f} <= 2H_n={:.6f}", c.squared_norm, c.harmonic_bound));
  return out;
}

Outcome barrier() {
  Outcome out;
  for (const char* name : {"lshape.surf", "pillowcase.surf"}) {
    const auto doc = oracle::load(name);
    const auto g = graph(doc, 16);
    int checked = 0, violations = 0;
    long long worst = LLONG_MIN;
    for (int c : doc.surface.singular_points()) {
      const auto rep = convex_barrier(g, c);
      checked += rep.checked;
      violations += static_cast<int>(rep.violations.size());
      worst = std::max(worst, rep.max_laplacian);
    }
    out.require(violations == 0 && checked > 0,
                fmt::format("{}: {} checked, {} violations, max Lh={}", name, checked, violations, worst));
  }
  return out;
}

Outcome green() {
  Outcome out;
  for (int n : {16, 64, 128}) {
    const auto g = green_ball(n);
    const double res = ball_residual(g);
    bool max_ok = true;
    for (int a = -n; a <= n; ++a)
      for (int b = -n; b <= n; ++b)
        if (g(a, b) > g(0, 0)) max_ok = false;
    out.require(res <= 1e-10 && max_ok, fmt::format("(a) n={} residual={:.1e}", n, res));
  }
  for (int n : {16, 32}) {
    const double ratio = sphere_max(green_ball(2 * n), 2 * n) / sphere_max(green_ball(n), n);
    out.require(ratio >= 0.35 && ratio <= 0.65, fmt::format("(b) n={} ratio={:.4f}", n, ratio));
  }
  const auto fit = fullplane_asymptotic_check(128);
  const double target = -kEulerGamma / (2 * kPi);
  out.require(std::abs(fit.c - target) <= 1e-2, fmt::format("(c) c={:.5f} vs {:.5f}", fit.c, target));
  const int pa = 40, pb = 0, r = 12;
  double diff = 0.0;
  const auto h = green_halfplane(pa, pb, r);
  const auto z = green_z2_on_quasi_ball(pa, pb, r);
  for (int a = h.amin(); a <= h.amax(); ++a)
    for (int b = h.bmin(); b <= h.bmax(); ++b) diff = std::max(diff, std::abs(h(a, b) - z(a, b)));
  out.require(diff <= 1e-8, fmt::format("(d) interior diff={:.1e}", diff));
  return out;
}

Outcome harnack() {
  Outcome out;
  for (const char* name : {"torus.surf", "lshape.surf"}) {
    const auto doc = oracle::load(name);
    const auto rows = harnack_diagnostics(doc.surface, doc.bundle, 2, {8, 16, 32, 64});
    bool decreasing = true;
    for (std::size_t k = 1; k < rows.size(); ++k)
      if (!(rows[k].max_edge_gap < rows[k - 1].max_edge_gap)) decreasing = false;
    std::string gaps;
    for (const auto& r : rows) gaps += fmt::format("{}{:.4f}", gaps.empty() ? "" : ",", r.max_edge_gap);
    out.require(decreasing, fmt::format("{} gaps [{}]", name, gaps));
    if (std::string(name) == "torus.surf") {
      double worst = 0.0;
      for (const auto& r : rows) worst = std::max(worst, std::abs(r.max_edge_gap - r.predicted_gap) / r.predicted_gap);
      out.require(worst <= 0.1, fmt::format("torus prediction gap={:.2e}", worst));
    }
  }
  return out;
}

Outcome forman() {
  Outcome out;
  std::mt19937_64 rng(42);
  std::uniform_int_distribution<int> nv(1, 7), ne(0, 12);
  int failures = 0;
  double worst = 0.0;
  for (int trial = 0; trial < 200; ++trial) {
    const int v = nv(rng), e = ne(rng);
    const auto g = random_connection_graph(v, e, rng());
    const double gap = std::abs(determinant(g) - crsf_sum(g));
    worst = std::max(worst, gap);
    if (gap > 1e-9) ++failures;
  }
  out.require(failures == 0, fmt::format("{} failures, max gap={:.1e}", failures, worst));
  return out;
}

Outcome censuses() {
  Outcome out;
  const auto pillow = oracle::load("pillowcase.surf");
  int pi_cones = 0;
  for (int c : pillow.surface.cone_points()) pi_cones += pillow.surface.vertex_cycles()[c].quarter_turns() == 2;
  out.require(pi_cones == 4 && pillow.surface.cone_points().size() == 4, "pillowcase 4 cones of angle pi");
  bool doubled = true;
  for (int n = 2; n <= 16; ++n) doubled = doubled && graph(pillow, n).doubled_edge_count() == 4;
  out.require(doubled, "doubled edges = 4 for n in 2..16");
  const auto lshape = oracle::load("lshape.surf");
  const int reflex = lshape.surface.cycle_of({0, Corner::NE});
  bool three = true;
  for (int n : {2, 4, 8, 16}) three = three && graph(lshape, n).cone_neighbors(reflex).size() == 3;
  out.require(three, "#V_n(reflex) = 3");
  bool gb = true;
  for (const char* name : {"torus.surf", "torus_twist_pi.surf", "torus_twist_half_pi.surf", "unit_square.surf",
                           "rectangle_2x1.surf", "lshape.surf", "pillowcase.surf", "genus2.surf",
                           "broken_pillowcase.surf"}) {
    const auto s = oracle::load(name).surface;
    gb = gb && s.curvature_quarter_turns() == 4 * s.euler_characteristic();
  }
  out.require(gb, "Gauss-Bonnet on all example surfaces");
  return out;
}

}  // namespace

int main() {
  const std::vector<std::pair<std::string, std::function<Outcome()>>> criteria = {
      {"eigenvalue convergence", eigenvalue_convergence},
      {"twisted-bundle convergence", twisted_convergence},
      {"eigenvector convergence", eigenvector_convergence_check},
      {"energy identity", energy_identity},
      {"operator algebra", operator_algebra},
      {"finite-difference consistency", consistency},
      {"corner flow", corner_flow_check},
      {"barrier", barrier},
      {"Green functions", green},
      {"Harnack diagnostics", harnack},
      {"Forman identity", forman},
      {"structural censuses", censuses},
  };
  int failed = 0;
  for (std::size_t k = 0; k < criteria.size(); ++k) {
    const auto start = std::chrono::steady_clock::now();
    Outcome o;
    try {
      o = criteria[k].second();
    } catch (const std::exception& e) {
      o.pass = false;
      o.detail = std::string("exception: ") + e.what();
    }
    const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    fmt::print("{} {:2d} {}: {} ({:.1f}s)\n", o.pass ? "PASS" : "FAIL", k + 1, criteria[k].first, o.detail, secs);
    std::fflush(stdout);
    failed += !o.pass;
  }
  fmt::print("{} of {} criteria passed\n", criteria.size() - failed, criteria.size());
  return failed == 0 ? 0 : 1;
}
