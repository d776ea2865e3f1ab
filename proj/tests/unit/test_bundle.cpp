#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <complex>
#include <random>

#include <Eigen/QR>

#include "flatlap/bundle.hpp"
#include "oracles.hpp"

using namespace flatlap;

namespace {

CMatrix random_unitary(int r, std::mt19937_64& rng) {
  std::normal_distribution<double> g;
  CMatrix m(r, r);
  for (int i = 0; i < r; ++i)
    for (int j = 0; j < r; ++j) m(i, j) = Complex(g(rng), g(rng));
  Eigen::HouseholderQR<CMatrix> qr(m);
  return qr.householderQ() * CMatrix::Identity(r, r);
}

CMatrix phase(double theta) { return CMatrix::Constant(1, 1, std::polar(1.0, theta)); }

}  // namespace

TEST_CASE("trivial bundle has identity monodromy on every cycle") {
  for (const char* name : {"torus.surf", "pillowcase.surf", "genus2.surf", "lshape.surf"}) {
    const auto s = oracle::load(name).surface;
    const auto b = FlatUnitaryBundle::trivial(s, 3);
    CHECK(b.is_trivial());
    for (const auto& c : s.vertex_cycles()) {
      if (!c.interior) continue;
      CHECK(max_abs_entry(cycle_monodromy(s, b, c) - CMatrix::Identity(3, 3)) == 0.0);
    }
    CHECK(validate_cone_monodromy(s, b).ok());
  }
}

TEST_CASE("torus generator loops pick up the seam phases") {
  const auto s = oracle::load("torus.surf").surface;
  const double alpha = 0.7, beta = -1.9;
  const auto b = FlatUnitaryBundle::build(s, 1, {{0, phase(alpha)}, {1, phase(beta)}});
  const Complex ea = std::polar(1.0, alpha), eb = std::polar(1.0, beta);
  CHECK(std::abs(monodromy(s, b, {{0, Side::E}})(0, 0) - ea) < 1e-15);
  CHECK(std::abs(monodromy(s, b, {{0, Side::W}})(0, 0) - std::conj(ea)) < 1e-15);
  CHECK(std::abs(monodromy(s, b, {{0, Side::N}})(0, 0) - eb) < 1e-15);
  CHECK(validate_cone_monodromy(s, b).ok());
  // Homotopic loops E then N and N then E agree.
  const Complex en = monodromy(s, b, {{0, Side::E}, {0, Side::N}})(0, 0);
  const Complex ne = monodromy(s, b, {{0, Side::N}, {0, Side::E}})(0, 0);
  CHECK(std::abs(en - ne) < 1e-15);
  CHECK(std::abs(en - ea * eb) < 1e-15);
  // E, N, W, S bounds a face and is null-homotopic.
  const Complex face = monodromy(s, b, {{0, Side::E}, {0, Side::N}, {0, Side::W}, {0, Side::S}})(0, 0);
  CHECK(std::abs(face - 1.0) < 1e-15);
}

TEST_CASE("monodromy of a walk followed by its reverse is the identity") {
  const auto s = oracle::load("genus2.surf").surface;
  std::mt19937_64 rng(7);
  std::map<int, CMatrix> u;
  for (int k = 0; k < static_cast<int>(s.seams().size()); ++k) u[k] = random_unitary(2, rng);
  const auto b = FlatUnitaryBundle::build(s, 2, u);
  std::uniform_int_distribution<int> dir(0, 3);
  for (int trial = 0; trial < 20; ++trial) {
    std::vector<SideRef> exits;
    std::vector<SideRef> entries;
    int square = 0;
    for (int step = 0; step < 12; ++step) {
      const SideRef out{square, static_cast<Side>(dir(rng))};
      const auto x = s.across(out);
      REQUIRE(x.has_value());
      exits.push_back(out);
      entries.push_back(x->other);
      square = x->other.square;
    }
    for (auto it = entries.rbegin(); it != entries.rend(); ++it) exits.push_back(*it);
    const CMatrix m = monodromy(s, b, exits);
    CHECK(max_abs_entry(m - CMatrix::Identity(2, 2)) < 1e-12);
    CHECK(unitarity_defect(m) < 1e-12);
  }
}

TEST_CASE("non-commuting torus transports break flatness at the regular vertex") {
  const auto s = oracle::load("torus.surf").surface;
  CMatrix a(2, 2), c(2, 2);
  a << 0, 1, 1, 0;
  c << 1, 0, 0, -1;
  const auto bad = FlatUnitaryBundle::build(s, 2, {{0, a}, {1, c}});
  const auto report = validate_cone_monodromy(s, bad);
  REQUIRE(report.violations.size() == 1);
  CHECK(report.max_defect == doctest::Approx(2.0));
  CHECK_THROWS_AS(require_flat(s, bad), ValidationError);
  const auto good = FlatUnitaryBundle::build(s, 2, {{0, c}, {1, c}});
  CHECK(validate_cone_monodromy(s, good).ok());
}

TEST_CASE("broken pillowcase bundle is rejected at a cone cycle") {
  const auto doc = oracle::load("broken_pillowcase.surf");
  const auto& s = doc.surface;
  const auto report = validate_cone_monodromy(s, doc.bundle);
  REQUIRE_FALSE(report.ok());
  for (const auto& v : report.violations) {
    CHECK(s.vertex_cycles()[v.cycle].quarter_turns() == 2);
    // |e^{i pi/3} - 1| = 1.
    CHECK(v.defect == doctest::Approx(1.0).epsilon(1e-12));
  }
  CHECK_THROWS_AS(require_flat(s, doc.bundle), ValidationError);
}

TEST_CASE("pillowcase flat bundles are gauge-trivial") {
  // A frame change by e^{0.4i} on square 1 multiplies every seam by that phase.
  const auto s = oracle::load("pillowcase.surf").surface;
  const auto gauge = FlatUnitaryBundle::build(s, 1, {{0, phase(0.4)}, {1, phase(0.4)}, {2, phase(0.4)}, {3, phase(0.4)}});
  CHECK(validate_cone_monodromy(s, gauge).ok());
  // A phase on the translation seams alone is seen by every cone cycle.
  const auto bad = FlatUnitaryBundle::build(s, 1, {{2, phase(0.4)}, {3, phase(-0.4)}});
  CHECK(validate_cone_monodromy(s, bad).violations.size() == 4);
}

TEST_CASE("bundle construction rejects bad data") {
  const auto s = oracle::load("torus.surf").surface;
  CHECK_THROWS_AS(FlatUnitaryBundle::build(s, 1, {{5, phase(0.0)}}), ValidationError);
  CHECK_THROWS_AS(FlatUnitaryBundle::build(s, 2, {{0, phase(0.0)}}), ValidationError);
  CHECK_THROWS_AS(FlatUnitaryBundle::build(s, 1, {{0, CMatrix::Constant(1, 1, 1.5)}}), ValidationError);
  CHECK_THROWS_AS(FlatUnitaryBundle::trivial(s, 0), ValidationError);
  CHECK_THROWS_AS(parse_surface("squares: 1\nglue: (0,E) (0,W) translation\nrank: 1\ntransport: 0 2+0i\n"),
                  ValidationError);
  CHECK_THROWS_AS(parse_surface("squares: 1\nglue: (0,E) (0,W) translation\nrank: 2\ntransport: 0 1 0 0\n"),
                  ParseError);
}

TEST_CASE("open walks and free sides are rejected") {
  const auto s = oracle::load("lshape.surf").surface;
  const auto b = FlatUnitaryBundle::trivial(s, 1);
  CHECK_THROWS_AS(monodromy(s, b, {{0, Side::W}}), ValidationError);
  CHECK_THROWS_AS(monodromy(s, b, {{0, Side::E}}), ValidationError);
  CHECK(max_abs_entry(monodromy(s, b, {{0, Side::E}, {1, Side::W}}) - CMatrix::Identity(1, 1)) == 0.0);
}
