#include "flatlap/spectral.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <deque>
#include <exception>
#include <limits>
#include <numbers>
#include <random>
#include <sstream>
#include <thread>

#include <Eigen/Eigenvalues>
#include <Eigen/SparseCholesky>
#include <fmt/format.h>

#include "flatlap/discretize.hpp"

namespace flatlap {

namespace {

constexpr double kPi = std::numbers::pi;

bool fingerprint_less(const CVector& a, const CVector& b) {
  for (Eigen::Index i = 0; i < a.size(); ++i) {
    if (a[i].real() != b[i].real()) return a[i].real() < b[i].real();
    if (a[i].imag() != b[i].imag()) return a[i].imag() < b[i].imag();
  }
  return false;
}

// Orders eigenpairs by value; vectors whose values agree to rounding are
// ordered by their phase-normalized coefficients. Values stay sorted.
void canonicalize(Eigenpairs& e) {
  const int k = static_cast<int>(e.values.size());
  for (int c = 0; c < k; ++c) normalize_phase(e.vectors.col(c));
  std::vector<int> order(k);
  for (int i = 0; i < k; ++i) order[i] = i;
  std::stable_sort(order.begin(), order.end(), [&](int x, int y) { return e.values[x] < e.values[y]; });
  const std::vector<int> by_value = order;
  int start = 0;
  while (start < k) {
    int end = start + 1;
    const double v0 = e.values[order[start]];
    while (end < k && std::abs(e.values[order[end]] - v0) <= 1e-12 * std::max(1.0, std::abs(v0))) ++end;
    std::stable_sort(order.begin() + start, order.begin() + end, [&](int x, int y) {
      return fingerprint_less(e.vectors.col(x), e.vectors.col(y));
    });
    start = end;
  }
  Eigenpairs out;
  out.solver = e.solver;
  out.iterations = e.iterations;
  out.vectors.resize(e.vectors.rows(), k);
  for (int i = 0; i < k; ++i) {
    out.values.push_back(e.values[by_value[i]]);
    out.residuals.push_back(e.residuals[order[i]]);
    out.vectors.col(i) = e.vectors.col(order[i]);
  }
  e = std::move(out);
}

Eigenpairs dense_eigenpairs(const SparseMatrix& a, int k) {
  const CMatrix d = CMatrix(a);
  Eigen::SelfAdjointEigenSolver<CMatrix> es(d);
  if (es.info() != Eigen::Success) throw SolverError("dense eigensolver failed");
  Eigenpairs e;
  e.solver = "dense";
  e.iterations = 1;
  e.vectors = es.eigenvectors().leftCols(k);
  for (int i = 0; i < k; ++i) {
    const double lam = es.eigenvalues()[i];
    e.values.push_back(lam);
    e.residuals.push_back((d * e.vectors.col(i) - lam * e.vectors.col(i)).norm());
  }
  return e;
}

// Appends the columns of w to the orthonormal basis q (with a*q in aq),
// after two rounds of classical Gram-Schmidt. Returns the number added.
int extend_basis(CMatrix& q, CMatrix& aq, CMatrix w, const SparseMatrix& a, CMatrix& last) {
  const Eigen::Index m = q.cols();
  for (int pass = 0; pass < 2 && m > 0; ++pass) w -= q * (q.adjoint() * w);
  std::vector<CVector> kept;
  for (Eigen::Index c = 0; c < w.cols(); ++c) {
    CVector v = w.col(c);
    const double before = v.norm();
    for (int pass = 0; pass < 2; ++pass) {
      for (const CVector& u : kept) v -= u * u.dot(v);
      if (m > 0) v -= q * (q.adjoint() * v);
    }
    const double after = v.norm();
    if (before == 0.0 || after <= 1e-10 * before) continue;
    kept.push_back(v / after);
  }
  const int add = static_cast<int>(kept.size());
  if (add == 0) return 0;
  q.conservativeResize(Eigen::NoChange, m + add);
  aq.conservativeResize(Eigen::NoChange, m + add);
  last.resize(q.rows(), add);
  for (int c = 0; c < add; ++c) {
    q.col(m + c) = kept[c];
    aq.col(m + c) = a * kept[c];
    last.col(c) = kept[c];
  }
  return add;
}

Eigenpairs iterative_eigenpairs(const SparseMatrix& a, int k, const EigenOptions& opt) {
  const Eigen::Index dim = a.rows();
  double diag_max = 0.0;
  for (Eigen::Index i = 0; i < dim; ++i) diag_max = std::max(diag_max, std::abs(a.coeff(i, i)));
  const double shift = 1e-5 * std::max(1.0, diag_max);

  SparseMatrix shifted = a;
  for (Eigen::Index i = 0; i < dim; ++i) shifted.coeffRef(i, i) += shift;
  Eigen::SimplicialLDLT<SparseMatrix, Eigen::Lower, Eigen::AMDOrdering<int>> ldlt(shifted);
  if (ldlt.info() != Eigen::Success) throw SolverError("sparse factorization of shifted operator failed");

  const int block = std::min<Eigen::Index>(dim, k + 4);
  const Eigen::Index max_basis = std::min<Eigen::Index>(dim, std::max(8 * block, 2 * k + 48));

  std::mt19937_64 rng(opt.seed);
  std::normal_distribution<double> normal(0.0, 1.0);
  CMatrix start(dim, block);
  for (Eigen::Index c = 0; c < block; ++c) {
    for (Eigen::Index i = 0; i < dim; ++i) start(i, c) = Complex(normal(rng), normal(rng));
  }

  Eigenpairs best;
  int steps = 0;
  for (int restart = 0; restart <= opt.max_restarts; ++restart) {
    CMatrix q(dim, 0), aq(dim, 0), last;
    extend_basis(q, aq, start, a, last);
    while (true) {
      CMatrix w(dim, last.cols());
      for (Eigen::Index c = 0; c < last.cols(); ++c) w.col(c) = ldlt.solve(CVector(last.col(c)));
      ++steps;
      const int added = extend_basis(q, aq, w, a, last);

      const Eigen::Index m = q.cols();
      if (m >= k) {
        CMatrix h = q.adjoint() * aq;
        h = 0.5 * (h + h.adjoint()).eval();
        Eigen::SelfAdjointEigenSolver<CMatrix> es(h);
        const CMatrix y = es.eigenvectors().leftCols(std::min<Eigen::Index>(m, block));
        const CMatrix x = q * y;
        const CMatrix ax = aq * y;
        Eigenpairs e;
        e.solver = "iterative";
        e.iterations = steps;
        e.vectors = x.leftCols(k);
        bool ok = true;
        for (int i = 0; i < k; ++i) {
          const double lam = es.eigenvalues()[i];
          const double res = (ax.col(i) - lam * x.col(i)).norm() / x.col(i).norm();
          e.values.push_back(lam);
          e.residuals.push_back(res);
          ok = ok && res <= opt.tol;
        }
        best = e;
        if (ok || m == dim) {
          if (!ok) break;
          return best;
        }
        if (added == 0 || m + block > max_basis) {
          start = x;
          break;
        }
      } else if (added == 0) {
        break;
      }
    }
  }
  std::ostringstream os;
  os << "iterative eigensolver did not reach tolerance " << opt.tol << " after " << steps
     << " block steps; worst residual ";
  double worst = 0.0;
  for (double r : best.residuals) worst = std::max(worst, r);
  os << worst;
  throw SolverError(os.str());
}

}  // namespace

void normalize_phase(Eigen::Ref<CVector> v) {
  const double m = v.cwiseAbs().maxCoeff();
  if (m == 0.0) return;
  for (Eigen::Index i = 0; i < v.size(); ++i) {
    if (std::abs(v[i]) > 1e-8 * m) {
      v *= std::conj(v[i]) / std::abs(v[i]);
      v[i] = Complex(v[i].real(), 0.0);
      return;
    }
  }
}

Eigenpairs lowest_eigenpairs(const SparseMatrix& a, int k, const EigenOptions& opt) {
  if (a.rows() != a.cols()) throw ValidationError("eigenproblem needs a square matrix");
  if (k < 1 || k > a.rows()) {
    throw ValidationError("requested " + std::to_string(k) + " eigenpairs of a " +
                          std::to_string(a.rows()) + "-dimensional operator");
  }
  if (!(opt.tol > 0.0)) throw ValidationError("eigensolver tolerance must be positive");
  Eigenpairs e = a.rows() <= opt.dense_threshold ? dense_eigenpairs(a, k) : iterative_eigenpairs(a, k, opt);
  canonicalize(e);
  return e;
}

SpectralReport spectrum(const SquareTiledSurface& s, const FlatUnitaryBundle& b, int n, int k,
                        const EigenOptions& opt) {
  const auto g = DiscretizationGraph::build(s, b, n);
  const auto e = lowest_eigenpairs(assemble_laplacian(g), k, opt);
  SpectralReport r;
  r.n = n;
  r.k = k;
  r.solver = e.solver;
  r.iterations = e.iterations;
  r.tolerance = opt.tol;
  for (double v : e.values) r.rescaled_eigs.push_back(static_cast<double>(n) * n * v);
  r.residual_norms = e.residuals;
  return r;
}

ReferenceModel ReferenceModel::parse(const std::string& spec) {
  const auto colon = spec.find(':');
  if (colon == std::string::npos) throw ValidationError("reference model must look like kind:params");
  const std::string kind = spec.substr(0, colon);
  std::vector<double> p;
  std::stringstream ss(spec.substr(colon + 1));
  std::string tok;
  while (std::getline(ss, tok, ',')) {
    try {
      std::size_t used = 0;
      p.push_back(std::stod(tok, &used));
      if (used != tok.size()) throw std::invalid_argument(tok);
    } catch (const std::exception&) {
      throw ValidationError("bad number '" + tok + "' in reference model");
    }
  }
  ReferenceModel m;
  if (kind == "rectangle" && p.size() == 2) {
    m.kind = Kind::Rectangle;
  } else if (kind == "torus" && p.size() == 4) {
    m.kind = Kind::Torus;
    m.alpha = p[2];
    m.beta = p[3];
  } else {
    throw ValidationError("unsupported reference model '" + spec + "'");
  }
  m.a = p[0];
  m.b = p[1];
  if (!(m.a > 0.0 && m.b > 0.0)) throw ValidationError("reference side lengths must be positive");
  if (m.kind == Kind::Torus && !(m.alpha >= 0.0 && m.alpha < 2 * kPi && m.beta >= 0.0 && m.beta < 2 * kPi)) {
    throw ValidationError("torus twists must lie in [0, 2pi)");
  }
  return m;
}

std::string ReferenceModel::describe() const {
  if (kind == Kind::Rectangle) return fmt::format("rectangle:{},{}", a, b);
  return fmt::format("torus:{},{},{},{}", a, b, alpha, beta);
}

std::vector<ReferenceMode> reference_modes(const ReferenceModel& m, int k) {
  if (k < 1) return {};
  std::vector<ReferenceMode> modes;
  if (m.kind == ReferenceModel::Kind::Rectangle) {
    for (int p = 0; p <= k; ++p) {
      for (int q = 0; q <= k; ++q) {
        modes.push_back({kPi * kPi * (p * p / (m.a * m.a) + q * q / (m.b * m.b)), p, q});
      }
    }
  } else {
    const double sa = m.alpha / (2 * kPi), sb = m.beta / (2 * kPi);
    for (int p = -k - 1; p <= k + 1; ++p) {
      for (int q = -k - 1; q <= k + 1; ++q) {
        const double x = (p - sa) / m.a, y = (q - sb) / m.b;
        modes.push_back({4 * kPi * kPi * (x * x + y * y), p, q});
      }
    }
  }
  std::stable_sort(modes.begin(), modes.end(), [](const ReferenceMode& x, const ReferenceMode& y) {
    if (x.value != y.value) return x.value < y.value;
    if (x.p != y.p) return x.p < y.p;
    return x.q < y.q;
  });
  modes.resize(k);
  return modes;
}

std::vector<double> reference_spectrum(const ReferenceModel& m, int k) {
  std::vector<double> out;
  for (const auto& mode : reference_modes(m, k)) out.push_back(mode.value);
  return out;
}

DevelopingMap develop(const SquareTiledSurface& s, const FlatUnitaryBundle& b) {
  const int ns = s.num_squares();
  DevelopingMap d;
  d.offset.assign(ns, {0.0, 0.0});
  d.frame.assign(ns, CMatrix());
  std::vector<bool> seen(ns, false);
  std::deque<int> queue{0};
  seen[0] = true;
  d.frame[0] = CMatrix::Identity(b.rank(), b.rank());
  while (!queue.empty()) {
    const int q = queue.front();
    queue.pop_front();
    for (int side = 0; side < 4; ++side) {
      const Side sd = static_cast<Side>(side);
      const auto x = s.across({q, sd});
      if (!x) continue;
      if (x->iso != Isometry::Translation) {
        throw ValidationError("developing map needs a surface glued by translations only");
      }
      const int t = x->other.square;
      if (seen[t]) continue;
      seen[t] = true;
      const auto dir = side_direction(sd);
      d.offset[t] = {d.offset[q][0] + dir[0], d.offset[q][1] + dir[1]};
      d.frame[t] = b.crossing_transport(*x) * d.frame[q];
      queue.push_back(t);
    }
  }
  for (int q = 0; q < ns; ++q) {
    if (!seen[q]) throw ValidationError("surface is not connected");
  }
  return d;
}

SectionFunction reference_eigenfunction(const ReferenceModel& m, const ReferenceMode& mode,
                                        const DevelopingMap& dev) {
  if (dev.frame.empty() || dev.frame[0].rows() != 1) {
    throw ValidationError("reference eigenfunctions are available for rank 1 only");
  }
  if (m.kind == ReferenceModel::Kind::Rectangle) {
    const double ca = mode.p == 0 ? m.a : m.a / 2, cb = mode.q == 0 ? m.b : m.b / 2;
    const double scale = 1.0 / std::sqrt(ca * cb);
    return [=](const SurfacePoint& pt) {
      const double X = dev.offset[pt.square][0] + pt.x, Y = dev.offset[pt.square][1] + pt.y;
      CVector v(1);
      v[0] = dev.frame[pt.square](0, 0) * scale * std::cos(mode.p * kPi * X / m.a) *
             std::cos(mode.q * kPi * Y / m.b);
      return v;
    };
  }
  const double kx = 2 * kPi * (mode.p - m.alpha / (2 * kPi)) / m.a;
  const double ky = 2 * kPi * (mode.q - m.beta / (2 * kPi)) / m.b;
  const double scale = 1.0 / std::sqrt(m.a * m.b);
  return [=](const SurfacePoint& pt) {
    const double X = dev.offset[pt.square][0] + pt.x, Y = dev.offset[pt.square][1] + pt.y;
    CVector v(1);
    v[0] = dev.frame[pt.square](0, 0) * scale * std::exp(Complex(0.0, kx * X + ky * Y));
    return v;
  };
}

double relative_error(double value, double reference) {
  if (std::abs(reference) < 1e-12) return std::abs(value);
  return std::abs(value - reference) / std::abs(reference);
}

RichardsonResult richardson_extrapolate(const std::vector<std::pair<int, double>>& values,
                                        double order_guess) {
  RichardsonResult res;
  std::vector<std::pair<int, double>> pts = values;
  std::sort(pts.begin(), pts.end());
  pts.erase(std::unique(pts.begin(), pts.end(),
                        [](const auto& x, const auto& y) { return x.first == y.first; }),
            pts.end());
  if (pts.size() < 3) throw ValidationError("Richardson extrapolation needs three distinct n");

  // For fixed p the model is linear in (lambda, c).
  auto fit = [&pts](double p, const std::vector<std::pair<int, double>>& use, double& lam,
                    double& c) {
    double s1 = 0, sx = 0, sxx = 0, sy = 0, sxy = 0;
    for (const auto& [n, y] : use) {
      const double x = std::pow(static_cast<double>(n), -p);
      s1 += 1;
      sx += x;
      sxx += x * x;
      sy += y;
      sxy += x * y;
    }
    const double det = s1 * sxx - sx * sx;
    if (std::abs(det) < 1e-300) {
      lam = sy / s1;
      c = 0;
    } else {
      c = (s1 * sxy - sx * sy) / det;
      lam = (sy - c * sx) / s1;
    }
    double rss = 0;
    for (const auto& [n, y] : pts) {
      const double r = lam + c * std::pow(static_cast<double>(n), -p) - y;
      rss += r * r;
    }
    return std::sqrt(rss / pts.size());
  };

  const double lo = 0.05, hi = 8.0;
  double best_p = order_guess, lam = 0, c = 0;
  double best = fit(best_p, pts, lam, c);
  for (double p = lo; p <= hi; p += 0.01) {
    const double r = fit(p, pts, lam, c);
    if (r < best) {
      best = r;
      best_p = p;
    }
  }
  double a = std::max(lo, best_p - 0.01), b = std::min(hi, best_p + 0.01);
  const double gr = (std::sqrt(5.0) - 1) / 2;
  for (int it = 0; it < 200 && b - a > 1e-14; ++it) {
    const double x1 = b - gr * (b - a), x2 = a + gr * (b - a);
    if (fit(x1, pts, lam, c) < fit(x2, pts, lam, c)) {
      b = x2;
    } else {
      a = x1;
    }
  }
  res.p = 0.5 * (a + b);
  res.residual = fit(res.p, pts, res.lambda, res.c);
  double lam2 = 0, c2 = 0;
  const std::vector<std::pair<int, double>> tail(pts.end() - 2, pts.end());
  fit(res.p, tail, lam2, c2);
  // Three points fit exactly, so the step from the finest value is included.
  res.uncertainty = std::max({std::abs(res.lambda - lam2), res.residual, std::abs(res.lambda - pts.back().second)});
  const double scale = std::max(1.0, std::abs(res.lambda));
  res.degenerate = std::abs(res.c) <= 1e-13 * scale || res.p <= lo + 1e-6 || res.p >= hi - 1e-6;
  return res;
}

std::vector<ConvergenceRow> convergence_table(const SquareTiledSurface& s,
                                              const FlatUnitaryBundle& b, int k,
                                              const std::vector<int>& ns,
                                              const std::optional<ReferenceModel>& model,
                                              const EigenOptions& opt, int jobs) {
  for (std::size_t t = 0; t < ns.size(); ++t) {
    if (ns[t] < 2) throw ValidationError("convergence schedule needs n >= 2");
    if (t > 0 && ns[t] <= ns[t - 1]) throw ValidationError("convergence schedule must increase");
  }
  const int count = static_cast<int>(ns.size());
  std::vector<std::optional<SpectralReport>> reports(count);
  std::atomic<int> next{0};
  auto worker = [&]() {
    for (int t = next++; t < count; t = next++) {
      try {
        reports[t] = spectrum(s, b, ns[t], k, opt);
      } catch (const SolverError&) {
        reports[t].reset();
      }
    }
  };
  const int workers = std::max(1, std::min(jobs, count));
  std::vector<std::thread> pool;
  for (int w = 1; w < workers; ++w) pool.emplace_back(worker);
  worker();
  for (auto& th : pool) th.join();

  std::vector<double> limits(k, std::numeric_limits<double>::quiet_NaN());
  if (model) {
    limits = reference_spectrum(*model, k);
  } else {
    for (int i = 0; i < k; ++i) {
      std::vector<std::pair<int, double>> pts;
      for (int t = 0; t < count; ++t) {
        if (reports[t]) pts.emplace_back(ns[t], reports[t]->rescaled_eigs[i]);
      }
      if (pts.size() >= 3) limits[i] = richardson_extrapolate(pts).lambda;
    }
  }

  const double nan = std::numeric_limits<double>::quiet_NaN();
  std::vector<ConvergenceRow> rows;
  std::vector<double> prev_err(k, nan);
  std::vector<int> prev_n(k, 0);
  for (int t = 0; t < count; ++t) {
    for (int i = 0; i < k; ++i) {
      ConvergenceRow row;
      row.n = ns[t];
      row.i = i + 1;
      row.lambda_ref = limits[i];
      row.order = nan;
      if (!reports[t]) {
        row.lambda_n = nan;
        row.abs_err = nan;
        row.flagged = true;
        rows.push_back(row);
        continue;
      }
      row.lambda_n = reports[t]->rescaled_eigs[i];
      row.abs_err = std::abs(row.lambda_n - row.lambda_ref);
      if (std::isfinite(prev_err[i]) && prev_err[i] > 0 && row.abs_err > 0) {
        row.order = std::log(prev_err[i] / row.abs_err) / std::log(static_cast<double>(row.n) / prev_n[i]);
      }
      prev_err[i] = row.abs_err;
      prev_n[i] = row.n;
      rows.push_back(row);
    }
  }
  return rows;
}

}  // namespace flatlap
