#pragma once

#include <array>
#include <cstdint>
#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "flatlap/bundle.hpp"
#include "flatlap/common.hpp"
#include "flatlap/operators.hpp"
#include "flatlap/surface.hpp"

namespace flatlap {

inline constexpr int kDenseThreshold = 2000;

struct EigenOptions {
  double tol = 1e-10;          // residual bound on ||Ax - lambda x|| for unit x
  std::uint64_t seed = 42;     // start block of the iterative path
  int max_restarts = 60;
  int dense_threshold = kDenseThreshold;
};

struct Eigenpairs {
  std::vector<double> values;  // ascending
  CMatrix vectors;             // unit columns, phase-normalized
  std::vector<double> residuals;
  std::string solver;          // "dense" or "iterative"
  int iterations = 0;
};

/// k smallest eigenpairs of a Hermitian positive semidefinite matrix.
/// Throws SolverError when the iterative path fails to converge.
Eigenpairs lowest_eigenpairs(const SparseMatrix& a, int k, const EigenOptions& opt = {});

/// Rotates the first entry with modulus above 1e-8 * max modulus to the
/// positive real axis.
void normalize_phase(Eigen::Ref<CVector> v);

struct SpectralReport {
  int n = 0;
  int k = 0;
  std::vector<double> rescaled_eigs;  // n^2 * eigenvalue
  std::vector<double> residual_norms;
  std::string solver;
  int iterations = 0;
  double tolerance = 0.0;
};

/// Spectrum of n^2 times the Laplacian of the level-n discretization.
SpectralReport spectrum(const SquareTiledSurface& s, const FlatUnitaryBundle& b, int n, int k,
                        const EigenOptions& opt = {});

/// Analytic models with closed-form spectra.
struct ReferenceModel {
  enum class Kind { Rectangle, Torus };
  Kind kind = Kind::Rectangle;
  double a = 1.0;
  double b = 1.0;
  double alpha = 0.0;
  double beta = 0.0;

  /// Parses `rectangle:a,b` or `torus:a,b,alpha,beta`.
  static ReferenceModel parse(const std::string& spec);
  std::string describe() const;
};

/// One reference eigenvalue with its mode indices.
struct ReferenceMode {
  double value = 0.0;
  int p = 0;
  int q = 0;
};

/// First k reference eigenvalues with multiplicity, ascending, ties ordered by (p, q).
std::vector<ReferenceMode> reference_modes(const ReferenceModel& m, int k);
std::vector<double> reference_spectrum(const ReferenceModel& m, int k);

/// Flat chart layout of a surface glued only by translations: per-square
/// offset of the lower-left corner, and the transport from the fiber of
/// square 0 into the fiber of each square along a spanning tree.
struct DevelopingMap {
  std::vector<std::array<double, 2>> offset;
  std::vector<CMatrix> frame;
};

/// Throws ValidationError when a half-turn seam is met.
DevelopingMap develop(const SquareTiledSurface& s, const FlatUnitaryBundle& b);

/// Continuum section evaluated at a point, returned in the square's frame.
using SectionFunction = std::function<CVector(const SurfacePoint&)>;

/// Unit-L2 eigenfunction of a reference mode, laid out through `dev`. Rank 1.
///
/// Rectangle modes are cos(p pi X / a) cos(q pi Y / b). Torus modes are
/// exp(2 pi i ((p - alpha/2pi) X / a + (q - beta/2pi) Y / b)), which matches a
/// bundle whose horizontal seams transport by exp(i alpha) from east to west.
SectionFunction reference_eigenfunction(const ReferenceModel& m, const ReferenceMode& mode,
                                        const DevelopingMap& dev);

struct ConvergenceRow {
  int n = 0;
  int i = 0;  // 1-based eigenvalue index
  double lambda_n = 0.0;
  double lambda_ref = 0.0;
  double abs_err = 0.0;
  double order = 0.0;  // NaN on the first row of each index
  bool flagged = false;
};

/// Richardson fit lambda_n ~ lambda + c n^{-p}.
struct RichardsonResult {
  double lambda = 0.0;
  double p = 0.0;
  double c = 0.0;
  double residual = 0.0;     // RMS of the fit
  double uncertainty = 0.0;  // max of the fit residual, the two-point refit and the extrapolation step
  bool degenerate = false;
};

/// Needs at least three points with distinct n. `order_guess` seeds the
/// exponent search.
RichardsonResult richardson_extrapolate(const std::vector<std::pair<int, double>>& values,
                                        double order_guess = 2.0);

/// Eigenvalue convergence table. When `model` is absent the limits come from
/// Richardson extrapolation over the whole schedule.
std::vector<ConvergenceRow> convergence_table(const SquareTiledSurface& s,
                                              const FlatUnitaryBundle& b, int k,
                                              const std::vector<int>& ns,
                                              const std::optional<ReferenceModel>& model,
                                              const EigenOptions& opt = {}, int jobs = 1);

/// Zero limits are compared absolutely, others relatively.
double relative_error(double value, double reference);

}  // namespace flatlap
