#pragma once

#include <map>
#include <string>
#include <vector>

#include "flatlap/common.hpp"
#include "flatlap/surface.hpp"

namespace flatlap {

inline constexpr double kUnitaryTol = 1e-12;
inline constexpr double kMonodromyTol = 1e-12;

/// Flat unitary bundle in per-square trivialization.
///
/// Inside a square the transport is the identity; crossing seam k from its
/// first side to its second side applies transport(k), the reverse crossing
/// applies its adjoint.
class FlatUnitaryBundle {
 public:
  /// Identity transports on every seam.
  static FlatUnitaryBundle trivial(const SquareTiledSurface& s, int rank);

  /// Missing seams default to the identity. Throws ValidationError on rank
  /// mismatch, unknown seam ids or non-unitary matrices.
  static FlatUnitaryBundle build(const SquareTiledSurface& s, int rank,
                                 const std::map<int, CMatrix>& transports);

  int rank() const { return rank_; }
  int num_seams() const { return static_cast<int>(transports_.size()); }
  const CMatrix& transport(int seam) const { return transports_.at(seam); }

  /// Transport applied when stepping across a side described by `x`.
  CMatrix crossing_transport(const SeamCrossing& x) const;

  /// True when every seam carries exactly the identity.
  bool is_trivial() const;

 private:
  int rank_ = 1;
  std::vector<CMatrix> transports_;
};

/// Ordered product of transports along a closed walk through squares.
///
/// `exits[i]` is the side through which the walk leaves its i-th square; the
/// walk must re-enter the square of exits[i+1], and the last crossing must
/// return to the square of exits[0]. The result maps the fiber of the first
/// square to itself. An empty walk gives the identity.
CMatrix monodromy(const SquareTiledSurface& s, const FlatUnitaryBundle& b,
                  const std::vector<SideRef>& exits);

/// Holonomy around an interior vertex cycle, in the frame of its first corner.
CMatrix cycle_monodromy(const SquareTiledSurface& s, const FlatUnitaryBundle& b,
                        const VertexCycle& cycle);

struct MonodromyViolation {
  int cycle = -1;
  double defect = 0.0;  // max |M - I|
};

struct MonodromyReport {
  std::vector<MonodromyViolation> violations;
  double max_defect = 0.0;
  bool ok() const { return violations.empty(); }
};

/// Checks the holonomy around every interior vertex cycle, cone points and
/// regular points alike.
MonodromyReport validate_cone_monodromy(const SquareTiledSurface& s, const FlatUnitaryBundle& b);

/// Throws ValidationError listing offending cycles.
void require_flat(const SquareTiledSurface& s, const FlatUnitaryBundle& b);

}  // namespace flatlap
