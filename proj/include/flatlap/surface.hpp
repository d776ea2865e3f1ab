#pragma once

#include <array>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "flatlap/common.hpp"

namespace flatlap {

/// Sides of a unit tile, in counter-clockwise order starting from the east.
/// The numeric values double as lattice directions: E=+x, N=+y, W=-x, S=-y.
enum class Side { E = 0, N = 1, W = 2, S = 3 };

/// Corners of a unit tile.
enum class Corner { SW = 0, SE = 1, NE = 2, NW = 3 };

/// Chart change across a seam: z -> z + c or z -> -z + c.
enum class Isometry { Translation, HalfTurn };

Side opposite(Side s);
char side_name(Side s);
std::string_view corner_name(Corner c);
std::string_view isometry_name(Isometry iso);

/// Unit step (dx, dy) pointing out of the given side.
std::array<int, 2> side_direction(Side s);

/// The two sides of a tile that meet at a corner (horizontal side first).
std::array<Side, 2> corner_sides(Corner c);

/// Corner of a tile with the given signs: sx, sy in {-1, +1}.
Corner corner_from_signs(int sx, int sy);

struct SideRef {
  int square = 0;
  Side side = Side::E;

  friend bool operator==(const SideRef&, const SideRef&) = default;
};

struct CornerRef {
  int square = 0;
  Corner corner = Corner::SW;

  friend bool operator==(const CornerRef&, const CornerRef&) = default;
};

/// One gluing record: `first` is identified with `second` via `iso`.
struct Seam {
  SideRef first;
  SideRef second;
  Isometry iso = Isometry::Translation;
};

/// What lies across a glued side.
struct SeamCrossing {
  int seam = -1;
  SideRef other;
  Isometry iso = Isometry::Translation;
  /// True when the side is the seam's `first` side (so the crossing follows
  /// the seam's stored orientation).
  bool forward = true;
};

/// A maximal chain of tile corners identified to one point of the surface.
///
/// For interior points the chain is closed and `crossings[i]` is the side
/// of corners[i] through which one walks to reach corners[i+1] (indices
/// mod size). For boundary points the chain is open; it starts and ends on
/// a free side and has size()-1 crossings.
struct VertexCycle {
  std::vector<CornerRef> corners;
  std::vector<SideRef> crossings;
  bool interior = true;

  /// Number of quarter turns: the angle is quarter_turns() * pi / 2.
  int quarter_turns() const { return static_cast<int>(corners.size()); }
  double angle() const;
  /// Interior points of angle != 2*pi and boundary corners of angle != pi.
  bool singular() const;
};

/// A pillowcase cover described by unit squares and side gluings.
///
/// Immutable once built; construction validates the half-translation
/// constraints and derives vertex cycles.
class SquareTiledSurface {
 public:
  /// Throws ValidationError when the gluing data is inconsistent.
  static SquareTiledSurface build(int num_squares, std::vector<Seam> seams);

  int num_squares() const { return num_squares_; }
  double area() const { return num_squares_; }
  const std::vector<Seam>& seams() const { return seams_; }

  std::optional<SeamCrossing> across(SideRef side) const;
  std::vector<SideRef> free_sides() const;
  bool closed() const { return free_sides().empty(); }

  const std::vector<VertexCycle>& vertex_cycles() const { return cycles_; }
  /// Index into vertex_cycles() of the cycle containing a tile corner.
  int cycle_of(CornerRef c) const;

  /// Indices (into vertex_cycles()) of interior cone points, angle != 2*pi.
  std::vector<int> cone_points() const;
  /// Indices of boundary corners with angle != pi.
  std::vector<int> boundary_corners() const;
  /// cone_points() followed by boundary_corners().
  std::vector<int> singular_points() const;

  /// V - E + F of the square complex.
  int euler_characteristic() const;

  /// Sum of (4 - k) over interior cycles plus (2 - k) over boundary cycles,
  /// where k is the number of quarter turns. Gauss-Bonnet says this equals
  /// 4 * euler_characteristic().
  int curvature_quarter_turns() const;

 private:
  SquareTiledSurface() = default;
  void derive_cycles();

  int num_squares_ = 0;
  std::vector<Seam> seams_;
  // Per (square, side): seam index or -1.
  std::vector<std::array<int, 4>> side_seam_;
  std::vector<VertexCycle> cycles_;
  std::vector<std::array<int, 4>> corner_cycle_;
};

/// Flat position of a tile corner given as (x, y) in {0, 1}^2.
std::array<int, 2> corner_position(Corner c);

/// Image of a tile corner lying on `side` after crossing to `to`.
CornerRef corner_across(CornerRef c, Side side, const SeamCrossing& to);

}  // namespace flatlap
