#include "flatlap/surface.hpp"

#include <numbers>
#include <sstream>

namespace flatlap {

Side opposite(Side s) { return static_cast<Side>((static_cast<int>(s) + 2) % 4); }

char side_name(Side s) {
  constexpr char names[] = {'E', 'N', 'W', 'S'};
  return names[static_cast<int>(s)];
}

std::string_view corner_name(Corner c) {
  constexpr std::string_view names[] = {"SW", "SE", "NE", "NW"};
  return names[static_cast<int>(c)];
}

std::string_view isometry_name(Isometry iso) {
  return iso == Isometry::Translation ? "translation" : "halfturn";
}

std::array<int, 2> side_direction(Side s) {
  switch (s) {
    case Side::E: return {1, 0};
    case Side::N: return {0, 1};
    case Side::W: return {-1, 0};
    case Side::S: return {0, -1};
  }
  return {0, 0};
}

std::array<Side, 2> corner_sides(Corner c) {
  switch (c) {
    case Corner::SW: return {Side::W, Side::S};
    case Corner::SE: return {Side::E, Side::S};
    case Corner::NE: return {Side::E, Side::N};
    case Corner::NW: return {Side::W, Side::N};
  }
  return {Side::E, Side::N};
}

std::array<int, 2> corner_position(Corner c) {
  switch (c) {
    case Corner::SW: return {0, 0};
    case Corner::SE: return {1, 0};
    case Corner::NE: return {1, 1};
    case Corner::NW: return {0, 1};
  }
  return {0, 0};
}

Corner corner_from_signs(int sx, int sy) {
  if (sx > 0) return sy > 0 ? Corner::NE : Corner::SE;
  return sy > 0 ? Corner::NW : Corner::SW;
}

namespace {

bool is_horizontal(Side s) { return s == Side::N || s == Side::S; }

// Parameter in {0, 1} of a corner along a side: x for N/S sides, y for E/W.
int corner_param(Corner c, Side side) {
  const auto p = corner_position(c);
  return is_horizontal(side) ? p[0] : p[1];
}

Corner corner_at(Side side, int param) {
  switch (side) {
    case Side::N: return param == 0 ? Corner::NW : Corner::NE;
    case Side::S: return param == 0 ? Corner::SW : Corner::SE;
    case Side::E: return param == 0 ? Corner::SE : Corner::NE;
    case Side::W: return param == 0 ? Corner::SW : Corner::NW;
  }
  return Corner::SW;
}

std::string describe(SideRef s) {
  std::ostringstream os;
  os << "(" << s.square << "," << side_name(s.side) << ")";
  return os.str();
}

}  // namespace

CornerRef corner_across(CornerRef c, Side side, const SeamCrossing& to) {
  int t = corner_param(c.corner, side);
  if (to.iso == Isometry::HalfTurn) t = 1 - t;
  return {to.other.square, corner_at(to.other.side, t)};
}

double VertexCycle::angle() const { return quarter_turns() * std::numbers::pi / 2.0; }

bool VertexCycle::singular() const {
  return interior ? quarter_turns() != 4 : quarter_turns() != 2;
}

SquareTiledSurface SquareTiledSurface::build(int num_squares, std::vector<Seam> seams) {
  if (num_squares <= 0) throw ValidationError("surface needs at least one square");
  SquareTiledSurface s;
  s.num_squares_ = num_squares;
  s.side_seam_.assign(num_squares, {-1, -1, -1, -1});
  for (std::size_t k = 0; k < seams.size(); ++k) {
    const Seam& seam = seams[k];
    for (const SideRef& ref : {seam.first, seam.second}) {
      if (ref.square < 0 || ref.square >= num_squares) {
        throw ValidationError("seam " + std::to_string(k) + " references square " +
                              std::to_string(ref.square) + " outside 0.." +
                              std::to_string(num_squares - 1));
      }
    }
    if (seam.first == seam.second) {
      throw ValidationError("seam " + std::to_string(k) + " glues side " + describe(seam.first) +
                            " to itself");
    }
    const bool same = seam.first.side == seam.second.side;
    const bool opp = seam.first.side == opposite(seam.second.side);
    if (seam.iso == Isometry::Translation && !opp) {
      throw ValidationError("seam " + std::to_string(k) +
                            ": a translation must pair opposite sides, got " +
                            describe(seam.first) + " " + describe(seam.second));
    }
    if (seam.iso == Isometry::HalfTurn && !same) {
      throw ValidationError("seam " + std::to_string(k) +
                            ": a half-turn must pair equally named sides, got " +
                            describe(seam.first) + " " + describe(seam.second));
    }
    for (const SideRef& ref : {seam.first, seam.second}) {
      int& slot = s.side_seam_[ref.square][static_cast<int>(ref.side)];
      if (slot != -1) {
        throw ValidationError("side " + describe(ref) + " is glued twice (seams " +
                              std::to_string(slot) + " and " + std::to_string(k) + ")");
      }
      slot = static_cast<int>(k);
    }
  }
  s.seams_ = std::move(seams);
  s.derive_cycles();
  for (const VertexCycle& c : s.cycles_) {
    if (c.interior && c.quarter_turns() % 2 != 0) {
      throw ValidationError("interior vertex with angle " + std::to_string(c.quarter_turns()) +
                            "*pi/2 is not a multiple of pi");
    }
  }
  return s;
}

std::optional<SeamCrossing> SquareTiledSurface::across(SideRef side) const {
  const int k = side_seam_.at(side.square)[static_cast<int>(side.side)];
  if (k < 0) return std::nullopt;
  const Seam& seam = seams_[k];
  const bool forward = seam.first == side;
  return SeamCrossing{k, forward ? seam.second : seam.first, seam.iso, forward};
}

std::vector<SideRef> SquareTiledSurface::free_sides() const {
  std::vector<SideRef> out;
  for (int q = 0; q < num_squares_; ++q) {
    for (int d = 0; d < 4; ++d) {
      if (side_seam_[q][d] < 0) out.push_back({q, static_cast<Side>(d)});
    }
  }
  return out;
}

void SquareTiledSurface::derive_cycles() {
  corner_cycle_.assign(num_squares_, {-1, -1, -1, -1});

  // The corner graph has degree <= 2: each corner is linked through each of
  // its two sides when that side is glued. Components are paths or cycles.
  auto other_side = [](Corner c, Side s) {
    const auto sides = corner_sides(c);
    return sides[0] == s ? sides[1] : sides[0];
  };

  auto assign = [this](VertexCycle&& cyc) {
    const int id = static_cast<int>(cycles_.size());
    for (const CornerRef& c : cyc.corners) corner_cycle_[c.square][static_cast<int>(c.corner)] = id;
    cycles_.push_back(std::move(cyc));
  };

  // Boundary chains first: start at a corner with a free side and walk
  // through the glued side until the chain ends on another free side.
  for (int q = 0; q < num_squares_; ++q) {
    for (int ci = 0; ci < 4; ++ci) {
      if (corner_cycle_[q][ci] >= 0) continue;
      const CornerRef start{q, static_cast<Corner>(ci)};
      const auto sides = corner_sides(start.corner);
      Side free_side;
      if (!across({q, sides[0]})) {
        free_side = sides[0];
      } else if (!across({q, sides[1]})) {
        free_side = sides[1];
      } else {
        continue;
      }
      VertexCycle cyc;
      cyc.interior = false;
      CornerRef cur = start;
      Side exit = other_side(cur.corner, free_side);
      cyc.corners.push_back(cur);
      while (true) {
        auto x = across({cur.square, exit});
        if (!x) break;
        cyc.crossings.push_back({cur.square, exit});
        cur = corner_across(cur, exit, *x);
        cyc.corners.push_back(cur);
        exit = other_side(cur.corner, x->other.side);
      }
      assign(std::move(cyc));
    }
  }

  for (int q = 0; q < num_squares_; ++q) {
    for (int ci = 0; ci < 4; ++ci) {
      if (corner_cycle_[q][ci] >= 0) continue;
      const CornerRef start{q, static_cast<Corner>(ci)};
      VertexCycle cyc;
      cyc.interior = true;
      CornerRef cur = start;
      // Walk counter-clockwise in the chart of the starting tile: leave
      // through the horizontal side of the corner.
      Side exit = corner_sides(cur.corner)[0];
      do {
        cyc.corners.push_back(cur);
        cyc.crossings.push_back({cur.square, exit});
        auto x = across({cur.square, exit});
        cur = corner_across(cur, exit, *x);
        exit = other_side(cur.corner, x->other.side);
      } while (!(cur == start));
      assign(std::move(cyc));
    }
  }
}

int SquareTiledSurface::cycle_of(CornerRef c) const {
  return corner_cycle_.at(c.square)[static_cast<int>(c.corner)];
}

std::vector<int> SquareTiledSurface::cone_points() const {
  std::vector<int> out;
  for (std::size_t i = 0; i < cycles_.size(); ++i) {
    if (cycles_[i].interior && cycles_[i].singular()) out.push_back(static_cast<int>(i));
  }
  return out;
}

std::vector<int> SquareTiledSurface::boundary_corners() const {
  std::vector<int> out;
  for (std::size_t i = 0; i < cycles_.size(); ++i) {
    if (!cycles_[i].interior && cycles_[i].singular()) out.push_back(static_cast<int>(i));
  }
  return out;
}

std::vector<int> SquareTiledSurface::singular_points() const {
  auto out = cone_points();
  const auto b = boundary_corners();
  out.insert(out.end(), b.begin(), b.end());
  return out;
}

int SquareTiledSurface::euler_characteristic() const {
  const int v = static_cast<int>(cycles_.size());
  const int e = 4 * num_squares_ - static_cast<int>(seams_.size());
  return v - e + num_squares_;
}

int SquareTiledSurface::curvature_quarter_turns() const {
  int total = 0;
  for (const VertexCycle& c : cycles_) {
    total += c.interior ? 4 - c.quarter_turns() : 2 - c.quarter_turns();
  }
  return total;
}

}  // namespace flatlap
