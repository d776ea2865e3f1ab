#include "flatlap/bundle.hpp"

#include <algorithm>
#include <sstream>

namespace flatlap {

FlatUnitaryBundle FlatUnitaryBundle::trivial(const SquareTiledSurface& s, int rank) {
  return build(s, rank, {});
}

FlatUnitaryBundle FlatUnitaryBundle::build(const SquareTiledSurface& s, int rank,
                                           const std::map<int, CMatrix>& transports) {
  if (rank <= 0) throw ValidationError("bundle rank must be positive");
  FlatUnitaryBundle b;
  b.rank_ = rank;
  const int m = static_cast<int>(s.seams().size());
  b.transports_.assign(m, CMatrix::Identity(rank, rank));
  for (const auto& [seam, u] : transports) {
    if (seam < 0 || seam >= m) {
      throw ValidationError("transport for unknown seam " + std::to_string(seam));
    }
    if (u.rows() != rank || u.cols() != rank) {
      throw ValidationError("transport for seam " + std::to_string(seam) + " is " +
                            std::to_string(u.rows()) + "x" + std::to_string(u.cols()) +
                            ", bundle rank is " + std::to_string(rank));
    }
    const double d = unitarity_defect(u);
    if (d > kUnitaryTol) {
      std::ostringstream os;
      os << "transport for seam " << seam << " is not unitary (defect " << d << ")";
      throw ValidationError(os.str());
    }
    b.transports_[seam] = u;
  }
  return b;
}

CMatrix FlatUnitaryBundle::crossing_transport(const SeamCrossing& x) const {
  const CMatrix& u = transports_.at(x.seam);
  return x.forward ? u : CMatrix(u.adjoint());
}

bool FlatUnitaryBundle::is_trivial() const {
  for (const CMatrix& u : transports_) {
    if (!u.isIdentity(0.0)) return false;
  }
  return true;
}

CMatrix monodromy(const SquareTiledSurface& s, const FlatUnitaryBundle& b,
                  const std::vector<SideRef>& exits) {
  if (b.num_seams() != static_cast<int>(s.seams().size())) {
    throw ValidationError("bundle does not match surface seam count");
  }
  CMatrix m = CMatrix::Identity(b.rank(), b.rank());
  if (exits.empty()) return m;
  for (std::size_t i = 0; i < exits.size(); ++i) {
    const auto x = s.across(exits[i]);
    if (!x) {
      std::ostringstream os;
      os << "path step " << i << " leaves square " << exits[i].square << " through free side "
         << side_name(exits[i].side);
      throw ValidationError(os.str());
    }
    const int next = exits[(i + 1) % exits.size()].square;
    if (x->other.square != next) {
      std::ostringstream os;
      os << "path is not closed: step " << i << " arrives in square " << x->other.square
         << ", next step starts in square " << next;
      throw ValidationError(os.str());
    }
    m = b.crossing_transport(*x) * m;
  }
  return m;
}

CMatrix cycle_monodromy(const SquareTiledSurface& s, const FlatUnitaryBundle& b,
                        const VertexCycle& cycle) {
  if (!cycle.interior) throw ValidationError("boundary vertex chains have no monodromy");
  return monodromy(s, b, cycle.crossings);
}

MonodromyReport validate_cone_monodromy(const SquareTiledSurface& s, const FlatUnitaryBundle& b) {
  MonodromyReport r;
  const auto& cycles = s.vertex_cycles();
  for (std::size_t i = 0; i < cycles.size(); ++i) {
    if (!cycles[i].interior) continue;
    const CMatrix m = cycle_monodromy(s, b, cycles[i]);
    const double d = max_abs_entry(m - CMatrix::Identity(b.rank(), b.rank()));
    r.max_defect = std::max(r.max_defect, d);
    if (d > kMonodromyTol) r.violations.push_back({static_cast<int>(i), d});
  }
  return r;
}

void require_flat(const SquareTiledSurface& s, const FlatUnitaryBundle& b) {
  const auto r = validate_cone_monodromy(s, b);
  if (r.ok()) return;
  std::ostringstream os;
  os << "nontrivial monodromy around vertex cycle(s):";
  for (const auto& v : r.violations) os << " #" << v.cycle << " (defect " << v.defect << ")";
  throw ValidationError(os.str());
}

}  // namespace flatlap
