#include "flatlap/interp.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>

#include <Eigen/SVD>
#include <fmt/format.h>

namespace flatlap {

namespace {

using UV = std::array<double, 2>;
using Triangle = std::array<UV, 3>;

int quarter_slot(int sx, int sy) { return (sx > 0 ? 1 : 0) + (sy > 0 ? 2 : 0); }
Side horizontal(int sx) { return sx > 0 ? Side::E : Side::W; }
Side vertical(int sy) { return sy > 0 ? Side::N : Side::S; }

std::vector<Triangle> triangles(FieldPiece::Region r) {
  const Triangle below{{{0.0, 0.0}, {0.5, 0.0}, {0.5, 0.5}}};
  const Triangle above{{{0.0, 0.0}, {0.5, 0.5}, {0.0, 0.5}}};
  switch (r) {
    case FieldPiece::Region::Quarter: return {below, above};
    case FieldPiece::Region::BelowDiagonal: return {below};
    case FieldPiece::Region::AboveDiagonal: return {above};
  }
  return {};
}

// Degree-4 six-point rule: barycentric points and weights summing to 1.
struct QuadPoint {
  double l1, l2, l3, w;
};
const std::array<QuadPoint, 6>& dunavant6() {
  static const std::array<QuadPoint, 6> pts = [] {
    const double a1 = 0.445948490915965, b1 = 0.108103018168070, w1 = 0.223381589678011;
    const double a2 = 0.091576213509771, b2 = 0.816847572980459, w2 = 0.109951743655322;
    return std::array<QuadPoint, 6>{{{a1, a1, b1, w1},
                                     {a1, b1, a1, w1},
                                     {b1, a1, a1, w1},
                                     {a2, a2, b2, w2},
                                     {a2, b2, a2, w2},
                                     {b2, a2, a2, w2}}};
  }();
  return pts;
}

SurfacePoint local_to_surface(const Cell& c, int n, int sx, int sy, double u, double w) {
  return {c.square, (c.i + 0.5 + sx * u) / n, (c.j + 0.5 + sy * w) / n};
}

void require_same_layout(const PiecewiseLinearField& u, const PiecewiseLinearField& v) {
  if (u.n() != v.n() || u.rank() != v.rank() || u.pieces().size() != v.pieces().size()) {
    throw ValidationError("fields have different cell decompositions");
  }
  for (std::size_t k = 0; k < u.pieces().size(); ++k) {
    const auto& p = u.pieces()[k];
    const auto& q = v.pieces()[k];
    if (p.vertex != q.vertex || p.sx != q.sx || p.sy != q.sy || p.region != q.region) {
      throw ValidationError("fields have different cell decompositions");
    }
  }
}

}  // namespace

double FieldPiece::area(int n) const {
  const double quarter = 0.25 / (static_cast<double>(n) * n);
  return region == Region::Quarter ? quarter : 0.5 * quarter;
}

DiscreteSection restrict_section(const SectionFunction& f, const DiscretizationGraph& g) {
  const int r = g.rank();
  DiscreteSection out(static_cast<Eigen::Index>(g.num_vertices()) * r);
  for (int v = 0; v < g.num_vertices(); ++v) {
    const CVector val = f(g.embed(v));
    if (val.size() != r) throw ValidationError("section evaluator returned the wrong rank");
    out.segment(static_cast<Eigen::Index>(v) * r, r) = val;
  }
  return out;
}

DiscreteSection average(const DiscreteSection& f, const DiscretizationGraph& g) {
  const int r = g.rank();
  if (f.size() != static_cast<Eigen::Index>(g.num_vertices()) * r) {
    throw ValidationError("section size does not match the graph");
  }
  DiscreteSection out = f;
  const auto& cycles = g.surface().vertex_cycles();
  for (int p : g.surface().singular_points()) {
    const auto cells = g.cone_neighbors(p);
    const VertexCycle& cyc = cycles[p];
    // frames[m] maps the fiber at cells[m] into the fiber at cells[0].
    std::vector<CMatrix> frames{CMatrix::Identity(r, r)};
    for (std::size_t m = 0; m + 1 < cells.size(); ++m) {
      const NeighborSlot& slot = g.neighbor(cells[m], cyc.crossings[m].side);
      if (slot.vertex != cells[m + 1]) throw Error("singular neighbor chain is broken");
      frames.push_back(frames.back() * g.transport_in(slot));
    }
    CVector mean = CVector::Zero(r);
    for (std::size_t m = 0; m < cells.size(); ++m) {
      mean += frames[m] * f.segment(static_cast<Eigen::Index>(cells[m]) * r, r);
    }
    mean /= static_cast<double>(cells.size());
    for (std::size_t m = 0; m < cells.size(); ++m) {
      out.segment(static_cast<Eigen::Index>(cells[m]) * r, r) = frames[m].adjoint() * mean;
    }
  }
  return out;
}

std::vector<const FieldPiece*> PiecewiseLinearField::quarter(int v, int sx, int sy) const {
  const auto [first, count] = quarter_index_.at(static_cast<std::size_t>(v) * 4 + quarter_slot(sx, sy));
  std::vector<const FieldPiece*> out;
  for (int k = 0; k < count; ++k) out.push_back(&pieces_[first + k]);
  return out;
}

CVector PiecewiseLinearField::evaluate_local(int v, int sx, int sy, double u, double w) const {
  const auto ps = quarter(v, sx, sy);
  if (ps.size() == 1) return ps[0]->at(u, w);
  return (u >= w ? ps[0] : ps[1])->at(u, w);
}

CVector PiecewiseLinearField::evaluate(const SurfacePoint& p) const {
  const double xs = p.x * n_, ys = p.y * n_;
  const int i = std::clamp(static_cast<int>(std::floor(xs)), 0, n_ - 1);
  const int j = std::clamp(static_cast<int>(std::floor(ys)), 0, n_ - 1);
  const double du = xs - (i + 0.5), dw = ys - (j + 0.5);
  const int v = (p.square * n_ + j) * n_ + i;
  if (p.square < 0 || v >= num_vertices_) throw ValidationError("point outside the surface");
  return evaluate_local(v, du >= 0 ? 1 : -1, dw >= 0 ? 1 : -1, std::abs(du), std::abs(dw));
}

PiecewiseLinearField linearize(const DiscreteSection& f_in, const DiscretizationGraph& g) {
  if (g.n() < 2) throw ValidationError("linearization needs n >= 2");
  const DiscreteSection f = average(f_in, g);
  const int n = g.n(), r = g.rank();
  const SquareTiledSurface& s = g.surface();
  auto val = [&](int v) -> CVector { return f.segment(static_cast<Eigen::Index>(v) * r, r); };

  PiecewiseLinearField field;
  field.n_ = n;
  field.rank_ = r;
  field.num_vertices_ = g.num_vertices();
  field.quarter_index_.assign(static_cast<std::size_t>(g.num_vertices()) * 4, {0, 0});
  const CVector zero = CVector::Zero(r);

  for (int v = 0; v < g.num_vertices(); ++v) {
    const Cell c = g.cell(v);
    const CVector fc = val(v);
    for (int sy : {-1, 1}) {
      for (int sx : {-1, 1}) {
        const int first = static_cast<int>(field.pieces_.size());
        FieldPiece base;
        base.vertex = v;
        base.sx = sx;
        base.sy = sy;
        base.a = fc;
        base.du = zero;
        base.dw = zero;

        const bool edge_x = sx > 0 ? c.i == n - 1 : c.i == 0;
        const bool edge_y = sy > 0 ? c.j == n - 1 : c.j == 0;
        bool singular = false;
        if (edge_x && edge_y) {
          const int cyc = s.cycle_of({c.square, corner_from_signs(sx, sy)});
          singular = s.vertex_cycles()[cyc].singular();
        }
        const NeighborSlot& hn = g.neighbor(v, horizontal(sx));
        const NeighborSlot& vn = g.neighbor(v, vertical(sy));

        if (singular || (!hn.valid() && !vn.valid())) {
          base.kind = FieldPiece::Kind::Constant;
          field.pieces_.push_back(base);
        } else if (!hn.valid() || !vn.valid()) {
          base.kind = FieldPiece::Kind::Boundary;
          if (hn.valid()) {
            base.du = g.transport_in(hn) * val(hn.vertex) - fc;
          } else {
            base.dw = g.transport_in(vn) * val(vn.vertex) - fc;
          }
          field.pieces_.push_back(base);
        } else {
          const CVector fh = g.transport_in(hn) * val(hn.vertex);
          const CVector fv = g.transport_in(vn) * val(vn.vertex);
          base.kind = FieldPiece::Kind::Affine;
          if (sx == sy) {
            const int up = hn.flipped ? -sy : sy;
            const NeighborSlot& es = g.neighbor(hn.vertex, vertical(up));
            if (!es.valid()) throw Error("regular lattice point without a diagonal cell");
            const CVector fe = g.transport_in(hn) * (g.transport_in(es) * val(es.vertex));
            FieldPiece lower = base, upper = base;
            lower.region = FieldPiece::Region::BelowDiagonal;
            lower.du = fh - fc;
            lower.dw = fe - fh;
            upper.region = FieldPiece::Region::AboveDiagonal;
            upper.du = fe - fv;
            upper.dw = fv - fc;
            field.pieces_.push_back(lower);
            field.pieces_.push_back(upper);
          } else {
            base.du = fh - fc;
            base.dw = fv - fc;
            field.pieces_.push_back(base);
          }
        }
        const int count = static_cast<int>(field.pieces_.size()) - first;
        field.quarter_index_[static_cast<std::size_t>(v) * 4 + quarter_slot(sx, sy)] = {first, count};
      }
    }
  }
  return field;
}

Complex dirichlet_energy(const PiecewiseLinearField& u, const PiecewiseLinearField& v) {
  require_same_layout(u, v);
  const double n2 = static_cast<double>(u.n()) * u.n();
  Complex total = 0.0;
  for (std::size_t k = 0; k < u.pieces().size(); ++k) {
    const FieldPiece& p = u.pieces()[k];
    const FieldPiece& q = v.pieces()[k];
    if (p.kind == FieldPiece::Kind::Constant && q.kind == FieldPiece::Kind::Constant) continue;
    total += p.area(u.n()) * n2 * (p.du.dot(q.du) + p.dw.dot(q.dw));
  }
  return total;
}

Complex l2_pairing(const PiecewiseLinearField& u, const PiecewiseLinearField& v,
                   const std::optional<WeightFunction>& weight) {
  require_same_layout(u, v);
  const int n = u.n();
  const double tri_area = 0.125 / (static_cast<double>(n) * n);
  const int verts_per_square = n * n;
  Complex total = 0.0;
  for (std::size_t k = 0; k < u.pieces().size(); ++k) {
    const FieldPiece& p = u.pieces()[k];
    const FieldPiece& q = v.pieces()[k];
    const Cell c{p.vertex / verts_per_square, p.vertex % n, (p.vertex % verts_per_square) / n};
    for (const Triangle& t : triangles(p.region)) {
      Complex acc = 0.0;
      if (!weight) {
        // Edge midpoints integrate quadratics exactly.
        for (int e = 0; e < 3; ++e) {
          const UV& a = t[e];
          const UV& b = t[(e + 1) % 3];
          const double mu = 0.5 * (a[0] + b[0]), mw = 0.5 * (a[1] + b[1]);
          acc += p.at(mu, mw).dot(q.at(mu, mw)) / 3.0;
        }
      } else {
        for (const QuadPoint& qp : dunavant6()) {
          const double mu = qp.l1 * t[0][0] + qp.l2 * t[1][0] + qp.l3 * t[2][0];
          const double mw = qp.l1 * t[0][1] + qp.l2 * t[1][1] + qp.l3 * t[2][1];
          const double phi = (*weight)(local_to_surface(c, n, p.sx, p.sy, mu, mw));
          acc += qp.w * phi * p.at(mu, mw).dot(q.at(mu, mw));
        }
      }
      total += tri_area * acc;
    }
  }
  return total;
}

namespace {

template <typename Integrand>
Complex integrate_field(const PiecewiseLinearField& u, Integrand&& integrand) {
  const int n = u.n();
  const double tri_area = 0.125 / (static_cast<double>(n) * n);
  const int vps = n * n;
  Complex total = 0.0;
  for (const FieldPiece& p : u.pieces()) {
    const Cell c{p.vertex / vps, p.vertex % n, (p.vertex % vps) / n};
    for (const Triangle& t : triangles(p.region)) {
      Complex acc = 0.0;
      for (const QuadPoint& qp : dunavant6()) {
        const double mu = qp.l1 * t[0][0] + qp.l2 * t[1][0] + qp.l3 * t[2][0];
        const double mw = qp.l1 * t[0][1] + qp.l2 * t[1][1] + qp.l3 * t[2][1];
        acc += qp.w * integrand(p.at(mu, mw), local_to_surface(c, n, p.sx, p.sy, mu, mw));
      }
      total += tri_area * acc;
    }
  }
  return total;
}

}  // namespace

Complex l2_pairing(const PiecewiseLinearField& u, const SectionFunction& f) {
  return integrate_field(u, [&f](const CVector& val, const SurfacePoint& pt) { return val.dot(f(pt)); });
}

double l2_distance(const PiecewiseLinearField& u, const SectionFunction& f) {
  const Complex s = integrate_field(
      u, [&f](const CVector& val, const SurfacePoint& pt) { return Complex((val - f(pt)).squaredNorm()); });
  return std::sqrt(std::max(0.0, s.real()));
}

double continuity_defect(const PiecewiseLinearField& u, const DiscretizationGraph& g) {
  if (u.n() != g.n() || u.rank() != g.rank()) throw ValidationError("field does not match the graph");
  double worst = 0.0;
  auto compare = [&worst](const CVector& a, const CVector& b) {
    worst = std::max(worst, (a - b).cwiseAbs().maxCoeff());
  };
  const std::array<double, 3> ts{0.0, 0.25, 0.5};
  for (int v = 0; v < g.num_vertices(); ++v) {
    for (int sy : {-1, 1}) {
      for (int sx : {-1, 1}) {
        const auto ps = u.quarter(v, sx, sy);
        // Diagonal cut inside the quarter.
        if (ps.size() == 2) {
          for (double t : ts) compare(ps[0]->at(t, t), ps[1]->at(t, t));
        }
        for (double t : ts) {
          // Cell midlines: neighbouring quarters of the same cell.
          compare(u.evaluate_local(v, sx, sy, 0.0, t), u.evaluate_local(v, -sx, sy, 0.0, t));
          compare(u.evaluate_local(v, sx, sy, t, 0.0), u.evaluate_local(v, sx, -sy, t, 0.0));
          // Cell sides: the quarter of the neighbour at the same lattice point.
          const NeighborSlot& hn = g.neighbor(v, horizontal(sx));
          if (hn.valid()) {
            const int nsx = hn.flipped ? sx : -sx, nsy = hn.flipped ? -sy : sy;
            compare(u.evaluate_local(v, sx, sy, 0.5, t),
                    g.transport_in(hn) * u.evaluate_local(hn.vertex, nsx, nsy, 0.5, t));
          }
          const NeighborSlot& vn = g.neighbor(v, vertical(sy));
          if (vn.valid()) {
            const int nsx = vn.flipped ? -sx : sx, nsy = vn.flipped ? sy : -sy;
            compare(u.evaluate_local(v, sx, sy, t, 0.5),
                    g.transport_in(vn) * u.evaluate_local(vn.vertex, nsx, nsy, t, 0.5));
          }
        }
      }
    }
  }
  return worst;
}

void write_samples(std::ostream& os, const PiecewiseLinearField& u,
                   const std::vector<SurfacePoint>& points) {
  os << "square,x,y";
  for (int a = 1; a <= u.rank(); ++a) os << ",re_" << a << ",im_" << a;
  os << "\n";
  for (const SurfacePoint& p : points) {
    const CVector val = u.evaluate(p);
    os << fmt::format("{},{:.17g},{:.17g}", p.square, p.x, p.y);
    for (Eigen::Index a = 0; a < val.size(); ++a) {
      os << fmt::format(",{:.17g},{:.17g}", val[a].real(), val[a].imag());
    }
    os << "\n";
  }
}

ConsistencyResidual consistency_residual(const SectionFunction& f, const SectionFunction& lap,
                                         const DiscretizationGraph& g, const SparseMatrix& op) {
  const int r = g.rank(), n = g.n();
  const DiscreteSection rf = restrict_section(f, g);
  const DiscreteSection lf = restrict_section(lap, g);
  const DiscreteSection discrete = static_cast<double>(n) * n * (op * rf);
  std::vector<bool> corner(g.num_vertices(), false);
  if (n >= 2) {
    for (const auto& set : g.all_cone_neighbors()) {
      for (int v : set) corner[v] = true;
    }
  }
  ConsistencyResidual res;
  for (int v = 0; v < g.num_vertices(); ++v) {
    const double d = (discrete.segment(static_cast<Eigen::Index>(v) * r, r) -
                      lf.segment(static_cast<Eigen::Index>(v) * r, r))
                         .cwiseAbs()
                         .maxCoeff();
    double& slot = corner[v] ? res.corner : (g.degree(v) < 4 ? res.edge : res.interior);
    slot = std::max(slot, d);
    res.all = std::max(res.all, d);
  }
  return res;
}

std::vector<EigenvectorRow> eigenvector_convergence(const SquareTiledSurface& s,
                                                    const FlatUnitaryBundle& b,
                                                    const ReferenceModel& model, int group,
                                                    const std::vector<int>& ns,
                                                    const EigenOptions& opt) {
  if (group < 1) throw ValidationError("eigenvalue groups are numbered from 1");
  // Enough reference modes that the requested group and the one above it are complete.
  std::vector<ReferenceMode> modes;
  std::vector<std::pair<int, int>> groups;  // [begin, end) into modes
  for (int want = 8;; want *= 2) {
    modes = reference_modes(model, want);
    groups.clear();
    for (int k = 0; k < want;) {
      int e = k + 1;
      while (e < want && std::abs(modes[e].value - modes[k].value) <= 1e-9 * std::max(1.0, modes[k].value)) ++e;
      groups.emplace_back(k, e);
      k = e;
    }
    if (static_cast<int>(groups.size()) >= group + 2) break;
  }
  const auto [lo, hi] = groups[group - 1];
  const int m = hi - lo;
  const double target = modes[lo].value;
  double half_gap = 0.5 * (modes[hi].value - target);
  if (lo > 0) half_gap = std::min(half_gap, 0.5 * (target - modes[lo - 1].value));

  const DevelopingMap dev = develop(s, b);
  std::vector<SectionFunction> fs;
  for (int j = lo; j < hi; ++j) fs.push_back(reference_eigenfunction(model, modes[j], dev));

  std::vector<EigenvectorRow> rows;
  for (int n : ns) {
    const auto g = DiscretizationGraph::build(s, b, n);
    const auto a = assemble_laplacian(g);
    const int k = std::min<int>(hi + 1, static_cast<int>(a.rows()));
    const Eigenpairs e = lowest_eigenpairs(a, k, opt);
    EigenvectorRow row;
    row.n = n;
    row.group = group;
    row.multiplicity = m;
    row.lambda_ref = target;
    const CMatrix basis = e.vectors.middleCols(lo, m);
    for (int j = lo; j < hi; ++j) {
      const double lam = static_cast<double>(n) * n * e.values[j];
      row.lambda_n.push_back(lam);
      if (!(std::abs(lam - target) < half_gap)) row.flagged = true;
    }

    std::vector<DiscreteSection> projected;
    std::vector<PiecewiseLinearField> fields;
    for (const auto& f : fs) {
      const DiscreteSection rf = restrict_section(f, g);
      projected.push_back(basis * (basis.adjoint() * rf));
      fields.push_back(linearize(projected.back(), g));
    }
    // Optimal unitary mixing of the projected sections within the group.
    CMatrix cross(m, m);
    for (int p = 0; p < m; ++p) {
      for (int q = 0; q < m; ++q) cross(p, q) = l2_pairing(fields[p], fs[q]);
    }
    Eigen::JacobiSVD<CMatrix> svd(cross, Eigen::ComputeFullU | Eigen::ComputeFullV);
    const CMatrix mix = svd.matrixU() * svd.matrixV().adjoint();
    for (int q = 0; q < m; ++q) {
      row.direct_error = std::max(row.direct_error, l2_distance(fields[q], fs[q]));
      DiscreteSection combo = DiscreteSection::Zero(projected[0].size());
      for (int p = 0; p < m; ++p) combo += mix(p, q) * projected[p];
      row.aligned_error = std::max(row.aligned_error, l2_distance(linearize(combo, g), fs[q]));
    }
    rows.push_back(row);
  }
  return rows;
}

}  // namespace flatlap
