#include "iga/assembly.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <stdexcept>

namespace iga {

const FacePartition& DofPartition::face(int side_id) const {
  for (const auto& f : faces)
    if (f.side_id == side_id) return f;
  throw std::out_of_range("no interface partition for this side");
}

DofPartition make_dof_partition(const TensorBasis& basis, const std::vector<BoundaryKind>& side_tags) {
  const int d = basis.dim();
  if (static_cast<int>(side_tags.size()) != 2 * d)
    throw std::invalid_argument("make_dof_partition: one tag per side required");

  DofPartition part;
  part.total = basis.total_basis();
  part.is_dirichlet.assign(static_cast<std::size_t>(part.total), 0);
  part.tarray_pos.assign(static_cast<std::size_t>(part.total), -1);
  part.interior_pos.assign(static_cast<std::size_t>(part.total), -1);
  part.side_is_neumann.resize(side_tags.size());
  for (std::size_t s = 0; s < side_tags.size(); ++s)
    part.side_is_neumann[s] = side_tags[s] == BoundaryKind::Neumann ? 1 : 0;

  auto on_side = [&](const std::array<Index, 3>& mi, int side_id) {
    const Side s = Side::from_id(side_id);
    const Index layer = s.end == 0 ? 0 : basis.num_basis(s.direction) - 1;
    return mi[static_cast<std::size_t>(s.direction)] == layer;
  };

  for (int sid = 0; sid < 2 * d; ++sid)
    if (side_tags[static_cast<std::size_t>(sid)] == BoundaryKind::Interface)
      part.faces.push_back(FacePartition{sid, {}, {}, {}});

  for (Index i = 0; i < part.total; ++i) {
    const auto mi = basis.multi_index(i);
    bool in_tarray = false;
    for (int sid = 0; sid < 2 * d; ++sid) {
      if (!on_side(mi, sid)) continue;
      const BoundaryKind kind = side_tags[static_cast<std::size_t>(sid)];
      if (kind == BoundaryKind::Dirichlet) {
        part.is_dirichlet[static_cast<std::size_t>(i)] = 1;
        in_tarray = true;
      } else if (kind == BoundaryKind::Interface) {
        in_tarray = true;
      }
    }
    if (part.is_dirichlet[static_cast<std::size_t>(i)]) part.dirichlet.push_back(i);
    if (in_tarray) {
      part.tarray_pos[static_cast<std::size_t>(i)] = static_cast<Index>(part.tarray.size());
      part.tarray.push_back(i);
    } else {
      part.interior_pos[static_cast<std::size_t>(i)] = static_cast<Index>(part.interior.size());
      part.interior.push_back(i);
    }
  }

  for (auto& f : part.faces) {
    const Side s = Side::from_id(f.side_id);
    for (Index i = 0; i < part.total; ++i) {
      const auto mi = basis.multi_index(i);
      if (!on_side(mi, f.side_id)) continue;
      f.closure.push_back(i);
      bool inner = true;
      for (int k = 0; k < d; ++k) {
        if (k == s.direction) continue;
        const Index m = mi[static_cast<std::size_t>(k)];
        inner = inner && m > 0 && m < basis.num_basis(k) - 1;
      }
      if (inner)
        f.interior.push_back(i);
      else
        f.boundary.push_back(i);
    }
  }
  return part;
}

namespace {

struct ElementGrid {
  std::vector<std::vector<double>> breaks;  // per direction
  std::array<Index, 3> counts{1, 1, 1};
  Index total = 1;

  explicit ElementGrid(const TensorBasis& basis) {
    for (int k = 0; k < basis.dim(); ++k) {
      breaks.push_back(basis.direction(k).breakpoints());
      counts[static_cast<std::size_t>(k)] = static_cast<Index>(breaks.back().size()) - 1;
      total *= counts[static_cast<std::size_t>(k)];
    }
  }

  std::array<Index, 3> element_multi(Index e) const {
    std::array<Index, 3> em{0, 0, 0};
    for (std::size_t k = 0; k < breaks.size(); ++k) {
      em[k] = e % counts[k];
      e /= counts[k];
    }
    return em;
  }
};

struct QuadPoint {
  Vector xhat;
  double weight;  // product of interval-scaled Gauss weights
};

// Tensor Gauss points of one element.
std::vector<QuadPoint> element_quadrature(const ElementGrid& grid, const std::array<Index, 3>& em,
                                          const std::vector<int>& points_per_dir) {
  const int d = static_cast<int>(grid.breaks.size());
  std::vector<QuadRule> rules;
  for (int k = 0; k < d; ++k) {
    const auto& b = grid.breaks[static_cast<std::size_t>(k)];
    const Index e = em[static_cast<std::size_t>(k)];
    rules.push_back(gauss_legendre_on(points_per_dir[static_cast<std::size_t>(k)],
                                      b[static_cast<std::size_t>(e)], b[static_cast<std::size_t>(e) + 1]));
  }
  Index total = 1;
  for (const auto& r : rules) total *= r.nodes.size();
  std::vector<QuadPoint> pts;
  pts.reserve(static_cast<std::size_t>(total));
  for (Index q = 0; q < total; ++q) {
    Index r = q;
    QuadPoint qp;
    qp.xhat.resize(d);
    qp.weight = 1.0;
    for (int k = 0; k < d; ++k) {
      const Index i = r % rules[static_cast<std::size_t>(k)].nodes.size();
      r /= rules[static_cast<std::size_t>(k)].nodes.size();
      qp.xhat[k] = rules[static_cast<std::size_t>(k)].nodes[i];
      qp.weight *= rules[static_cast<std::size_t>(k)].weights[i];
    }
    pts.push_back(std::move(qp));
  }
  return pts;
}

std::vector<int> quadrature_orders(const TensorBasis& basis, int extra_points) {
  std::vector<int> n;
  for (int k = 0; k < basis.dim(); ++k) n.push_back(basis.direction(k).degree() + 1 + extra_points);
  return n;
}

// Contribution of one volume element to the matrix (triplet slot) and load.
void element_contribution(const GeometryMap& geo, const PatchCoefficients& coeffs,
                          const ElementGrid& grid, Index e, const std::vector<int>& orders,
                          std::vector<Triplet>& mat_slot, std::vector<std::pair<Index, double>>& load_slot) {
  const int d = geo.dim();
  const auto quad = element_quadrature(grid, grid.element_multi(e), orders);
  mat_slot.clear();
  load_slot.clear();
  for (const auto& qp : quad) {
    const NurbsEval ev = eval_nurbs(geo.space, qp.xhat, true);
    const Index na = static_cast<Index>(ev.active.size());

    DenseMatrix jac = DenseMatrix::Zero(d, d);
    Vector x = Vector::Zero(d);
    for (Index a = 0; a < na; ++a) {
      const auto row = geo.control_points.row(ev.active[static_cast<std::size_t>(a)]);
      x += ev.values[a] * row.transpose();
      jac += row.transpose() * ev.gradients.row(a);
    }
    const double det = jac.determinant();
    const double scale = std::abs(det);
    if (scale < 1e-12 * std::pow(patch_diameter(geo), d))
      throw std::runtime_error("assembly: singular geometry Jacobian at a quadrature point");
    const DenseMatrix jinv_t = jac.inverse().transpose();
    const DenseMatrix grad_phys = ev.gradients * jinv_t.transpose();  // active x d

    const double nu = coeffs.nu(x);
    const double alpha = coeffs.alpha(x);
    const double fval = coeffs.f(x);
    Vector b;
    if (coeffs.advection) b = coeffs.advection(x);
    const double dv = qp.weight * scale;

    for (Index i = 0; i < na; ++i) {
      const Index gi = ev.active[static_cast<std::size_t>(i)];
      load_slot.emplace_back(gi, fval * ev.values[i] * dv);
      for (Index j = 0; j < na; ++j) {
        const Index gj = ev.active[static_cast<std::size_t>(j)];
        double v = nu * grad_phys.row(j).dot(grad_phys.row(i));
        if (b.size() > 0) v += b.dot(grad_phys.row(j)) * ev.values[i];
        v += alpha * ev.values[j] * ev.values[i];
        mat_slot.emplace_back(static_cast<int>(gi), static_cast<int>(gj), v * dv);
      }
    }
  }
}

struct SideQuadraturePoint {
  Vector xhat;      // volume parameter
  Vector x;         // physical point
  Vector normal;    // outward unit normal
  double measure;   // surface measure times Gauss weight
  NurbsEval ev;     // volume basis values and parametric gradients
  DenseMatrix grad_phys;
};

// Visits every quadrature point of one parametric side, with volume basis data.
template <typename Visitor>
void for_each_side_point(const GeometryMap& geo, Side side, int extra_points, Visitor&& visit) {
  const int d = geo.dim();
  std::vector<int> free_dirs;
  for (int k = 0; k < d; ++k)
    if (k != side.direction) free_dirs.push_back(k);

  std::vector<std::vector<double>> breaks;
  std::vector<int> orders;
  for (int k : free_dirs) {
    breaks.push_back(geo.space.basis.direction(k).breakpoints());
    orders.push_back(geo.space.basis.direction(k).degree() + 1 + extra_points);
  }
  const double fixed = side.end == 0 ? 0.0 : 1.0;

  std::array<Index, 2> counts{1, 1};
  for (std::size_t k = 0; k < breaks.size(); ++k) counts[k] = static_cast<Index>(breaks[k].size()) - 1;
  const Index n_el = counts[0] * counts[1];
  for (Index e = 0; e < n_el; ++e) {
    std::array<Index, 2> em{e % counts[0], e / counts[0]};
    std::vector<QuadRule> rules;
    for (std::size_t k = 0; k < breaks.size(); ++k)
      rules.push_back(gauss_legendre_on(orders[k], breaks[k][static_cast<std::size_t>(em[k])],
                                        breaks[k][static_cast<std::size_t>(em[k]) + 1]));
    Index nq = 1;
    for (const auto& r : rules) nq *= r.nodes.size();
    for (Index q = 0; q < nq; ++q) {
      Index r = q;
      SideQuadraturePoint pt;
      pt.xhat.resize(d);
      pt.xhat[side.direction] = fixed;
      double w = 1.0;
      for (std::size_t k = 0; k < rules.size(); ++k) {
        const Index i = r % rules[k].nodes.size();
        r /= rules[k].nodes.size();
        pt.xhat[free_dirs[k]] = rules[k].nodes[i];
        w *= rules[k].weights[i];
      }
      pt.ev = eval_nurbs(geo.space, pt.xhat, true);
      DenseMatrix jac = DenseMatrix::Zero(d, d);
      pt.x = Vector::Zero(d);
      for (std::size_t a = 0; a < pt.ev.active.size(); ++a) {
        const auto row = geo.control_points.row(pt.ev.active[a]);
        pt.x += pt.ev.values[static_cast<Index>(a)] * row.transpose();
        jac += row.transpose() * pt.ev.gradients.row(static_cast<Index>(a));
      }
      double surf;
      if (d == 2) {
        surf = jac.col(free_dirs[0]).norm();
      } else {
        const Eigen::Vector3d t1 = jac.col(free_dirs[0]), t2 = jac.col(free_dirs[1]);
        surf = t1.cross(t2).norm();
      }
      const DenseMatrix jinv_t = jac.inverse().transpose();
      pt.grad_phys = pt.ev.gradients * jinv_t.transpose();
      Vector nrm = jinv_t.col(side.direction);
      nrm *= (side.end == 0 ? -1.0 : 1.0) / nrm.norm();
      pt.normal = nrm;
      pt.measure = surf * w;
      visit(pt);
    }
  }
}

PatchSystem assemble_impl(const GeometryMap& geo, const PatchCoefficients& coeffs,
                          const std::vector<BoundaryKind>& side_tags, const ScalarField& neumann_flux,
                          int extra_points, bool parallel) {
  const Index n = geo.space.total_basis();
  const ElementGrid grid(geo.space.basis);
  const auto orders = quadrature_orders(geo.space.basis, extra_points);

  std::vector<std::vector<Triplet>> mat_slots(static_cast<std::size_t>(grid.total));
  std::vector<std::vector<std::pair<Index, double>>> load_slots(static_cast<std::size_t>(grid.total));

  if (parallel) {
#pragma omp parallel for schedule(static)
    for (Index e = 0; e < grid.total; ++e)
      element_contribution(geo, coeffs, grid, e, orders, mat_slots[static_cast<std::size_t>(e)],
                           load_slots[static_cast<std::size_t>(e)]);
  } else {
    for (Index e = 0; e < grid.total; ++e)
      element_contribution(geo, coeffs, grid, e, orders, mat_slots[static_cast<std::size_t>(e)],
                           load_slots[static_cast<std::size_t>(e)]);
  }

  // element-ordered accumulation: identical results for any thread count
  std::vector<Triplet> trip;
  std::size_t total_trip = 0;
  for (const auto& s : mat_slots) total_trip += s.size();
  trip.reserve(total_trip);
  PatchSystem sys;
  sys.load = Vector::Zero(n);
  for (Index e = 0; e < grid.total; ++e) {
    const auto& ms = mat_slots[static_cast<std::size_t>(e)];
    trip.insert(trip.end(), ms.begin(), ms.end());
    for (const auto& [i, v] : load_slots[static_cast<std::size_t>(e)]) sys.load[i] += v;
  }
  sys.stiffness.resize(n, n);
  sys.stiffness.setFromTriplets(trip.begin(), trip.end());

  if (neumann_flux) {
    for (int sid = 0; sid < 2 * geo.dim(); ++sid) {
      if (side_tags[static_cast<std::size_t>(sid)] != BoundaryKind::Neumann) continue;
      for_each_side_point(geo, Side::from_id(sid), extra_points, [&](const SideQuadraturePoint& pt) {
        const double h = neumann_flux(pt.x);
        for (std::size_t a = 0; a < pt.ev.active.size(); ++a)
          sys.load[pt.ev.active[a]] += h * pt.ev.values[static_cast<Index>(a)] * pt.measure;
      });
    }
  }
  return sys;
}

}  // namespace

PatchSystem assemble_patch_system(const GeometryMap& geo, const PatchCoefficients& coeffs,
                                  const std::vector<BoundaryKind>& side_tags,
                                  const ScalarField& neumann_flux, int extra_points) {
  return assemble_impl(geo, coeffs, side_tags, neumann_flux, extra_points, true);
}

PatchSystem assemble_patch_system_serial(const GeometryMap& geo, const PatchCoefficients& coeffs,
                                         const std::vector<BoundaryKind>& side_tags,
                                         const ScalarField& neumann_flux, int extra_points) {
  return assemble_impl(geo, coeffs, side_tags, neumann_flux, extra_points, false);
}

SparseMatrix assemble_patch_mass(const GeometryMap& geo) {
  PatchCoefficients mass;
  mass.nu = [](const Vector&) { return 0.0; };
  mass.alpha = [](const Vector&) { return 1.0; };
  std::vector<BoundaryKind> tags(static_cast<std::size_t>(2 * geo.dim()), BoundaryKind::Dirichlet);
  return assemble_impl(geo, mass, tags, nullptr, kQuadExtra, true).stiffness;
}

DenseMatrix interface_mass_matrix(const InterfaceFace& face, int extra_points) {
  const GeometryMap& tr = face.trace;
  const int d = tr.dim();  // face parameter dimension
  const Index n = tr.space.total_basis();
  DenseMatrix m = DenseMatrix::Zero(n, n);

  const ElementGrid grid(tr.space.basis);
  const auto orders = quadrature_orders(tr.space.basis, extra_points);
  for (Index e = 0; e < grid.total; ++e) {
    for (const auto& qp : element_quadrature(grid, grid.element_multi(e), orders)) {
      const NurbsEval ev = eval_nurbs(tr.space, qp.xhat, true);
      DenseMatrix jac = DenseMatrix::Zero(tr.range_dim(), d);
      for (std::size_t a = 0; a < ev.active.size(); ++a)
        jac += tr.control_points.row(ev.active[a]).transpose() * ev.gradients.row(static_cast<Index>(a));
      double surf;
      if (d == 1) {
        surf = jac.col(0).norm();
      } else {
        const Eigen::Vector3d t1 = jac.col(0), t2 = jac.col(1);
        surf = t1.cross(t2).norm();
      }
      const double ds = surf * qp.weight;
      for (std::size_t i = 0; i < ev.active.size(); ++i)
        for (std::size_t j = 0; j < ev.active.size(); ++j)
          m(ev.active[i], ev.active[j]) +=
              ev.values[static_cast<Index>(i)] * ev.values[static_cast<Index>(j)] * ds;
    }
  }
  return m;
}

SparseMatrix correction_matrix(const GeometryMap& geo, const DofPartition& partition,
                               int face_side_id, const ScalarField& nu) {
  const Index n = geo.space.total_basis();
  std::vector<char> is_row(static_cast<std::size_t>(n), 0);
  for (Index i : partition.face(face_side_id).boundary) is_row[static_cast<std::size_t>(i)] = 1;

  std::vector<Triplet> trip;
  for (int sid = 0; sid < 2 * geo.dim(); ++sid) {
    if (sid == face_side_id) continue;
    // Neumann sides are excluded from the correction region
    if (partition.side_is_neumann.at(static_cast<std::size_t>(sid))) continue;
    for_each_side_point(geo, Side::from_id(sid), kQuadExtra, [&](const SideQuadraturePoint& pt) {
      const double nuval = nu(pt.x);
      for (std::size_t i = 0; i < pt.ev.active.size(); ++i) {
        const Index gi = pt.ev.active[i];
        if (!is_row[static_cast<std::size_t>(gi)]) continue;
        const double phi_i = pt.ev.values[static_cast<Index>(i)];
        for (std::size_t j = 0; j < pt.ev.active.size(); ++j) {
          const Index gj = pt.ev.active[j];
          const double dn = pt.grad_phys.row(static_cast<Index>(j)).dot(pt.normal);
          trip.emplace_back(static_cast<int>(gi), static_cast<int>(gj),
                            -nuval * dn * phi_i * pt.measure);
        }
      }
    });
  }
  SparseMatrix c(n, n);
  c.setFromTriplets(trip.begin(), trip.end());
  return c;
}

Vector dirichlet_coefficients(const GeometryMap& geo, const std::vector<BoundaryKind>& side_tags,
                              const ScalarField& g) {
  const Index n = geo.space.total_basis();
  Vector coeffs = Vector::Zero(n);
  if (!g) return coeffs;
  for (int sid = 0; sid < 2 * geo.dim(); ++sid) {
    if (side_tags[static_cast<std::size_t>(sid)] != BoundaryKind::Dirichlet) continue;
    const InterfaceFace face = extract_face(geo, Side::from_id(sid));
    const Index nf = face.num_basis();
    DenseMatrix colloc = DenseMatrix::Zero(nf, nf);
    Vector rhs(nf);
    for (Index i = 0; i < nf; ++i) {
      const NurbsEval ev = eval_nurbs(face.trace.space, face.greville_param.row(i).transpose(), false);
      for (std::size_t a = 0; a < ev.active.size(); ++a)
        colloc(i, ev.active[a]) = ev.values[static_cast<Index>(a)];
      rhs[i] = g(face.greville_physical.row(i).transpose());
    }
    const Vector c = Eigen::PartialPivLU<DenseMatrix>(colloc).solve(rhs);
    for (Index j = 0; j < nf; ++j) coeffs[face.volume_index[static_cast<std::size_t>(j)]] = c[j];
  }
  return coeffs;
}

FieldSample sample_field(const GeometryMap& geo, const Vector& coeffs, const Vector& xhat) {
  const int d = geo.dim();
  const NurbsEval ev = eval_nurbs(geo.space, xhat, true);
  DenseMatrix jac = DenseMatrix::Zero(d, d);
  FieldSample s;
  s.x = Vector::Zero(d);
  s.value = 0.0;
  Vector grad_param = Vector::Zero(d);
  for (std::size_t a = 0; a < ev.active.size(); ++a) {
    const Index gi = ev.active[a];
    const auto row = geo.control_points.row(gi);
    s.x += ev.values[static_cast<Index>(a)] * row.transpose();
    jac += row.transpose() * ev.gradients.row(static_cast<Index>(a));
    s.value += coeffs[gi] * ev.values[static_cast<Index>(a)];
    grad_param += coeffs[gi] * ev.gradients.row(static_cast<Index>(a)).transpose();
  }
  s.jac_det = jac.determinant();
  s.gradient = jac.inverse().transpose() * grad_param;
  return s;
}

}  // namespace iga
