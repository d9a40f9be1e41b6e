#include "iga/nurbs.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace iga {

NurbsEval eval_nurbs(const NurbsSpace& space, const Vector& xhat, bool with_gradients) {
  const int d = space.dim();
  if (xhat.size() != d) throw std::invalid_argument("eval_nurbs: parameter dimension mismatch");

  std::array<std::array<std::array<double, kMaxBasisPerDir>, 3>, 3> per_dir{};
  std::array<Index, 3> first{};
  std::array<int, 3> count{};
  for (int k = 0; k < d; ++k) {
    const auto& kv = space.basis.direction(k);
    first[static_cast<std::size_t>(k)] =
        kv.eval_basis_derivatives(xhat[k], with_gradients ? 1 : 0, per_dir[static_cast<std::size_t>(k)]);
    count[static_cast<std::size_t>(k)] = kv.degree() + 1;
  }

  Index n_active = 1;
  for (int k = 0; k < d; ++k) n_active *= count[static_cast<std::size_t>(k)];

  NurbsEval out;
  out.active.resize(static_cast<std::size_t>(n_active));
  Vector bw(n_active);                       // B_i * w_i
  DenseMatrix dbw;                           // d(B_i)/dxhat_k * w_i
  if (with_gradients) dbw.setZero(n_active, d);

  double w_sum = 0.0;
  Vector dw_sum = Vector::Zero(d);
  Index a = 0;
  std::array<Index, 3> mi{0, 0, 0};
  for (Index i2 = 0; i2 < (d > 2 ? count[2] : 1); ++i2) {
    for (Index i1 = 0; i1 < (d > 1 ? count[1] : 1); ++i1) {
      for (Index i0 = 0; i0 < count[0]; ++i0, ++a) {
        mi[0] = first[0] + i0;
        if (d > 1) mi[1] = first[1] + i1;
        if (d > 2) mi[2] = first[2] + i2;
        const Index lin = space.basis.linear_index(mi);
        out.active[static_cast<std::size_t>(a)] = lin;
        const double w = space.weights[lin];
        double b = per_dir[0][0][static_cast<std::size_t>(i0)];
        if (d > 1) b *= per_dir[1][0][static_cast<std::size_t>(i1)];
        if (d > 2) b *= per_dir[2][0][static_cast<std::size_t>(i2)];
        bw[a] = b * w;
        w_sum += bw[a];
        if (with_gradients) {
          const std::array<Index, 3> ii{i0, i1, i2};
          for (int k = 0; k < d; ++k) {
            double g = 1.0;
            for (int m = 0; m < d; ++m) {
              const auto idx = static_cast<std::size_t>(ii[static_cast<std::size_t>(m)]);
              g *= per_dir[static_cast<std::size_t>(m)][m == k ? 1 : 0][idx];
            }
            dbw(a, k) = g * w;
            dw_sum[k] += dbw(a, k);
          }
        }
      }
    }
  }

  out.values = bw / w_sum;
  if (with_gradients) {
    out.gradients.resize(n_active, d);
    for (Index i = 0; i < n_active; ++i)
      for (int k = 0; k < d; ++k)
        out.gradients(i, k) = (dbw(i, k) - out.values[i] * dw_sum[k]) / w_sum;
  }
  return out;
}

Vector map_point(const GeometryMap& geo, const Vector& xhat) {
  const NurbsEval ev = eval_nurbs(geo.space, xhat, false);
  Vector x = Vector::Zero(geo.range_dim());
  for (std::size_t a = 0; a < ev.active.size(); ++a)
    x += ev.values[static_cast<Index>(a)] * geo.control_points.row(ev.active[a]).transpose();
  return x;
}

DenseMatrix jacobian(const GeometryMap& geo, const Vector& xhat) {
  const NurbsEval ev = eval_nurbs(geo.space, xhat, true);
  DenseMatrix j = DenseMatrix::Zero(geo.range_dim(), geo.dim());
  for (std::size_t a = 0; a < ev.active.size(); ++a)
    j += geo.control_points.row(ev.active[a]).transpose() * ev.gradients.row(static_cast<Index>(a));
  return j;
}

double patch_diameter(const GeometryMap& geo) {
  const int d = geo.dim();
  std::vector<Vector> corners;
  for (int c = 0; c < (1 << d); ++c) {
    Vector xhat(d);
    for (int k = 0; k < d; ++k) xhat[k] = (c >> k) & 1 ? 1.0 : 0.0;
    corners.push_back(map_point(geo, xhat));
  }
  double diam = 0.0;
  for (std::size_t i = 0; i < corners.size(); ++i)
    for (std::size_t j = i + 1; j < corners.size(); ++j)
      diam = std::max(diam, (corners[i] - corners[j]).norm());
  return diam;
}

bool jacobian_sign_constant(const GeometryMap& geo, int samples_per_dir) {
  if (geo.range_dim() != geo.dim()) throw std::invalid_argument("jacobian_sign_constant: square Jacobian required");
  const int d = geo.dim();
  int sign = 0;
  const Index total = static_cast<Index>(std::pow(samples_per_dir, d));
  for (Index s = 0; s < total; ++s) {
    Vector xhat(d);
    Index r = s;
    for (int k = 0; k < d; ++k) {
      xhat[k] = (r % samples_per_dir + 0.5) / samples_per_dir;
      r /= samples_per_dir;
    }
    const double det = jacobian(geo, xhat).determinant();
    const int sgn = det > 0 ? 1 : (det < 0 ? -1 : 0);
    if (sgn == 0) return false;
    if (sign == 0) sign = sgn;
    if (sgn != sign) return false;
  }
  return true;
}

InterfaceFace extract_face(const GeometryMap& geo, Side side, int patch_id) {
  const int d = geo.dim();
  if (side.direction < 0 || side.direction >= d || (side.end != 0 && side.end != 1))
    throw std::invalid_argument("extract_face: invalid side");

  InterfaceFace face;
  face.patch = patch_id;
  face.side = side;

  std::vector<KnotVector> trace_dirs;
  std::vector<int> free_dirs;
  for (int k = 0; k < d; ++k) {
    if (k == side.direction) continue;
    trace_dirs.push_back(geo.space.basis.direction(k));
    free_dirs.push_back(k);
  }
  // 1D patches have point traces; not needed here.
  if (trace_dirs.empty()) throw std::invalid_argument("extract_face: 1D patch has no face trace");
  TensorBasis trace_basis{trace_dirs};

  const Index fixed_layer = side.end == 0 ? 0 : geo.space.basis.num_basis(side.direction) - 1;
  const Index n_face = trace_basis.total_basis();
  face.volume_index.resize(static_cast<std::size_t>(n_face));
  Vector trace_weights(n_face);
  DenseMatrix trace_points(n_face, geo.range_dim());
  for (Index j = 0; j < n_face; ++j) {
    const auto fm = trace_basis.multi_index(j);
    std::array<Index, 3> vm{0, 0, 0};
    vm[static_cast<std::size_t>(side.direction)] = fixed_layer;
    for (std::size_t k = 0; k < free_dirs.size(); ++k)
      vm[static_cast<std::size_t>(free_dirs[k])] = fm[k];
    const Index vol = geo.space.basis.linear_index(vm);
    face.volume_index[static_cast<std::size_t>(j)] = vol;
    trace_weights[j] = geo.space.weights[vol];
    trace_points.row(j) = geo.control_points.row(vol);
  }
  face.trace.space = NurbsSpace{trace_basis, std::move(trace_weights)};
  face.trace.control_points = std::move(trace_points);

  // face Greville nodes: tensor product of the free directions' abscissae
  std::vector<Vector> g;
  for (const auto& kv : trace_dirs) g.push_back(kv.greville());
  face.greville_param.resize(n_face, d - 1);
  face.greville_physical.resize(n_face, geo.range_dim());
  for (Index j = 0; j < n_face; ++j) {
    const auto fm = trace_basis.multi_index(j);
    Vector t(d - 1);
    for (int k = 0; k < d - 1; ++k) t[k] = g[static_cast<std::size_t>(k)][fm[static_cast<std::size_t>(k)]];
    face.greville_param.row(j) = t.transpose();
    face.greville_physical.row(j) = map_point(face.trace, t).transpose();
  }
  return face;
}

InversionResult point_inversion(const GeometryMap& face, const Vector& x, double tol,
                                int max_iterations) {
  const int d = face.dim();
  // coarse sampling for the initial guess
  const int n_samples = d == 1 ? 33 : 9;
  Vector t(d);
  Vector best = Vector::Zero(d);
  double best_res = std::numeric_limits<double>::infinity();
  const Index total = static_cast<Index>(std::pow(n_samples, d));
  for (Index s = 0; s < total; ++s) {
    Index r = s;
    for (int k = 0; k < d; ++k) {
      t[k] = static_cast<double>(r % n_samples) / (n_samples - 1);
      r /= n_samples;
    }
    const double res = (map_point(face, t) - x).norm();
    if (res < best_res) {
      best_res = res;
      best = t;
    }
  }

  t = best;
  double res = best_res;
  for (int it = 0; it < max_iterations && res > tol; ++it) {
    const DenseMatrix j = jacobian(face, t);
    const Vector diff = x - map_point(face, t);
    const Vector step = (j.transpose() * j).ldlt().solve(j.transpose() * diff);
    if (!step.allFinite()) break;
    double alpha = 1.0;
    Vector t_new = t;
    double res_new = res;
    for (int back = 0; back < 25; ++back) {
      t_new = (t + alpha * step).cwiseMax(0.0).cwiseMin(1.0);
      res_new = (map_point(face, t_new) - x).norm();
      if (res_new < res) break;
      alpha *= 0.5;
    }
    if (res_new >= res) break;  // stalled (clamped against the face boundary)
    t = t_new;
    res = res_new;
  }
  return InversionResult{res <= tol, t, res};
}

namespace {

GeometryMap make_arc_curve(double radius, double theta0, double theta1) {
  const double dtheta = theta1 - theta0;
  if (!(dtheta > 0.0 && dtheta <= M_PI / 2 + 1e-12))
    throw std::invalid_argument("arc: angle must be in (0, pi/2]");
  const double mid = 0.5 * (theta0 + theta1);
  const double w_mid = std::cos(0.5 * dtheta);
  GeometryMap curve;
  curve.space.basis = TensorBasis{{make_open_knot_vector(2, 1)}};
  curve.space.weights = Vector(3);
  curve.space.weights << 1.0, w_mid, 1.0;
  curve.control_points.resize(3, 2);
  curve.control_points.row(0) << radius * std::cos(theta0), radius * std::sin(theta0);
  curve.control_points.row(1) << radius / w_mid * std::cos(mid), radius / w_mid * std::sin(mid);
  curve.control_points.row(2) << radius * std::cos(theta1), radius * std::sin(theta1);
  return curve;
}

}  // namespace

GeometryMap make_ring_sector(double r_in, double r_out, double theta0, double theta1) {
  if (!(0.0 < r_in && r_in < r_out)) throw std::invalid_argument("ring sector: need 0 < r_in < r_out");
  const GeometryMap inner = make_arc_curve(r_in, theta0, theta1);
  GeometryMap geo;
  geo.space.basis = TensorBasis{{make_open_knot_vector(1, 1), inner.space.basis.direction(0)}};
  geo.space.weights = Vector(6);
  geo.control_points.resize(6, 2);
  for (Index a = 0; a < 3; ++a) {
    const double w = inner.space.weights[a];
    for (Index r = 0; r < 2; ++r) {
      const double radius = r == 0 ? r_in : r_out;
      const Index lin = r + 2 * a;  // radial direction fastest
      geo.space.weights[lin] = w;
      geo.control_points.row(lin) = inner.control_points.row(a) * (radius / r_in);
    }
  }
  return geo;
}

GeometryMap make_quarter_annulus(double r_in, double r_out) {
  return make_ring_sector(r_in, r_out, 0.0, M_PI / 2);
}

GeometryMap make_box(const Vector& lo, const Vector& hi) {
  const int d = static_cast<int>(lo.size());
  if (hi.size() != d) throw std::invalid_argument("make_box: dimension mismatch");
  for (int k = 0; k < d; ++k)
    if (!(lo[k] < hi[k])) throw std::invalid_argument("make_box: need lo < hi");
  std::vector<KnotVector> dirs;
  for (int k = 0; k < d; ++k) dirs.push_back(make_open_knot_vector(1, 1));
  GeometryMap geo;
  geo.space.basis = TensorBasis{dirs};
  const Index n = geo.space.basis.total_basis();
  geo.space.weights = Vector::Ones(n);
  geo.control_points.resize(n, d);
  for (Index i = 0; i < n; ++i) {
    const auto mi = geo.space.basis.multi_index(i);
    for (int k = 0; k < d; ++k)
      geo.control_points(i, k) = mi[static_cast<std::size_t>(k)] == 0 ? lo[k] : hi[k];
  }
  return geo;
}

DenseMatrix greville_fit_curve(const KnotVector& kv, const std::function<Vector(double)>& c) {
  const Index n = kv.num_basis();
  const Vector t = kv.greville();
  DenseMatrix colloc = DenseMatrix::Zero(n, n);
  std::array<double, kMaxBasisPerDir> vals{};
  for (Index i = 0; i < n; ++i) {
    const Index first = kv.eval_basis(t[i], vals);
    for (int j = 0; j <= kv.degree(); ++j) colloc(i, first + j) = vals[static_cast<std::size_t>(j)];
  }
  DenseMatrix rhs(n, c(t[0]).size());
  for (Index i = 0; i < n; ++i) rhs.row(i) = c(t[i]).transpose();
  Eigen::PartialPivLU<DenseMatrix> lu(colloc);
  if (std::abs(lu.determinant()) == 0.0)
    throw std::runtime_error("greville_fit_curve: singular collocation matrix");
  return lu.solve(rhs);
}

DenseMatrix interpolate_curve_bspline(const std::function<double(double)>& g,
                                      const KnotVector& kv) {
  return greville_fit_curve(kv, [&g](double t) {
    Vector q(2);
    q << g(t), t;
    return q;
  });
}

GeometryMap make_ruled_patch(const KnotVector& curve_kv, const DenseMatrix& left_points,
                             const DenseMatrix& right_points) {
  const Index n = curve_kv.num_basis();
  if (left_points.rows() != n || right_points.rows() != n)
    throw std::invalid_argument("make_ruled_patch: control point count mismatch");
  GeometryMap geo;
  geo.space.basis = TensorBasis{{make_open_knot_vector(1, 1), curve_kv}};
  geo.space.weights = Vector::Ones(2 * n);
  geo.control_points.resize(2 * n, 2);
  for (Index a = 0; a < n; ++a) {
    geo.control_points.row(0 + 2 * a) = left_points.row(a);
    geo.control_points.row(1 + 2 * a) = right_points.row(a);
  }
  return geo;
}

GeometryMap make_ruled_interface_patch(const std::function<double(double)>& g,
                                       const KnotVector& curve_kv, double x_straight,
                                       bool curve_on_right) {
  const DenseMatrix curve = interpolate_curve_bspline(g, curve_kv);
  const Vector t = curve_kv.greville();
  DenseMatrix straight(curve_kv.num_basis(), 2);
  // a straight segment has exact B-spline control points at the Greville
  // abscissae (linear precision)
  for (Index i = 0; i < curve_kv.num_basis(); ++i) straight.row(i) << x_straight, t[i];
  return curve_on_right ? make_ruled_patch(curve_kv, straight, curve)
                        : make_ruled_patch(curve_kv, curve, straight);
}

GeometryMap make_coons_patch(const KnotVector& kv_u, const DenseMatrix& south,
                             const DenseMatrix& north, const KnotVector& kv_v,
                             const DenseMatrix& west, const DenseMatrix& east) {
  const Index nu = kv_u.num_basis(), nv = kv_v.num_basis();
  if (south.rows() != nu || north.rows() != nu || west.rows() != nv || east.rows() != nv)
    throw std::invalid_argument("make_coons_patch: control point count mismatch");
  const double corner_tol = 1e-12;
  if ((south.row(0) - west.row(0)).norm() > corner_tol ||
      (south.row(nu - 1) - east.row(0)).norm() > corner_tol ||
      (north.row(0) - west.row(nv - 1)).norm() > corner_tol ||
      (north.row(nu - 1) - east.row(nv - 1)).norm() > corner_tol)
    throw std::invalid_argument("make_coons_patch: boundary corners do not match");

  const Vector tu = kv_u.greville(), tv = kv_v.greville();
  GeometryMap geo;
  geo.space.basis = TensorBasis{{kv_u, kv_v}};
  const Index n = nu * nv;
  geo.space.weights = Vector::Ones(n);
  geo.control_points.resize(n, 2);
  // bilinear blending on the control nets; exact for the boundary curves
  // because the linear blending functions have Greville control coefficients
  for (Index j = 0; j < nv; ++j) {
    for (Index i = 0; i < nu; ++i) {
      const double u = tu[i], v = tv[j];
      const Eigen::RowVector2d ruled_v = (1.0 - v) * south.row(i) + v * north.row(i);
      const Eigen::RowVector2d ruled_u = (1.0 - u) * west.row(j) + u * east.row(j);
      const Eigen::RowVector2d bilin = (1.0 - u) * (1.0 - v) * south.row(0) +
                                       u * (1.0 - v) * south.row(nu - 1) +
                                       (1.0 - u) * v * north.row(0) + u * v * north.row(nu - 1);
      geo.control_points.row(i + nu * j) = ruled_v + ruled_u - bilin;
    }
  }
  return geo;
}

GeometryMap make_extruded(const GeometryMap& surface, double z0, double z1) {
  if (surface.dim() != 2 || surface.range_dim() != 2)
    throw std::invalid_argument("make_extruded: planar map expected");
  GeometryMap geo;
  geo.space.basis = TensorBasis{{surface.space.basis.direction(0), surface.space.basis.direction(1),
                                 make_open_knot_vector(1, 1)}};
  const Index ns = surface.space.total_basis();
  geo.space.weights.resize(2 * ns);
  geo.control_points.resize(2 * ns, 3);
  for (Index layer = 0; layer < 2; ++layer) {
    for (Index i = 0; i < ns; ++i) {
      const Index lin = i + ns * layer;
      geo.space.weights[lin] = surface.space.weights[i];
      geo.control_points.row(lin) << surface.control_points(i, 0), surface.control_points(i, 1),
          layer == 0 ? z0 : z1;
    }
  }
  return geo;
}

namespace {

// Applies a univariate coefficient transform along one direction of a tensor
// control net given in homogeneous form (w*P | w).
GeometryMap apply_univariate(const GeometryMap& geo, int direction,
                             const std::function<std::pair<KnotVector, DenseMatrix>(
                                 const KnotVector&, const DenseMatrix&)>& op) {
  const int d = geo.dim();
  const Index n_dir = geo.space.basis.num_basis(direction);
  const Index total = geo.space.total_basis();
  const Index n_lines = total / n_dir;
  const int rd = geo.range_dim();

  // gather homogeneous coefficients line by line
  std::vector<std::array<Index, 3>> line_base;
  line_base.reserve(static_cast<std::size_t>(n_lines));
  for (Index i = 0; i < total; ++i) {
    auto mi = geo.space.basis.multi_index(i);
    if (mi[static_cast<std::size_t>(direction)] == 0) line_base.push_back(mi);
  }

  DenseMatrix coeffs(n_dir, (rd + 1) * n_lines);
  for (Index line = 0; line < n_lines; ++line) {
    auto mi = line_base[static_cast<std::size_t>(line)];
    for (Index a = 0; a < n_dir; ++a) {
      mi[static_cast<std::size_t>(direction)] = a;
      const Index lin = geo.space.basis.linear_index(mi);
      const double w = geo.space.weights[lin];
      for (int c = 0; c < rd; ++c) coeffs(a, line * (rd + 1) + c) = w * geo.control_points(lin, c);
      coeffs(a, line * (rd + 1) + rd) = w;
    }
  }

  auto [kv2, c2] = op(geo.space.basis.direction(direction), coeffs);

  std::vector<KnotVector> dirs;
  for (int k = 0; k < d; ++k)
    dirs.push_back(k == direction ? kv2 : geo.space.basis.direction(k));
  GeometryMap out;
  out.space.basis = TensorBasis{dirs};
  const Index total2 = out.space.basis.total_basis();
  out.space.weights.resize(total2);
  out.control_points.resize(total2, rd);
  for (Index line = 0; line < n_lines; ++line) {
    auto mi = line_base[static_cast<std::size_t>(line)];
    for (Index a = 0; a < kv2.num_basis(); ++a) {
      mi[static_cast<std::size_t>(direction)] = a;
      const Index lin = out.space.basis.linear_index(mi);
      const double w = c2(a, line * (rd + 1) + rd);
      out.space.weights[lin] = w;
      for (int c = 0; c < rd; ++c) out.control_points(lin, c) = c2(a, line * (rd + 1) + c) / w;
    }
  }
  return out;
}

}  // namespace

GeometryMap insert_knot(const GeometryMap& geo, int direction, double z) {
  return apply_univariate(geo, direction,
                          [z](const KnotVector& kv, const DenseMatrix& c) { return insert_knot(kv, c, z); });
}

GeometryMap elevate_degree(const GeometryMap& geo, int direction) {
  return apply_univariate(geo, direction,
                          [](const KnotVector& kv, const DenseMatrix& c) { return elevate_degree(kv, c); });
}

GeometryMap refine_to(const GeometryMap& geo, const std::vector<int>& degrees,
                      const std::vector<Index>& spans) {
  GeometryMap out = geo;
  const int d = geo.dim();
  if (static_cast<int>(degrees.size()) != d || static_cast<int>(spans.size()) != d)
    throw std::invalid_argument("refine_to: one degree and span count per direction required");
  for (int k = 0; k < d; ++k) {
    while (out.space.basis.direction(k).degree() < degrees[static_cast<std::size_t>(k)])
      out = elevate_degree(out, k);
    if (out.space.basis.direction(k).degree() > degrees[static_cast<std::size_t>(k)])
      throw std::invalid_argument("refine_to: requested degree below the geometry degree");
    const Index n_el = spans[static_cast<std::size_t>(k)];
    for (Index i = 1; i < n_el; ++i) {
      const double z = static_cast<double>(i) / static_cast<double>(n_el);
      const auto bp = out.space.basis.direction(k).breakpoints();
      bool present = false;
      for (double b : bp) present = present || std::abs(b - z) < 1e-14;
      if (!present) out = insert_knot(out, k, z);
    }
    if (out.space.basis.direction(k).num_spans() != n_el)
      throw std::invalid_argument("refine_to: existing knots are incompatible with the span count");
  }
  return out;
}

double measure_face_gap(const GeometryMap& from, const GeometryMap& to, int samples) {
  if (from.dim() != 1) {
    // sample a tensor grid on higher-dimensional faces
    const int per_dir = static_cast<int>(std::round(std::sqrt(static_cast<double>(samples))));
    double gap = 0.0;
    Vector t(2);
    for (int i = 0; i < per_dir; ++i) {
      for (int j = 0; j < per_dir; ++j) {
        t << static_cast<double>(i) / (per_dir - 1), static_cast<double>(j) / (per_dir - 1);
        const auto inv = point_inversion(to, map_point(from, t), 0.0);
        gap = std::max(gap, inv.residual);
      }
    }
    return gap;
  }
  double gap = 0.0;
  Vector t(1);
  for (int i = 0; i < samples; ++i) {
    t[0] = static_cast<double>(i) / (samples - 1);
    const auto inv = point_inversion(to, map_point(from, t), 0.0);
    gap = std::max(gap, inv.residual);
  }
  return gap;
}

}  // namespace iga
