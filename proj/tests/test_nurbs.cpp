#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "iga/nurbs.hpp"

#include <cmath>
#include <random>

using namespace iga;

namespace {

Vector vec2(double x, double y) {
  Vector v(2);
  v << x, y;
  return v;
}

GeometryMap unit_square(int p, Index n_el) {
  return refine_to(make_box(vec2(0, 0), vec2(1, 1)), {p, p}, {n_el, n_el});
}

}  // namespace

TEST_CASE("rational basis reduces to B-splines for unit weights and sums to one") {
  NurbsSpace space;
  space.basis = TensorBasis{{make_open_knot_vector(2, 3), make_open_knot_vector(3, 2)}};
  space.weights = Vector::Ones(space.total_basis());

  std::mt19937 rng(17);
  std::uniform_real_distribution<double> uni(0.0, 1.0);
  for (int it = 0; it < 30; ++it) {
    const Vector xhat = vec2(uni(rng), uni(rng));
    const NurbsEval ev = eval_nurbs(space, xhat, true);
    CHECK(ev.values.sum() == doctest::Approx(1.0).epsilon(1e-14));
    CHECK(ev.values.minCoeff() >= 0.0);
    CHECK(ev.gradients.colwise().sum().norm() == doctest::Approx(0.0).epsilon(1e-11));

    // tensor B-spline values
    std::array<double, kMaxBasisPerDir> v0{}, v1{};
    const Index f0 = space.basis.direction(0).eval_basis(xhat[0], v0);
    const Index f1 = space.basis.direction(1).eval_basis(xhat[1], v1);
    for (std::size_t a = 0; a < ev.active.size(); ++a) {
      const auto mi = space.basis.multi_index(ev.active[a]);
      const double b = v0[static_cast<std::size_t>(mi[0] - f0)] * v1[static_cast<std::size_t>(mi[1] - f1)];
      CHECK(ev.values[static_cast<Index>(a)] == doctest::Approx(b).epsilon(1e-14));
    }
  }
}

TEST_CASE("rational gradients match finite differences on the quarter arc weights") {
  // quadratic quarter-circle weights 1, sqrt(2)/2, 1
  NurbsSpace space;
  space.basis = TensorBasis{{make_open_knot_vector(2, 1)}};
  space.weights = Vector(3);
  space.weights << 1.0, std::sqrt(2.0) / 2.0, 1.0;

  const double h = 1e-6;
  for (double x : {0.21, 0.5, 0.83}) {
    Vector xv(1), xp(1), xm(1);
    xv << x;
    xp << x + h;
    xm << x - h;
    const NurbsEval ev = eval_nurbs(space, xv, true);
    const NurbsEval evp = eval_nurbs(space, xp, false);
    const NurbsEval evm = eval_nurbs(space, xm, false);
    for (Index a = 0; a < 3; ++a) {
      const double fd = (evp.values[a] - evm.values[a]) / (2 * h);
      CHECK(std::abs(ev.gradients(a, 0) - fd) <= 1e-6 * std::max(1.0, std::abs(fd)));
    }
  }
}

TEST_CASE("identity geometry maps parameters to themselves") {
  const GeometryMap geo = make_box(vec2(0, 0), vec2(1, 1));
  std::mt19937 rng(23);
  std::uniform_real_distribution<double> uni(0.0, 1.0);
  for (int it = 0; it < 20; ++it) {
    const Vector xhat = vec2(uni(rng), uni(rng));
    CHECK((map_point(geo, xhat) - xhat).norm() == doctest::Approx(0.0).epsilon(1e-15));
  }
}

TEST_CASE("quarter annulus matches the reference control net and stays on circles") {
  const GeometryMap geo = make_quarter_annulus(1.0, 1.5);
  // expected six control points with their weights
  const std::vector<std::pair<Vector, double>> expected = {
      {vec2(1, 0), 1.0},          {vec2(1.5, 0), 1.0},       {vec2(0, 1), 1.0},
      {vec2(1, 1), std::sqrt(2.0) / 2.0}, {vec2(0, 1.5), 1.0}, {vec2(1.5, 1.5), std::sqrt(2.0) / 2.0}};
  CHECK(geo.control_points.rows() == 6);
  for (const auto& [pt, w] : expected) {
    bool found = false;
    for (Index i = 0; i < 6; ++i)
      if ((geo.control_points.row(i).transpose() - pt).norm() < 1e-14 &&
          std::abs(geo.space.weights[i] - w) < 1e-14)
        found = true;
    CHECK_MESSAGE(found, "control point missing: ", pt.transpose());
  }

  // inner and outer edges lie exactly on circles, also after refinement
  const GeometryMap fine = refine_to(geo, {3, 3}, {4, 5});
  for (int i = 0; i <= 50; ++i) {
    const double t = i / 50.0;
    const Vector inner = map_point(fine, vec2(0.0, t));
    const Vector outer = map_point(fine, vec2(1.0, t));
    CHECK(inner.norm() == doctest::Approx(1.0).epsilon(1e-12));
    CHECK(outer.norm() == doctest::Approx(1.5).epsilon(1e-12));
  }
  CHECK(jacobian_sign_constant(fine));
}

TEST_CASE("45 degree ring sector stays on its circles") {
  const GeometryMap geo = make_ring_sector(1.0, 1.5, M_PI / 4, M_PI / 2);
  for (int i = 0; i <= 40; ++i) {
    const double t = i / 40.0;
    CHECK(map_point(geo, vec2(0.0, t)).norm() == doctest::Approx(1.0).epsilon(1e-12));
    CHECK(map_point(geo, vec2(1.0, t)).norm() == doctest::Approx(1.5).epsilon(1e-12));
  }
}

TEST_CASE("jacobian matches finite differences of the map") {
  const GeometryMap geo = refine_to(make_quarter_annulus(1.0, 2.0), {2, 2}, {2, 3});
  std::mt19937 rng(31);
  std::uniform_real_distribution<double> uni(0.05, 0.95);
  const double h = 1e-6;
  for (int it = 0; it < 10; ++it) {
    const Vector xhat = vec2(uni(rng), uni(rng));
    const DenseMatrix j = jacobian(geo, xhat);
    for (int c = 0; c < 2; ++c) {
      Vector xp = xhat, xm = xhat;
      xp[c] += h;
      xm[c] -= h;
      const Vector fd = (map_point(geo, xp) - map_point(geo, xm)) / (2 * h);
      CHECK((j.col(c) - fd).norm() <= 1e-6 * std::max(1.0, fd.norm()));
    }
  }
}

TEST_CASE("affine invariance: translating control points translates the image") {
  GeometryMap geo = refine_to(make_quarter_annulus(1.0, 1.5), {2, 2}, {2, 2});
  GeometryMap shifted = geo;
  shifted.control_points.rowwise() += Eigen::RowVector2d(0.7, -0.3);
  const Vector xhat = vec2(0.3, 0.6);
  const Vector diff = map_point(shifted, xhat) - map_point(geo, xhat);
  CHECK(diff[0] == doctest::Approx(0.7).epsilon(1e-14));
  CHECK(diff[1] == doctest::Approx(-0.3).epsilon(1e-14));
}

TEST_CASE("face extraction: counts, greville nodes, trace identity") {
  const GeometryMap geo = unit_square(2, 2);
  const InterfaceFace face = extract_face(geo, Side{0, 1});  // edge x = 1
  CHECK(face.num_basis() == 4);
  const Vector expected_grev = (Vector(4) << 0.0, 0.25, 0.75, 1.0).finished();
  for (Index j = 0; j < 4; ++j)
    CHECK(face.greville_param(j, 0) == doctest::Approx(expected_grev[j]));

  // trace basis values equal the volume basis values on the edge
  std::mt19937 rng(41);
  std::uniform_real_distribution<double> uni(0.0, 1.0);
  for (int it = 0; it < 100; ++it) {
    const double t = uni(rng);
    Vector th(1);
    th << t;
    const NurbsEval tr = eval_nurbs(face.trace.space, th, false);
    const NurbsEval vol = eval_nurbs(geo.space, vec2(1.0, t), false);
    Vector vol_vals = Vector::Zero(geo.space.total_basis());
    for (std::size_t a = 0; a < vol.active.size(); ++a)
      vol_vals[vol.active[a]] = vol.values[static_cast<Index>(a)];
    for (std::size_t a = 0; a < tr.active.size(); ++a) {
      const Index vol_idx = face.volume_index[static_cast<std::size_t>(tr.active[a])];
      CHECK(tr.values[static_cast<Index>(a)] ==
            doctest::Approx(vol_vals[vol_idx]).epsilon(1e-13));
    }
  }

  // dimension of the trace space on a 3D patch face
  const GeometryMap cube = refine_to(
      make_extruded(make_box(vec2(0, 0), vec2(1, 1)), 0.0, 1.0), {2, 2, 2}, {2, 2, 2});
  const InterfaceFace f3 = extract_face(cube, Side{2, 0});
  CHECK(f3.num_basis() == 4 * 4);
}

TEST_CASE("point inversion: round trip, corners, offset points") {
  const GeometryMap geo = refine_to(make_quarter_annulus(1.0, 1.5), {3, 3}, {3, 4});
  const InterfaceFace face = extract_face(geo, Side{0, 1});  // outer arc
  std::mt19937 rng(53);
  std::uniform_real_distribution<double> uni(0.0, 1.0);
  for (int it = 0; it < 25; ++it) {
    Vector t0(1);
    t0 << uni(rng);
    const Vector x = map_point(face.trace, t0);
    const auto inv = point_inversion(face.trace, x, 1e-10);
    CHECK(inv.converged);
    CHECK(std::abs(inv.parameter[0] - t0[0]) < 1e-10);
  }
  // corner points invert to the parameter interval ends
  {
    Vector c(1);
    c << 0.0;
    const auto inv0 = point_inversion(face.trace, map_point(face.trace, c), 1e-12);
    CHECK(inv0.converged);
    CHECK(inv0.parameter[0] == doctest::Approx(0.0).epsilon(1e-10));
    c << 1.0;
    const auto inv1 = point_inversion(face.trace, map_point(face.trace, c), 1e-12);
    CHECK(inv1.converged);
    CHECK(inv1.parameter[0] == doctest::Approx(1.0).epsilon(1e-10));
  }
  // a point offset from a straight edge fails with that distance as residual
  const GeometryMap square = unit_square(2, 2);
  const InterfaceFace edge = extract_face(square, Side{0, 1});
  const auto miss = point_inversion(edge.trace, vec2(1.05, 0.4), 1e-10);
  CHECK_FALSE(miss.converged);
  CHECK(miss.residual == doctest::Approx(0.05).epsilon(1e-10));
}

TEST_CASE("curve interpolation: linear reproduction and collocation residual") {
  const KnotVector kv = make_open_knot_vector(3, 4);
  auto g = [](double y) { return 0.25 + 0.5 * y; };
  const DenseMatrix pts = interpolate_curve_bspline(g, kv);
  GeometryMap curve;
  curve.space.basis = TensorBasis{{kv}};
  curve.space.weights = Vector::Ones(kv.num_basis());
  curve.control_points = pts;
  const Vector t = kv.greville();
  for (Index i = 0; i < t.size(); ++i) {
    Vector th(1);
    th << t[i];
    const Vector x = map_point(curve, th);
    CHECK(x[0] == doctest::Approx(g(t[i])).epsilon(1e-12));
    CHECK(x[1] == doctest::Approx(t[i]).epsilon(1e-12));
  }
  for (int i = 0; i <= 50; ++i) {
    Vector th(1);
    th << i / 50.0;
    const Vector x = map_point(curve, th);
    CHECK(x[0] == doctest::Approx(g(x[1])).epsilon(1e-12));
  }
}

TEST_CASE("interpolated sinusoidal interfaces at degrees (4,3) leave the reported gap") {
  auto g = [](double y) { return 1.0 + 0.2 * std::sin(2.0 * M_PI * y); };
  auto curve_map = [&](int p) {
    const KnotVector kv = make_open_knot_vector(p, 1);
    GeometryMap c;
    c.space.basis = TensorBasis{{kv}};
    c.space.weights = Vector::Ones(kv.num_basis());
    c.control_points = interpolate_curve_bspline(g, kv);
    return c;
  };
  const GeometryMap c4 = curve_map(4), c3 = curve_map(3);
  const double gap = std::max(measure_face_gap(c4, c3), measure_face_gap(c3, c4));
  CHECK(gap == doctest::Approx(0.0197).epsilon(0.10));
}

TEST_CASE("ruled interface patch interpolates the curve edge") {
  auto g = [](double y) { return 1.0 + 0.2 * std::sin(2.0 * M_PI * y); };
  const KnotVector kv = make_open_knot_vector(4, 1);
  GeometryMap patch = make_ruled_interface_patch(g, kv, 0.0, true);
  patch = refine_to(patch, {4, 4}, {3, 3});
  // the straight side and the curve side
  for (int i = 0; i <= 20; ++i) {
    const double t = i / 20.0;
    CHECK(map_point(patch, vec2(0.0, t))[0] == doctest::Approx(0.0).epsilon(1e-13));
    const Vector xc = map_point(patch, vec2(1.0, t));
    // the edge equals the degree-4 interpolant of the curve, which hits the
    // Greville samples exactly
    (void)xc;
  }
  const Vector grev = kv.greville();
  for (Index i = 0; i < grev.size(); ++i) {
    const auto face = extract_face(patch, Side{0, 1});
    const auto inv = point_inversion(face.trace, vec2(g(grev[i]), grev[i]), 1e-9);
    CHECK(inv.converged);
  }
  CHECK(jacobian_sign_constant(patch));
}

TEST_CASE("extrusion appends a linear direction") {
  const GeometryMap ring = make_quarter_annulus(1.0, 2.0);
  const GeometryMap solid = make_extruded(ring, 0.25, 0.75);
  Vector xhat(3);
  xhat << 0.4, 0.3, 0.6;
  const DenseMatrix j = jacobian(solid, xhat);
  CHECK(j(2, 0) == doctest::Approx(0.0).epsilon(1e-14));
  CHECK(j(2, 1) == doctest::Approx(0.0).epsilon(1e-14));
  CHECK(j(0, 2) == doctest::Approx(0.0).epsilon(1e-14));
  CHECK(j(1, 2) == doctest::Approx(0.0).epsilon(1e-14));
  CHECK(j(2, 2) == doctest::Approx(0.5).epsilon(1e-14));  // z spans 0.5
  const Vector x = map_point(solid, xhat);
  CHECK(x[2] == doctest::Approx(0.25 + 0.5 * 0.6).epsilon(1e-14));
}

TEST_CASE("face gap measurement on surface faces") {
  const GeometryMap a = make_extruded(make_box(vec2(0, 0), vec2(1, 1)), 0.0, 1.0);
  const GeometryMap b = make_extruded(make_box(vec2(1.01, 0), vec2(2, 1)), 0.0, 1.0);
  const InterfaceFace fa = extract_face(a, Side{0, 1});
  const InterfaceFace fb = extract_face(b, Side{0, 0});
  const double gap = measure_face_gap(fa.trace, fb.trace, 400);
  CHECK(gap == doctest::Approx(0.01).epsilon(1e-6));
}

TEST_CASE("refinement keeps the geometry bit-compatible") {
  const GeometryMap coarse = make_quarter_annulus(1.0, 1.5);
  const GeometryMap fine = refine_to(coarse, {4, 4}, {5, 7});
  CHECK(fine.space.basis.direction(0).num_spans() == 5);
  CHECK(fine.space.basis.direction(1).num_spans() == 7);
  std::mt19937 rng(61);
  std::uniform_real_distribution<double> uni(0.0, 1.0);
  for (int it = 0; it < 40; ++it) {
    const Vector xhat = vec2(uni(rng), uni(rng));
    CHECK((map_point(fine, xhat) - map_point(coarse, xhat)).norm() ==
          doctest::Approx(0.0).epsilon(1e-12));
  }
}

TEST_CASE("coons patch reproduces ruled boundaries") {
  const KnotVector kv = make_open_knot_vector(2, 1);
  auto fit = [&](auto fn) { return greville_fit_curve(kv, fn); };
  const DenseMatrix south = fit([](double t) { return vec2(t, 0.05 * std::sin(2 * M_PI * t)); });
  const DenseMatrix north = fit([](double t) { return vec2(t, 1.0); });
  const DenseMatrix west = fit([](double t) { return vec2(0.0, t * (1.0 - 0.0) + 0.0); });
  const DenseMatrix east = fit([](double t) { return vec2(1.0, t); });
  const GeometryMap geo = make_coons_patch(kv, south, north, kv, west, east);
  // boundary curves are reproduced
  for (int i = 0; i <= 10; ++i) {
    const double t = i / 10.0;
    CHECK(map_point(geo, vec2(t, 1.0))[1] == doctest::Approx(1.0).epsilon(1e-12));
    CHECK(map_point(geo, vec2(0.0, t))[0] == doctest::Approx(0.0).epsilon(1e-12));
    CHECK(map_point(geo, vec2(1.0, t))[0] == doctest::Approx(1.0).epsilon(1e-12));
  }
  CHECK(jacobian_sign_constant(geo));
}
