#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "iga/knots.hpp"

#include <cmath>
#include <random>

using namespace iga;

namespace {

// Independent oracle: expand the Cox-de Boor recursion symbolically into the
// polynomial of each basis function on one span, then evaluate.
using Poly = std::vector<double>;  // coefficients, low degree first

Poly poly_add(const Poly& a, const Poly& b) {
  Poly out(std::max(a.size(), b.size()), 0.0);
  for (std::size_t i = 0; i < a.size(); ++i) out[i] += a[i];
  for (std::size_t i = 0; i < b.size(); ++i) out[i] += b[i];
  return out;
}

// (c0 + c1 x) * p
Poly poly_mul_affine(double c0, double c1, const Poly& p) {
  Poly out(p.size() + 1, 0.0);
  for (std::size_t i = 0; i < p.size(); ++i) {
    out[i] += c0 * p[i];
    out[i + 1] += c1 * p[i];
  }
  return out;
}

double poly_eval(const Poly& p, double x) {
  double v = 0.0;
  for (std::size_t i = p.size(); i-- > 0;) v = v * x + p[i];
  return v;
}

// polynomial of B_{i,ell} restricted to the span [xi_s, xi_{s+1})
Poly bspline_poly(const std::vector<double>& xi, int i, int ell, int s) {
  if (ell == 0) return i == s ? Poly{1.0} : Poly{0.0};
  Poly out{0.0};
  const double d1 = xi[i + ell] - xi[i];
  if (d1 > 0.0) {
    const Poly left = bspline_poly(xi, i, ell - 1, s);
    out = poly_add(out, poly_mul_affine(-xi[i] / d1, 1.0 / d1, left));
  }
  const double d2 = xi[i + ell + 1] - xi[i + 1];
  if (d2 > 0.0) {
    const Poly right = bspline_poly(xi, i + 1, ell - 1, s);
    out = poly_add(out, poly_mul_affine(xi[i + ell + 1] / d2, -1.0 / d2, right));
  }
  return out;
}

Vector all_basis_values(const KnotVector& kv, double x) {
  std::array<double, kMaxBasisPerDir> vals{};
  const Index first = kv.eval_basis(x, vals);
  Vector out = Vector::Zero(kv.num_basis());
  for (int j = 0; j <= kv.degree(); ++j) out[first + j] = vals[static_cast<std::size_t>(j)];
  return out;
}

}  // namespace

TEST_CASE("open knot vector construction") {
  const KnotVector kv = make_open_knot_vector(2, 2);
  CHECK(kv.num_basis() == 4);
  CHECK(kv.knots() == std::vector<double>{0, 0, 0, 0.5, 1, 1, 1});

  const KnotVector kv11 = make_open_knot_vector(1, 1);
  CHECK(kv11.num_basis() == 2);
  CHECK(kv11.knots() == std::vector<double>{0, 0, 1, 1});

  for (int p = 1; p <= 5; ++p)
    for (Index n_el = 1; n_el <= 7; ++n_el)
      CHECK(make_open_knot_vector(p, n_el).num_basis() == n_el + p);

  CHECK_THROWS(make_open_knot_vector(0, 3));
  CHECK_THROWS(make_open_knot_vector(2, 0));
  CHECK_THROWS(KnotVector(2, {0, 0, 0, 0.6, 0.4, 1, 1, 1}));
  CHECK_THROWS(KnotVector(2, {0, 0, 0, 0.5, 0.5, 0.5, 1, 1, 1}));  // multiplicity 3 > p
}

TEST_CASE("hat function values and degree-0 indicator behaviour") {
  const KnotVector kv(1, {0, 0, 0.5, 1, 1});
  std::array<double, kMaxBasisPerDir> vals{};
  const Index first = kv.eval_basis(0.25, vals);
  CHECK(first == 0);
  CHECK(vals[0] == doctest::Approx(0.5).epsilon(1e-14));
  CHECK(vals[1] == doctest::Approx(0.5).epsilon(1e-14));

  // half-open spans: at the breakpoint the left hat has ended
  const Vector at_knot = all_basis_values(kv, 0.5);
  CHECK(at_knot[0] == doctest::Approx(0.0));
  CHECK(at_knot[1] == doctest::Approx(1.0));
  // left-limit convention at x = 1
  const Vector at_one = all_basis_values(kv, 1.0);
  CHECK(at_one[2] == doctest::Approx(1.0));
  CHECK_THROWS(kv.eval_basis(1.5, vals));
  CHECK_THROWS(kv.eval_basis(-0.1, vals));
}

TEST_CASE("basis values match the symbolic piecewise-polynomial oracle") {
  const KnotVector kv = make_open_knot_vector(3, 4);
  const auto& xi = kv.knots();
  const double x = 0.37;
  int span = 0;
  for (std::size_t s = 0; s + 1 < xi.size(); ++s)
    if (xi[s] <= x && x < xi[s + 1]) span = static_cast<int>(s);

  const Vector vals = all_basis_values(kv, x);
  for (Index i = 0; i < kv.num_basis(); ++i) {
    const double expected = poly_eval(bspline_poly(xi, static_cast<int>(i), 3, span), x);
    CHECK(vals[i] == doctest::Approx(expected).epsilon(1e-13));
  }
}

TEST_CASE("partition of unity, nonnegativity, local support") {
  std::mt19937 rng(7);
  std::uniform_real_distribution<double> uni(0.0, 1.0);
  for (int p = 1; p <= 5; ++p) {
    const KnotVector kv = make_open_knot_vector(p, 6);
    for (int it = 0; it < 50; ++it) {
      const double x = uni(rng);
      const Vector vals = all_basis_values(kv, x);
      CHECK(vals.sum() == doctest::Approx(1.0).epsilon(1e-13));
      CHECK(vals.minCoeff() >= 0.0);
      for (Index i = 0; i < kv.num_basis(); ++i)
        if (x < kv.knot(i) || x > kv.knot(i + p + 1)) CHECK(vals[i] == 0.0);
    }
  }
}

TEST_CASE("derivatives: sums, hat slopes, finite-difference oracle") {
  std::array<std::array<double, kMaxBasisPerDir>, 3> ders{};
  const KnotVector hat(1, {0, 0, 0.5, 1, 1});
  hat.eval_basis_derivatives(0.25, 1, ders);
  CHECK(ders[1][0] == doctest::Approx(-2.0));
  CHECK(ders[1][1] == doctest::Approx(2.0));

  const KnotVector kv = make_open_knot_vector(3, 5);
  std::mt19937 rng(11);
  std::uniform_real_distribution<double> uni(0.05, 0.95);
  for (int it = 0; it < 20; ++it) {
    const double x = it == 0 ? 0.61 : uni(rng);
    const Index first = kv.eval_basis_derivatives(x, 2, ders);
    double sum1 = 0.0;
    for (int j = 0; j <= 3; ++j) sum1 += ders[1][static_cast<std::size_t>(j)];
    CHECK(sum1 == doctest::Approx(0.0).epsilon(1e-11));

    const double h = 1e-6;
    const Vector up = all_basis_values(kv, x + h), dn = all_basis_values(kv, x - h);
    for (int j = 0; j <= 3; ++j) {
      const double fd = (up[first + j] - dn[first + j]) / (2 * h);
      CHECK(std::abs(ders[1][static_cast<std::size_t>(j)] - fd) <=
            1e-6 * std::max(1.0, std::abs(fd)));
    }
  }
  CHECK_THROWS(kv.eval_basis_derivatives(0.5, 3, ders));
}

TEST_CASE("greville abscissae") {
  const KnotVector kv = make_open_knot_vector(2, 2);
  const Vector g = kv.greville();
  CHECK(g.size() == 4);
  CHECK(g[0] == 0.0);
  CHECK(g[1] == doctest::Approx(0.25));
  CHECK(g[2] == doctest::Approx(0.75));
  CHECK(g[3] == 1.0);

  for (int p = 1; p <= 5; ++p) {
    const KnotVector k2 = make_open_knot_vector(p, 5);
    const Vector gg = k2.greville();
    CHECK(gg[0] == 0.0);
    CHECK(gg[gg.size() - 1] == 1.0);
    for (Index i = 0; i + 1 < gg.size(); ++i) CHECK(gg[i] <= gg[i + 1]);
  }

  // brute-force averaging of knot windows
  const KnotVector k3 = make_open_knot_vector(3, 4);
  const Vector g3 = k3.greville();
  for (Index i = 0; i < k3.num_basis(); ++i) {
    double sum = 0.0;
    for (Index j = i + 1; j <= i + 3; ++j) sum += k3.knot(j);
    CHECK(g3[i] == doctest::Approx(sum / 3.0).epsilon(1e-15));
  }
}

TEST_CASE("knot insertion preserves the spline") {
  const KnotVector kv = make_open_knot_vector(3, 3);
  {
    DenseMatrix ones = DenseMatrix::Ones(kv.num_basis(), 1);
    const auto [kv2, c2] = insert_knot(kv, ones, 0.4);
    CHECK(kv2.num_basis() == kv.num_basis() + 1);
    for (Index i = 0; i < c2.rows(); ++i) CHECK(c2(i, 0) == doctest::Approx(1.0).epsilon(1e-15));
  }

  std::mt19937 rng(3);
  std::uniform_real_distribution<double> uni(-1.0, 1.0);
  DenseMatrix coeffs(kv.num_basis(), 2);
  for (Index i = 0; i < coeffs.size(); ++i) coeffs(i) = uni(rng);

  auto [kv2, c2] = insert_knot(kv, coeffs, 0.123);
  // inserting the same knot again (multiplicity 2, p = 3)
  auto [kv3, c3] = insert_knot(kv2, c2, 0.123);
  for (int s = 0; s <= 50; ++s) {
    const double x = s / 50.0;
    const Vector v0 = eval_spline(kv, coeffs, x);
    CHECK((eval_spline(kv2, c2, x) - v0).norm() == doctest::Approx(0.0).epsilon(1e-12));
    CHECK((eval_spline(kv3, c3, x) - v0).norm() == doctest::Approx(0.0).epsilon(1e-12));
  }
  CHECK_THROWS(insert_knot(kv, coeffs, 0.0));
  CHECK_THROWS(insert_knot(kv, coeffs, 1.0));
}

TEST_CASE("degree elevation preserves the function") {
  // the linear function x has Greville coefficients at every degree
  const KnotVector kv1 = make_open_knot_vector(1, 4);
  DenseMatrix lin = kv1.greville();
  const auto [kv2, c2] = elevate_degree(kv1, lin);
  CHECK(kv2.degree() == 2);
  CHECK(kv2.num_spans() == kv1.num_spans());
  for (int s = 0; s <= 50; ++s) {
    const double x = s / 50.0;
    CHECK(eval_spline(kv2, c2, x)[0] == doctest::Approx(x).epsilon(1e-12));
  }

  // constants stay constant
  const auto [kvc, cc] = elevate_degree(kv1, DenseMatrix::Ones(kv1.num_basis(), 1));
  (void)kvc;
  for (Index i = 0; i < cc.rows(); ++i) CHECK(cc(i, 0) == doctest::Approx(1.0).epsilon(1e-13));

  // a generic spline with internal knots
  const KnotVector kv = make_open_knot_vector(2, 3);
  std::mt19937 rng(5);
  std::uniform_real_distribution<double> uni(-1.0, 1.0);
  DenseMatrix coeffs(kv.num_basis(), 1);
  for (Index i = 0; i < coeffs.size(); ++i) coeffs(i) = uni(rng);
  const auto [kve, ce] = elevate_degree(kv, coeffs);
  for (int s = 0; s <= 50; ++s) {
    const double x = s / 50.0;
    CHECK(eval_spline(kve, ce, x)[0] ==
          doctest::Approx(eval_spline(kv, coeffs, x)[0]).epsilon(1e-12));
  }
}

TEST_CASE("tensor index bijection") {
  const TensorBasis basis{{make_open_knot_vector(2, 3), make_open_knot_vector(3, 2),
                           make_open_knot_vector(1, 4)}};
  CHECK(basis.total_basis() == 5 * 5 * 5);
  for (Index i = 0; i < basis.total_basis(); ++i)
    CHECK(basis.linear_index(basis.multi_index(i)) == i);
}
