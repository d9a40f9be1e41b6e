#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "iga/solver.hpp"

#include <cmath>
#include <random>

using namespace iga;

namespace {

DenseMatrix random_matrix(Index n, unsigned seed) {
  std::mt19937 rng(seed);
  std::uniform_real_distribution<double> uni(-1.0, 1.0);
  DenseMatrix m(n, n);
  for (Index i = 0; i < m.size(); ++i) m(i) = uni(rng);
  return m;
}

}  // namespace

TEST_CASE("dense cholesky factors") {
  DenseMatrix a1(1, 1);
  a1 << 4.0;
  CHECK(dense_cholesky(a1)(0, 0) == doctest::Approx(2.0));

  DenseMatrix a2(2, 2);
  a2 << 4, 2, 2, 3;
  const DenseMatrix l = dense_cholesky(a2);
  CHECK(l(0, 0) == doctest::Approx(2.0));
  CHECK(l(1, 0) == doctest::Approx(1.0));
  CHECK(l(0, 1) == 0.0);
  CHECK(l(1, 1) == doctest::Approx(std::sqrt(2.0)));

  const DenseMatrix m = random_matrix(50, 2);
  const DenseMatrix spd = m.transpose() * m + DenseMatrix::Identity(50, 50);
  const DenseMatrix lf = dense_cholesky(spd);
  CHECK((lf * lf.transpose() - spd).norm() <= 1e-12 * spd.norm());

  Vector b = Vector::LinSpaced(50, -1.0, 1.0);
  const Vector x = cholesky_solve(lf, b);
  CHECK((spd * x - b).norm() <= 1e-10 * b.norm());

  DenseMatrix indef(2, 2);
  indef << 1, 2, 2, 1;
  CHECK_THROWS_AS(dense_cholesky(indef), std::runtime_error);
}

TEST_CASE("sparse patch factorization falls back to LU on non-SPD input") {
  const Index n = 30;
  std::vector<Triplet> trip;
  for (Index i = 0; i < n; ++i) {
    trip.emplace_back(static_cast<int>(i), static_cast<int>(i), 4.0);
    if (i + 1 < n) {
      trip.emplace_back(static_cast<int>(i), static_cast<int>(i + 1), -1.0);
      trip.emplace_back(static_cast<int>(i + 1), static_cast<int>(i), -1.0);
    }
  }
  SparseMatrix a(n, n);
  a.setFromTriplets(trip.begin(), trip.end());
  Vector b = Vector::Ones(n);

  const PatchFactorization chol(a, true);
  CHECK((a * chol.solve(b) - b).norm() <= 1e-12);

  // flip one sign: not SPD anymore, the symmetric path must fall back
  SparseMatrix bad = a;
  bad.coeffRef(0, 0) = -4.0;
  const PatchFactorization lu(bad, true);
  CHECK((bad * lu.solve(b) - b).norm() <= 1e-10);
}

TEST_CASE("bicgstab basics") {
  auto identity = [](const Vector& v) { return v; };
  Vector b = Vector::LinSpaced(12, 1.0, 2.0);
  auto [x, rep] = bicgstab(identity, b, nullptr, 1e-12, 50);
  CHECK(rep.converged);
  CHECK(rep.iterations <= 1);
  CHECK((x - b).norm() <= 1e-12);

  Vector diag = Vector::LinSpaced(20, 1.0, 5.0);
  auto dop = [&diag](const Vector& v) { return Vector(diag.asDiagonal() * v); };
  Vector rhs = Vector::Ones(20);
  auto [xd, repd] = bicgstab(dop, rhs, nullptr, 1e-13, 100);
  CHECK(repd.converged);
  CHECK((xd - diag.cwiseInverse()).cwiseAbs().maxCoeff() <= 1e-12);
}

TEST_CASE("bicgstab and gmres solve a nonsymmetric diagonally dominant system") {
  const Index n = 80;
  DenseMatrix a = random_matrix(n, 5);
  a.diagonal().array() += static_cast<double>(n);
  const Vector b = random_matrix(n, 6).col(0);
  const Vector exact = Eigen::PartialPivLU<DenseMatrix>(a).solve(b);
  auto op = [&a](const Vector& v) { return Vector(a * v); };

  auto [xb, repb] = bicgstab(op, b, nullptr, 1e-12, 500);
  CHECK(repb.converged);
  CHECK((xb - exact).norm() <= 1e-8 * exact.norm());
  CHECK(repb.final_residual <= 1e-12);
  CHECK(repb.residual_history.size() >= 2);

  auto [xg, repg] = gmres(op, b, nullptr, 1e-12, 500, 30);
  CHECK(repg.converged);
  CHECK((xg - exact).norm() <= 1e-8 * exact.norm());

  // restarted version still converges
  auto [xr, repr] = gmres(op, b, nullptr, 1e-12, 500, 7);
  CHECK(repr.converged);
  CHECK((xr - exact).norm() <= 1e-7 * exact.norm());

  // a diagonal preconditioner is accepted
  Vector dinv = a.diagonal().cwiseInverse();
  auto pre = [&dinv](const Vector& v) { return Vector(dinv.asDiagonal() * v); };
  auto [xp, repp] = bicgstab(op, b, pre, 1e-12, 500);
  CHECK(repp.converged);
  CHECK((xp - exact).norm() <= 1e-8 * exact.norm());
}

TEST_CASE("max-iteration exhaustion is reported distinctly") {
  const Index n = 40;
  DenseMatrix a = random_matrix(n, 9);
  a.diagonal().array() += 2.0;  // mildly conditioned, needs more than 2 iterations
  auto op = [&a](const Vector& v) { return Vector(a * v); };
  const Vector b = Vector::Ones(n);
  auto [x, rep] = bicgstab(op, b, nullptr, 1e-14, 2);
  (void)x;
  CHECK_FALSE(rep.converged);
  CHECK(rep.status == KrylovStatus::MaxIterations);
}

TEST_CASE("krylov runs are deterministic") {
  const Index n = 60;
  DenseMatrix a = random_matrix(n, 12);
  a.diagonal().array() += 30.0;
  auto op = [&a](const Vector& v) { return Vector(a * v); };
  const Vector b = random_matrix(n, 13).col(0);
  auto [x1, r1] = bicgstab(op, b, nullptr, 1e-11, 200);
  auto [x2, r2] = bicgstab(op, b, nullptr, 1e-11, 200);
  CHECK(r1.iterations == r2.iterations);
  CHECK((x1 - x2).norm() == 0.0);
  CHECK(r1.residual_history == r2.residual_history);
}
