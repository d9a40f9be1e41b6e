#include "iga/solver.hpp"

#include <cmath>
#include <stdexcept>

namespace iga {

DenseMatrix dense_cholesky(const DenseMatrix& a) {
  if (a.rows() != a.cols()) throw std::invalid_argument("dense_cholesky: square matrix required");
  const Index n = a.rows();
  DenseMatrix l = DenseMatrix::Zero(n, n);
  for (Index j = 0; j < n; ++j) {
    double d = a(j, j) - l.row(j).head(j).squaredNorm();
    if (d <= 0.0) throw std::runtime_error("dense_cholesky: matrix is not positive definite");
    l(j, j) = std::sqrt(d);
    for (Index i = j + 1; i < n; ++i)
      l(i, j) = (a(i, j) - l.row(i).head(j).dot(l.row(j).head(j))) / l(j, j);
  }
  return l;
}

Vector cholesky_solve(const DenseMatrix& lower, const Vector& b) {
  const Vector y = lower.triangularView<Eigen::Lower>().solve(b);
  return lower.transpose().triangularView<Eigen::Upper>().solve(y);
}

PatchFactorization::PatchFactorization(const SparseMatrix& a, bool symmetric) {
  if (symmetric) {
    llt_ = std::make_shared<Eigen::SimplicialLLT<SparseMatrix>>();
    llt_->compute(a);
    if (llt_->info() == Eigen::Success) return;
    llt_.reset();  // non-SPD pivot; fall through to LU
  }
  lu_ = std::make_shared<Eigen::SparseLU<SparseMatrix>>();
  lu_->compute(a);
  if (lu_->info() != Eigen::Success) throw std::runtime_error("patch factorization failed");
}

Vector PatchFactorization::solve(const Vector& b) const {
  if (llt_) return llt_->solve(b);
  if (lu_) return lu_->solve(b);
  throw std::runtime_error("patch factorization not initialized");
}

namespace {

Vector apply_or_identity(const LinearOperator& m, const Vector& v) { return m ? m(v) : v; }

}  // namespace

std::pair<Vector, KrylovReport> bicgstab(const LinearOperator& op, const Vector& b,
                                         const LinearOperator& precond, double tol, int max_it) {
  KrylovReport report;
  const Index n = b.size();
  Vector x = Vector::Zero(n);
  const Vector bp = apply_or_identity(precond, b);
  const double bnorm = bp.norm();
  if (bnorm == 0.0) {
    report.converged = true;
    report.status = KrylovStatus::Converged;
    return {x, report};
  }
  auto ap = [&](const Vector& v) { return apply_or_identity(precond, op(v)); };

  Vector r = bp;  // x = 0
  const Vector r0 = r;
  Vector p = r, v = Vector::Zero(n);
  double rho = 1.0, alpha = 1.0, omega = 1.0;
  report.residual_history.push_back(r.norm() / bnorm);

  for (int it = 1; it <= max_it; ++it) {
    const double rho_new = r0.dot(r);
    if (std::abs(rho_new) < 1e-300) {
      report.status = KrylovStatus::Breakdown;
      report.iterations = it - 1;
      report.final_residual = r.norm() / bnorm;
      return {x, report};
    }
    if (it == 1) {
      p = r;
    } else {
      const double beta = (rho_new / rho) * (alpha / omega);
      p = r + beta * (p - omega * v);
    }
    rho = rho_new;
    v = ap(p);
    const double r0v = r0.dot(v);
    if (std::abs(r0v) < 1e-300) {
      report.status = KrylovStatus::Breakdown;
      report.iterations = it - 1;
      report.final_residual = r.norm() / bnorm;
      return {x, report};
    }
    alpha = rho / r0v;
    const Vector s = r - alpha * v;
    if (s.norm() / bnorm <= tol) {
      x += alpha * p;
      report.iterations = it;
      report.final_residual = s.norm() / bnorm;
      report.residual_history.push_back(report.final_residual);
      report.converged = true;
      report.status = KrylovStatus::Converged;
      return {x, report};
    }
    const Vector t = ap(s);
    const double tt = t.squaredNorm();
    if (tt < 1e-300) {
      report.status = KrylovStatus::Breakdown;
      report.iterations = it;
      report.final_residual = s.norm() / bnorm;
      return {x, report};
    }
    omega = t.dot(s) / tt;
    x += alpha * p + omega * s;
    r = s - omega * t;
    const double rel = r.norm() / bnorm;
    report.residual_history.push_back(rel);
    report.iterations = it;
    if (rel <= tol) {
      report.final_residual = rel;
      report.converged = true;
      report.status = KrylovStatus::Converged;
      return {x, report};
    }
    if (std::abs(omega) < 1e-300) {
      report.status = KrylovStatus::Breakdown;
      report.final_residual = rel;
      return {x, report};
    }
  }
  report.final_residual = report.residual_history.back();
  report.status = KrylovStatus::MaxIterations;
  return {x, report};
}

std::pair<Vector, KrylovReport> gmres(const LinearOperator& op, const Vector& b,
                                      const LinearOperator& precond, double tol, int max_it,
                                      int restart) {
  KrylovReport report;
  const Index n = b.size();
  Vector x = Vector::Zero(n);
  const Vector bp = apply_or_identity(precond, b);
  const double bnorm = bp.norm();
  if (bnorm == 0.0) {
    report.converged = true;
    report.status = KrylovStatus::Converged;
    return {x, report};
  }
  auto ap = [&](const Vector& v) { return apply_or_identity(precond, op(v)); };

  int total_it = 0;
  double rel = 1.0;
  report.residual_history.push_back(1.0);
  while (total_it < max_it) {
    Vector r = bp - ap(x);
    double beta = r.norm();
    rel = beta / bnorm;
    if (rel <= tol) break;
    const int m = std::min(restart, max_it - total_it);
    DenseMatrix v(n, m + 1);
    DenseMatrix h = DenseMatrix::Zero(m + 1, m);
    std::vector<double> cs(static_cast<std::size_t>(m)), sn(static_cast<std::size_t>(m));
    Vector g = Vector::Zero(m + 1);
    g[0] = beta;
    v.col(0) = r / beta;
    int k = 0;
    for (; k < m; ++k) {
      Vector w = ap(v.col(k));
      for (int i = 0; i <= k; ++i) {
        h(i, k) = v.col(i).dot(w);
        w -= h(i, k) * v.col(i);
      }
      h(k + 1, k) = w.norm();
      if (h(k + 1, k) > 1e-300) v.col(k + 1) = w / h(k + 1, k);
      // apply Givens rotations
      for (int i = 0; i < k; ++i) {
        const double tmp = cs[static_cast<std::size_t>(i)] * h(i, k) + sn[static_cast<std::size_t>(i)] * h(i + 1, k);
        h(i + 1, k) = -sn[static_cast<std::size_t>(i)] * h(i, k) + cs[static_cast<std::size_t>(i)] * h(i + 1, k);
        h(i, k) = tmp;
      }
      const double denom = std::hypot(h(k, k), h(k + 1, k));
      if (denom < 1e-300) {
        report.status = KrylovStatus::Breakdown;
        report.iterations = total_it + k + 1;
        report.final_residual = rel;
        return {x, report};
      }
      cs[static_cast<std::size_t>(k)] = h(k, k) / denom;
      sn[static_cast<std::size_t>(k)] = h(k + 1, k) / denom;
      h(k, k) = denom;
      h(k + 1, k) = 0.0;
      g[k + 1] = -sn[static_cast<std::size_t>(k)] * g[k];
      g[k] = cs[static_cast<std::size_t>(k)] * g[k];
      rel = std::abs(g[k + 1]) / bnorm;
      report.residual_history.push_back(rel);
      if (rel <= tol) {
        ++k;
        break;
      }
    }
    // solve the triangular system and update x
    Vector y = Vector::Zero(k);
    for (int i = k - 1; i >= 0; --i) {
      double s = g[i];
      for (int j = i + 1; j < k; ++j) s -= h(i, j) * y[j];
      y[i] = s / h(i, i);
    }
    for (int i = 0; i < k; ++i) x += y[i] * v.col(i);
    total_it += k;
    if (rel <= tol) break;
  }
  report.iterations = total_it;
  report.final_residual = rel;
  report.converged = rel <= tol;
  report.status = report.converged ? KrylovStatus::Converged : KrylovStatus::MaxIterations;
  return {x, report};
}

}  // namespace iga
