#ifndef IGA_SOLVER_HPP
#define IGA_SOLVER_HPP

#include "iga/types.hpp"

#include <functional>
#include <memory>
#include <string>

namespace iga {

/// Lower Cholesky factor of a dense SPD matrix; throws std::runtime_error on
/// a non-positive pivot.
DenseMatrix dense_cholesky(const DenseMatrix& a);
Vector cholesky_solve(const DenseMatrix& lower, const Vector& b);

/// Sparse factorization of a patch matrix: Cholesky for symmetric operators,
/// LU otherwise. A Cholesky request that hits a non-SPD pivot reports it so
/// the caller can fall back to LU.
class PatchFactorization {
public:
  PatchFactorization() = default;
  explicit PatchFactorization(const SparseMatrix& a, bool symmetric);

  Vector solve(const Vector& b) const;
  bool valid() const { return static_cast<bool>(llt_) || static_cast<bool>(lu_); }

private:
  std::shared_ptr<Eigen::SimplicialLLT<SparseMatrix>> llt_;
  std::shared_ptr<Eigen::SparseLU<SparseMatrix>> lu_;
};

using LinearOperator = std::function<Vector(const Vector&)>;

enum class KrylovStatus { Converged, Breakdown, MaxIterations };

struct KrylovReport {
  int iterations = 0;
  double final_residual = 0.0;  // relative to |b|
  bool converged = false;
  KrylovStatus status = KrylovStatus::MaxIterations;
  std::vector<double> residual_history;
};

/// Preconditioned Bi-CGStab with left preconditioning; convergence on the
/// preconditioned relative residual. A null preconditioner means identity.
std::pair<Vector, KrylovReport> bicgstab(const LinearOperator& op, const Vector& b,
                                         const LinearOperator& precond, double tol, int max_it);

/// Left-preconditioned restarted GMRES.
std::pair<Vector, KrylovReport> gmres(const LinearOperator& op, const Vector& b,
                                      const LinearOperator& precond, double tol, int max_it,
                                      int restart = 30);

}  // namespace iga

#endif
