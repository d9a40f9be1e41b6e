#ifndef IGA_INTERNODES_HPP
#define IGA_INTERNODES_HPP

#include "iga/coupling.hpp"
#include "iga/multipatch.hpp"
#include "iga/solver.hpp"

#include <map>
#include <optional>

namespace iga {

/// Coefficients and boundary data of the whole problem.
struct ProblemData {
  std::vector<PatchCoefficients> coeffs;  // one per patch
  ScalarField dirichlet;                  // g on the Dirichlet boundary
  ScalarField neumann_flux;               // conormal data on Neumann sides (optional)
};

struct SolverSettings {
  enum class Method { BiCGStab, Gmres, Monolithic };
  enum class Precond { None, LocalSchur, DirichletNeumann };
  Method method = Method::BiCGStab;
  Precond precond = Precond::LocalSchur;
  double tol = 1e-10;
  int max_it = 2000;
  int gmres_restart = 30;
};

/// Everything assembled on one patch.
struct PatchData {
  PatchSystem system;            // full Galerkin matrix and load
  DofPartition partition;
  Vector dirichlet_values;       // Dirichlet coefficients (zero elsewhere)
  PatchFactorization factor;     // A(interior, interior)
  SparseMatrix a_int_bnd;        // A(interior, tarray)
  std::map<int, SparseMatrix> ahat;  // side id -> (A + C_side)(closure, all)
  std::map<int, Vector> face_load;   // side id -> load(closure)
};

/// Skeleton bookkeeping: master-face trace dofs deduplicated at patch
/// vertices, with the constrained entries removable by restriction.
///
/// A slot is constrained when every contributing patch dof is either a
/// Dirichlet dof or lies on a slave face of its own patch (such dofs take
/// their value from the Dirichlet data or the slave-trace interpolation, so
/// they are not skeleton unknowns).
struct Skeleton {
  Index full_size = 0;     // with the constrained entries
  Index reduced_size = 0;  // without them
  std::vector<char> slot_dirichlet;
  std::vector<char> slot_free;
  IndexList free_slots;                      // reduced index -> slot
  std::vector<Index> slot_to_reduced;        // slot -> reduced index or -1
  std::map<FaceKey, IndexList> face_slots;   // master face -> per trace dof slot
  std::map<std::pair<int, Index>, Index> dof_slot;  // (patch, volume dof) -> slot
};

/// The interface problem in matrix-free form: local factorizations, coupling
/// operators, and the algorithms acting on the master-skeleton unknowns.
class SchurSystem {
public:
  SchurSystem(Multipatch mp, ProblemData prob, double node_tolerance = 0.0);

  Index skeleton_size() const { return skeleton_.reduced_size; }
  Index total_dofs() const;

  /// Right hand side of the skeleton system S u = b.
  Vector rhs() const;

  /// Applies the Schur operator to a reduced-skeleton vector.
  Vector apply(const Vector& lambda) const;

  /// Recovers all patch coefficient vectors from the skeleton solution.
  std::vector<Vector> recover(const Vector& u_gamma) const;

  /// Dirichlet-Neumann preconditioner built from the local Schur complements
  /// of the master patches. Requires every patch to be wholly master or
  /// wholly slave; throws std::invalid_argument otherwise.
  LinearOperator dn_preconditioner() const;

  const Multipatch& multipatch() const { return mp_; }
  const ProblemData& problem() const { return prob_; }
  const Adjacency& adjacency() const { return adjacency_; }
  const InterfaceOperators& operators() const { return operators_; }
  const Skeleton& skeleton() const { return skeleton_; }
  const PatchData& patch(int k) const { return patches_[static_cast<std::size_t>(k)]; }

private:
  // Shared trace-filling step of the algorithms; lambda_tilde may be null.
  std::vector<Vector> fill_boundary_arrays(const Vector* lambda_tilde, bool with_dirichlet) const;
  std::vector<Vector> local_solves(const std::vector<Vector>& t, bool with_load) const;
  Vector gather_master_residuals(const std::vector<Vector>& u, bool with_load) const;

  Multipatch mp_;
  ProblemData prob_;
  Adjacency adjacency_;
  InterfaceOperators operators_;
  std::vector<PatchData> patches_;
  Skeleton skeleton_;
};

struct MonolithicSolution {
  std::vector<Vector> u;  // per-patch coefficients
  Vector trace;           // the master-face interior unknowns
};

/// Direct solve of the coupled two-patch block system (one interface pair).
MonolithicSolution assemble_and_solve_monolithic(const Multipatch& mp, const ProblemData& prob);

struct SolveOutcome {
  std::vector<Vector> u;
  KrylovReport report;
  Index skeleton_size = 0;
  Index total_dofs = 0;
};

/// Full pipeline: initialize, build the right hand side, solve the skeleton
/// system (or the monolithic one), recover the patch solutions.
SolveOutcome solve_internodes(const Multipatch& mp, const ProblemData& prob,
                              const SolverSettings& settings);

}  // namespace iga

#endif
