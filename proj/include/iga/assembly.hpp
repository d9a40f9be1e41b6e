#ifndef IGA_ASSEMBLY_HPP
#define IGA_ASSEMBLY_HPP

#include "iga/nurbs.hpp"
#include "iga/quadrature.hpp"
#include "iga/types.hpp"

#include <functional>
#include <vector>

namespace iga {

using ScalarField = std::function<double(const Vector&)>;
using VectorField = std::function<Vector(const Vector&)>;

enum class BoundaryKind { Dirichlet, Neumann, Interface };

/// Assembly uses p_dir + 1 + kQuadExtra Gauss points per direction and span.
/// The two extra points keep the rational-integrand quadrature error of the
/// curved benchmark geometries below the 1e-10 consistency guard.
constexpr int kQuadExtra = 2;

/// Coefficients of the operator  L u = -div(nu grad u) + b . grad u + alpha u
/// restricted to one patch, plus the source f. Fields evaluate at physical
/// points; a null advection means b = 0.
struct PatchCoefficients {
  ScalarField nu = [](const Vector&) { return 1.0; };
  VectorField advection;  // optional
  ScalarField alpha = [](const Vector&) { return 0.0; };
  ScalarField f = [](const Vector&) { return 0.0; };

  bool symmetric() const { return !advection; }
};

/// Index partition of one patch's basis functions.
///
/// interior: functions identically null on every Dirichlet side and interface
/// face (dofs solved by the local systems; includes Neumann-side dofs).
/// dirichlet: functions not identically null on a Dirichlet side.
/// tarray: functions on Dirichlet sides or interface faces, in index order
/// (the boundary array the algorithms scatter into).
struct FacePartition {
  int side_id = 0;
  IndexList closure;   // I_{gamma-bar}: face layer, all of it
  IndexList interior;  // I_gamma: face layer minus the face boundary
  IndexList boundary;  // I_{d gamma} = closure \ interior
};

struct DofPartition {
  Index total = 0;
  IndexList interior;
  IndexList dirichlet;
  IndexList tarray;
  std::vector<FacePartition> faces;  // one per interface side
  std::vector<Index> tarray_pos;     // dof -> position in tarray, -1 otherwise
  std::vector<Index> interior_pos;   // dof -> position in interior, -1 otherwise
  std::vector<char> is_dirichlet;
  std::vector<char> side_is_neumann;  // per side id

  const FacePartition& face(int side_id) const;
};

DofPartition make_dof_partition(const TensorBasis& basis, const std::vector<BoundaryKind>& side_tags);

struct PatchSystem {
  SparseMatrix stiffness;  // N x N Galerkin matrix of the bilinear form
  Vector load;             // includes Neumann surface terms
};

/// Galerkin matrix and load of the operator over the physical patch.
/// OpenMP-parallel over elements with element-ordered accumulation, so
/// results are bit-reproducible for any thread count.
PatchSystem assemble_patch_system(const GeometryMap& geo, const PatchCoefficients& coeffs,
                                  const std::vector<BoundaryKind>& side_tags,
                                  const ScalarField& neumann_flux = nullptr,
                                  int extra_points = kQuadExtra);

/// Plain serial reference of assemble_patch_system, kept for testing.
PatchSystem assemble_patch_system_serial(const GeometryMap& geo, const PatchCoefficients& coeffs,
                                         const std::vector<BoundaryKind>& side_tags,
                                         const ScalarField& neumann_flux = nullptr,
                                         int extra_points = kQuadExtra);

/// Patch L2 mass matrix (used to regularize floating patches).
SparseMatrix assemble_patch_mass(const GeometryMap& geo);

/// Interface mass matrix M_ij = int_gamma mu_j mu_i dGamma with the surface
/// measure of the face map; symmetric positive definite.
DenseMatrix interface_mass_matrix(const InterfaceFace& face, int extra_points = kQuadExtra);

/// Boundary correction matrix: C_ij = -int_{G} nu dphi_j/dn phi_i dGamma with
/// G the patch boundary minus the given face and minus Neumann sides. Rows
/// are nonzero only for i in the face's boundary index set.
SparseMatrix correction_matrix(const GeometryMap& geo, const DofPartition& partition,
                               int face_side_id, const ScalarField& nu);

/// Dirichlet coefficients by Greville collocation of g on each Dirichlet side;
/// entries of non-Dirichlet dofs are zero.
Vector dirichlet_coefficients(const GeometryMap& geo, const std::vector<BoundaryKind>& side_tags,
                              const ScalarField& g);

/// Evaluates the discrete field with the given coefficients: value and
/// physical gradient at one parameter point.
struct FieldSample {
  Vector x;        // physical point
  double value;
  Vector gradient; // physical gradient
  double jac_det;
};

FieldSample sample_field(const GeometryMap& geo, const Vector& coeffs, const Vector& xhat);

}  // namespace iga

#endif
