#ifndef IGA_COUPLING_HPP
#define IGA_COUPLING_HPP

#include "iga/multipatch.hpp"

#include <map>
#include <utility>
#include <vector>

namespace iga {

/// Compactly supported C2 Wendland radial function
///   phi(d, r) = max(0, 1 - d/r)^4 (1 + 4 d/r);
/// value 1 at d = 0, zero for d >= r.
double wendland_c2(double dist, double radius);

/// Key of one face: (patch, side id).
using FaceKey = std::pair<int, int>;

/// Face adjacency of a multipatch decomposition.
///
/// For each interface face, `adjacent` lists the opposite faces, `members`
/// flags which of the face's Greville nodes lie on each adjacent face
/// (decided by point-inversion residual), and `pu_weights` holds the
/// partition-of-unity weights: one over the number of adjacent faces a node
/// lies on.
struct Adjacency {
  struct FaceInfo {
    InterfaceFace face;
    bool master = false;
    std::vector<FaceKey> adjacent;
    std::vector<std::vector<char>> members;       // per adjacent face, per node
    std::vector<DenseMatrix> inverse_parameters;  // per adjacent face, node -> parameter on it
    Vector pu_weights;
  };

  std::map<FaceKey, FaceInfo> faces;
  double node_tolerance = 0.0;

  const FaceInfo& at(const FaceKey& key) const { return faces.at(key); }
};

/// Builds faces, adjacency sets, node membership and partition-of-unity
/// weights. Node membership uses point inversion with the given tolerance
/// (default 1e-8 times the domain diameter).
Adjacency build_adjacency(const Multipatch& mp, double node_tolerance = 0.0);

/// Square collocation matrix G_ij = mu_j(t_i) of a face's trace basis at its
/// own Greville nodes.
DenseMatrix collocation_matrix(const InterfaceFace& face);

/// Cross collocation matrix: rows are Greville nodes of `from`, columns trace
/// functions of `to`, evaluated at the inverse image of each node on `to`;
/// rows of nodes not on `to` are zero.
DenseMatrix cross_collocation_matrix(const Adjacency::FaceInfo& from, std::size_t adjacent_index,
                                     const InterfaceFace& to);

/// Interpolation and intergrid operators of one ordered face pair.
struct CouplingOperators {
  // trace interpolation onto `to` from `from`: primal coefficients to primal
  // coefficients, n_to x n_from
  DenseMatrix p;
};

/// All coupling operators of a decomposition, built once at initialization.
class InterfaceOperators {
public:
  InterfaceOperators() = default;
  InterfaceOperators(const Multipatch& mp, const Adjacency& adj);

  /// P_{to<-from}: interpolates primal trace coefficients from face `from`
  /// onto face `to` (the two faces must be adjacent).
  const DenseMatrix& interpolation(const FaceKey& to, const FaceKey& from) const;

  /// Interface mass matrix of a face.
  const DenseMatrix& mass(const FaceKey& key) const;

  /// Reports the RBF radius used for a non-watertight pair (0 for Greville).
  double rbf_radius(const FaceKey& to, const FaceKey& from) const;

private:
  std::map<std::pair<FaceKey, FaceKey>, DenseMatrix> p_;
  std::map<std::pair<FaceKey, FaceKey>, double> radius_;
  std::map<FaceKey, DenseMatrix> mass_;
};

/// Rescaled-localized RBF interpolation matrix: maps nodal values at
/// `source_nodes` to nodal values at `target_nodes`; rows sum to one.
DenseMatrix build_rbf_interpolation(const DenseMatrix& target_nodes, const DenseMatrix& source_nodes,
                                    double radius);

/// Default radius heuristic: 3x the largest nearest-neighbor spacing of the
/// source nodes.
double default_rbf_radius(const DenseMatrix& source_nodes);

/// Dual-basis transfer of a residual vector from a slave face to a master
/// face: r_breve = M_master P M_slave^{-1} r_slave.
Vector transfer_normal_derivative(const Vector& r_slave, const DenseMatrix& mass_slave,
                                  const DenseMatrix& mass_master, const DenseMatrix& p_master_from_slave);

}  // namespace iga

#endif
