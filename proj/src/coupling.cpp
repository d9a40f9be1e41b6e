#include "iga/coupling.hpp"

#include <algorithm>
#include <cmath>
#include <set>
#include <sstream>
#include <stdexcept>

namespace iga {

double Multipatch::domain_diameter() const {
  double diam = 0.0;
  std::vector<Vector> corners;
  for (const auto& geo : patches) {
    const int d = geo.dim();
    for (int c = 0; c < (1 << d); ++c) {
      Vector xhat(d);
      for (int k = 0; k < d; ++k) xhat[k] = (c >> k) & 1 ? 1.0 : 0.0;
      corners.push_back(map_point(geo, xhat));
    }
  }
  for (std::size_t i = 0; i < corners.size(); ++i)
    for (std::size_t j = i + 1; j < corners.size(); ++j)
      diam = std::max(diam, (corners[i] - corners[j]).norm());
  return diam;
}

void Multipatch::validate() const {
  std::set<FaceKey> paired;
  std::set<FaceKey> nonwatertight;
  std::map<FaceKey, int> pair_count;
  for (const auto& itf : interfaces) {
    const FaceKey m{itf.master_patch, itf.master_side};
    const FaceKey s{itf.slave_patch, itf.slave_side};
    if (m == s) throw std::invalid_argument("interface pairs a face with itself");
    for (const FaceKey& key : {m, s}) {
      if (key.first < 0 || key.first >= num_patches())
        throw std::invalid_argument("interface references an unknown patch");
      if (side_tags[static_cast<std::size_t>(key.first)][static_cast<std::size_t>(key.second)] !=
          BoundaryKind::Interface)
        throw std::invalid_argument("interface side is not tagged Interface");
      paired.insert(key);
      ++pair_count[key];
    }
    if (!itf.watertight) {
      nonwatertight.insert(m);
      nonwatertight.insert(s);
    }
  }
  // the RL-RBF path needs exactly one adjacent face
  for (const FaceKey& key : nonwatertight)
    if (pair_count[key] != 1)
      throw std::invalid_argument("non-watertight faces must have exactly one adjacent face");
  for (int k = 0; k < num_patches(); ++k)
    for (int sid = 0; sid < 2 * dim(); ++sid)
      if (side_tags[static_cast<std::size_t>(k)][static_cast<std::size_t>(sid)] == BoundaryKind::Interface &&
          !paired.count({k, sid}))
        throw std::invalid_argument("interface face left unpaired");
  // a face must not be master in one pair and slave in another
  std::map<FaceKey, bool> role;
  for (const auto& itf : interfaces) {
    const FaceKey m{itf.master_patch, itf.master_side};
    const FaceKey s{itf.slave_patch, itf.slave_side};
    if (role.count(m) && !role[m]) throw std::invalid_argument("face tagged both master and slave");
    if (role.count(s) && role[s]) throw std::invalid_argument("face tagged both master and slave");
    role[m] = true;
    role[s] = false;
  }
}

double wendland_c2(double dist, double radius) {
  if (radius <= 0.0) throw std::invalid_argument("wendland_c2: radius must be positive");
  const double s = dist / radius;
  if (s >= 1.0) return 0.0;
  const double t = 1.0 - s;
  const double t2 = t * t;
  return t2 * t2 * (1.0 + 4.0 * s);
}

Adjacency build_adjacency(const Multipatch& mp, double node_tolerance) {
  mp.validate();
  Adjacency adj;
  adj.node_tolerance = node_tolerance > 0.0 ? node_tolerance : 1e-8 * mp.domain_diameter();

  for (const auto& itf : mp.interfaces) {
    for (const FaceKey& key : {FaceKey{itf.master_patch, itf.master_side},
                               FaceKey{itf.slave_patch, itf.slave_side}}) {
      if (adj.faces.count(key)) continue;
      Adjacency::FaceInfo info;
      info.face = extract_face(mp.patches[static_cast<std::size_t>(key.first)],
                               Side::from_id(key.second), key.first);
      adj.faces.emplace(key, std::move(info));
    }
    adj.faces[{itf.master_patch, itf.master_side}].master = true;
  }

  for (const auto& itf : mp.interfaces) {
    const FaceKey m{itf.master_patch, itf.master_side};
    const FaceKey s{itf.slave_patch, itf.slave_side};
    adj.faces[m].adjacent.push_back(s);
    adj.faces[s].adjacent.push_back(m);
  }

  // node membership by point inversion onto each adjacent face
  for (auto& [key, info] : adj.faces) {
    const Index n = info.face.num_basis();
    info.members.resize(info.adjacent.size());
    info.inverse_parameters.resize(info.adjacent.size());
    for (std::size_t a = 0; a < info.adjacent.size(); ++a) {
      const auto& other = adj.faces.at(info.adjacent[a]).face;
      info.members[a].assign(static_cast<std::size_t>(n), 0);
      info.inverse_parameters[a].setZero(n, other.trace.dim());
      const bool watertight_pair = [&] {
        for (const auto& itf : mp.interfaces) {
          const FaceKey m{itf.master_patch, itf.master_side};
          const FaceKey s{itf.slave_patch, itf.slave_side};
          if ((m == key && s == info.adjacent[a]) || (s == key && m == info.adjacent[a]))
            return itf.watertight;
        }
        return true;
      }();
      if (!watertight_pair) {
        // RL-RBF couples every node of the (single) adjacent face
        info.members[a].assign(static_cast<std::size_t>(n), 1);
        continue;
      }
      // polish well below the membership tolerance so collocation entries are
      // accurate to machine precision
      const double polish_tol = 1e-6 * adj.node_tolerance;
      for (Index i = 0; i < n; ++i) {
        const Vector x = info.face.greville_physical.row(i).transpose();
        const auto inv = point_inversion(other.trace, x, polish_tol);
        if (inv.residual <= adj.node_tolerance) {
          info.members[a][static_cast<std::size_t>(i)] = 1;
          info.inverse_parameters[a].row(i) = inv.parameter.transpose();
        } else if (watertight_pair && info.adjacent.size() == 1) {
          std::ostringstream msg;
          msg << "point inversion failed on watertight interface (" << key.first << "," << key.second
              << ") -> (" << info.adjacent[a].first << "," << info.adjacent[a].second << ") at node " << i
              << " (residual " << inv.residual << "); declare the pair non-watertight or fix the geometry";
          throw std::runtime_error(msg.str());
        }
      }
    }
    // partition-of-unity weights: inverse of the number of adjacent faces a
    // node lies on
    info.pu_weights.resize(n);
    for (Index i = 0; i < n; ++i) {
      int count = 0;
      for (std::size_t a = 0; a < info.adjacent.size(); ++a)
        count += info.members[a][static_cast<std::size_t>(i)];
      if (count == 0) {
        std::ostringstream msg;
        msg << "Greville node " << i << " of face (" << key.first << "," << key.second
            << ") lies on no adjacent face";
        throw std::runtime_error(msg.str());
      }
      info.pu_weights[i] = 1.0 / count;
    }
  }
  return adj;
}

DenseMatrix collocation_matrix(const InterfaceFace& face) {
  const Index n = face.num_basis();
  DenseMatrix g = DenseMatrix::Zero(n, n);
  for (Index i = 0; i < n; ++i) {
    const NurbsEval ev = eval_nurbs(face.trace.space, face.greville_param.row(i).transpose(), false);
    for (std::size_t a = 0; a < ev.active.size(); ++a)
      g(i, ev.active[a]) = ev.values[static_cast<Index>(a)];
  }
  return g;
}

DenseMatrix cross_collocation_matrix(const Adjacency::FaceInfo& from, std::size_t adjacent_index,
                                     const InterfaceFace& to) {
  const Index n_from = from.face.num_basis();
  DenseMatrix g = DenseMatrix::Zero(n_from, to.num_basis());
  for (Index i = 0; i < n_from; ++i) {
    if (!from.members[adjacent_index][static_cast<std::size_t>(i)]) continue;
    const Vector t = from.inverse_parameters[adjacent_index].row(i).transpose();
    const NurbsEval ev = eval_nurbs(to.trace.space, t, false);
    for (std::size_t a = 0; a < ev.active.size(); ++a)
      g(i, ev.active[a]) = ev.values[static_cast<Index>(a)];
  }
  return g;
}

double default_rbf_radius(const DenseMatrix& nodes) {
  const Index n = nodes.rows();
  double max_gap = 0.0;
  for (Index i = 0; i < n; ++i) {
    double nearest = std::numeric_limits<double>::infinity();
    for (Index j = 0; j < n; ++j) {
      if (j == i) continue;
      nearest = std::min(nearest, (nodes.row(i) - nodes.row(j)).norm());
    }
    max_gap = std::max(max_gap, nearest);
  }
  return 3.0 * max_gap;
}

namespace {

DenseMatrix rbf_matrix(const DenseMatrix& rows, const DenseMatrix& centers, double radius) {
  DenseMatrix phi(rows.rows(), centers.rows());
  for (Index i = 0; i < rows.rows(); ++i)
    for (Index j = 0; j < centers.rows(); ++j)
      phi(i, j) = wendland_c2((rows.row(i) - centers.row(j)).norm(), radius);
  return phi;
}

}  // namespace

DenseMatrix build_rbf_interpolation(const DenseMatrix& target_nodes, const DenseMatrix& source_nodes,
                                    double radius) {
  double r = radius;
  for (int attempt = 0;; ++attempt) {
    const DenseMatrix phi_ss = rbf_matrix(source_nodes, source_nodes, r);
    Eigen::PartialPivLU<DenseMatrix> lu(phi_ss);
    const Vector diag = lu.matrixLU().diagonal().cwiseAbs();
    const bool singular = diag.minCoeff() < 1e-12 * diag.maxCoeff();
    if (!singular) {
      const DenseMatrix phi_ts = rbf_matrix(target_nodes, source_nodes, r);
      DenseMatrix p = lu.solve(phi_ts.transpose()).transpose();  // Phi_ts Phi_ss^{-1}
      const Vector denom = p.rowwise().sum();
      if (denom.cwiseAbs().minCoeff() > 1e-12) {
        for (Index i = 0; i < p.rows(); ++i) p.row(i) /= denom[i];
        return p;
      }
    }
    if (attempt >= 3)
      throw std::runtime_error(
          "RL-RBF interpolation failed: matrix singular or rescaling denominator zero; "
          "increase the RBF radius");
    r *= 1.5;
  }
}

InterfaceOperators::InterfaceOperators(const Multipatch& mp, const Adjacency& adj) {
  for (const auto& [key, info] : adj.faces) mass_.emplace(key, interface_mass_matrix(info.face));

  for (const auto& [key, info] : adj.faces) {
    const DenseMatrix g_own = collocation_matrix(info.face);
    Eigen::PartialPivLU<DenseMatrix> own_lu(g_own);
    for (std::size_t a = 0; a < info.adjacent.size(); ++a) {
      const FaceKey other_key = info.adjacent[a];
      const auto& other = adj.faces.at(other_key);
      bool watertight = true;
      double radius_override = 0.0;
      for (const auto& itf : mp.interfaces) {
        const FaceKey m{itf.master_patch, itf.master_side};
        const FaceKey s{itf.slave_patch, itf.slave_side};
        if ((m == key && s == other_key) || (s == key && m == other_key)) {
          watertight = itf.watertight;
          radius_override = itf.rbf_radius;
        }
      }
      DenseMatrix p;
      double radius = 0.0;
      if (watertight) {
        DenseMatrix g_cross = cross_collocation_matrix(info, a, other.face);
        for (Index i = 0; i < g_cross.rows(); ++i) g_cross.row(i) *= info.pu_weights[i];
        p = own_lu.solve(g_cross);
      } else {
        radius = radius_override > 0.0 ? radius_override : default_rbf_radius(other.face.greville_physical);
        const DenseMatrix p_rbf =
            build_rbf_interpolation(info.face.greville_physical, other.face.greville_physical, radius);
        p = own_lu.solve(p_rbf * collocation_matrix(other.face));
      }
      p_.emplace(std::make_pair(key, other_key), std::move(p));
      radius_.emplace(std::make_pair(key, other_key), radius);
    }
  }
}

const DenseMatrix& InterfaceOperators::interpolation(const FaceKey& to, const FaceKey& from) const {
  return p_.at({to, from});
}

const DenseMatrix& InterfaceOperators::mass(const FaceKey& key) const { return mass_.at(key); }

double InterfaceOperators::rbf_radius(const FaceKey& to, const FaceKey& from) const {
  return radius_.at({to, from});
}

Vector transfer_normal_derivative(const Vector& r_slave, const DenseMatrix& mass_slave,
                                  const DenseMatrix& mass_master, const DenseMatrix& p_master_from_slave) {
  if (r_slave.size() != mass_slave.rows() || p_master_from_slave.cols() != mass_slave.rows() ||
      p_master_from_slave.rows() != mass_master.rows())
    throw std::invalid_argument("transfer_normal_derivative: dimension mismatch");
  const Vector z = mass_slave.ldlt().solve(r_slave);  // dual -> primal
  return mass_master * (p_master_from_slave * z);     // interpolate, back to dual
}

}  // namespace iga
