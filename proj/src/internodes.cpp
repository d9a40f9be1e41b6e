#include "iga/internodes.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <set>
#include <stdexcept>

namespace iga {

namespace {

bool is_patch_vertex(const TensorBasis& basis, Index dof) {
  const auto mi = basis.multi_index(dof);
  for (int k = 0; k < basis.dim(); ++k) {
    const Index m = mi[static_cast<std::size_t>(k)];
    if (m != 0 && m != basis.num_basis(k) - 1) return false;
  }
  return true;
}

Vector vertex_position(const GeometryMap& geo, Index dof) {
  const auto mi = geo.space.basis.multi_index(dof);
  Vector xhat(geo.dim());
  for (int k = 0; k < geo.dim(); ++k)
    xhat[k] = mi[static_cast<std::size_t>(k)] == 0 ? 0.0 : 1.0;
  return map_point(geo, xhat);
}

}  // namespace

SchurSystem::SchurSystem(Multipatch mp, ProblemData prob, double node_tolerance)
    : mp_(std::move(mp)), prob_(std::move(prob)) {
  if (prob_.coeffs.size() != static_cast<std::size_t>(mp_.num_patches()))
    throw std::invalid_argument("one coefficient set per patch required");
  adjacency_ = build_adjacency(mp_, node_tolerance);
  operators_ = InterfaceOperators(mp_, adjacency_);

  // per-patch assembly and factorization
  patches_.resize(static_cast<std::size_t>(mp_.num_patches()));
  for (int k = 0; k < mp_.num_patches(); ++k) {
    auto& pd = patches_[static_cast<std::size_t>(k)];
    const auto& geo = mp_.patches[static_cast<std::size_t>(k)];
    const auto& tags = mp_.side_tags[static_cast<std::size_t>(k)];
    const auto& coeffs = prob_.coeffs[static_cast<std::size_t>(k)];
    pd.system = assemble_patch_system(geo, coeffs, tags, prob_.neumann_flux);
    pd.partition = make_dof_partition(geo.space.basis, tags);
    pd.dirichlet_values = dirichlet_coefficients(geo, tags, prob_.dirichlet);
    const SparseMatrix a_ii = extract(pd.system.stiffness, pd.partition.interior, pd.partition.interior);
    pd.factor = PatchFactorization(a_ii, coeffs.symmetric());
    pd.a_int_bnd = extract(pd.system.stiffness, pd.partition.interior, pd.partition.tarray);
    IndexList all(static_cast<std::size_t>(pd.partition.total));
    std::iota(all.begin(), all.end(), Index{0});
    for (const auto& fp : pd.partition.faces) {
      const SparseMatrix c = correction_matrix(geo, pd.partition, fp.side_id, coeffs.nu);
      SparseMatrix ahat = pd.system.stiffness + c;
      pd.ahat.emplace(fp.side_id, extract(ahat, fp.closure, all));
      pd.face_load.emplace(fp.side_id, extract(pd.system.load, fp.closure));
    }
  }

  // which dofs lie on a slave face of their own patch (their trace values
  // come from the slave interpolation, not from the skeleton)
  std::vector<std::vector<char>> on_slave_face(patches_.size());
  for (std::size_t k = 0; k < patches_.size(); ++k)
    on_slave_face[k].assign(static_cast<std::size_t>(patches_[k].partition.total), 0);
  for (const auto& [key, info] : adjacency_.faces) {
    if (info.master) continue;
    for (Index dof : info.face.volume_index)
      on_slave_face[static_cast<std::size_t>(key.first)][static_cast<std::size_t>(dof)] = 1;
  }

  // master skeleton: trace dofs of master faces, deduplicated at patch
  // vertices by physical position
  const double vertex_tol = adjacency_.node_tolerance;
  std::vector<std::pair<Vector, Index>> vertex_slots;  // physical position -> slot
  for (const auto& [key, info] : adjacency_.faces) {
    if (!info.master) continue;
    IndexList slots(static_cast<std::size_t>(info.face.num_basis()));
    for (Index j = 0; j < info.face.num_basis(); ++j) {
      const Index dof = info.face.volume_index[static_cast<std::size_t>(j)];
      const auto patch_key = std::make_pair(key.first, dof);
      auto it = skeleton_.dof_slot.find(patch_key);
      Index slot = -1;
      if (it != skeleton_.dof_slot.end()) {
        slot = it->second;
      } else {
        const auto& geo = mp_.patches[static_cast<std::size_t>(key.first)];
        if (is_patch_vertex(geo.space.basis, dof)) {
          const Vector x = vertex_position(geo, dof);
          for (const auto& [pos, s] : vertex_slots)
            if ((pos - x).norm() <= vertex_tol) {
              slot = s;
              break;
            }
          if (slot < 0) {
            slot = static_cast<Index>(skeleton_.slot_dirichlet.size());
            skeleton_.slot_dirichlet.push_back(0);
            skeleton_.slot_free.push_back(0);
            vertex_slots.emplace_back(x, slot);
          }
        } else {
          slot = static_cast<Index>(skeleton_.slot_dirichlet.size());
          skeleton_.slot_dirichlet.push_back(0);
          skeleton_.slot_free.push_back(0);
        }
        skeleton_.dof_slot.emplace(patch_key, slot);
      }
      const bool dirichlet =
          patches_[static_cast<std::size_t>(key.first)].partition.is_dirichlet[static_cast<std::size_t>(dof)];
      if (dirichlet) skeleton_.slot_dirichlet[static_cast<std::size_t>(slot)] = 1;
      if (!dirichlet && !on_slave_face[static_cast<std::size_t>(key.first)][static_cast<std::size_t>(dof)])
        skeleton_.slot_free[static_cast<std::size_t>(slot)] = 1;
      slots[static_cast<std::size_t>(j)] = slot;
    }
    skeleton_.face_slots.emplace(key, std::move(slots));
  }
  skeleton_.full_size = static_cast<Index>(skeleton_.slot_dirichlet.size());
  skeleton_.slot_to_reduced.assign(static_cast<std::size_t>(skeleton_.full_size), -1);
  for (Index s = 0; s < skeleton_.full_size; ++s) {
    if (skeleton_.slot_dirichlet[static_cast<std::size_t>(s)] ||
        !skeleton_.slot_free[static_cast<std::size_t>(s)])
      continue;
    skeleton_.slot_to_reduced[static_cast<std::size_t>(s)] = static_cast<Index>(skeleton_.free_slots.size());
    skeleton_.free_slots.push_back(s);
  }
  skeleton_.reduced_size = static_cast<Index>(skeleton_.free_slots.size());
}

Index SchurSystem::total_dofs() const {
  Index n = 0;
  for (const auto& pd : patches_) n += pd.partition.total;
  return n;
}

std::vector<Vector> SchurSystem::fill_boundary_arrays(const Vector* lambda_tilde,
                                                      bool with_dirichlet) const {
  std::vector<Vector> t(patches_.size());
  for (std::size_t k = 0; k < patches_.size(); ++k)
    t[k] = Vector::Zero(static_cast<Index>(patches_[k].partition.tarray.size()));

  // scatter the skeleton values onto the master faces
  if (lambda_tilde) {
    for (const auto& [key, slots] : skeleton_.face_slots) {
      const auto& info = adjacency_.at(key);
      auto& tk = t[static_cast<std::size_t>(key.first)];
      const auto& part = patches_[static_cast<std::size_t>(key.first)].partition;
      for (Index j = 0; j < info.face.num_basis(); ++j) {
        const Index dof = info.face.volume_index[static_cast<std::size_t>(j)];
        tk[part.tarray_pos[static_cast<std::size_t>(dof)]] =
            (*lambda_tilde)[slots[static_cast<std::size_t>(j)]];
      }
    }
  }

  if (with_dirichlet) {
    for (std::size_t k = 0; k < patches_.size(); ++k) {
      const auto& part = patches_[k].partition;
      for (Index i : part.dirichlet)
        t[k][part.tarray_pos[static_cast<std::size_t>(i)]] =
            patches_[k].dirichlet_values[i];
    }
  }

  // interpolate the trace from master faces onto slave faces
  for (const auto& [key, info] : adjacency_.faces) {
    if (info.master) continue;
    Vector values = Vector::Zero(info.face.num_basis());
    for (const FaceKey& mk : info.adjacent) {
      const auto& minfo = adjacency_.at(mk);
      const auto& mpart = patches_[static_cast<std::size_t>(mk.first)].partition;
      const auto& tm = t[static_cast<std::size_t>(mk.first)];
      Vector source(minfo.face.num_basis());
      for (Index j = 0; j < minfo.face.num_basis(); ++j)
        source[j] = tm[mpart.tarray_pos[static_cast<std::size_t>(
            minfo.face.volume_index[static_cast<std::size_t>(j)])]];
      values += operators_.interpolation(key, mk) * source;
    }
    auto& tk = t[static_cast<std::size_t>(key.first)];
    const auto& part = patches_[static_cast<std::size_t>(key.first)].partition;
    for (Index j = 0; j < info.face.num_basis(); ++j)
      tk[part.tarray_pos[static_cast<std::size_t>(
          info.face.volume_index[static_cast<std::size_t>(j)])]] = values[j];
  }

  // Dirichlet data wins at shared dofs, matching the monolithic block system
  for (std::size_t k = 0; k < patches_.size(); ++k) {
    const auto& part = patches_[k].partition;
    for (Index i : part.dirichlet)
      t[k][part.tarray_pos[static_cast<std::size_t>(i)]] =
          with_dirichlet ? patches_[k].dirichlet_values[i] : 0.0;
  }
  return t;
}

std::vector<Vector> SchurSystem::local_solves(const std::vector<Vector>& t, bool with_load) const {
  std::vector<Vector> u(patches_.size());
  const int np = static_cast<int>(patches_.size());
#pragma omp parallel for schedule(static)
  for (int k = 0; k < np; ++k) {
    const auto& pd = patches_[static_cast<std::size_t>(k)];
    Vector rhs = -(pd.a_int_bnd * t[static_cast<std::size_t>(k)]);
    if (with_load) rhs += extract(pd.system.load, pd.partition.interior);
    const Vector u0 = pd.factor.solve(rhs);
    Vector full = Vector::Zero(pd.partition.total);
    for (std::size_t i = 0; i < pd.partition.interior.size(); ++i)
      full[pd.partition.interior[i]] = u0[static_cast<Index>(i)];
    for (std::size_t i = 0; i < pd.partition.tarray.size(); ++i)
      full[pd.partition.tarray[i]] = t[static_cast<std::size_t>(k)][static_cast<Index>(i)];
    u[static_cast<std::size_t>(k)] = std::move(full);
  }
  return u;
}

Vector SchurSystem::gather_master_residuals(const std::vector<Vector>& u, bool with_load) const {
  // residuals face by face
  std::map<FaceKey, Vector> residual;
  for (const auto& [key, info] : adjacency_.faces) {
    const auto& pd = patches_[static_cast<std::size_t>(key.first)];
    Vector r = pd.ahat.at(key.second) * u[static_cast<std::size_t>(key.first)];
    if (with_load) r -= pd.face_load.at(key.second);
    residual.emplace(key, std::move(r));
  }

  Vector psi = Vector::Zero(skeleton_.full_size);
  for (const auto& [key, slots] : skeleton_.face_slots) {
    const auto& info = adjacency_.at(key);
    Vector eq = residual.at(key);
    for (std::size_t a = 0; a < info.adjacent.size(); ++a) {
      const FaceKey sk = info.adjacent[a];
      eq += transfer_normal_derivative(residual.at(sk), operators_.mass(sk), operators_.mass(key),
                                       operators_.interpolation(key, sk));
    }
    for (Index j = 0; j < eq.size(); ++j) psi[slots[static_cast<std::size_t>(j)]] += eq[j];
  }

  Vector reduced(skeleton_.reduced_size);
  for (Index i = 0; i < skeleton_.reduced_size; ++i)
    reduced[i] = psi[skeleton_.free_slots[static_cast<std::size_t>(i)]];
  return reduced;
}

Vector SchurSystem::rhs() const {
  const auto t = fill_boundary_arrays(nullptr, true);
  const auto u = local_solves(t, true);
  return -gather_master_residuals(u, true);
}

Vector SchurSystem::apply(const Vector& lambda) const {
  if (lambda.size() != skeleton_.reduced_size)
    throw std::invalid_argument("schur apply: skeleton size mismatch");
  Vector lambda_tilde = Vector::Zero(skeleton_.full_size);
  for (Index i = 0; i < skeleton_.reduced_size; ++i)
    lambda_tilde[skeleton_.free_slots[static_cast<std::size_t>(i)]] = lambda[i];
  const auto t = fill_boundary_arrays(&lambda_tilde, false);
  const auto u = local_solves(t, false);
  return gather_master_residuals(u, false);
}

std::vector<Vector> SchurSystem::recover(const Vector& u_gamma) const {
  if (u_gamma.size() != skeleton_.reduced_size)
    throw std::invalid_argument("recover: skeleton size mismatch");
  Vector full = Vector::Zero(skeleton_.full_size);
  for (Index i = 0; i < skeleton_.reduced_size; ++i)
    full[skeleton_.free_slots[static_cast<std::size_t>(i)]] = u_gamma[i];
  const auto t = fill_boundary_arrays(&full, true);
  return local_solves(t, true);
}

LinearOperator SchurSystem::dn_preconditioner() const {
  // classify patches; a patch mixing master and slave faces is not supported
  std::vector<int> master_patches;
  for (int k = 0; k < mp_.num_patches(); ++k) {
    bool has_master = false, has_slave = false;
    for (const auto& [key, info] : adjacency_.faces) {
      if (key.first != k) continue;
      (info.master ? has_master : has_slave) = true;
    }
    if (has_master && has_slave)
      throw std::invalid_argument(
          "Dirichlet-Neumann preconditioner requires each patch to be wholly master or wholly "
          "slave");
    if (has_master) master_patches.push_back(k);
  }
  if (master_patches.empty()) throw std::invalid_argument("no master patches for the preconditioner");

  struct LocalSolver {
    IndexList gamma_dofs;
    IndexList reduced_positions;
    std::shared_ptr<Eigen::SparseLU<SparseMatrix>> lu;
    Index n_interior = 0;
  };
  auto solvers = std::make_shared<std::vector<LocalSolver>>();
  Vector multiplicity = Vector::Zero(skeleton_.reduced_size);

  for (int k : master_patches) {
    const auto& pd = patches_[static_cast<std::size_t>(k)];
    LocalSolver loc;

    std::set<Index> gamma_set;
    for (const auto& [key, info] : adjacency_.faces) {
      if (key.first != k || !info.master) continue;
      for (Index dof : info.face.volume_index)
        if (!pd.partition.is_dirichlet[static_cast<std::size_t>(dof)]) gamma_set.insert(dof);
    }
    loc.gamma_dofs.assign(gamma_set.begin(), gamma_set.end());
    IndexList kept;
    for (Index dof : loc.gamma_dofs) {
      const Index slot = skeleton_.dof_slot.at({k, dof});
      const Index red = skeleton_.slot_to_reduced[static_cast<std::size_t>(slot)];
      if (red < 0) continue;  // constrained entry (slave-valued elsewhere)
      kept.push_back(dof);
      loc.reduced_positions.push_back(red);
      multiplicity[red] += 1.0;
    }
    loc.gamma_dofs = std::move(kept);

    // local Neumann-type operator: interior rows from A, interface rows
    // accumulated from A + C face by face, exactly as the global equations do
    const Index ni = static_cast<Index>(pd.partition.interior.size());
    const Index ng = static_cast<Index>(loc.gamma_dofs.size());
    loc.n_interior = ni;
    std::vector<Index> col_of(static_cast<std::size_t>(pd.partition.total), -1);
    for (Index i = 0; i < ni; ++i) col_of[static_cast<std::size_t>(pd.partition.interior[static_cast<std::size_t>(i)])] = i;
    for (Index i = 0; i < ng; ++i) col_of[static_cast<std::size_t>(loc.gamma_dofs[static_cast<std::size_t>(i)])] = ni + i;

    // floating patches get a mass shift so the local operator is invertible
    SparseMatrix base = pd.system.stiffness;
    if (pd.partition.dirichlet.empty())
      base = base + assemble_patch_mass(mp_.patches[static_cast<std::size_t>(k)]);

    std::vector<Triplet> trip;
    for (Index c = 0; c < base.outerSize(); ++c) {
      const Index col = col_of[static_cast<std::size_t>(c)];
      if (col < 0) continue;
      for (SparseMatrix::InnerIterator it(base, c); it; ++it) {
        const Index row = it.row();
        if (pd.partition.interior_pos[static_cast<std::size_t>(row)] >= 0)
          trip.emplace_back(static_cast<int>(pd.partition.interior_pos[static_cast<std::size_t>(row)]),
                            static_cast<int>(col), it.value());
      }
    }
    std::vector<Index> row_of(static_cast<std::size_t>(pd.partition.total), -1);
    for (Index i = 0; i < ng; ++i) row_of[static_cast<std::size_t>(loc.gamma_dofs[static_cast<std::size_t>(i)])] = ni + i;
    for (const auto& [key, info] : adjacency_.faces) {
      if (key.first != k || !info.master) continue;
      const auto& fp = pd.partition.face(key.second);
      SparseMatrix ahat = pd.ahat.at(key.second);
      if (pd.partition.dirichlet.empty()) {
        // keep the mass shift consistent in the interface rows
        const SparseMatrix mass = assemble_patch_mass(mp_.patches[static_cast<std::size_t>(k)]);
        IndexList all(static_cast<std::size_t>(pd.partition.total));
        std::iota(all.begin(), all.end(), Index{0});
        ahat = ahat + extract(mass, fp.closure, all);
      }
      for (Index c = 0; c < ahat.outerSize(); ++c) {
        const Index col = col_of[static_cast<std::size_t>(c)];
        if (col < 0) continue;
        for (SparseMatrix::InnerIterator it(ahat, c); it; ++it) {
          const Index dof = fp.closure[static_cast<std::size_t>(it.row())];
          const Index row = row_of[static_cast<std::size_t>(dof)];
          if (row >= 0) trip.emplace_back(static_cast<int>(row), static_cast<int>(col), it.value());
        }
      }
    }
    SparseMatrix local(ni + ng, ni + ng);
    local.setFromTriplets(trip.begin(), trip.end());
    loc.lu = std::make_shared<Eigen::SparseLU<SparseMatrix>>();
    loc.lu->compute(local);
    if (loc.lu->info() != Eigen::Success)
      throw std::runtime_error("preconditioner: singular local Schur complement despite regularization");
    solvers->push_back(std::move(loc));
  }

  const Index n = skeleton_.reduced_size;
  auto mult = std::make_shared<Vector>(multiplicity);
  return [solvers, mult, n](const Vector& v) {
    Vector out = Vector::Zero(n);
    for (const auto& loc : *solvers) {
      Vector rhs = Vector::Zero(loc.n_interior + static_cast<Index>(loc.gamma_dofs.size()));
      for (std::size_t i = 0; i < loc.reduced_positions.size(); ++i)
        rhs[loc.n_interior + static_cast<Index>(i)] = v[loc.reduced_positions[i]];
      const Vector sol = loc.lu->solve(rhs);
      for (std::size_t i = 0; i < loc.reduced_positions.size(); ++i)
        out[loc.reduced_positions[i]] += sol[loc.n_interior + static_cast<Index>(i)];
    }
    return Vector((out.array() / mult->array()).matrix());
  };
}

MonolithicSolution assemble_and_solve_monolithic(const Multipatch& mp, const ProblemData& prob) {
  if (mp.num_patches() != 2 || mp.interfaces.size() != 1)
    throw std::invalid_argument("monolithic solve: exactly two patches with one interface");
  SchurSystem sys(mp, prob);  // reuse assembly, adjacency, operators

  const auto& itf = mp.interfaces.front();
  const FaceKey mkey{itf.master_patch, itf.master_side};
  const FaceKey skey{itf.slave_patch, itf.slave_side};
  const int km = mkey.first, ks = skey.first;
  const auto& pm = sys.patch(km);
  const auto& ps = sys.patch(ks);
  const auto& fm = pm.partition.face(mkey.second);
  const auto& fs = ps.partition.face(skey.second);
  for (Index dof : fm.boundary)
    if (!pm.partition.is_dirichlet[static_cast<std::size_t>(dof)])
      throw std::invalid_argument("monolithic solve: master face endpoints must be Dirichlet");
  for (Index dof : fs.boundary)
    if (!ps.partition.is_dirichlet[static_cast<std::size_t>(dof)])
      throw std::invalid_argument("monolithic solve: slave face endpoints must be Dirichlet");

  const Index n1 = static_cast<Index>(pm.partition.interior.size());
  const Index n2 = static_cast<Index>(ps.partition.interior.size());
  const Index m = static_cast<Index>(fm.interior.size());
  const Index nw = n1 + n2 + m;

  // affine maps from the unknowns to the full per-patch coefficient vectors:
  // u^(k) = U_k w + c_k
  const Index nm_tot = pm.partition.total, ns_tot = ps.partition.total;
  std::vector<Triplet> u1_trip, u2_trip;
  Vector c1 = pm.dirichlet_values, c2 = ps.dirichlet_values;
  for (Index i = 0; i < n1; ++i)
    u1_trip.emplace_back(static_cast<int>(pm.partition.interior[static_cast<std::size_t>(i)]),
                         static_cast<int>(i), 1.0);
  std::vector<Index> face_pos_of_dof(static_cast<std::size_t>(nm_tot), -1);
  for (std::size_t j = 0; j < fm.closure.size(); ++j)
    face_pos_of_dof[static_cast<std::size_t>(fm.closure[j])] = static_cast<Index>(j);
  // master-face interior trace dofs are unknowns
  std::vector<Index> unknown_of_face_pos(fm.closure.size(), -1);
  for (std::size_t j = 0; j < fm.interior.size(); ++j) {
    const Index pos = face_pos_of_dof[static_cast<std::size_t>(fm.interior[j])];
    unknown_of_face_pos[static_cast<std::size_t>(pos)] = n1 + n2 + static_cast<Index>(j);
    u1_trip.emplace_back(static_cast<int>(fm.interior[j]),
                         static_cast<int>(n1 + n2 + static_cast<Index>(j)), 1.0);
  }
  for (Index i = 0; i < n2; ++i)
    u2_trip.emplace_back(static_cast<int>(ps.partition.interior[static_cast<std::size_t>(i)]),
                         static_cast<int>(n1 + i), 1.0);
  // slave-face interior trace dofs interpolate the master trace
  const DenseMatrix& q21 = sys.operators().interpolation(skey, mkey);
  Vector g_face = Vector::Zero(static_cast<Index>(fm.closure.size()));
  for (std::size_t j = 0; j < fm.closure.size(); ++j)
    g_face[static_cast<Index>(j)] = pm.dirichlet_values[fm.closure[j]];
  std::vector<Index> slave_face_pos(static_cast<std::size_t>(ns_tot), -1);
  for (std::size_t j = 0; j < fs.closure.size(); ++j)
    slave_face_pos[static_cast<std::size_t>(fs.closure[j])] = static_cast<Index>(j);
  for (Index dof : fs.interior) {
    const Index row = slave_face_pos[static_cast<std::size_t>(dof)];
    double cval = 0.0;
    for (Index col = 0; col < q21.cols(); ++col) {
      const Index unk = unknown_of_face_pos[static_cast<std::size_t>(col)];
      if (unk >= 0)
        u2_trip.emplace_back(static_cast<int>(dof), static_cast<int>(unk), q21(row, col));
      else
        cval += q21(row, col) * g_face[col];
    }
    c2[dof] += cval;
  }
  SparseMatrix u1_map(nm_tot, nw), u2_map(ns_tot, nw);
  u1_map.setFromTriplets(u1_trip.begin(), u1_trip.end());
  u2_map.setFromTriplets(u2_trip.begin(), u2_trip.end());

  // block rows: interior equations of both patches and the flux equilibrium
  // on the master-face interior dofs
  IndexList all1(static_cast<std::size_t>(nm_tot)), all2(static_cast<std::size_t>(ns_tot));
  std::iota(all1.begin(), all1.end(), Index{0});
  std::iota(all2.begin(), all2.end(), Index{0});
  const SparseMatrix a1_rows = extract(pm.system.stiffness, pm.partition.interior, all1);
  const SparseMatrix a2_rows = extract(ps.system.stiffness, ps.partition.interior, all2);
  const SparseMatrix& ahat1 = pm.ahat.at(mkey.second);
  const SparseMatrix& ahat2 = ps.ahat.at(skey.second);
  // Q12 = M_master P_{master<-slave} M_slave^{-1}
  const DenseMatrix& p12 = sys.operators().interpolation(mkey, skey);
  const DenseMatrix q12 =
      sys.operators().mass(mkey) *
      sys.operators().mass(skey).ldlt().solve(p12.transpose()).transpose();

  SparseMatrix sys_mat(nw, nw);
  Vector rhs(nw);
  {
    std::vector<Triplet> trip;
    auto add_block = [&](Index row0, const SparseMatrix& block) {
      for (Index c = 0; c < block.outerSize(); ++c)
        for (SparseMatrix::InnerIterator it(block, c); it; ++it)
          trip.emplace_back(static_cast<int>(row0 + it.row()), static_cast<int>(c), it.value());
    };
    const SparseMatrix r1 = a1_rows * u1_map;
    const SparseMatrix r2 = a2_rows * u2_map;
    add_block(0, r1);
    add_block(n1, r2);
    rhs.head(n1) = extract(pm.system.load, pm.partition.interior) - a1_rows * c1;
    rhs.segment(n1, n2) = extract(ps.system.load, ps.partition.interior) - a2_rows * c2;

    // equilibrium rows at master-face interior positions
    const DenseMatrix eq2 = q12 * (ahat2 * u2_map);  // n_m_face x nw (dense)
    const Vector eq2_c = q12 * (ahat2 * c2 - ps.face_load.at(skey.second));
    const SparseMatrix eq1 = ahat1 * u1_map;
    const Vector eq1_c = ahat1 * c1 - pm.face_load.at(mkey.second);
    DenseMatrix eq = DenseMatrix(eq1) + eq2;
    for (std::size_t j = 0; j < fm.interior.size(); ++j) {
      const Index pos = face_pos_of_dof[static_cast<std::size_t>(fm.interior[j])];
      for (Index c = 0; c < nw; ++c) {
        const double v = eq(pos, c);
        if (v != 0.0)
          trip.emplace_back(static_cast<int>(n1 + n2 + static_cast<Index>(j)), static_cast<int>(c), v);
      }
      rhs[n1 + n2 + static_cast<Index>(j)] = -(eq1_c[pos] + eq2_c[pos]);
    }
    sys_mat.setFromTriplets(trip.begin(), trip.end());
  }

  Eigen::SparseLU<SparseMatrix> lu;
  lu.compute(sys_mat);
  if (lu.info() != Eigen::Success) throw std::runtime_error("monolithic system factorization failed");
  const Vector w = lu.solve(rhs);

  MonolithicSolution sol;
  sol.trace = w.tail(m);
  sol.u.resize(2);
  sol.u[static_cast<std::size_t>(km)] = u1_map * w + c1;
  sol.u[static_cast<std::size_t>(ks)] = u2_map * w + c2;
  return sol;
}

SolveOutcome solve_internodes(const Multipatch& mp, const ProblemData& prob,
                              const SolverSettings& settings) {
  SolveOutcome out;
  if (settings.method == SolverSettings::Method::Monolithic) {
    auto sol = assemble_and_solve_monolithic(mp, prob);
    out.u = std::move(sol.u);
    out.report.converged = true;
    out.report.status = KrylovStatus::Converged;
    Index n = 0;
    for (const auto& u : out.u) n += u.size();
    out.total_dofs = n;
    return out;
  }
  SchurSystem sys(mp, prob);
  out.skeleton_size = sys.skeleton_size();
  out.total_dofs = sys.total_dofs();
  const Vector b = sys.rhs();
  LinearOperator precond;
  if (settings.precond != SolverSettings::Precond::None) precond = sys.dn_preconditioner();
  auto op = [&sys](const Vector& v) { return sys.apply(v); };
  auto [x, report] =
      settings.method == SolverSettings::Method::BiCGStab
          ? bicgstab(op, b, precond, settings.tol, settings.max_it)
          : gmres(op, b, precond, settings.tol, settings.max_it, settings.gmres_restart);
  out.report = std::move(report);
  out.u = sys.recover(x);
  return out;
}

}  // namespace iga
