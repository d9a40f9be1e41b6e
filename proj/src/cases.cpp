#include "iga/cases.hpp"

#include <chrono>
#include <cmath>
#include <cstdio>
#include <numeric>
#include <stdexcept>

namespace iga {

double broken_error(const Multipatch& mp, const std::vector<Vector>& u, const ExactSolution& exact) {
  if (!exact) throw std::invalid_argument("broken_error: exact solution required");
  double total = 0.0;
  for (int k = 0; k < mp.num_patches(); ++k) {
    const auto& geo = mp.patches[static_cast<std::size_t>(k)];
    const int d = geo.dim();
    std::vector<std::vector<double>> breaks;
    std::vector<QuadRule> base;
    Index n_el = 1;
    for (int dir = 0; dir < d; ++dir) {
      breaks.push_back(geo.space.basis.direction(dir).breakpoints());
      n_el *= static_cast<Index>(breaks.back().size()) - 1;
    }
    std::vector<double> err_slot(static_cast<std::size_t>(n_el), 0.0);
    std::vector<double> norm_slot(static_cast<std::size_t>(n_el), 0.0);

#pragma omp parallel for schedule(static)
    for (Index e = 0; e < n_el; ++e) {
      Index rem = e;
      std::vector<QuadRule> rules;
      Index nq = 1;
      for (int dir = 0; dir < d; ++dir) {
        const auto& b = breaks[static_cast<std::size_t>(dir)];
        const Index ie = rem % (static_cast<Index>(b.size()) - 1);
        rem /= static_cast<Index>(b.size()) - 1;
        const int pts = 2 * (geo.space.basis.direction(dir).degree() + 1 + kQuadExtra);
        rules.push_back(gauss_legendre_on(pts, b[static_cast<std::size_t>(ie)],
                                          b[static_cast<std::size_t>(ie) + 1]));
        nq *= pts;
      }
      double err = 0.0, nrm = 0.0;
      Vector xhat(d);
      for (Index q = 0; q < nq; ++q) {
        Index r = q;
        double w = 1.0;
        for (int dir = 0; dir < d; ++dir) {
          const Index i = r % rules[static_cast<std::size_t>(dir)].nodes.size();
          r /= rules[static_cast<std::size_t>(dir)].nodes.size();
          xhat[dir] = rules[static_cast<std::size_t>(dir)].nodes[i];
          w *= rules[static_cast<std::size_t>(dir)].weights[i];
        }
        const FieldSample s = sample_field(geo, u[static_cast<std::size_t>(k)], xhat);
        const double dv = w * std::abs(s.jac_det);
        const double ue = exact.value(s.x);
        const Vector ge = exact.gradient(s.x);
        err += ((s.value - ue) * (s.value - ue) + (s.gradient - ge).squaredNorm()) * dv;
        nrm += (ue * ue + ge.squaredNorm()) * dv;
      }
      err_slot[static_cast<std::size_t>(e)] = err;
      norm_slot[static_cast<std::size_t>(e)] = nrm;
    }
    double err = 0.0, nrm = 0.0;
    for (Index e = 0; e < n_el; ++e) {
      err += err_slot[static_cast<std::size_t>(e)];
      nrm += norm_slot[static_cast<std::size_t>(e)];
    }
    if (nrm <= 0.0) throw std::invalid_argument("broken_error: exact solution vanishes on a patch");
    total += err / nrm;
  }
  return std::sqrt(total);
}

// ---- Kellogg machinery ----

KelloggParameters kellogg_parameters(double gamma) {
  if (!(gamma > 0.0 && gamma < 2.0) || gamma == 1.0)
    throw std::invalid_argument("kellogg_parameters: gamma must be in (0,2), gamma != 1");
  // the tangent identities pin rho = pi/4 and sigma = pi/4 - pi/(2 gamma);
  // Newton then polishes the full system
  KelloggParameters kp;
  kp.rho = M_PI / 4.0;
  kp.sigma = M_PI / 4.0 - M_PI / (2.0 * gamma);
  kp.R = -std::tan((M_PI / 2.0 - kp.sigma) * gamma) / std::tan(kp.rho * gamma);

  auto residual = [gamma](const Eigen::Vector3d& v) {
    const double r = v[0], rho = v[1], sig = v[2];
    Eigen::Vector3d f;
    f[0] = r + std::tan((M_PI / 2.0 - sig) * gamma) / std::tan(rho * gamma);
    f[1] = 1.0 / r + std::tan(rho * gamma) / std::tan(sig * gamma);
    f[2] = r + std::tan(sig * gamma) / std::tan((M_PI / 2.0 - rho) * gamma);
    return f;
  };
  Eigen::Vector3d v(kp.R, kp.rho, kp.sigma);
  for (int it = 0; it < 50; ++it) {
    const Eigen::Vector3d f = residual(v);
    if (f.norm() <= 1e-13) break;
    Eigen::Matrix3d jac;
    for (int c = 0; c < 3; ++c) {
      Eigen::Vector3d vp = v;
      const double step = 1e-7 * std::max(1.0, std::abs(v[c]));
      vp[c] += step;
      jac.col(c) = (residual(vp) - f) / step;
    }
    const Eigen::Vector3d dv = (jac.transpose() * jac + 1e-14 * Eigen::Matrix3d::Identity())
                                   .ldlt()
                                   .solve(jac.transpose() * f);
    v -= dv;
    if (dv.norm() < 1e-15) break;
  }
  if (residual(v).norm() > 1e-12)
    throw std::runtime_error("kellogg_parameters: Newton did not reach residual 1e-12");
  kp.R = v[0];
  kp.rho = v[1];
  kp.sigma = v[2];
  const double two_gr = 2.0 * gamma * kp.rho;
  const double m2gs = -2.0 * gamma * kp.sigma;
  if (!(kp.R > 0.0) || !(two_gr > std::max(0.0, M_PI * gamma - M_PI)) ||
      !(two_gr < std::min(gamma * M_PI, M_PI)) || !(m2gs > std::max(0.0, M_PI - gamma * M_PI)) ||
      !(m2gs < std::min(M_PI, 2.0 * M_PI - gamma * M_PI)))
    throw std::runtime_error("kellogg_parameters: constraint violation");
  return kp;
}

double kellogg_mu(double theta, double gamma, const KelloggParameters& kp) {
  const double rho = kp.rho, sig = kp.sigma;
  if (theta <= M_PI / 2.0)
    return std::cos((M_PI / 2.0 - sig) * gamma) * std::cos((theta - M_PI / 2.0 + rho) * gamma);
  if (theta <= M_PI) return std::cos(rho * gamma) * std::cos((theta - M_PI + sig) * gamma);
  if (theta <= 1.5 * M_PI) return std::cos(sig * gamma) * std::cos((theta - M_PI - rho) * gamma);
  return std::cos((M_PI / 2.0 - rho) * gamma) * std::cos((theta - 1.5 * M_PI - sig) * gamma);
}

namespace {

double kellogg_mu_prime(double theta, double gamma, const KelloggParameters& kp) {
  const double rho = kp.rho, sig = kp.sigma;
  if (theta <= M_PI / 2.0)
    return -gamma * std::cos((M_PI / 2.0 - sig) * gamma) * std::sin((theta - M_PI / 2.0 + rho) * gamma);
  if (theta <= M_PI) return -gamma * std::cos(rho * gamma) * std::sin((theta - M_PI + sig) * gamma);
  if (theta <= 1.5 * M_PI)
    return -gamma * std::cos(sig * gamma) * std::sin((theta - M_PI - rho) * gamma);
  return -gamma * std::cos((M_PI / 2.0 - rho) * gamma) * std::sin((theta - 1.5 * M_PI - sig) * gamma);
}

}  // namespace

ExactSolution kellogg_exact(double gamma, const KelloggParameters& kp) {
  ExactSolution sol;
  sol.value = [gamma, kp](const Vector& x) {
    const double r = std::hypot(x[0], x[1]);
    if (r == 0.0) return 0.0;
    double theta = std::atan2(x[1], x[0]);
    if (theta < 0.0) theta += 2.0 * M_PI;
    return std::pow(r, gamma) * kellogg_mu(theta, gamma, kp);
  };
  sol.gradient = [gamma, kp](const Vector& x) {
    const double r = std::hypot(x[0], x[1]);
    double theta = std::atan2(x[1], x[0]);
    if (theta < 0.0) theta += 2.0 * M_PI;
    const double mu = kellogg_mu(theta, gamma, kp);
    const double dmu = kellogg_mu_prime(theta, gamma, kp);
    const double rg1 = std::pow(r, gamma - 1.0);
    const double c = std::cos(theta), s = std::sin(theta);
    Vector g(2);
    g[0] = rg1 * (gamma * mu * c - dmu * s);
    g[1] = rg1 * (gamma * mu * s + dmu * c);
    return g;
  };
  return sol;
}

// ---- manufactured solutions ----

namespace {

ExactSolution exact_t1() {
  ExactSolution sol;
  sol.value = [](const Vector& x) { return std::sin(1.5 * M_PI * x[0]) * std::sin(3.0 * M_PI * x[1]); };
  sol.gradient = [](const Vector& x) {
    Vector g(2);
    g[0] = 1.5 * M_PI * std::cos(1.5 * M_PI * x[0]) * std::sin(3.0 * M_PI * x[1]);
    g[1] = 3.0 * M_PI * std::sin(1.5 * M_PI * x[0]) * std::cos(3.0 * M_PI * x[1]);
    return g;
  };
  return sol;
}

ScalarField source_t1() {
  return [](const Vector& x) {
    return 11.25 * M_PI * M_PI * std::sin(1.5 * M_PI * x[0]) * std::sin(3.0 * M_PI * x[1]);
  };
}

struct T2Pieces {
  double e, ex, ey, exx, eyy;
  double s, sx, sy, lap_s;
};

T2Pieces t2_pieces(const Vector& x) {
  T2Pieces v;
  const double dx = x[0] - 1.0, dy = x[1] - 0.6;
  v.e = std::exp(-3.0 * dx * dx - 4.0 * dy * dy);
  v.ex = -6.0 * dx * v.e;
  v.ey = -8.0 * dy * v.e;
  v.exx = (36.0 * dx * dx - 6.0) * v.e;
  v.eyy = (64.0 * dy * dy - 8.0) * v.e;
  v.s = std::sin(3.0 * M_PI * x[0]) * std::cos(3.0 * M_PI * x[1]);
  v.sx = 3.0 * M_PI * std::cos(3.0 * M_PI * x[0]) * std::cos(3.0 * M_PI * x[1]);
  v.sy = -3.0 * M_PI * std::sin(3.0 * M_PI * x[0]) * std::sin(3.0 * M_PI * x[1]);
  v.lap_s = -18.0 * M_PI * M_PI * v.s;
  return v;
}

ExactSolution exact_t2() {
  ExactSolution sol;
  sol.value = [](const Vector& x) {
    const auto v = t2_pieces(x);
    return v.e * (1.0 + v.s);
  };
  sol.gradient = [](const Vector& x) {
    const auto v = t2_pieces(x);
    Vector g(2);
    g[0] = v.ex * (1.0 + v.s) + v.e * v.sx;
    g[1] = v.ey * (1.0 + v.s) + v.e * v.sy;
    return g;
  };
  return sol;
}

ScalarField source_t2() {
  return [](const Vector& x) {
    const auto v = t2_pieces(x);
    const double lap = (v.exx + v.eyy) * (1.0 + v.s) + 2.0 * (v.ex * v.sx + v.ey * v.sy) + v.e * v.lap_s;
    return -lap;
  };
}

ExactSolution exact_t6() {
  ExactSolution sol;
  sol.value = [](const Vector& x) {
    return std::sin(M_PI * x[0]) * std::sin(M_PI * x[1]) * std::cos(2.0 * M_PI * x[2]);
  };
  sol.gradient = [](const Vector& x) {
    Vector g(3);
    g[0] = M_PI * std::cos(M_PI * x[0]) * std::sin(M_PI * x[1]) * std::cos(2.0 * M_PI * x[2]);
    g[1] = M_PI * std::sin(M_PI * x[0]) * std::cos(M_PI * x[1]) * std::cos(2.0 * M_PI * x[2]);
    g[2] = -2.0 * M_PI * std::sin(M_PI * x[0]) * std::sin(M_PI * x[1]) * std::sin(2.0 * M_PI * x[2]);
    return g;
  };
  return sol;
}

ScalarField source_t6() {
  // -lap u + u with lap u = -6 pi^2 u
  return [](const Vector& x) {
    const double u = std::sin(M_PI * x[0]) * std::sin(M_PI * x[1]) * std::cos(2.0 * M_PI * x[2]);
    return (6.0 * M_PI * M_PI + 1.0) * u;
  };
}

// planar corner singularity around the origin, opening 3*pi/2, times sin(beta z)
ExactSolution exact_t7(double beta) {
  ExactSolution sol;
  auto angle = [](const Vector& x) { return std::atan2(x[1], x[0]) + M_PI / 2.0; };
  sol.value = [beta, angle](const Vector& x) {
    const double r = std::hypot(x[0], x[1]);
    if (r == 0.0) return 0.0;
    return std::pow(r, beta) * std::sin(beta * angle(x)) * std::sin(beta * x[2]);
  };
  sol.gradient = [beta, angle](const Vector& x) {
    const double r = std::hypot(x[0], x[1]);
    const double th = angle(x);
    const double rb1 = std::pow(r, beta - 1.0);
    Vector g(3);
    // planar part w = r^beta sin(beta th): w_x = beta r^{beta-1} cos((beta-1) th),
    // w_y = -beta r^{beta-1} sin((beta-1) th) in the rotated frame
    g[0] = beta * rb1 * std::cos((beta - 1.0) * th) * std::sin(beta * x[2]);
    g[1] = -beta * rb1 * std::sin((beta - 1.0) * th) * std::sin(beta * x[2]);
    g[2] = std::pow(r, beta) * std::sin(beta * th) * beta * std::cos(beta * x[2]);
    return g;
  };
  return sol;
}

ScalarField source_t7(double beta) {
  return [beta](const Vector& x) {
    const double r = std::hypot(x[0], x[1]);
    if (r == 0.0) return 0.0;
    const double th = std::atan2(x[1], x[0]) + M_PI / 2.0;
    const double u = std::pow(r, beta) * std::sin(beta * th) * std::sin(beta * x[2]);
    return beta * beta * u;
  };
}

PatchCoefficients coefficients(double nu, double alpha, const ScalarField& f) {
  PatchCoefficients c;
  c.nu = [nu](const Vector&) { return nu; };
  c.alpha = [alpha](const Vector&) { return alpha; };
  if (f) c.f = f;
  return c;
}

std::vector<BoundaryKind> tags_with_interfaces(int dim, const std::vector<int>& interface_sides) {
  std::vector<BoundaryKind> tags(static_cast<std::size_t>(2 * dim), BoundaryKind::Dirichlet);
  for (int s : interface_sides) tags[static_cast<std::size_t>(s)] = BoundaryKind::Interface;
  return tags;
}

double parametric_h(const Multipatch& mp) {
  double h = 0.0;
  for (const auto& geo : mp.patches)
    for (int k = 0; k < geo.dim(); ++k)
      h = std::max(h, 1.0 / static_cast<double>(geo.space.basis.direction(k).num_spans()));
  return h;
}

// ---- test case t1: two ring-sector patches, smooth solution ----

CaseInstance build_t1(const std::string& name, const CaseOptions& opt, const std::string& variant) {
  if (opt.nbar % 2 != 0) throw std::invalid_argument(name + ": nbar must be even");
  const Index nb = opt.nbar;
  Index n1r, n1a, n2r, n2a;
  if (variant == "balanced") {
    n1r = nb / 2; n1a = nb; n2r = nb / 2; n2a = nb + 1;
  } else if (variant == "master_refined") {
    n1r = nb - 1; n1a = 2 * (nb - 1); n2r = nb / 2; n2a = nb;
  } else {
    n1r = nb / 2; n1a = nb; n2r = nb; n2a = 2 * nb + 1;
  }

  CaseInstance inst;
  inst.name = name;
  inst.p = opt.p;
  inst.nbar = nb;
  inst.mp.patches.push_back(refine_to(make_ring_sector(1.0, 1.5, 0.0, M_PI / 2), {opt.p, opt.p}, {n1r, n1a}));
  inst.mp.patches.push_back(refine_to(make_ring_sector(1.5, 2.0, 0.0, M_PI / 2), {opt.p, opt.p}, {n2r, n2a}));
  inst.mp.side_tags.push_back(tags_with_interfaces(2, {1}));  // r = 1.5 side of the inner patch
  inst.mp.side_tags.push_back(tags_with_interfaces(2, {0}));
  inst.mp.interfaces.push_back(InterfacePair{0, 1, 1, 0, true, 0.0});

  inst.exact = exact_t1();
  inst.prob.coeffs.assign(2, coefficients(1.0, 0.0, source_t1()));
  inst.prob.dirichlet = inst.exact.value;
  inst.h = parametric_h(inst.mp);
  inst.solver.precond = SolverSettings::Precond::LocalSchur;
  return inst;
}

// ---- test case t2: non-watertight sinusoidal interface ----

CaseInstance build_t2(const CaseOptions& opt) {
  auto curve = [](double y) { return 1.0 + 0.2 * std::sin(2.0 * M_PI * y); };
  int p1, p2;
  bool equal_degrees = false;
  if (opt.variant.empty() || opt.variant == "i") {
    p1 = 4; p2 = 3;
  } else if (opt.variant == "i53") {
    p1 = 5; p2 = 3;
  } else if (opt.variant == "i65") {
    p1 = 6; p2 = 5;
  } else if (opt.variant == "ii") {
    p1 = p2 = opt.p;
    equal_degrees = true;
  } else {
    throw std::invalid_argument("t2_nonwatertight: unknown variant (use i, i53, i65, ii)");
  }
  const Index n1 = opt.nbar - 1, n2 = opt.nbar + 1;
  if (n1 < 1) throw std::invalid_argument("t2_nonwatertight: nbar too small");

  CaseInstance inst;
  inst.name = "t2_nonwatertight";
  inst.p = p1;
  inst.nbar = opt.nbar;

  // interface curves interpolated independently per patch; for fixed-gap pairs
  // on a single span, for equal degrees on the refined knots directly
  const KnotVector kv1 = make_open_knot_vector(p1, equal_degrees ? n1 : 1);
  const KnotVector kv2 = make_open_knot_vector(p2, equal_degrees ? n2 : 1);
  GeometryMap left = make_ruled_interface_patch(curve, kv1, 0.0, true);
  GeometryMap right = make_ruled_interface_patch(curve, kv2, 2.0, false);
  inst.mp.patches.push_back(refine_to(left, {p1, p1}, {n1, n1}));
  inst.mp.patches.push_back(refine_to(right, {p2, p2}, {n2, n2}));
  inst.mp.side_tags.push_back(tags_with_interfaces(2, {1}));
  inst.mp.side_tags.push_back(tags_with_interfaces(2, {0}));
  inst.mp.interfaces.push_back(InterfacePair{0, 1, 1, 0, false, 0.0});

  inst.exact = exact_t2();
  inst.prob.coeffs.assign(2, coefficients(1.0, 0.0, source_t2()));
  inst.prob.dirichlet = inst.exact.value;
  inst.h = parametric_h(inst.mp);
  inst.solver.precond = SolverSettings::Precond::LocalSchur;
  return inst;
}

// ---- test case t3: seven ring-sector patches with T-junctions ----

CaseInstance build_t3(const CaseOptions& opt) {
  const Index nb = opt.nbar;
  const double d15 = M_PI / 6.0, d45 = M_PI / 4.0;  // 30 and 45 degrees
  CaseInstance inst;
  inst.name = "t3_ring7";
  inst.p = opt.p;
  inst.nbar = nb;

  struct Spec {
    double r0, r1, a0, a1;
    Index nr, na;
    std::vector<int> interface_sides;
  };
  // five 30-degree outer patches (one sector split radially) over an inner
  // ring of two 45-degree patches
  const std::vector<Spec> specs = {
      {1.5, 1.75, 0.0, d15, nb + 2, nb, {0, 1, 3}},          // 1
      {1.75, 2.0, 0.0, d15, nb, nb, {0, 3}},                 // 2
      {1.5, 2.0, d15, 2 * d15, nb + 1, nb + 1, {0, 2, 3}},   // 3
      {1.5, 1.75, 2 * d15, 3 * d15, nb + 1, nb + 1, {0, 1, 2}},  // 4
      {1.75, 2.0, 2 * d15, 3 * d15, nb, nb, {0, 2}},         // 5
      {1.0, 1.5, 0.0, d45, nb, 3 * nb, {1}},                 // 6
      {1.0, 1.5, d45, 2 * d45, nb + 2, nb, {1}},             // 7
  };
  for (const auto& s : specs) {
    inst.mp.patches.push_back(
        refine_to(make_ring_sector(s.r0, s.r1, s.a0, s.a1), {opt.p, opt.p}, {s.nr, s.na}));
    inst.mp.side_tags.push_back(tags_with_interfaces(2, s.interface_sides));
  }
  auto pair = [&](int mk, int ms, int sk, int ss) {
    inst.mp.interfaces.push_back(InterfacePair{mk, ms, sk, ss, true, 0.0});
  };
  // masters on the inner ring faces and inside the outer sectors
  pair(5, 1, 0, 0);  // r = 1.5
  pair(5, 1, 2, 0);
  pair(6, 1, 2, 0);
  pair(6, 1, 3, 0);
  pair(0, 1, 1, 0);  // r = 1.75
  pair(3, 1, 4, 0);
  pair(2, 2, 0, 3);  // theta = 30 deg
  pair(2, 2, 1, 3);
  pair(2, 3, 3, 2);  // theta = 60 deg
  pair(2, 3, 4, 2);

  inst.exact = exact_t1();
  inst.prob.coeffs.assign(7, coefficients(1.0, 0.0, source_t1()));
  inst.prob.dirichlet = inst.exact.value;
  inst.h = parametric_h(inst.mp);
  inst.solver.precond = SolverSettings::Precond::None;
  return inst;
}

// ---- test case t4: checkerboard diffusion (Kellogg) ----

CaseInstance build_t4(const CaseOptions& opt) {
  const Index nb = opt.nbar;
  if (nb < 2) throw std::invalid_argument("t4_kellogg: nbar must be >= 2");
  const auto kp = kellogg_parameters(opt.gamma);

  CaseInstance inst;
  inst.name = "t4_kellogg";
  inst.p = opt.p;
  inst.nbar = nb;

  auto box = [&](double x0, double x1, double y0, double y1, Index n) {
    Vector lo(2), hi(2);
    lo << x0, y0;
    hi << x1, y1;
    return refine_to(make_box(lo, hi), {opt.p, opt.p}, {n, n});
  };
  const Index fine = 2 * nb + 1, coarse = nb - 1;
  inst.mp.patches.push_back(box(0.0, 1.0, 0.0, 1.0, fine));     // quadrant 1
  inst.mp.patches.push_back(box(-1.0, 0.0, 0.0, 1.0, coarse));  // quadrant 2
  inst.mp.patches.push_back(box(-1.0, 0.0, -1.0, 0.0, fine));   // quadrant 3
  inst.mp.patches.push_back(box(0.0, 1.0, -1.0, 0.0, coarse));  // quadrant 4
  inst.mp.side_tags.push_back(tags_with_interfaces(2, {0, 2}));
  inst.mp.side_tags.push_back(tags_with_interfaces(2, {1, 2}));
  inst.mp.side_tags.push_back(tags_with_interfaces(2, {1, 3}));
  inst.mp.side_tags.push_back(tags_with_interfaces(2, {0, 3}));
  // the coarse quadrants are the master patches
  inst.mp.interfaces.push_back(InterfacePair{1, 1, 0, 0, true, 0.0});  // x = 0, y > 0
  inst.mp.interfaces.push_back(InterfacePair{1, 2, 2, 3, true, 0.0});  // y = 0, x < 0
  inst.mp.interfaces.push_back(InterfacePair{3, 0, 2, 1, true, 0.0});  // x = 0, y < 0
  inst.mp.interfaces.push_back(InterfacePair{3, 3, 0, 2, true, 0.0});  // y = 0, x > 0

  inst.exact = kellogg_exact(opt.gamma, kp);
  const double nu_vals[4] = {kp.R, 1.0, kp.R, 1.0};
  for (int k = 0; k < 4; ++k) inst.prob.coeffs.push_back(coefficients(nu_vals[k], 0.0, nullptr));
  inst.prob.dirichlet = inst.exact.value;
  inst.h = 1.0 / static_cast<double>(coarse);
  inst.solver.precond = SolverSettings::Precond::DirichletNeumann;
  return inst;
}

// ---- test case t5: nine patches, wavy non-watertight interfaces ----

CaseInstance build_t5(const CaseOptions& opt) {
  CaseInstance inst;
  inst.name = "t5_nine_nonwatertight";
  inst.p = opt.p;
  inst.nbar = opt.nbar;

  const double amp = 0.03;
  const Index n_el[9] = {4, 5, 6, 4, 5, 6, 4, 5, 6};
  const double nu_vals[9] = {10.0, 0.005, 1.0, 0.01, 100.0, 0.005, 1.0, 0.005, 0.1};

  auto wave = [amp](double t) { return amp * std::sin(2.0 * M_PI * t); };
  for (int j = 0; j < 3; ++j) {
    for (int i = 0; i < 3; ++i) {
      const int k = i + 3 * j;
      const int deg = (k % 2 == 0) ? opt.p : opt.p + 1;
      const KnotVector kv = make_open_knot_vector(deg, 1);
      auto vertical = [&](int col) {
        return greville_fit_curve(kv, [&, col](double t) {
          Vector q(2);
          q << static_cast<double>(col) + (col == 0 || col == 3 ? 0.0 : wave(t)),
              static_cast<double>(j) + t;
          return q;
        });
      };
      auto horizontal = [&](int row) {
        return greville_fit_curve(kv, [&, row](double t) {
          Vector q(2);
          q << static_cast<double>(i) + t,
              static_cast<double>(row) + (row == 0 || row == 3 ? 0.0 : wave(t));
          return q;
        });
      };
      const DenseMatrix west = vertical(i), east = vertical(i + 1);
      const DenseMatrix south = horizontal(j), north = horizontal(j + 1);
      GeometryMap geo = make_coons_patch(kv, south, north, kv, west, east);
      inst.mp.patches.push_back(refine_to(geo, {deg, deg}, {n_el[k], n_el[k]}));
      std::vector<int> itf;
      if (i > 0) itf.push_back(0);
      if (i < 2) itf.push_back(1);
      if (j > 0) itf.push_back(2);
      if (j < 2) itf.push_back(3);
      inst.mp.side_tags.push_back(tags_with_interfaces(2, itf));
      inst.prob.coeffs.push_back(coefficients(nu_vals[k], 1.0, [](const Vector&) { return 1.0; }));
    }
  }
  // even-index patches are wholly master (checkerboard)
  for (int j = 0; j < 3; ++j) {
    for (int i = 0; i < 2; ++i) {
      const int a = i + 3 * j, b = a + 1;
      if (a % 2 == 0)
        inst.mp.interfaces.push_back(InterfacePair{a, 1, b, 0, false, 0.0});
      else
        inst.mp.interfaces.push_back(InterfacePair{b, 0, a, 1, false, 0.0});
    }
  }
  for (int j = 0; j < 2; ++j) {
    for (int i = 0; i < 3; ++i) {
      const int a = i + 3 * j, b = a + 3;
      if (a % 2 == 0)
        inst.mp.interfaces.push_back(InterfacePair{a, 3, b, 2, false, 0.0});
      else
        inst.mp.interfaces.push_back(InterfacePair{b, 2, a, 3, false, 0.0});
    }
  }
  inst.prob.dirichlet = [](const Vector&) { return 0.0; };
  inst.h = parametric_h(inst.mp);
  inst.solver.precond = SolverSettings::Precond::DirichletNeumann;
  return inst;
}

// ---- test case t6: 3D ring, four patches ----

CaseInstance build_t6(const CaseOptions& opt) {
  const Index nb = opt.nbar;
  CaseInstance inst;
  inst.name = "t6_3d_smoke";
  inst.p = opt.p;
  inst.nbar = nb;

  auto sector3d = [&](double r0, double r1, double a0, double a1, double z0, double z1, Index n) {
    GeometryMap surf = make_ring_sector(r0, r1, a0, a1);
    return refine_to(make_extruded(surf, z0, z1), {opt.p, opt.p, opt.p}, {n, n, n});
  };
  inst.mp.patches.push_back(sector3d(0.5, 1.0, 0.0, M_PI / 2, 0.0, 1.0, nb));          // 1
  inst.mp.patches.push_back(sector3d(1.0, 1.5, 0.0, M_PI / 2, 0.0, 0.5, nb + 1));      // 2
  inst.mp.patches.push_back(sector3d(1.0, 1.5, 0.0, M_PI / 4, 0.5, 1.0, nb + 1));      // 3
  inst.mp.patches.push_back(sector3d(1.0, 1.5, M_PI / 4, M_PI / 2, 0.5, 1.0, nb));     // 4
  inst.mp.side_tags.push_back(tags_with_interfaces(3, {1}));           // r = 1 master face
  inst.mp.side_tags.push_back(tags_with_interfaces(3, {0, 5}));        // slave r, slave z-top
  inst.mp.side_tags.push_back(tags_with_interfaces(3, {0, 3, 4}));     // slave r, master theta, master z
  inst.mp.side_tags.push_back(tags_with_interfaces(3, {0, 2, 4}));     // slave r, slave theta, master z
  auto pair = [&](int mk, int ms, int sk, int ss) {
    inst.mp.interfaces.push_back(InterfacePair{mk, ms, sk, ss, true, 0.0});
  };
  pair(0, 1, 1, 0);
  pair(0, 1, 2, 0);
  pair(0, 1, 3, 0);
  pair(2, 3, 3, 2);  // theta = pi/4
  pair(2, 4, 1, 5);  // z = 0.5
  pair(3, 4, 1, 5);

  inst.exact = exact_t6();
  inst.prob.coeffs.assign(4, coefficients(1.0, 1.0, source_t6()));
  inst.prob.dirichlet = inst.exact.value;
  inst.h = parametric_h(inst.mp);
  inst.solver.precond = SolverSettings::Precond::None;
  return inst;
}

// ---- test case t7: 3D re-entrant corner (L-shaped section) ----

CaseInstance build_t7(const CaseOptions& opt) {
  const Index nb = opt.nbar;
  CaseInstance inst;
  inst.name = "t7_reentrant_smoke";
  inst.p = opt.p;
  inst.nbar = nb;

  auto block = [&](double x0, double x1, double y0, double y1, Index nx, Index ny) {
    Vector lo(2), hi(2);
    lo << x0, y0;
    hi << x1, y1;
    return refine_to(make_extruded(make_box(lo, hi), 0.0, 1.0), {opt.p, opt.p, opt.p}, {nx, ny, nb});
  };
  inst.mp.patches.push_back(block(-0.5, 0.0, 0.0, 1.5, nb, 3 * nb));    // left strip
  inst.mp.patches.push_back(block(0.0, 1.5, -0.5, 0.0, 3 * nb, nb));    // bottom strip
  inst.mp.patches.push_back(block(0.0, 0.75, 0.0, 1.5, nb, nb + 2));    // inner block
  inst.mp.patches.push_back(block(0.75, 1.5, 0.0, 1.5, nb, nb + 1));    // outer block
  inst.mp.side_tags.push_back(tags_with_interfaces(3, {1}));
  inst.mp.side_tags.push_back(tags_with_interfaces(3, {3}));
  inst.mp.side_tags.push_back(tags_with_interfaces(3, {0, 1, 2}));
  inst.mp.side_tags.push_back(tags_with_interfaces(3, {0, 2}));
  auto pair = [&](int mk, int ms, int sk, int ss, bool) {
    inst.mp.interfaces.push_back(InterfacePair{mk, ms, sk, ss, true, 0.0});
  };
  pair(0, 1, 2, 0, true);  // x = 0
  pair(1, 3, 2, 2, true);  // y = 0 under the inner block
  pair(1, 3, 3, 2, true);  // y = 0 under the outer block
  pair(3, 0, 2, 1, true);  // x = 0.75

  inst.exact = exact_t7(opt.beta);
  inst.prob.coeffs.assign(4, coefficients(1.0, 0.0, source_t7(opt.beta)));
  inst.prob.dirichlet = inst.exact.value;
  inst.h = parametric_h(inst.mp);
  inst.solver.precond = SolverSettings::Precond::None;
  return inst;
}

}  // namespace

std::vector<std::string> builtin_case_names() {
  return {"t1_balanced",        "t1_master_refined", "t1_slave_refined",
          "t2_nonwatertight",   "t3_ring7",          "t4_kellogg",
          "t5_nine_nonwatertight", "t6_3d_smoke",     "t7_reentrant_smoke"};
}

bool is_builtin_case(const std::string& name) {
  const auto names = builtin_case_names();
  return std::find(names.begin(), names.end(), name) != names.end();
}

CaseInstance build_case(const std::string& name, const CaseOptions& options) {
  if (name == "t1_balanced") return build_t1(name, options, "balanced");
  if (name == "t1_master_refined") return build_t1(name, options, "master_refined");
  if (name == "t1_slave_refined") return build_t1(name, options, "slave_refined");
  if (name == "t2_nonwatertight") return build_t2(options);
  if (name == "t3_ring7") return build_t3(options);
  if (name == "t4_kellogg") return build_t4(options);
  if (name == "t5_nine_nonwatertight") return build_t5(options);
  if (name == "t6_3d_smoke") return build_t6(options);
  if (name == "t7_reentrant_smoke") return build_t7(options);
  throw std::invalid_argument("unknown case: " + name);
}

double measure_d_gamma(const Multipatch& mp) {
  double d = 0.0;
  for (const auto& itf : mp.interfaces) {
    if (itf.watertight) continue;
    const auto mf = extract_face(mp.patches[static_cast<std::size_t>(itf.master_patch)],
                                 Side::from_id(itf.master_side));
    const auto sf = extract_face(mp.patches[static_cast<std::size_t>(itf.slave_patch)],
                                 Side::from_id(itf.slave_side));
    d = std::max(d, measure_face_gap(mf.trace, sf.trace));
    d = std::max(d, measure_face_gap(sf.trace, mf.trace));
  }
  return d;
}

RunResult run_case(const CaseInstance& instance, const SolverSettings& settings, bool measure_gap) {
  RunResult out;
  out.report.case_name = instance.name;
  out.report.p = instance.p;
  out.report.nbar = instance.nbar;
  out.report.h = instance.h;
  const auto t0 = std::chrono::steady_clock::now();
  try {
    const SolveOutcome sol = solve_internodes(instance.mp, instance.prob, settings);
    out.u = sol.u;
    out.report.dofs = sol.total_dofs;
    out.report.iterations = sol.report.iterations;
    out.report.converged = sol.report.converged;
    if (instance.exact && !out.u.empty())
      out.report.err_broken = broken_error(instance.mp, out.u, instance.exact);
    if (measure_gap) out.report.d_gamma = measure_d_gamma(instance.mp);
  } catch (const std::exception& err) {
    out.report.note = err.what();
    out.report.converged = false;
  }
  out.report.seconds =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  return out;
}

RateFit fit_rate(const std::vector<std::pair<double, double>>& h_err) {
  std::vector<std::pair<double, double>> pts;
  for (const auto& [h, e] : h_err)
    if (std::isfinite(e) && e > 0.0 && h > 0.0) pts.emplace_back(h, e);
  RateFit fit;
  if (pts.size() < 2) return fit;
  std::sort(pts.begin(), pts.end());  // ascending h; finest first
  const std::size_t keep = (pts.size() + 1) / 2;
  pts.resize(std::max<std::size_t>(2, keep));
  const int n = static_cast<int>(pts.size());
  double sx = 0, sy = 0, sxx = 0, sxy = 0;
  for (const auto& [h, e] : pts) {
    const double x = std::log10(h), y = std::log10(e);
    sx += x; sy += y; sxx += x * x; sxy += x * y;
  }
  const double denom = n * sxx - sx * sx;
  fit.slope = (n * sxy - sx * sy) / denom;
  fit.points_used = n;
  if (n > 2) {
    const double intercept = (sy - fit.slope * sx) / n;
    double ss = 0.0;
    for (const auto& [h, e] : pts) {
      const double r = std::log10(e) - (intercept + fit.slope * std::log10(h));
      ss += r * r;
    }
    const double se = std::sqrt(ss / (n - 2) / (sxx - sx * sx / n));
    fit.ci95 = 1.96 * se;
  }
  return fit;
}

SweepResult run_sweep(const std::string& case_name, const CaseOptions& base,
                      const std::vector<int>& degrees, const std::vector<Index>& nbars,
                      const std::optional<SolverSettings>& settings) {
  SweepResult result;
  for (int p : degrees) {
    std::vector<std::pair<double, double>> h_err;
    for (Index nb : nbars) {
      CaseOptions opt = base;
      opt.p = p;
      opt.nbar = nb;
      RunReport row;
      try {
        const CaseInstance inst = build_case(case_name, opt);
        const SolverSettings s = settings ? *settings : inst.solver;
        auto run = run_case(inst, s);
        row = run.report;
      } catch (const std::exception& err) {
        row.case_name = case_name;
        row.p = p;
        row.nbar = nb;
        row.note = std::string("build: ") + err.what();
      }
      if (row.converged) h_err.emplace_back(row.h, row.err_broken);
      result.rows.push_back(std::move(row));
    }
    result.rates[p] = fit_rate(h_err);
  }
  return result;
}

std::string reports_to_csv(const std::vector<RunReport>& rows, bool include_timing) {
  std::string out = "case,p,nbar,h,dofs,err_broken,its,converged,d_gamma,seconds\n";
  char buf[512];
  for (const auto& r : rows) {
    std::snprintf(buf, sizeof(buf), "%s,%d,%lld,%.17g,%lld,%.17g,%d,%d,%.17g,%.6g\n",
                  r.case_name.c_str(), r.p, static_cast<long long>(r.nbar), r.h,
                  static_cast<long long>(r.dofs), r.err_broken, r.iterations,
                  r.converged ? 1 : 0, r.d_gamma, include_timing ? r.seconds : 0.0);
    out += buf;
  }
  return out;
}

}  // namespace iga
