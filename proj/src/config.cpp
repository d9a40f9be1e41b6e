#include "iga/config.hpp"

#include <nlohmann/json.hpp>

#include <cmath>
#include <cstdio>
#include <stdexcept>

namespace iga {

namespace {

std::string kind_name(BoundaryKind k) {
  switch (k) {
    case BoundaryKind::Dirichlet: return "dirichlet";
    case BoundaryKind::Neumann: return "neumann";
    case BoundaryKind::Interface: return "interface";
  }
  return "dirichlet";
}

BoundaryKind kind_from(const std::string& s) {
  if (s == "dirichlet") return BoundaryKind::Dirichlet;
  if (s == "neumann") return BoundaryKind::Neumann;
  if (s == "interface") return BoundaryKind::Interface;
  throw std::invalid_argument("unknown boundary tag: " + s);
}

}  // namespace

Json serialize_multipatch(const Multipatch& mp) {
  Json out;
  out["patches"] = Json::array();
  for (int k = 0; k < mp.num_patches(); ++k) {
    const auto& geo = mp.patches[static_cast<std::size_t>(k)];
    Json jp;
    Json degrees = Json::array(), knots = Json::array();
    for (int d = 0; d < geo.dim(); ++d) {
      degrees.push_back(geo.space.basis.direction(d).degree());
      knots.push_back(geo.space.basis.direction(d).knots());
    }
    jp["degrees"] = degrees;
    jp["knots"] = knots;
    jp["weights"] = std::vector<double>(geo.space.weights.data(),
                                        geo.space.weights.data() + geo.space.weights.size());
    Json pts = Json::array();
    for (Index i = 0; i < geo.control_points.rows(); ++i) {
      Json row = Json::array();
      for (Index c = 0; c < geo.control_points.cols(); ++c) row.push_back(geo.control_points(i, c));
      pts.push_back(row);
    }
    jp["control_points"] = pts;
    Json tags = Json::array();
    for (const auto t : mp.side_tags[static_cast<std::size_t>(k)]) tags.push_back(kind_name(t));
    jp["boundary"] = tags;
    out["patches"].push_back(jp);
  }
  out["interfaces"] = Json::array();
  for (const auto& itf : mp.interfaces) {
    Json ji;
    ji["master"] = {itf.master_patch, itf.master_side};
    ji["slave"] = {itf.slave_patch, itf.slave_side};
    ji["watertight"] = itf.watertight;
    if (itf.rbf_radius > 0.0) ji["rbf_radius"] = itf.rbf_radius;
    out["interfaces"].push_back(ji);
  }
  return out;
}

Multipatch parse_multipatch(const Json& j) {
  Multipatch mp;
  for (const auto& jp : j.at("patches")) {
    const auto degrees = jp.at("degrees").get<std::vector<int>>();
    const auto knots = jp.at("knots").get<std::vector<std::vector<double>>>();
    if (degrees.size() != knots.size()) throw std::invalid_argument("degrees/knots size mismatch");
    std::vector<KnotVector> dirs;
    for (std::size_t d = 0; d < degrees.size(); ++d) dirs.emplace_back(degrees[d], knots[d]);
    GeometryMap geo;
    geo.space.basis = TensorBasis{dirs};
    const auto w = jp.at("weights").get<std::vector<double>>();
    if (static_cast<Index>(w.size()) != geo.space.basis.total_basis())
      throw std::invalid_argument("weight count mismatch");
    geo.space.weights = Eigen::Map<const Vector>(w.data(), static_cast<Index>(w.size()));
    const auto pts = jp.at("control_points").get<std::vector<std::vector<double>>>();
    if (static_cast<Index>(pts.size()) != geo.space.basis.total_basis())
      throw std::invalid_argument("control point count mismatch");
    geo.control_points.resize(static_cast<Index>(pts.size()), static_cast<Index>(pts.front().size()));
    for (std::size_t i = 0; i < pts.size(); ++i)
      for (std::size_t c = 0; c < pts[i].size(); ++c)
        geo.control_points(static_cast<Index>(i), static_cast<Index>(c)) = pts[i][c];
    mp.patches.push_back(std::move(geo));
    std::vector<BoundaryKind> tags;
    for (const auto& t : jp.at("boundary")) tags.push_back(kind_from(t.get<std::string>()));
    if (static_cast<int>(tags.size()) != 2 * mp.patches.back().dim())
      throw std::invalid_argument("boundary tag count mismatch");
    mp.side_tags.push_back(std::move(tags));
  }
  for (const auto& ji : j.at("interfaces")) {
    InterfacePair itf;
    itf.master_patch = ji.at("master").at(0).get<int>();
    itf.master_side = ji.at("master").at(1).get<int>();
    itf.slave_patch = ji.at("slave").at(0).get<int>();
    itf.slave_side = ji.at("slave").at(1).get<int>();
    itf.watertight = ji.value("watertight", true);
    itf.rbf_radius = ji.value("rbf_radius", 0.0);
    mp.interfaces.push_back(itf);
  }
  mp.validate();
  return mp;
}

namespace {

struct NamedExact {
  ExactSolution exact;
  ScalarField source;
};

NamedExact named_exact(const std::string& name, const Json& problem) {
  NamedExact out;
  if (name == "none" || name.empty()) return out;
  if (name == "sinsin2d") {
    out.exact.value = [](const Vector& x) {
      return std::sin(1.5 * M_PI * x[0]) * std::sin(3.0 * M_PI * x[1]);
    };
    out.exact.gradient = [](const Vector& x) {
      Vector g(2);
      g[0] = 1.5 * M_PI * std::cos(1.5 * M_PI * x[0]) * std::sin(3.0 * M_PI * x[1]);
      g[1] = 3.0 * M_PI * std::sin(1.5 * M_PI * x[0]) * std::cos(3.0 * M_PI * x[1]);
      return g;
    };
    out.source = [](const Vector& x) {
      return 11.25 * M_PI * M_PI * std::sin(1.5 * M_PI * x[0]) * std::sin(3.0 * M_PI * x[1]);
    };
    return out;
  }
  if (name == "linear2d") {
    out.exact.value = [](const Vector& x) { return 1.0 + 2.0 * x[0] - x[1]; };
    out.exact.gradient = [](const Vector&) {
      Vector g(2);
      g << 2.0, -1.0;
      return g;
    };
    out.source = [](const Vector&) { return 0.0; };
    return out;
  }
  if (name == "kellogg") {
    const double gamma = problem.value("gamma", 0.6);
    const auto kp = kellogg_parameters(gamma);
    out.exact = kellogg_exact(gamma, kp);
    out.source = [](const Vector&) { return 0.0; };
    return out;
  }
  throw std::invalid_argument("unknown exact-solution selector: " + name);
}

}  // namespace

std::vector<std::string> exact_solution_names() { return {"none", "sinsin2d", "linear2d", "kellogg"}; }

ParsedConfig load_config(const Json& j) {
  ParsedConfig out;
  CaseOptions opt;
  opt.p = j.value("p", 2);
  opt.nbar = j.value("nbar", Index{8});
  opt.variant = j.value("variant", std::string{});
  opt.gamma = j.value("gamma", 0.6);
  opt.beta = j.value("beta", 2.0 / 3.0);

  if (j.contains("case")) {
    const std::string name = j.at("case").get<std::string>();
    if (!is_builtin_case(name)) throw std::invalid_argument("unknown case: " + name);
    out.instance = build_case(name, opt);
  } else if (j.contains("geometry")) {
    out.instance.name = j.value("name", std::string{"custom"});
    out.instance.mp = parse_multipatch(j.at("geometry"));
    out.instance.p = 0;
    for (const auto& geo : out.instance.mp.patches)
      for (int d = 0; d < geo.dim(); ++d)
        out.instance.p = std::max(out.instance.p, geo.space.basis.direction(d).degree());
    out.instance.nbar = opt.nbar;
    const Json problem = j.value("problem", Json::object());
    const auto named = named_exact(problem.value("exact", std::string{"none"}), problem);
    out.instance.exact = named.exact;
    std::vector<double> nu(static_cast<std::size_t>(out.instance.mp.num_patches()), 1.0);
    if (problem.contains("nu")) {
      if (problem.at("nu").is_array())
        nu = problem.at("nu").get<std::vector<double>>();
      else
        nu.assign(nu.size(), problem.at("nu").get<double>());
    }
    if (nu.size() != static_cast<std::size_t>(out.instance.mp.num_patches()))
      throw std::invalid_argument("problem.nu: one value per patch required");
    const double alpha = problem.value("alpha", 0.0);
    for (double nuk : nu) {
      PatchCoefficients c;
      c.nu = [nuk](const Vector&) { return nuk; };
      c.alpha = [alpha](const Vector&) { return alpha; };
      if (named.source) c.f = named.source;
      out.instance.prob.coeffs.push_back(std::move(c));
    }
    if (out.instance.exact)
      out.instance.prob.dirichlet = out.instance.exact.value;
    else
      out.instance.prob.dirichlet = [](const Vector&) { return 0.0; };
    double h = 0.0;
    for (const auto& geo : out.instance.mp.patches)
      for (int d = 0; d < geo.dim(); ++d)
        h = std::max(h, 1.0 / static_cast<double>(geo.space.basis.direction(d).num_spans()));
    out.instance.h = h;
    out.instance.solver = SolverSettings{};
    out.instance.solver.precond = SolverSettings::Precond::None;
  } else {
    throw std::invalid_argument("config requires either \"case\" or \"geometry\"");
  }

  out.solver = out.instance.solver;
  if (j.contains("solver")) {
    out.solver_overridden = true;
    const Json& js = j.at("solver");
    const std::string method = js.value("method", std::string{"bicgstab"});
    if (method == "bicgstab")
      out.solver.method = SolverSettings::Method::BiCGStab;
    else if (method == "gmres")
      out.solver.method = SolverSettings::Method::Gmres;
    else if (method == "monolithic")
      out.solver.method = SolverSettings::Method::Monolithic;
    else
      throw std::invalid_argument("unknown solver method: " + method);
    out.solver.tol = js.value("tol", out.solver.tol);
    out.solver.max_it = js.value("max_it", out.solver.max_it);
    if (js.contains("precond")) {
      const std::string pc = js.at("precond").get<std::string>();
      if (pc == "none")
        out.solver.precond = SolverSettings::Precond::None;
      else if (pc == "local_schur")
        out.solver.precond = SolverSettings::Precond::LocalSchur;
      else if (pc == "dn")
        out.solver.precond = SolverSettings::Precond::DirichletNeumann;
      else
        throw std::invalid_argument("unknown preconditioner: " + pc);
    }
  }
  if (j.contains("output")) {
    const Json& jo = j.at("output");
    out.output_dir = jo.value("dir", out.output_dir);
    out.solution_grid = jo.value("solution_grid", false);
    out.grid_factor = jo.value("grid_factor", 2);
  }
  return out;
}

Json dump_case(const std::string& name, const CaseOptions& options) {
  const CaseInstance inst = build_case(name, options);
  Json j;
  j["case"] = name;
  j["p"] = options.p;
  j["nbar"] = options.nbar;
  if (!options.variant.empty()) j["variant"] = options.variant;
  if (name == "t4_kellogg") j["gamma"] = options.gamma;
  if (name == "t7_reentrant_smoke") j["beta"] = options.beta;
  Json solver;
  solver["method"] = inst.solver.method == SolverSettings::Method::Gmres ? "gmres" : "bicgstab";
  solver["tol"] = inst.solver.tol;
  solver["max_it"] = inst.solver.max_it;
  solver["precond"] = inst.solver.precond == SolverSettings::Precond::None
                          ? "none"
                          : (inst.solver.precond == SolverSettings::Precond::LocalSchur ? "local_schur"
                                                                                        : "dn");
  j["solver"] = solver;
  j["geometry"] = serialize_multipatch(inst.mp);
  return j;
}

std::string solution_grid_csv(const Multipatch& mp, const std::vector<Vector>& u, int factor) {
  std::string out;
  const int d = mp.dim();
  out = d == 3 ? "patch,x,y,z,u\n" : "patch,x,y,u\n";
  char buf[256];
  for (int k = 0; k < mp.num_patches(); ++k) {
    const auto& geo = mp.patches[static_cast<std::size_t>(k)];
    std::array<Index, 3> counts{1, 1, 1};
    for (int dir = 0; dir < d; ++dir)
      counts[static_cast<std::size_t>(dir)] = factor * geo.space.basis.num_basis(dir);
    Index total = 1;
    for (int dir = 0; dir < d; ++dir) total *= counts[static_cast<std::size_t>(dir)];
    Vector xhat(d);
    for (Index q = 0; q < total; ++q) {
      Index r = q;
      for (int dir = 0; dir < d; ++dir) {
        const Index i = r % counts[static_cast<std::size_t>(dir)];
        r /= counts[static_cast<std::size_t>(dir)];
        xhat[dir] = static_cast<double>(i) / static_cast<double>(counts[static_cast<std::size_t>(dir)] - 1);
      }
      const FieldSample s = sample_field(geo, u[static_cast<std::size_t>(k)], xhat);
      if (d == 3)
        std::snprintf(buf, sizeof(buf), "%d,%.17g,%.17g,%.17g,%.17g\n", k, s.x[0], s.x[1], s.x[2],
                      s.value);
      else
        std::snprintf(buf, sizeof(buf), "%d,%.17g,%.17g,%.17g\n", k, s.x[0], s.x[1], s.value);
      out += buf;
    }
  }
  return out;
}

}  // namespace iga
