#include "iga/cases.hpp"
#include "iga/config.hpp"
#include "iga/internodes.hpp"

#include <CLI11.hpp>
#include <nlohmann/json.hpp>

#include <filesystem>
#include <fstream>
#include <iostream>

namespace {

constexpr int kExitOk = 0;
constexpr int kExitSolver = 2;
constexpr int kExitConfig = 3;
constexpr const char* kVersion = "internodes-iga 1.0.0";

struct CommonFlags {
  std::string solver;
  std::string precond;
  double tol = 0.0;
  int max_it = 0;
  std::string out_dir = "out";
  bool no_timing = false;
  bool grid = false;
  bool full = false;
  bool dump_matrices = false;
};

void add_common(CLI::App* cmd, CommonFlags& flags) {
  cmd->add_option("--solver", flags.solver, "bicgstab | gmres | monolithic");
  cmd->add_option("--precond", flags.precond, "none | local_schur | dn");
  cmd->add_option("--tol", flags.tol, "relative residual tolerance");
  cmd->add_option("--max-it", flags.max_it, "iteration cap");
  cmd->add_option("--out", flags.out_dir, "output directory");
  cmd->add_flag("--no-timing", flags.no_timing, "write zero seconds for reproducible reports");
  cmd->add_flag("--grid", flags.grid, "also write solution_grid.csv");
  cmd->add_flag("--full", flags.full, "allow 3D cases beyond the smoke resolutions");
  cmd->add_flag("--dump-matrices", flags.dump_matrices,
                "write stiffness and interface operators in coordinate format");
}

iga::Json config_from_target(const std::string& target, int p, long long nbar,
                             const std::string& variant, double gamma, double beta) {
  iga::Json j;
  if (std::filesystem::exists(target)) {
    std::ifstream in(target);
    if (!in) throw std::invalid_argument("cannot open config file: " + target);
    in >> j;
  } else if (iga::is_builtin_case(target)) {
    j["case"] = target;
  } else {
    throw std::invalid_argument("no such config file or builtin case: " + target);
  }
  if (p > 0) j["p"] = p;
  if (nbar > 0) j["nbar"] = nbar;
  if (!variant.empty()) j["variant"] = variant;
  if (gamma > 0) j["gamma"] = gamma;
  if (beta > 0) j["beta"] = beta;
  return j;
}

void apply_flags(iga::SolverSettings& settings, const CommonFlags& flags) {
  if (!flags.solver.empty()) {
    if (flags.solver == "bicgstab")
      settings.method = iga::SolverSettings::Method::BiCGStab;
    else if (flags.solver == "gmres")
      settings.method = iga::SolverSettings::Method::Gmres;
    else if (flags.solver == "monolithic")
      settings.method = iga::SolverSettings::Method::Monolithic;
    else
      throw std::invalid_argument("unknown solver: " + flags.solver);
  }
  if (!flags.precond.empty()) {
    if (flags.precond == "none")
      settings.precond = iga::SolverSettings::Precond::None;
    else if (flags.precond == "local_schur")
      settings.precond = iga::SolverSettings::Precond::LocalSchur;
    else if (flags.precond == "dn")
      settings.precond = iga::SolverSettings::Precond::DirichletNeumann;
    else
      throw std::invalid_argument("unknown preconditioner: " + flags.precond);
  }
  if (flags.tol > 0) settings.tol = flags.tol;
  if (flags.max_it > 0) settings.max_it = flags.max_it;
}

void guard_3d_resolution(const iga::Json& j, bool full) {
  if (!j.contains("case")) return;
  const std::string name = j.at("case").get<std::string>();
  if (name != "t6_3d_smoke" && name != "t7_reentrant_smoke") return;
  const long long nbar = j.value("nbar", 2);
  if (nbar > 3 && !full)
    throw std::invalid_argument(
        "3D cases run at nbar <= 3 by default; pass --full for larger sweeps (expect minutes to "
        "hours)");
}

void write_outputs(const std::string& dir, const std::vector<iga::RunReport>& rows,
                   const iga::Json& config_echo, const std::string& extra_meta, bool timing) {
  std::filesystem::create_directories(dir);
  {
    std::ofstream csv(dir + "/report.csv");
    csv << iga::reports_to_csv(rows, timing);
  }
  std::ofstream meta(dir + "/meta.txt");
  meta << kVersion << "\n\nconfig:\n" << config_echo.dump(2) << "\n";
  for (const auto& r : rows) {
    meta << "\nrun " << r.case_name << " p=" << r.p << " nbar=" << r.nbar
         << ": d_gamma=" << r.d_gamma << " its=" << r.iterations
         << " converged=" << (r.converged ? 1 : 0);
    if (!r.note.empty()) meta << " note=" << r.note;
  }
  meta << "\n" << extra_meta;
}

void dump_operator_matrices(const std::string& dir, const iga::Multipatch& mp,
                            const iga::ProblemData& prob) {
  std::filesystem::create_directories(dir);
  iga::SchurSystem sys(mp, prob);
  for (int k = 0; k < mp.num_patches(); ++k) {
    std::ofstream out(dir + "/A_patch" + std::to_string(k) + ".txt");
    iga::write_coordinate_format(out, sys.patch(k).system.stiffness);
  }
  for (const auto& itf : mp.interfaces) {
    const iga::FaceKey m{itf.master_patch, itf.master_side};
    const iga::FaceKey sl{itf.slave_patch, itf.slave_side};
    const std::string tag = std::to_string(m.first) + "_" + std::to_string(m.second) + "__" +
                            std::to_string(sl.first) + "_" + std::to_string(sl.second);
    {
      std::ofstream out(dir + "/P_slave_from_master_" + tag + ".txt");
      iga::write_coordinate_format(out, sys.operators().interpolation(sl, m));
    }
    {
      std::ofstream out(dir + "/P_master_from_slave_" + tag + ".txt");
      iga::write_coordinate_format(out, sys.operators().interpolation(m, sl));
    }
    {
      std::ofstream out(dir + "/M_master_" + tag + ".txt");
      iga::write_coordinate_format(out, sys.operators().mass(m));
    }
    {
      std::ofstream out(dir + "/M_slave_" + tag + ".txt");
      iga::write_coordinate_format(out, sys.operators().mass(sl));
    }
    {
      // Q_master<-slave = M_master P M_slave^{-1}
      const iga::DenseMatrix& pms = sys.operators().interpolation(m, sl);
      const iga::DenseMatrix q = sys.operators().mass(m) *
                                 sys.operators().mass(sl).ldlt().solve(pms.transpose()).transpose();
      std::ofstream out(dir + "/Q_master_from_slave_" + tag + ".txt");
      iga::write_coordinate_format(out, q);
    }
  }
}

int cmd_run(const iga::Json& j, const CommonFlags& flags) {
  guard_3d_resolution(j, flags.full);
  iga::ParsedConfig cfg = iga::load_config(j);
  apply_flags(cfg.solver, flags);
  const iga::RunResult result = iga::run_case(cfg.instance, cfg.solver);
  std::cout << iga::reports_to_csv({result.report}, !flags.no_timing);
  if (!result.report.note.empty()) std::cerr << "note: " << result.report.note << "\n";
  write_outputs(flags.out_dir, {result.report}, j, "", !flags.no_timing);
  if (flags.grid && !result.u.empty()) {
    std::ofstream gridfile(flags.out_dir + "/solution_grid.csv");
    gridfile << iga::solution_grid_csv(cfg.instance.mp, result.u, cfg.grid_factor);
  }
  if (flags.dump_matrices)
    dump_operator_matrices(flags.out_dir + "/matrices", cfg.instance.mp, cfg.instance.prob);
  return result.report.converged ? kExitOk : kExitSolver;
}

int cmd_sweep(const iga::Json& j, const CommonFlags& flags, const std::vector<int>& degrees,
              const std::vector<long long>& nbars) {
  if (!j.contains("case"))
    throw std::invalid_argument("sweep requires a builtin case (explicit geometries are fixed)");
  if (degrees.empty() || nbars.empty())
    throw std::invalid_argument("sweep requires --p and --nbar lists");
  for (long long nb : nbars) {
    iga::Json probe = j;
    probe["nbar"] = nb;
    guard_3d_resolution(probe, flags.full);
  }
  iga::CaseOptions base;
  base.p = j.value("p", 2);
  base.nbar = j.value("nbar", 8);
  base.variant = j.value("variant", std::string{});
  base.gamma = j.value("gamma", 0.6);
  base.beta = j.value("beta", 2.0 / 3.0);

  std::optional<iga::SolverSettings> settings;
  {
    iga::ParsedConfig cfg = iga::load_config(j);
    apply_flags(cfg.solver, flags);
    const bool changed = cfg.solver_overridden || !flags.solver.empty() || !flags.precond.empty() ||
                         flags.tol > 0 || flags.max_it > 0;
    if (changed) settings = cfg.solver;
  }

  std::vector<iga::Index> nbar_idx(nbars.begin(), nbars.end());
  const iga::SweepResult sweep =
      iga::run_sweep(j.at("case").get<std::string>(), base, degrees, nbar_idx, settings);
  std::cout << iga::reports_to_csv(sweep.rows, !flags.no_timing);
  std::string rates;
  for (const auto& [p, fit] : sweep.rates) {
    char buf[160];
    std::snprintf(buf, sizeof(buf), "rate p=%d: slope=%.4f ci95=%.4f points=%d\n", p, fit.slope,
                  fit.ci95, fit.points_used);
    rates += buf;
  }
  std::cout << rates;
  write_outputs(flags.out_dir, sweep.rows, j, rates, !flags.no_timing);
  for (const auto& r : sweep.rows)
    if (!r.converged) return kExitSolver;
  return kExitOk;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"INTERNODES solver for non-conforming isogeometric multipatch problems"};
  app.set_version_flag("--version", kVersion);
  app.require_subcommand(1);

  std::string target, variant;
  int p = 0;
  long long nbar = 0;
  double gamma = 0.0, beta = 0.0;
  CommonFlags flags;
  std::vector<int> sweep_p;
  std::vector<long long> sweep_nbar;

  CLI::App* run = app.add_subcommand("run", "run one configuration");
  run->add_option("config", target, "config file or builtin case name")->required();
  run->add_option("--p", p, "polynomial degree override");
  run->add_option("--nbar", nbar, "refinement parameter override");
  run->add_option("--variant", variant, "case variant (t2: i, i53, i65, ii)");
  run->add_option("--gamma", gamma, "Kellogg exponent");
  run->add_option("--beta", beta, "re-entrant corner exponent");
  add_common(run, flags);

  CLI::App* sweep = app.add_subcommand("sweep", "convergence sweep over p and nbar");
  sweep->add_option("config", target, "config file or builtin case name")->required();
  sweep->add_option("--p", sweep_p, "degrees, e.g. --p 2,3,4,5")->delimiter(',');
  sweep->add_option("--nbar", sweep_nbar, "refinements, e.g. --nbar 8,16,24,32")->delimiter(',');
  sweep->add_option("--variant", variant, "case variant");
  sweep->add_option("--gamma", gamma, "Kellogg exponent");
  sweep->add_option("--beta", beta, "re-entrant corner exponent");
  add_common(sweep, flags);

  CLI::App* list = app.add_subcommand("list-cases", "list builtin cases");

  CLI::App* dump = app.add_subcommand("dump-case", "print the explicit config of a builtin case");
  std::string dump_name;
  dump->add_option("name", dump_name, "builtin case name")->required();
  dump->add_option("--p", p, "polynomial degree");
  dump->add_option("--nbar", nbar, "refinement parameter");
  dump->add_option("--variant", variant, "case variant");
  dump->add_option("--gamma", gamma, "Kellogg exponent");
  dump->add_option("--beta", beta, "re-entrant corner exponent");

  CLI11_PARSE(app, argc, argv);

  try {
    if (list->parsed()) {
      for (const auto& name : iga::builtin_case_names()) std::cout << name << "\n";
      return kExitOk;
    }
    if (dump->parsed()) {
      iga::CaseOptions opt;
      if (p > 0) opt.p = p;
      if (nbar > 0) opt.nbar = nbar;
      opt.variant = variant;
      if (gamma > 0) opt.gamma = gamma;
      if (beta > 0) opt.beta = beta;
      if (!iga::is_builtin_case(dump_name)) throw std::invalid_argument("unknown case: " + dump_name);
      std::cout << iga::dump_case(dump_name, opt).dump(2) << "\n";
      return kExitOk;
    }
    const iga::Json j = config_from_target(target, p, nbar, variant, gamma, beta);
    if (run->parsed()) return cmd_run(j, flags);
    return cmd_sweep(j, flags, sweep_p, sweep_nbar);
  } catch (const std::invalid_argument& err) {
    std::cerr << "config error: " << err.what() << "\n";
    return kExitConfig;
  } catch (const iga::Json::exception& err) {
    std::cerr << "config error: " << err.what() << "\n";
    return kExitConfig;
  } catch (const std::exception& err) {
    std::cerr << "error: " << err.what() << "\n";
    return kExitSolver;
  }
}
