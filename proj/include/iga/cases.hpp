#ifndef IGA_CASES_HPP
#define IGA_CASES_HPP

#include "iga/internodes.hpp"

#include <optional>
#include <string>

namespace iga {

struct ExactSolution {
  ScalarField value;
  VectorField gradient;

  explicit operator bool() const { return static_cast<bool>(value); }
};

/// Relative broken H1 error: sqrt( sum_k |u_h - u|^2_{H1(k)} / |u|^2_{H1(k)} ).
/// Quadrature uses twice the assembly points per direction.
double broken_error(const Multipatch& mp, const std::vector<Vector>& u, const ExactSolution& exact);

/// Parameters of the checkerboard-diffusion corner singularity: the diffusion
/// contrast R and the angles rho, sigma solving the tangent/cotangent system
/// for a given exponent gamma in (0,2), gamma != 1.
struct KelloggParameters {
  double R = 0.0;
  double rho = 0.0;
  double sigma = 0.0;
};

KelloggParameters kellogg_parameters(double gamma);

/// u(r,theta) = r^gamma mu(theta) with the piecewise-cosine angular profile;
/// continuous, 2*pi-periodic, with conormal flux matching across quadrants.
ExactSolution kellogg_exact(double gamma, const KelloggParameters& params);
double kellogg_mu(double theta, double gamma, const KelloggParameters& params);

struct CaseOptions {
  int p = 2;
  Index nbar = 8;
  std::string variant;       // case-specific (t2: "i" fixed-gap pairs, "ii" equal degrees)
  double gamma = 0.6;        // t4
  double beta = 2.0 / 3.0;   // t7
};

struct CaseInstance {
  std::string name;
  Multipatch mp;
  ProblemData prob;
  ExactSolution exact;
  double h = 0.0;  // max over patches and directions of the parametric mesh size
  int p = 0;
  Index nbar = 0;
  SolverSettings solver;  // case default (preconditioner choice)
};

std::vector<std::string> builtin_case_names();
bool is_builtin_case(const std::string& name);
CaseInstance build_case(const std::string& name, const CaseOptions& options);

struct RunReport {
  std::string case_name;
  int p = 0;
  Index nbar = 0;
  double h = 0.0;
  Index dofs = 0;
  double err_broken = std::numeric_limits<double>::quiet_NaN();
  int iterations = 0;
  bool converged = false;
  double d_gamma = 0.0;
  double seconds = 0.0;
  std::string note;  // failure stage, if any (not part of the CSV)
};

struct RunResult {
  RunReport report;
  std::vector<Vector> u;
};

/// Runs one case: initialize, solve, error and gap measurement.
RunResult run_case(const CaseInstance& instance, const SolverSettings& settings,
                   bool measure_gap = true);

/// Maximum measured gap/overlap over the non-watertight interface pairs.
double measure_d_gamma(const Multipatch& mp);

struct RateFit {
  double slope = std::numeric_limits<double>::quiet_NaN();
  double ci95 = 0.0;  // half width of the 95% interval (0 with two points)
  int points_used = 0;
};

/// Log-log least-squares slope over the finest ceil(half) of the (h, err)
/// points.
RateFit fit_rate(const std::vector<std::pair<double, double>>& h_err);

struct SweepResult {
  std::vector<RunReport> rows;
  std::map<int, RateFit> rates;  // per polynomial degree
};

SweepResult run_sweep(const std::string& case_name, const CaseOptions& base,
                      const std::vector<int>& degrees, const std::vector<Index>& nbars,
                      const std::optional<SolverSettings>& settings = std::nullopt);

/// Fixed-column CSV: case,p,nbar,h,dofs,err_broken,its,converged,d_gamma,seconds.
/// Timing can be suppressed for byte-reproducible reports.
std::string reports_to_csv(const std::vector<RunReport>& rows, bool include_timing = true);

}  // namespace iga

#endif
