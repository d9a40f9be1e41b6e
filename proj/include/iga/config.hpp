#ifndef IGA_CONFIG_HPP
#define IGA_CONFIG_HPP

#include "iga/cases.hpp"

#include <nlohmann/json_fwd.hpp>
#include <string>

namespace iga {

using Json = nlohmann::json;

/// Geometry block of the config schema: per patch degrees, knot vectors,
/// weights, control points (row-major in the linearization order) and
/// boundary tags, plus the interface pair list.
Json serialize_multipatch(const Multipatch& mp);
Multipatch parse_multipatch(const Json& j);

/// Named manufactured solutions usable from explicit-geometry configs. Each
/// selector fixes the exact solution and the matching source term (diffusion
/// one, no advection unless stated).
std::vector<std::string> exact_solution_names();

struct ParsedConfig {
  CaseInstance instance;
  SolverSettings solver;
  bool solver_overridden = false;
  std::string output_dir = "out";
  bool solution_grid = false;
  int grid_factor = 2;
};

/// Loads a config document: either {"case": <builtin>, ...options} or an
/// explicit {"geometry": ..., "problem": ...} description.
ParsedConfig load_config(const Json& j);

/// Full explicit form of a builtin case (the geometry block is informational;
/// `run` rebuilds builtin cases from their constructors).
Json dump_case(const std::string& name, const CaseOptions& options);

/// Uniform parameter-grid samples of the solution, `factor` points per basis
/// function per direction: lines of "patch,x,y[,z],u".
std::string solution_grid_csv(const Multipatch& mp, const std::vector<Vector>& u, int factor);

}  // namespace iga

#endif
