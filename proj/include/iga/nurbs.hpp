#ifndef IGA_NURBS_HPP
#define IGA_NURBS_HPP

#include "iga/knots.hpp"
#include "iga/types.hpp"

#include <functional>
#include <optional>

namespace iga {

/// Rational tensor-product space: B-spline tensor basis with positive weights.
struct NurbsSpace {
  TensorBasis basis;
  Vector weights;  // one positive weight per basis function

  int dim() const { return basis.dim(); }
  Index total_basis() const { return basis.total_basis(); }
};

/// Values (and optionally parametric gradients) of the active rational basis
/// functions at one parameter point.
struct NurbsEval {
  IndexList active;           // linear indices of the active functions
  Vector values;              // rational basis values, sum to 1
  DenseMatrix gradients;      // active x dim, parametric gradients (sum to 0)
};

NurbsEval eval_nurbs(const NurbsSpace& space, const Vector& xhat, bool with_gradients);

/// NURBS geometry map F: [0,1]^dim -> R^range_dim with one control point per
/// basis function. For volume patches range_dim == dim; faces are maps from
/// dim-1 parameters into R^dim.
struct GeometryMap {
  NurbsSpace space;
  DenseMatrix control_points;  // total_basis x range_dim

  int dim() const { return space.dim(); }
  int range_dim() const { return static_cast<int>(control_points.cols()); }
};

Vector map_point(const GeometryMap& geo, const Vector& xhat);
/// Columns are d x / d xhat_j.
DenseMatrix jacobian(const GeometryMap& geo, const Vector& xhat);

/// Largest pairwise distance between the images of the parameter-cube corners.
double patch_diameter(const GeometryMap& geo);

/// Checks that det(J) keeps one sign over a sample grid (invertibility proxy).
bool jacobian_sign_constant(const GeometryMap& geo, int samples_per_dir = 5);

/// One of the 2*dim parametric sides of a patch.
struct Side {
  int direction = 0;  // fixed parametric direction
  int end = 0;        // 0: xhat_dir = 0, 1: xhat_dir = 1

  int id(int dim) const { (void)dim; return 2 * direction + end; }
  static Side from_id(int id) { return Side{id / 2, id % 2}; }
  bool operator==(const Side&) const = default;
};

/// Trace of a patch on one side: the face geometry map, the list of volume
/// basis indices carrying the trace basis functions, and the face Greville
/// nodes in face-parameter and physical coordinates.
struct InterfaceFace {
  int patch = 0;
  Side side;
  GeometryMap trace;        // (dim-1)-parameter map into R^dim
  IndexList volume_index;   // trace basis j -> volume basis index
  DenseMatrix greville_param;     // n_face x (dim-1)
  DenseMatrix greville_physical;  // n_face x dim

  Index num_basis() const { return trace.space.total_basis(); }
};

InterfaceFace extract_face(const GeometryMap& geo, Side side, int patch_id = 0);

struct InversionResult {
  bool converged = false;
  Vector parameter;  // on the face, clamped to [0,1]^{dim-1}
  double residual = 0.0;
};

/// Finds the face parameter minimizing |F(t) - x| by damped Gauss-Newton with
/// parameters clamped to the closed face. Succeeds iff the final residual is
/// at most tol.
InversionResult point_inversion(const GeometryMap& face, const Vector& x, double tol,
                                int max_iterations = 50);

// ---- geometry constructors ----

/// Sector of a circular ring around the origin, radial extent [r_in, r_out],
/// angular extent [theta0, theta1] with theta1 - theta0 in (0, pi/2].
/// Direction 0 is radial (degree 1), direction 1 angular (rational quadratic,
/// exact circle).
GeometryMap make_ring_sector(double r_in, double r_out, double theta0, double theta1);

/// Quarter ring sector [r_in,r_out] x [0, pi/2].
GeometryMap make_quarter_annulus(double r_in, double r_out);

/// Axis-aligned box [lo_0,hi_0] x ... with multilinear geometry.
GeometryMap make_box(const Vector& lo, const Vector& hi);

/// Control points of the B-spline curve interpolating the parametric curve c
/// at the Greville abscissae of the given knot vector.
DenseMatrix greville_fit_curve(const KnotVector& kv, const std::function<Vector(double)>& c);

/// Solves the Greville collocation system for the control points of the
/// degree-p B-spline curve interpolating (g(t_j), t_j) at the Greville
/// abscissae t_j of the given knot vector.
DenseMatrix interpolate_curve_bspline(const std::function<double(double)>& g,
                                      const KnotVector& kv);

/// Ruled patch between two curves sharing one knot vector: direction 0 blends
/// linearly from `left` to `right`, direction 1 follows the curves.
GeometryMap make_ruled_patch(const KnotVector& curve_kv, const DenseMatrix& left_points,
                             const DenseMatrix& right_points);

/// Patch bounded on the side {xhat_0 = 1} by the interpolated curve
/// x = g(y) and on {xhat_0 = 0} by the straight segment x = x_straight.
GeometryMap make_ruled_interface_patch(const std::function<double(double)>& g,
                                       const KnotVector& curve_kv, double x_straight,
                                       bool curve_on_right = true);

/// Bilinearly blended (Coons) patch from four boundary B-spline curves with
/// weights one. Opposite curves must share degree and knots; corners must
/// match.
GeometryMap make_coons_patch(const KnotVector& kv_u, const DenseMatrix& south,
                             const DenseMatrix& north, const KnotVector& kv_v,
                             const DenseMatrix& west, const DenseMatrix& east);

/// Extrudes a planar (2D) map along z over [z0, z1] (linear, one span).
GeometryMap make_extruded(const GeometryMap& surface, double z0, double z1);

// ---- refinement (geometry and its parametrization stay intact) ----

GeometryMap insert_knot(const GeometryMap& geo, int direction, double z);
GeometryMap elevate_degree(const GeometryMap& geo, int direction);

/// k-refinement: elevates every direction to degree p, then inserts uniform
/// knots until each direction has the requested span count.
GeometryMap refine_to(const GeometryMap& geo, const std::vector<int>& degrees,
                      const std::vector<Index>& spans);

/// Maximum distance from sampled points of face `from` to the image of face
/// `to` computed by point projection (the measured gap/overlap size).
double measure_face_gap(const GeometryMap& from, const GeometryMap& to, int samples = 1000);

}  // namespace iga

#endif
