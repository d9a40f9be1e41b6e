#ifndef IGA_KNOTS_HPP
#define IGA_KNOTS_HPP

#include "iga/types.hpp"

#include <array>
#include <vector>

namespace iga {

/// Degrees above kMaxDegree are rejected at construction.
constexpr int kMaxDegree = 11;
constexpr int kMaxBasisPerDir = kMaxDegree + 1;

/// Univariate p-open knot vector on [0,1].
///
/// The first p+1 knots are 0, the last p+1 knots are 1, internal knots are
/// nondecreasing with multiplicity at most p. The basis count is
/// n = #knots - p - 1.
class KnotVector {
public:
  KnotVector() = default;
  KnotVector(int degree, std::vector<double> knots);

  int degree() const { return p_; }
  Index num_basis() const { return static_cast<Index>(knots_.size()) - p_ - 1; }
  Index num_spans() const;
  const std::vector<double>& knots() const { return knots_; }
  double knot(Index i) const { return knots_[static_cast<std::size_t>(i)]; }

  /// Distinct internal span breakpoints, including 0 and 1.
  std::vector<double> breakpoints() const;

  /// Index s of the knot span containing x: knots[s] <= x < knots[s+1],
  /// with the left-limit convention at x = 1 (last nonempty span).
  Index find_span(double x) const;

  /// Values of the p+1 basis functions that may be nonzero at x.
  /// Returns the index of the first active function; values[j] is the value
  /// of basis function first+j. All values are >= 0 and sum to 1.
  Index eval_basis(double x, std::array<double, kMaxBasisPerDir>& values) const;

  /// Derivatives up to `order` (<= 2) of the p+1 active basis functions at x.
  /// ders[k][j] holds the k-th derivative of basis function first+j.
  Index eval_basis_derivatives(double x, int order,
                               std::array<std::array<double, kMaxBasisPerDir>, 3>& ders) const;

  /// Greville abscissae xi_{i,G} = (xi_{i+1} + ... + xi_{i+p}) / p.
  Vector greville() const;

  bool operator==(const KnotVector& other) const {
    return p_ == other.p_ && knots_ == other.knots_;
  }

private:
  int p_ = 0;
  std::vector<double> knots_;
};

/// Uniform p-open knot vector with n_el equal spans; basis count n = n_el + p.
KnotVector make_open_knot_vector(int p, Index n_el);

/// Inserts the knot z in (0,1) once. The rows of `coeffs` are spline
/// coefficients (one column per coordinate); the returned pair represents the
/// identical spline function with one more basis function.
std::pair<KnotVector, DenseMatrix> insert_knot(const KnotVector& kv,
                                               const DenseMatrix& coeffs, double z);

/// Raises the degree by one, preserving the represented function and its
/// continuity class (every internal knot multiplicity grows by one).
std::pair<KnotVector, DenseMatrix> elevate_degree(const KnotVector& kv,
                                                  const DenseMatrix& coeffs);

/// Evaluates the spline with the given coefficient rows at x.
Vector eval_spline(const KnotVector& kv, const DenseMatrix& coeffs, double x);

/// Tensor product of up to three univariate knot vectors.
///
/// Linear indices run with the first direction fastest:
///   linear = i_0 + n_0 * (i_1 + n_1 * i_2).
class TensorBasis {
public:
  TensorBasis() = default;
  explicit TensorBasis(std::vector<KnotVector> directions);

  int dim() const { return static_cast<int>(kv_.size()); }
  const KnotVector& direction(int d) const { return kv_[static_cast<std::size_t>(d)]; }
  Index num_basis(int d) const { return kv_[static_cast<std::size_t>(d)].num_basis(); }
  Index total_basis() const;

  Index linear_index(const std::array<Index, 3>& multi) const;
  std::array<Index, 3> multi_index(Index linear) const;

private:
  std::vector<KnotVector> kv_;
};

}  // namespace iga

#endif
