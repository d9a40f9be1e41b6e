#include "iga/knots.hpp"

#include <algorithm>
#include <cmath>
#include <ostream>
#include <stdexcept>

namespace iga {

SparseMatrix extract(const SparseMatrix& a, const IndexList& rows, const IndexList& cols) {
  std::vector<Index> row_pos(static_cast<std::size_t>(a.rows()), -1);
  for (std::size_t r = 0; r < rows.size(); ++r) row_pos[static_cast<std::size_t>(rows[r])] = static_cast<Index>(r);
  std::vector<Triplet> trip;
  for (std::size_t c = 0; c < cols.size(); ++c) {
    for (SparseMatrix::InnerIterator it(a, cols[c]); it; ++it) {
      const Index r = row_pos[static_cast<std::size_t>(it.row())];
      if (r >= 0) trip.emplace_back(static_cast<int>(r), static_cast<int>(c), it.value());
    }
  }
  SparseMatrix out(static_cast<Index>(rows.size()), static_cast<Index>(cols.size()));
  out.setFromTriplets(trip.begin(), trip.end());
  return out;
}

Vector extract(const Vector& v, const IndexList& idx) {
  Vector out(static_cast<Index>(idx.size()));
  for (std::size_t i = 0; i < idx.size(); ++i) out[static_cast<Index>(i)] = v[idx[i]];
  return out;
}

namespace {

void coordinate_header(std::ostream& out, Index rows, Index cols, Index nnz) {
  out << rows << " " << cols << " " << nnz << "\n";
}

}  // namespace

void write_coordinate_format(std::ostream& out, const SparseMatrix& a) {
  coordinate_header(out, a.rows(), a.cols(), a.nonZeros());
  const auto flags = out.flags();
  out.precision(17);
  for (Index c = 0; c < a.outerSize(); ++c)
    for (SparseMatrix::InnerIterator it(a, c); it; ++it)
      out << it.row() + 1 << " " << it.col() + 1 << " " << it.value() << "\n";
  out.flags(flags);
}

void write_coordinate_format(std::ostream& out, const DenseMatrix& a) {
  Index nnz = 0;
  for (Index i = 0; i < a.size(); ++i) nnz += a(i) != 0.0 ? 1 : 0;
  coordinate_header(out, a.rows(), a.cols(), nnz);
  const auto flags = out.flags();
  out.precision(17);
  for (Index j = 0; j < a.cols(); ++j)
    for (Index i = 0; i < a.rows(); ++i)
      if (a(i, j) != 0.0) out << i + 1 << " " << j + 1 << " " << a(i, j) << "\n";
  out.flags(flags);
}

KnotVector::KnotVector(int degree, std::vector<double> knots)
    : p_(degree), knots_(std::move(knots)) {
  if (p_ < 1 || p_ > kMaxDegree) throw std::invalid_argument("knot vector: degree out of range");
  const std::size_t q = knots_.size();
  if (q < 2 * static_cast<std::size_t>(p_ + 1)) throw std::invalid_argument("knot vector: too few knots");
  for (std::size_t i = 0; i + 1 < q; ++i)
    if (knots_[i] > knots_[i + 1]) throw std::invalid_argument("knot vector: knots must be nondecreasing");
  for (int i = 0; i <= p_; ++i)
    if (knots_[static_cast<std::size_t>(i)] != 0.0 || knots_[q - 1 - static_cast<std::size_t>(i)] != 1.0)
      throw std::invalid_argument("knot vector: not p-open on [0,1]");
  // internal multiplicities at most p
  std::size_t i = static_cast<std::size_t>(p_ + 1);
  while (i < q - static_cast<std::size_t>(p_ + 1)) {
    std::size_t j = i;
    while (j < q - static_cast<std::size_t>(p_ + 1) && knots_[j] == knots_[i]) ++j;
    if (j - i > static_cast<std::size_t>(p_)) throw std::invalid_argument("knot vector: internal multiplicity > p");
    i = j;
  }
}

Index KnotVector::num_spans() const {
  Index n_el = 0;
  for (std::size_t i = static_cast<std::size_t>(p_); i + 1 < knots_.size(); ++i)
    if (knots_[i + 1] > knots_[i]) ++n_el;
  return n_el;
}

std::vector<double> KnotVector::breakpoints() const {
  std::vector<double> z{0.0};
  for (std::size_t i = static_cast<std::size_t>(p_); i + 1 < knots_.size(); ++i)
    if (knots_[i + 1] > knots_[i]) z.push_back(knots_[i + 1]);
  return z;
}

Index KnotVector::find_span(double x) const {
  if (x < 0.0 || x > 1.0) throw std::domain_error("evaluation point outside [0,1]");
  const Index n = num_basis();
  // last nonempty span starts at index n-1 (left-limit convention at x = 1)
  if (x >= knots_[static_cast<std::size_t>(n)]) return n - 1;
  auto it = std::upper_bound(knots_.begin() + p_, knots_.begin() + n + 1, x);
  return static_cast<Index>(it - knots_.begin()) - 1;
}

Index KnotVector::eval_basis(double x, std::array<double, kMaxBasisPerDir>& values) const {
  const Index s = find_span(x);
  // Cox-de Boor recursion on the active span, degree 0 up to p
  std::array<double, kMaxBasisPerDir> left{}, right{};
  values[0] = 1.0;
  for (int j = 1; j <= p_; ++j) {
    left[static_cast<std::size_t>(j)] = x - knots_[static_cast<std::size_t>(s + 1 - j)];
    right[static_cast<std::size_t>(j)] = knots_[static_cast<std::size_t>(s + j)] - x;
    double saved = 0.0;
    for (int r = 0; r < j; ++r) {
      const double den = right[static_cast<std::size_t>(r + 1)] + left[static_cast<std::size_t>(j - r)];
      const double temp = values[static_cast<std::size_t>(r)] / den;
      values[static_cast<std::size_t>(r)] = saved + right[static_cast<std::size_t>(r + 1)] * temp;
      saved = left[static_cast<std::size_t>(j - r)] * temp;
    }
    values[static_cast<std::size_t>(j)] = saved;
  }
  return s - p_;
}

Index KnotVector::eval_basis_derivatives(double x, int order,
                                         std::array<std::array<double, kMaxBasisPerDir>, 3>& ders) const {
  if (order < 0 || order > 2) throw std::invalid_argument("derivative order must be <= 2");
  const Index s = find_span(x);
  const int p = p_;
  // triangular table of all lower-degree basis values plus knot differences
  double ndu[kMaxBasisPerDir][kMaxBasisPerDir];
  std::array<double, kMaxBasisPerDir> left{}, right{};
  ndu[0][0] = 1.0;
  for (int j = 1; j <= p; ++j) {
    left[static_cast<std::size_t>(j)] = x - knots_[static_cast<std::size_t>(s + 1 - j)];
    right[static_cast<std::size_t>(j)] = knots_[static_cast<std::size_t>(s + j)] - x;
    double saved = 0.0;
    for (int r = 0; r < j; ++r) {
      ndu[j][r] = right[static_cast<std::size_t>(r + 1)] + left[static_cast<std::size_t>(j - r)];
      const double temp = ndu[r][j - 1] / ndu[j][r];
      ndu[r][j] = saved + right[static_cast<std::size_t>(r + 1)] * temp;
      saved = left[static_cast<std::size_t>(j - r)] * temp;
    }
    ndu[j][j] = saved;
  }
  for (int j = 0; j <= p; ++j) ders[0][static_cast<std::size_t>(j)] = ndu[j][p];
  // knot-difference recurrence for derivatives
  for (int r = 0; r <= p; ++r) {
    int s1 = 0, s2 = 1;
    double a[2][kMaxBasisPerDir];
    a[0][0] = 1.0;
    for (int k = 1; k <= order; ++k) {
      double d = 0.0;
      const int rk = r - k, pk = p - k;
      if (r >= k) {
        a[s2][0] = a[s1][0] / ndu[pk + 1][rk];
        d = a[s2][0] * ndu[rk][pk];
      }
      const int j1 = (rk >= -1) ? 1 : -rk;
      const int j2 = (r - 1 <= pk) ? k - 1 : p - r;
      for (int j = j1; j <= j2; ++j) {
        a[s2][j] = (a[s1][j] - a[s1][j - 1]) / ndu[pk + 1][rk + j];
        d += a[s2][j] * ndu[rk + j][pk];
      }
      if (r <= pk) {
        a[s2][k] = -a[s1][k - 1] / ndu[pk + 1][r];
        d += a[s2][k] * ndu[r][pk];
      }
      ders[static_cast<std::size_t>(k)][static_cast<std::size_t>(r)] = d;
      std::swap(s1, s2);
    }
  }
  double factor = p;
  for (int k = 1; k <= order; ++k) {
    for (int j = 0; j <= p; ++j) ders[static_cast<std::size_t>(k)][static_cast<std::size_t>(j)] *= factor;
    factor *= p - k;
  }
  return s - p;
}

Vector KnotVector::greville() const {
  const Index n = num_basis();
  Vector g(n);
  for (Index i = 0; i < n; ++i) {
    double sum = 0.0;
    for (int j = 1; j <= p_; ++j) sum += knots_[static_cast<std::size_t>(i + j)];
    g[i] = sum / p_;
  }
  g[0] = 0.0;
  g[n - 1] = 1.0;
  return g;
}

KnotVector make_open_knot_vector(int p, Index n_el) {
  if (p < 1) throw std::invalid_argument("make_open_knot_vector: p must be >= 1");
  if (n_el < 1) throw std::invalid_argument("make_open_knot_vector: n_el must be >= 1");
  std::vector<double> knots;
  knots.reserve(static_cast<std::size_t>(n_el + 1 + 2 * p));
  for (int i = 0; i <= p; ++i) knots.push_back(0.0);
  for (Index i = 1; i < n_el; ++i) knots.push_back(static_cast<double>(i) / static_cast<double>(n_el));
  for (int i = 0; i <= p; ++i) knots.push_back(1.0);
  return KnotVector(p, std::move(knots));
}

std::pair<KnotVector, DenseMatrix> insert_knot(const KnotVector& kv,
                                               const DenseMatrix& coeffs, double z) {
  if (!(z > 0.0 && z < 1.0)) throw std::invalid_argument("insert_knot: z must be in (0,1)");
  const int p = kv.degree();
  const Index n = kv.num_basis();
  if (coeffs.rows() != n) throw std::invalid_argument("insert_knot: coefficient count mismatch");
  const auto& xi = kv.knots();
  // span index with knots[s] <= z < knots[s+1]
  auto it = std::upper_bound(xi.begin() + p, xi.begin() + n + 1, z);
  const Index s = static_cast<Index>(it - xi.begin()) - 1;

  std::vector<double> knots2(xi.begin(), xi.end());
  knots2.insert(knots2.begin() + s + 1, z);

  DenseMatrix c2(n + 1, coeffs.cols());
  for (Index i = 0; i <= s - p; ++i) c2.row(i) = coeffs.row(i);
  for (Index i = s - p + 1; i <= s; ++i) {
    const double alpha = (z - xi[static_cast<std::size_t>(i)]) /
                         (xi[static_cast<std::size_t>(i + p)] - xi[static_cast<std::size_t>(i)]);
    c2.row(i) = alpha * coeffs.row(i) + (1.0 - alpha) * coeffs.row(i - 1);
  }
  for (Index i = s + 1; i <= n; ++i) c2.row(i) = coeffs.row(i - 1);
  return {KnotVector(p, std::move(knots2)), std::move(c2)};
}

Vector eval_spline(const KnotVector& kv, const DenseMatrix& coeffs, double x) {
  std::array<double, kMaxBasisPerDir> vals{};
  const Index first = kv.eval_basis(x, vals);
  Vector out = Vector::Zero(coeffs.cols());
  for (int j = 0; j <= kv.degree(); ++j)
    out += vals[static_cast<std::size_t>(j)] * coeffs.row(first + j).transpose();
  return out;
}

namespace {

// Collocation matrix mu_j(t_i) at the Greville abscissae; nonsingular for
// open knot vectors (Schoenberg-Whitney).
DenseMatrix greville_collocation_matrix(const KnotVector& kv) {
  const Index n = kv.num_basis();
  const Vector t = kv.greville();
  DenseMatrix g = DenseMatrix::Zero(n, n);
  std::array<double, kMaxBasisPerDir> vals{};
  for (Index i = 0; i < n; ++i) {
    const Index first = kv.eval_basis(t[i], vals);
    for (int j = 0; j <= kv.degree(); ++j) g(i, first + j) = vals[static_cast<std::size_t>(j)];
  }
  return g;
}

}  // namespace

std::pair<KnotVector, DenseMatrix> elevate_degree(const KnotVector& kv,
                                                  const DenseMatrix& coeffs) {
  const int p = kv.degree();
  if (coeffs.rows() != kv.num_basis()) throw std::invalid_argument("elevate_degree: coefficient count mismatch");
  // Target knot vector: degree p+1 with every knot multiplicity raised by one,
  // so the continuity class is unchanged and the source space is contained in
  // the target space.
  std::vector<double> knots2;
  const auto& xi = kv.knots();
  std::size_t i = 0;
  while (i < xi.size()) {
    std::size_t j = i;
    while (j < xi.size() && xi[j] == xi[i]) ++j;
    for (std::size_t r = 0; r < j - i + 1; ++r) knots2.push_back(xi[i]);
    i = j;
  }
  KnotVector kv2(p + 1, std::move(knots2));
  // The represented function lies in the target space, so interpolating it at
  // the target Greville abscissae recovers its coefficients exactly.
  const Vector t = kv2.greville();
  DenseMatrix rhs(kv2.num_basis(), coeffs.cols());
  for (Index k = 0; k < kv2.num_basis(); ++k) rhs.row(k) = eval_spline(kv, coeffs, t[k]).transpose();
  Eigen::PartialPivLU<DenseMatrix> lu(greville_collocation_matrix(kv2));
  DenseMatrix c2 = lu.solve(rhs);
  return {std::move(kv2), std::move(c2)};
}

TensorBasis::TensorBasis(std::vector<KnotVector> directions) : kv_(std::move(directions)) {
  if (kv_.empty() || kv_.size() > 3) throw std::invalid_argument("tensor basis: dimension must be 1..3");
}

Index TensorBasis::total_basis() const {
  Index n = 1;
  for (const auto& k : kv_) n *= k.num_basis();
  return n;
}

Index TensorBasis::linear_index(const std::array<Index, 3>& multi) const {
  Index lin = 0, stride = 1;
  for (int d = 0; d < dim(); ++d) {
    lin += multi[static_cast<std::size_t>(d)] * stride;
    stride *= num_basis(d);
  }
  return lin;
}

std::array<Index, 3> TensorBasis::multi_index(Index linear) const {
  std::array<Index, 3> multi{0, 0, 0};
  for (int d = 0; d < dim(); ++d) {
    multi[static_cast<std::size_t>(d)] = linear % num_basis(d);
    linear /= num_basis(d);
  }
  return multi;
}

}  // namespace iga
