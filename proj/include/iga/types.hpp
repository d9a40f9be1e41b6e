#ifndef IGA_TYPES_HPP
#define IGA_TYPES_HPP

#include <Eigen/Dense>
#include <Eigen/Sparse>

#include <cstdint>
#include <iosfwd>
#include <vector>

namespace iga {

using Index = std::int64_t;
using Vector = Eigen::VectorXd;
using DenseMatrix = Eigen::MatrixXd;
using SparseMatrix = Eigen::SparseMatrix<double>;
using Triplet = Eigen::Triplet<double>;
using IndexList = std::vector<Index>;

/// Extracts rows/columns of a sparse matrix in the order of the given index lists.
SparseMatrix extract(const SparseMatrix& a, const IndexList& rows, const IndexList& cols);

/// Extracts entries of a vector in the order of the given index list.
Vector extract(const Vector& v, const IndexList& idx);

/// Writes a matrix in coordinate (triplet) text format: "row col value" per
/// nonzero, one-based indices, preceded by a "rows cols nnz" header line.
void write_coordinate_format(std::ostream& out, const SparseMatrix& a);
void write_coordinate_format(std::ostream& out, const DenseMatrix& a);

}  // namespace iga

#endif
