#ifndef IGA_QUADRATURE_HPP
#define IGA_QUADRATURE_HPP

#include "iga/types.hpp"

namespace iga {

struct QuadRule {
  Vector nodes;    // on [-1,1]
  Vector weights;  // sum to 2
};

/// Gauss-Legendre rule with n points (1 <= n <= 20); exact for polynomials of
/// degree <= 2n-1.
QuadRule gauss_legendre(int n);

/// The same rule mapped to the interval [a,b].
QuadRule gauss_legendre_on(int n, double a, double b);

}  // namespace iga

#endif
