#pragma once

// Eigenvalues of dense symmetric matrices by Jacobi rotations.
//
// jacobi_eigenvalues sweeps in round-robin (Brent-Luk) order: each round is
// a set of n/2 disjoint (p, q) pairs whose rotations commute, so a round is
// applied as one block of row rotations followed by one block of column
// rotations. The parallel path splits those blocks across threads; the
// serial path runs the same arithmetic in order, giving identical results.
// jacobi_eigenvalues_cyclic is the textbook row-cyclic sweep, kept as an
// independent reference.

#include <cstddef>
#include <vector>

#include "wgl/parallel.hpp"

namespace wgl {

struct JacobiResult {
  std::vector<double> eigenvalues;  // unsorted, one per row
  int sweeps = 0;
  double off_norm = 0.0;  // final off-diagonal Frobenius norm
};

// a is n*n row-major and symmetric. Throws NumericalError without convergence.
JacobiResult jacobi_eigenvalues(std::vector<double> a, std::size_t n,
                                Execution exec = Execution::parallel, int max_sweeps = 60);

JacobiResult jacobi_eigenvalues_cyclic(std::vector<double> a, std::size_t n,
                                       int max_sweeps = 60);

}  // namespace wgl
