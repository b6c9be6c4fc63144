#pragma once

#include <vector>

#include "cogdec/matrix_io.hpp"

namespace cogdec {

// Alternating minimization of scale*||X - A D||_F^2 + lambda*||A||_F^2 with
// D rows constrained to { u >= 0, ||u||_1 <= 1 }. D is updated in place from
// its incoming value; A is overwritten. Stops after max_epochs or when the
// relative objective decrease falls below rel_tol (rel_tol = 0 runs all
// epochs). Returns the per-epoch objective trace.
std::vector<double> nmf_alternating_core(const Matrix& X, Matrix& D, Matrix& A,
                                         double lambda, double scale,
                                         int max_epochs, double rel_tol = 0.0);

}  // namespace cogdec
