#pragma once

#include <functional>

#include "cogdec/matrix_io.hpp"

namespace cogdec {

struct LbfgsOptions {
    int memory = 10;
    int max_iters = 500;
    double grad_tol = 1e-7;       // stop when ||g||_inf <= grad_tol
    double wolfe_c1 = 1e-4;
    double wolfe_c2 = 0.9;
    int max_line_search = 40;
};

struct LbfgsResult {
    Vector x;
    double fx = 0.0;
    double grad_norm = 0.0;
    int iters = 0;
    bool converged = false;
};

// f(x, grad_out) -> objective value, writing the gradient into grad_out.
using Objective = std::function<double(const Vector&, Vector&)>;

// Limited-memory BFGS with a strong-Wolfe line search. Throws numeric_error
// (with the iteration index) if the objective turns non-finite.
LbfgsResult lbfgs_minimize(const Objective& f, const Vector& x0,
                           const LbfgsOptions& opts = {});

}  // namespace cogdec
