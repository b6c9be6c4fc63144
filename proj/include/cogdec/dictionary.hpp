#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "cogdec/matrix_io.hpp"

namespace cogdec {

// Non-negative first-layer dictionary; every row lives in
// { u >= 0, ||u||_1 <= 1 }.
struct Dictionary {
    Matrix D;  // k x p
    std::vector<std::string> component_names;  // optional, k entries when set

    Eigen::Index k() const { return D.rows(); }
    Eigen::Index p() const { return D.cols(); }
    void validate() const;  // throws data_error when a row leaves the set
};

struct NmfResult {
    Dictionary dictionary;
    Matrix codes;                        // n x k
    std::vector<double> objective_trace; // per epoch, non-increasing
};

// Euclidean projection onto { u >= 0, ||u||_1 <= 1 }.
Vector simplex_project(const Vector& v);

// min_{D in C, A} ||X - A D||_F^2 + lambda ||A||_F^2 by alternating a ridge
// solve for A with exact projected block updates of D's rows. Deterministic
// in seed (random simplex rows at init).
NmfResult fit_sparse_nmf(const Matrix& X, Eigen::Index k, double lambda,
                         int epochs, std::uint64_t seed);

// Least-squares second-layer warm start: argmin_L ||D_coarse - L D||_F^2,
// solved by jittered normal equations.
Matrix init_second_layer(const Dictionary& coarse, const Dictionary& dict,
                         double jitter = 1e-10);

// Drops every component whose in-mask share of l1 mass is below threshold.
Dictionary restrict_components(const Dictionary& dict,
                               const std::vector<bool>& mask,
                               double threshold = 0.5);

// Largest lambda from the grid whose dictionary still covers at least
// `coverage` of the features with a nonzero loading.
double select_dictionary_lambda(const Matrix& X, Eigen::Index k,
                                const std::vector<double>& grid, int epochs,
                                std::uint64_t seed, double coverage = 0.95);

}  // namespace cogdec
