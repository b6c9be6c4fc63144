#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "cogdec/corpus.hpp"
#include "cogdec/dictionary.hpp"
#include "cogdec/lbfgs.hpp"

namespace cogdec {

enum class InputSpace { voxels, dictionary };

using SolverConfig = LbfgsOptions;

// Per-study multinomial logistic decoder, either straight from features
// (voxels) or from dictionary loadings D x.
struct LinearDecoder {
    Matrix W;  // c x d
    Vector b;  // c
    double lambda = 0.0;
    InputSpace input_space = InputSpace::voxels;
    std::optional<std::string> dictionary_ref;
    std::vector<std::string> class_names;

    Eigen::Index n_classes() const { return W.rows(); }
    Eigen::Index input_dim() const { return W.cols(); }
};

// Row logits X W^T + b.
Matrix decoder_logits(const LinearDecoder& dec, const Matrix& X);

// argmax of the logits, ties to the lowest class index.
std::vector<int> predict(const LinearDecoder& dec, const Matrix& X);

// Mean multinomial NLL + lambda ||W||_F^2 (bias unpenalized), with gradient.
// Exposed for the finite-difference suites.
double decoder_objective(const Matrix& X, const std::vector<int>& labels,
                         int n_classes, double lambda, const Vector& theta,
                         Vector& grad);

// Minimizes the regularized NLL by L-BFGS from the zero initializer.
LinearDecoder fit_voxel_decoder(const Study& study, double lambda,
                                const SolverConfig& opt = {});

// Same model on loadings D x; weights live in dictionary space.
LinearDecoder fit_reduced_decoder(const Study& study, const Dictionary& dict,
                                  double lambda, const SolverConfig& opt = {});

// Mean held-out accuracy over n_splits half-splits per grid point; ties go
// to the larger lambda. In dictionary mode the study data must already be
// loadings.
double select_lambda(const Study& study, const std::vector<double>& grid,
                     int n_splits, std::uint64_t seed,
                     InputSpace mode = InputSpace::voxels,
                     const SolverConfig& opt = {});

// The paper's default grid {10^i, i = -3..3}.
std::vector<double> default_lambda_grid();

}  // namespace cogdec
