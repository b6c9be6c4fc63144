#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "cogdec/trainer.hpp"

namespace cogdec {

struct AveragedHead {
    std::string study_id;
    std::vector<std::string> class_names;
    Matrix W;  // c x k, batch-norm folded U' L averaged over runs
    Vector b;  // c, folded biases averaged over runs
};

struct ConsensusHead {
    std::string study_id;
    std::vector<std::string> class_names;
    Matrix U;  // c x l
    Vector b;  // c
};

// Ensemble consensus: non-negative second layer with simplex rows, refit
// least-squares heads. The row space of L_bar carries the multi-study
// task-optimized networks M = L_bar D.
struct ConsensusModel {
    Dictionary D;
    Matrix L_bar;  // l x k
    std::vector<ConsensusHead> heads;
    double sparsity = 0.0;  // fraction of zero entries in L_bar

    Matrix mston() const { return L_bar * D.D; }
    std::size_t head_index(const std::string& study_id) const;
    void validate() const;
};

// r training runs with seeds seed0 .. seed0+r-1. Results are independent of
// the execution order; threads > 1 runs them concurrently. Diverged runs are
// reported into `failures` (when given) and skipped.
std::vector<TrainedRun> run_ensemble(const Corpus& corpus, const Dictionary& D,
                                     const Matrix& L_init, const TrainConfig& config,
                                     int r, std::uint64_t seed0, int threads = 1,
                                     std::vector<std::string>* failures = nullptr);

// Per-study arithmetic means of the folded head maps U' L and folded biases.
std::vector<AveragedHead> average_heads(const std::vector<TrainedRun>& runs);

// min over K, rows(L_bar) in the simplex of
//   1/2 ||L_stack - K L_bar||_F^2 + lambda ||K||_F^2,
// warm-started at L_init (rows projected feasible). Returns L_bar and
// reports the achieved sparsity; warns outside [0.5, 0.95].
Matrix consensus_nmf(const Matrix& L_stack, Eigen::Index l, double lambda,
                     const Matrix& L_init, double* sparsity_out = nullptr);

// U_bar = argmin_U ||W_bar - U L_bar||_F^2 by jittered normal equations.
Matrix refit_heads(const Matrix& W_bar, const Matrix& L_bar, double jitter = 1e-10);

// Stack the matrices, SVD, and return the share of squared singular values
// captured by the top l components.
double span_stability(const std::vector<Matrix>& L_list, Eigen::Index l);

// Full consensus phase over an ensemble of runs.
ConsensusModel build_consensus(const std::vector<TrainedRun>& runs, double lambda,
                               const Matrix& L_init);

Matrix consensus_logits(const ConsensusModel& model, std::size_t study,
                        const Matrix& X);
std::vector<int> predict(const ConsensusModel& model, std::size_t study,
                         const Matrix& X);

}  // namespace cogdec
