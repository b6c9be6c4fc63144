#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "cogdec/corpus.hpp"
#include "cogdec/dictionary.hpp"
#include "cogdec/rng.hpp"

namespace cogdec {

struct BatchNormState {
    Vector running_mean;  // l
    Vector running_var;   // l
    Vector gamma;         // l
    Vector beta_affine;   // l
    double momentum = 0.1;
    double epsilon = 1e-5;

    static BatchNormState identity(Eigen::Index l);
};

struct StudyHead {
    std::string study_id;
    std::vector<std::string> class_names;
    Matrix U;  // c x l
    Vector b;  // c
    // Head dropout variance alpha^j. Learned in variational mode (updated in
    // log space, clipped to [1e-8, 1]); 0 disables the head noise.
    double alpha = 0.0;
};

// Three-layer linear model: frozen dictionary D (k x p), shared reduction
// L (l x k), per-study heads (U^j, b^j) with batch norm between L and U^j.
struct MultiStudyModel {
    Dictionary D;
    Matrix L;  // l x k
    std::vector<StudyHead> heads;
    double alpha_in = 0.0;  // first-stage dropout variance, fixed
    BatchNormState bn;

    Eigen::Index l() const { return L.rows(); }
    Eigen::Index k() const { return L.cols(); }
    Eigen::Index p() const { return D.p(); }
    std::size_t head_index(const std::string& study_id) const;
};

enum class DropoutMode { none, gaussian_fixed, variational };

// Noise handling of one forward pass. eval uses running batch-norm
// statistics and no noise; train_sample draws the diagonal multiplicative
// noise; train_lrt propagates its mean/variance analytically and samples the
// activation once.
enum class ForwardMode { train_sample, train_lrt, eval };

enum class BnStats { batch, running };

struct TrainConfig {
    double beta = 0.6;           // study-weight exponent
    double p_in = 0.25;          // first-stage dropout rate
    double p_head_init = 0.75;   // head dropout rate at init
    DropoutMode dropout_mode = DropoutMode::variational;
    double lr = 1e-3;
    double beta1 = 0.9;
    double beta2 = 0.999;
    double eps_adam = 1e-8;
    int batch_size = 32;
    // 0 means the default budget of 200 x total training maps.
    long long max_samples_seen = 0;
    Eigen::Index l = 8;
    double lambda_l2 = 0.0;
    std::uint64_t seed = 0;

    void validate() const;
};

struct TrainedRun {
    MultiStudyModel model;
    std::vector<double> loss_trace;  // one entry per optimization step
    std::uint64_t seed = 0;
    long long samples_seen = 0;
};

// Gradients of one minibatch loss for the sampled study's blocks.
struct ModelGrads {
    Matrix L;
    Matrix U;
    Vector b;
    double log_alpha = 0.0;
    Vector gamma;
    Vector beta_affine;
};

// Study-sampling weights and loss normalization shared by one training run:
// study j is drawn with probability (n_j)^beta / z.
struct StudyWeights {
    std::vector<double> pow_size;  // (n_j)^beta
    double z = 0.0;                // sum of pow_size
};
StudyWeights study_weights(const std::vector<long long>& sizes, double beta);

// Index j with probability (n_j)^beta / sum_i (n_i)^beta.
std::size_t sample_study(const std::vector<long long>& sizes, double beta, Rng& rng);

// n_eff(j) = (sum_i n_i) * (n_j)^beta / sum_i (n_i)^beta.
std::vector<double> effective_sample_size(const std::vector<long long>& sizes,
                                          double beta);

// Dropout rate p <-> Gaussian dropout variance alpha = p / (1 - p).
double rate_to_variance(double p);

// Logits for one batch. rng is required for the train modes. bn overrides
// the statistics source (defaults: eval -> running, train -> batch).
Matrix forward_logits(const MultiStudyModel& model, std::size_t study,
                      const Matrix& X, ForwardMode mode, Rng* rng = nullptr,
                      std::optional<BnStats> bn = std::nullopt);

// Adam with bias-corrected moments; one state per parameter block.
struct AdamState {
    Eigen::ArrayXXd m, v;
    long long t = 0;
};
void adam_step(AdamState& state, Matrix& param, const Matrix& grad,
               double lr, double beta1 = 0.9, double beta2 = 0.999,
               double eps = 1e-8);

// Sum over studies of the variational-dropout KL penalty, anchored so the
// penalty vanishes at the lower clip 1e-8; decreasing in alpha. Out-of-range
// entries are clipped with a warning.
double kl_penalty(const std::vector<double>& alpha_study);
// d kl / d log(alpha) for one study (no clipping).
double kl_penalty_grad_log_alpha(double alpha);

struct MinibatchOptions {
    ForwardMode mode = ForwardMode::eval;
    std::optional<BnStats> bn = std::nullopt;
    double lambda_l2 = 0.0;
    bool variational = false;       // adds the KL term and its gradient
    double pow_size = 1.0;          // (n_j)^beta of the sampled study
    double z_norm = 1.0;            // sum_i (n_i)^beta
};

// Mean NLL of the (noisy) logits over one batch, plus the l2 / KL terms
// weighted so the expectation over study and batch sampling matches the
// joint objective normalized by z. Gradients cover L, U^j, b^j, log alpha^j
// and the batch-norm affine pair.
double minibatch_loss(const MultiStudyModel& model, std::size_t study,
                      const Matrix& X, const std::vector<int>& labels,
                      const MinibatchOptions& opts, Rng& rng,
                      ModelGrads* grads = nullptr);

// Stochastic joint training: sample a study, draw a without-replacement
// minibatch from its shuffled cyclic iterator, step with Adam. Deterministic
// in config.seed.
TrainedRun fit_multistudy(const Corpus& corpus, const Dictionary& D,
                          const Matrix& L_init, const TrainConfig& config);

// Same loop with the (lambda/2)(||L||_F^2 + sum_j ||U^j||_F^2) penalty.
TrainedRun fit_l2_factored(const Corpus& corpus, const Dictionary& D,
                           const Matrix& L_init, const TrainConfig& config);

// Folded eval-mode head: W_dict = U' L with batch norm absorbed, so
// logits = (D x)^T W_dict^T + b_fold exactly reproduces the eval forward.
void fold_head(const MultiStudyModel& model, std::size_t study, Matrix& W_dict,
               Vector& b_fold);

// Per-study predictions in eval mode.
std::vector<int> predict(const MultiStudyModel& model, std::size_t study,
                         const Matrix& X);

struct NoTransferReport {
    double joint_objective = 0.0;
    double separate_total = 0.0;
    double rel_error = 0.0;
    bool passed = false;
};

// Builds the block solution from separately-fit reduced decoders (L stacked
// from the per-study weights, selector heads) and checks that its joint
// objective equals the weighted sum of the separate optima. Requires
// l >= total class count, no dropout, lambda = 0.
NoTransferReport verify_no_transfer_construction(const Corpus& corpus,
                                                 const Dictionary& D,
                                                 Eigen::Index l, double beta,
                                                 double tol = 1e-6);

}  // namespace cogdec
