#include "cogdec/trainer.hpp"

#include <algorithm>
#include <cmath>
#include <iostream>
#include <numeric>

#include "cogdec/baseline.hpp"
#include "cogdec/errors.hpp"
#include "cogdec/softmax.hpp"

namespace cogdec {

namespace {

constexpr double kAlphaFloor = 1e-8;
constexpr double kAlphaCeil = 1.0;

double sigmoid(double x) { return 1.0 / (1.0 + std::exp(-x)); }
double softplus(double x) {
    return x > 30.0 ? x : std::log1p(std::exp(x));
}

// Molchanov's -KL approximation as a function of t = log alpha.
double mdkl(double t) {
    constexpr double k1 = 0.63576, k2 = 1.87320, k3 = 1.48695;
    return k1 * sigmoid(k2 + k3 * t) - 0.5 * softplus(-t) - k1;
}

double mdkl_grad(double t) {
    constexpr double k1 = 0.63576, k2 = 1.87320, k3 = 1.48695;
    const double s = sigmoid(k2 + k3 * t);
    return k1 * k3 * s * (1.0 - s) + 0.5 * sigmoid(-t);
}

Matrix draw_standard_normal(Eigen::Index rows, Eigen::Index cols, Rng& rng) {
    Matrix E(rows, cols);
    for (Eigen::Index i = 0; i < rows; ++i)
        for (Eigen::Index j = 0; j < cols; ++j) E(i, j) = rng.normal();
    return E;
}

struct ForwardCache {
    ForwardMode mode = ForwardMode::eval;
    bool bn_batch = false;
    double alpha_in = 0.0;
    double alpha_head = 0.0;

    Matrix Z;       // B x k
    Matrix eps_in;  // sample: B x k; lrt: B x l
    Matrix sigma_a; // lrt stage 1 std, B x l
    Matrix A;       // B x l, pre batch norm
    Vector mu, var; // batch-norm statistics in use
    Matrix xhat;    // B x l
    Matrix H;       // B x l, post batch norm
    Matrix eps_head;  // sample: B x l; lrt: B x c
    Matrix sigma_l;   // lrt stage 2 std, B x c
    Matrix logits;    // B x c
};

// Forward through noise -> L -> batch norm -> noise -> head. When bn_update
// is set and batch statistics are used, the running statistics absorb the
// batch the usual way (momentum mix, biased variance).
void forward_pass(const MultiStudyModel& model, std::size_t study,
                  const Matrix& Z, ForwardMode mode, BnStats bn_stats,
                  Rng* rng, ForwardCache& cache, BatchNormState* bn_update) {
    const auto& head = model.heads.at(study);
    const Eigen::Index B = Z.rows();
    const Eigen::Index l = model.l();
    const Eigen::Index c = head.U.rows();

    cache.mode = mode;
    cache.bn_batch = bn_stats == BnStats::batch;
    cache.alpha_in = model.alpha_in;
    cache.alpha_head = head.alpha;
    cache.Z = Z;

    if (mode != ForwardMode::eval && rng == nullptr)
        throw config_error("train-mode forward needs an rng");

    // Stage 1: input dropout and the shared reduction.
    if (mode == ForwardMode::train_sample) {
        cache.eps_in = draw_standard_normal(B, Z.cols(), *rng);
        const double sd = std::sqrt(cache.alpha_in);
        cache.A = (Z.array() * (1.0 + sd * cache.eps_in.array())).matrix() *
                  model.L.transpose();
    } else if (mode == ForwardMode::train_lrt) {
        cache.eps_in = draw_standard_normal(B, l, *rng);
        const Matrix mu_a = Z * model.L.transpose();
        cache.sigma_a = (cache.alpha_in *
                         (Z.array().square().matrix() *
                          model.L.array().square().matrix().transpose()).array())
                            .sqrt()
                            .matrix();
        cache.A = mu_a + cache.sigma_a.cwiseProduct(cache.eps_in);
    } else {
        cache.A = Z * model.L.transpose();
    }

    // Stage 2: batch norm.
    if (cache.bn_batch) {
        cache.mu = cache.A.colwise().mean().transpose();
        cache.var = (cache.A.rowwise() - cache.mu.transpose())
                        .array()
                        .square()
                        .colwise()
                        .mean()
                        .transpose()
                        .matrix();
        if (bn_update) {
            const double m = bn_update->momentum;
            bn_update->running_mean = (1.0 - m) * bn_update->running_mean + m * cache.mu;
            bn_update->running_var = (1.0 - m) * bn_update->running_var + m * cache.var;
        }
    } else {
        cache.mu = model.bn.running_mean;
        cache.var = model.bn.running_var;
    }
    const Eigen::ArrayXd istd =
        (cache.var.array() + model.bn.epsilon).sqrt().inverse();
    cache.xhat = ((cache.A.rowwise() - cache.mu.transpose()).array().rowwise() *
                  istd.transpose())
                     .matrix();
    cache.H = (cache.xhat.array().rowwise() *
               model.bn.gamma.transpose().array())
                  .matrix()
                  .rowwise() +
              model.bn.beta_affine.transpose();

    // Stage 3: head dropout and the classification head.
    if (mode == ForwardMode::train_sample) {
        cache.eps_head = draw_standard_normal(B, l, *rng);
        const double sd = std::sqrt(cache.alpha_head);
        const Matrix noisy =
            (cache.H.array() * (1.0 + sd * cache.eps_head.array())).matrix();
        cache.logits = (noisy * head.U.transpose()).rowwise() + head.b.transpose();
    } else if (mode == ForwardMode::train_lrt) {
        cache.eps_head = draw_standard_normal(B, c, *rng);
        const Matrix mu_l =
            (cache.H * head.U.transpose()).rowwise() + head.b.transpose();
        cache.sigma_l = (cache.alpha_head *
                         (cache.H.array().square().matrix() *
                          head.U.array().square().matrix().transpose()).array())
                            .sqrt()
                            .matrix();
        cache.logits = mu_l + cache.sigma_l.cwiseProduct(cache.eps_head);
    } else {
        cache.logits = (cache.H * head.U.transpose()).rowwise() + head.b.transpose();
    }
}

// Reverse pass from d(loss)/d(logits). Fills every gradient block.
void backward_pass(const MultiStudyModel& model, std::size_t study,
                   const ForwardCache& cache, const Matrix& dlogits,
                   ModelGrads& grads) {
    const auto& head = model.heads.at(study);
    const Eigen::Index B = cache.Z.rows();

    Matrix dH;
    grads.b = dlogits.colwise().sum().transpose();
    grads.log_alpha = 0.0;

    if (cache.mode == ForwardMode::train_sample) {
        const double sd = std::sqrt(cache.alpha_head);
        const Matrix noise = (1.0 + sd * cache.eps_head.array()).matrix();
        const Matrix noisy_h = cache.H.cwiseProduct(noise);
        grads.U = dlogits.transpose() * noisy_h;
        const Matrix dnoisy = dlogits * head.U;
        dH = dnoisy.cwiseProduct(noise);
        // d noise / d log alpha = eps * sqrt(alpha) / 2
        grads.log_alpha +=
            0.5 * sd *
            dnoisy.cwiseProduct(cache.H.cwiseProduct(cache.eps_head)).sum();
    } else if (cache.mode == ForwardMode::train_lrt) {
        const Matrix dsigma = dlogits.cwiseProduct(cache.eps_head);
        // dT for T = sigma^2; zero where sigma vanishes.
        Matrix dT(dsigma.rows(), dsigma.cols());
        for (Eigen::Index i = 0; i < dT.rows(); ++i)
            for (Eigen::Index j = 0; j < dT.cols(); ++j)
                dT(i, j) = cache.sigma_l(i, j) > 0.0
                               ? dsigma(i, j) / (2.0 * cache.sigma_l(i, j))
                               : 0.0;
        grads.U = dlogits.transpose() * cache.H +
                  2.0 * cache.alpha_head *
                      (dT.transpose() * cache.H.array().square().matrix())
                          .cwiseProduct(head.U);
        dH = dlogits * head.U +
             2.0 * cache.alpha_head *
                 (dT * head.U.array().square().matrix()).cwiseProduct(cache.H);
        grads.log_alpha += 0.5 * dsigma.cwiseProduct(cache.sigma_l).sum();
    } else {
        grads.U = dlogits.transpose() * cache.H;
        dH = dlogits * head.U;
    }

    // Batch norm backward.
    const Eigen::ArrayXd istd =
        (cache.var.array() + model.bn.epsilon).sqrt().inverse();
    grads.gamma = dH.cwiseProduct(cache.xhat).colwise().sum().transpose();
    grads.beta_affine = dH.colwise().sum().transpose();
    const Matrix dxhat =
        (dH.array().rowwise() * model.bn.gamma.transpose().array()).matrix();
    Matrix dA;
    if (cache.bn_batch) {
        const Vector sum_dxhat = dxhat.colwise().sum().transpose();
        const Vector sum_dxhat_xhat =
            dxhat.cwiseProduct(cache.xhat).colwise().sum().transpose();
        dA = ((dxhat * static_cast<double>(B)).rowwise() - sum_dxhat.transpose() -
              (cache.xhat.array().rowwise() * sum_dxhat_xhat.transpose().array())
                  .matrix())
                 .array()
                 .rowwise() *
             (istd.transpose() / static_cast<double>(B));
    } else {
        dA = (dxhat.array().rowwise() * istd.transpose()).matrix();
    }

    // Stage 1 backward.
    if (cache.mode == ForwardMode::train_sample) {
        const double sd = std::sqrt(cache.alpha_in);
        grads.L = dA.transpose() *
                  (cache.Z.array() * (1.0 + sd * cache.eps_in.array())).matrix();
    } else if (cache.mode == ForwardMode::train_lrt) {
        const Matrix dsigma = dA.cwiseProduct(cache.eps_in);
        Matrix dS(dsigma.rows(), dsigma.cols());
        for (Eigen::Index i = 0; i < dS.rows(); ++i)
            for (Eigen::Index j = 0; j < dS.cols(); ++j)
                dS(i, j) = cache.sigma_a(i, j) > 0.0
                               ? dsigma(i, j) / (2.0 * cache.sigma_a(i, j))
                               : 0.0;
        grads.L = dA.transpose() * cache.Z +
                  2.0 * cache.alpha_in *
                      (dS.transpose() * cache.Z.array().square().matrix())
                          .cwiseProduct(model.L);
    } else {
        grads.L = dA.transpose() * cache.Z;
    }
}

double minibatch_loss_impl(const MultiStudyModel& model, std::size_t study,
                           const Matrix& Z, const std::vector<int>& labels,
                           const MinibatchOptions& opts, Rng& rng,
                           ModelGrads* grads, BatchNormState* bn_update) {
    const auto& head = model.heads.at(study);
    for (int y : labels)
        if (y < 0 || y >= head.U.rows())
            throw data_error("label out of range for study '" + head.study_id + "'");

    const BnStats bn = opts.bn.value_or(
        opts.mode == ForwardMode::eval ? BnStats::running : BnStats::batch);
    ForwardCache cache;
    forward_pass(model, study, Z, opts.mode, bn, &rng, cache, bn_update);

    Matrix dlogits;
    double loss = softmax_nll(cache.logits, labels, grads ? &dlogits : nullptr);

    if (grads) {
        backward_pass(model, study, cache, dlogits, *grads);
    }
    if (opts.lambda_l2 > 0.0) {
        loss += 0.5 * opts.lambda_l2 *
                (model.L.squaredNorm() / opts.z_norm +
                 head.U.squaredNorm() / opts.pow_size);
        if (grads) {
            grads->L += (opts.lambda_l2 / opts.z_norm) * model.L;
            grads->U += (opts.lambda_l2 / opts.pow_size) * head.U;
        }
    }
    if (opts.variational) {
        loss += kl_penalty({head.alpha}) / opts.pow_size;
        if (grads)
            grads->log_alpha += kl_penalty_grad_log_alpha(head.alpha) / opts.pow_size;
    }
    if (!std::isfinite(loss))
        throw numeric_error("non-finite minibatch loss on study '" +
                            head.study_id + "'");
    return loss;
}

}  // namespace

BatchNormState BatchNormState::identity(Eigen::Index l) {
    BatchNormState bn;
    bn.running_mean = Vector::Zero(l);
    bn.running_var = Vector::Ones(l);
    bn.gamma = Vector::Ones(l);
    bn.beta_affine = Vector::Zero(l);
    return bn;
}

std::size_t MultiStudyModel::head_index(const std::string& study_id) const {
    for (std::size_t i = 0; i < heads.size(); ++i)
        if (heads[i].study_id == study_id) return i;
    throw data_error("model has no head for study '" + study_id + "'");
}

void TrainConfig::validate() const {
    if (!(beta >= 0.0 && beta <= 1.0)) throw config_error("beta must be in [0,1]");
    if (!(p_in >= 0.0 && p_in < 1.0)) throw config_error("p_in must be in [0,1)");
    if (!(p_head_init >= 0.0 && p_head_init < 1.0))
        throw config_error("p_head_init must be in [0,1)");
    if (batch_size < 1) throw config_error("batch_size must be >= 1");
    if (!(lr > 0.0)) throw config_error("lr must be > 0");
    if (l < 1) throw config_error("l must be >= 1");
    if (lambda_l2 < 0.0) throw config_error("lambda_l2 must be >= 0");
}

StudyWeights study_weights(const std::vector<long long>& sizes, double beta) {
    StudyWeights w;
    for (long long n : sizes) {
        if (n <= 0) throw config_error("study sizes must be positive");
        w.pow_size.push_back(std::pow(static_cast<double>(n), beta));
    }
    w.z = std::accumulate(w.pow_size.begin(), w.pow_size.end(), 0.0);
    return w;
}

std::size_t sample_study(const std::vector<long long>& sizes, double beta, Rng& rng) {
    const StudyWeights w = study_weights(sizes, beta);
    return sample_index(w.pow_size, rng);
}

std::vector<double> effective_sample_size(const std::vector<long long>& sizes,
                                          double beta) {
    const StudyWeights w = study_weights(sizes, beta);
    const double total = static_cast<double>(
        std::accumulate(sizes.begin(), sizes.end(), 0LL));
    std::vector<double> eff;
    eff.reserve(sizes.size());
    for (double ps : w.pow_size) eff.push_back(total * ps / w.z);
    return eff;
}

double rate_to_variance(double p) {
    if (!(p >= 0.0 && p < 1.0)) throw config_error("dropout rate must be in [0,1)");
    return p / (1.0 - p);
}

Matrix forward_logits(const MultiStudyModel& model, std::size_t study,
                      const Matrix& X, ForwardMode mode, Rng* rng,
                      std::optional<BnStats> bn) {
    if (X.rows() == 0) throw data_error("empty batch");
    if (X.cols() != model.p())
        throw data_error("batch has " + std::to_string(X.cols()) +
                         " features, model expects " + std::to_string(model.p()));
    const Matrix Z = X * model.D.D.transpose();
    const BnStats stats =
        bn.value_or(mode == ForwardMode::eval ? BnStats::running : BnStats::batch);
    ForwardCache cache;
    forward_pass(model, study, Z, mode, stats, rng, cache, nullptr);
    return cache.logits;
}

void adam_step(AdamState& state, Matrix& param, const Matrix& grad, double lr,
               double beta1, double beta2, double eps) {
    if (param.rows() != grad.rows() || param.cols() != grad.cols())
        throw config_error("adam: parameter/gradient shape mismatch");
    if (state.t == 0) {
        state.m = Eigen::ArrayXXd::Zero(param.rows(), param.cols());
        state.v = Eigen::ArrayXXd::Zero(param.rows(), param.cols());
    }
    ++state.t;
    state.m = beta1 * state.m + (1.0 - beta1) * grad.array();
    state.v = beta2 * state.v + (1.0 - beta2) * grad.array().square();
    const double bc1 = 1.0 - std::pow(beta1, static_cast<double>(state.t));
    const double bc2 = 1.0 - std::pow(beta2, static_cast<double>(state.t));
    param.array() -= lr * (state.m / bc1) / ((state.v / bc2).sqrt() + eps);
}

double kl_penalty(const std::vector<double>& alpha_study) {
    const double anchor = mdkl(std::log(kAlphaFloor));
    double total = 0.0;
    for (double alpha : alpha_study) {
        double a = alpha;
        if (a < kAlphaFloor || a > kAlphaCeil) {
            std::cerr << "warning: clipping dropout variance alpha=" << a
                      << " into [1e-8, 1]\n";
            a = std::clamp(a, kAlphaFloor, kAlphaCeil);
        }
        total += anchor - mdkl(std::log(a));
    }
    return total;
}

double kl_penalty_grad_log_alpha(double alpha) {
    return -mdkl_grad(std::log(alpha));
}

double minibatch_loss(const MultiStudyModel& model, std::size_t study,
                      const Matrix& X, const std::vector<int>& labels,
                      const MinibatchOptions& opts, Rng& rng, ModelGrads* grads) {
    if (X.rows() == 0) throw data_error("empty batch");
    if (static_cast<std::size_t>(X.rows()) != labels.size())
        throw data_error("batch/label size mismatch");
    const Matrix Z = X * model.D.D.transpose();
    return minibatch_loss_impl(model, study, Z, labels, opts, rng, grads, nullptr);
}

namespace {

MultiStudyModel init_model(const Corpus& corpus, const Dictionary& D,
                           const Matrix& L_init, const TrainConfig& cfg,
                           Rng& rng) {
    MultiStudyModel model;
    model.D = D;
    model.L = L_init;
    model.bn = BatchNormState::identity(cfg.l);
    model.alpha_in =
        cfg.dropout_mode == DropoutMode::none ? 0.0 : rate_to_variance(cfg.p_in);
    for (const auto& s : corpus.studies) {
        StudyHead head;
        head.study_id = s.id;
        head.class_names = s.contrast_names;
        const int c = s.n_contrasts();
        const double limit = std::sqrt(6.0 / static_cast<double>(cfg.l + c));
        head.U.resize(c, cfg.l);
        for (int i = 0; i < c; ++i)
            for (Eigen::Index h = 0; h < cfg.l; ++h)
                head.U(i, h) = limit * (2.0 * rng.uniform() - 1.0);
        head.b = Vector::Zero(c);
        head.alpha = cfg.dropout_mode == DropoutMode::none
                         ? 0.0
                         : std::clamp(rate_to_variance(cfg.p_head_init),
                                      kAlphaFloor, kAlphaCeil);
        model.heads.push_back(std::move(head));
    }
    return model;
}

TrainedRun train_core(const Corpus& corpus, const Dictionary& D,
                      const Matrix& L_init, const TrainConfig& cfg) {
    cfg.validate();
    corpus.validate();
    D.validate();
    if (corpus.n_features() != D.p())
        throw data_error("corpus p differs from dictionary p");
    if (L_init.rows() != cfg.l || L_init.cols() != D.k())
        throw config_error("L_init must be l x k");

    Rng master(cfg.seed);
    Rng rng_init = master.derive(1);
    Rng rng_study = master.derive(2);
    Rng rng_noise = master.derive(3);

    MultiStudyModel model = init_model(corpus, D, L_init, cfg, rng_init);

    const std::size_t N = corpus.n_studies();
    std::vector<Matrix> loadings(N);
    std::vector<long long> sizes(N);
    for (std::size_t j = 0; j < N; ++j) {
        loadings[j] = corpus.studies[j].data * D.D.transpose();
        sizes[j] = corpus.studies[j].n_maps();
    }
    const StudyWeights weights = study_weights(sizes, cfg.beta);

    // Without-replacement cyclic iterators, reshuffled on exhaustion; a
    // trailing short batch is emitted rather than dropped.
    std::vector<Rng> shuffle_rng;
    std::vector<std::vector<Eigen::Index>> order(N);
    std::vector<std::size_t> pos(N, 0);
    for (std::size_t j = 0; j < N; ++j) {
        shuffle_rng.push_back(master.derive(100 + j));
        order[j].resize(static_cast<std::size_t>(sizes[j]));
        std::iota(order[j].begin(), order[j].end(), 0);
        shuffle_rng[j].shuffle(order[j]);
    }

    AdamState st_L, st_gamma, st_beta;
    std::vector<AdamState> st_U(N), st_b(N), st_alpha(N);

    const long long budget = cfg.max_samples_seen > 0
                                 ? cfg.max_samples_seen
                                 : 200LL * corpus.total_maps();

    MinibatchOptions opts;
    opts.lambda_l2 = cfg.lambda_l2;
    opts.variational = cfg.dropout_mode == DropoutMode::variational;
    opts.z_norm = weights.z;
    switch (cfg.dropout_mode) {
        case DropoutMode::none:
        case DropoutMode::gaussian_fixed:
            opts.mode = ForwardMode::train_sample;
            break;
        case DropoutMode::variational:
            opts.mode = ForwardMode::train_lrt;
            break;
    }
    opts.bn = BnStats::batch;

    TrainedRun run;
    run.seed = cfg.seed;

    while (run.samples_seen < budget) {
        const std::size_t j = sample_study(sizes, cfg.beta, rng_study);
        const auto n_j = static_cast<std::size_t>(sizes[j]);
        const std::size_t take =
            std::min<std::size_t>(static_cast<std::size_t>(cfg.batch_size), n_j - pos[j]);

        Matrix Zb(static_cast<Eigen::Index>(take), D.k());
        std::vector<int> yb(take);
        for (std::size_t i = 0; i < take; ++i) {
            const Eigen::Index row = order[j][pos[j] + i];
            Zb.row(static_cast<Eigen::Index>(i)) = loadings[j].row(row);
            yb[i] = corpus.studies[j].labels[static_cast<std::size_t>(row)];
        }
        pos[j] += take;
        if (pos[j] == n_j) {
            shuffle_rng[j].shuffle(order[j]);
            pos[j] = 0;
        }

        opts.pow_size = weights.pow_size[j];
        ModelGrads grads;
        const double loss = minibatch_loss_impl(model, j, Zb, yb, opts, rng_noise,
                                                &grads, &model.bn);

        adam_step(st_L, model.L, grads.L, cfg.lr, cfg.beta1, cfg.beta2, cfg.eps_adam);
        adam_step(st_U[j], model.heads[j].U, grads.U, cfg.lr, cfg.beta1, cfg.beta2,
                  cfg.eps_adam);
        {
            Matrix b_mat = model.heads[j].b;
            adam_step(st_b[j], b_mat, Matrix(grads.b), cfg.lr, cfg.beta1, cfg.beta2,
                      cfg.eps_adam);
            model.heads[j].b = b_mat;
        }
        {
            Matrix g_mat = model.bn.gamma;
            adam_step(st_gamma, g_mat, Matrix(grads.gamma), cfg.lr, cfg.beta1,
                      cfg.beta2, cfg.eps_adam);
            model.bn.gamma = g_mat;
            Matrix d_mat = model.bn.beta_affine;
            adam_step(st_beta, d_mat, Matrix(grads.beta_affine), cfg.lr, cfg.beta1,
                      cfg.beta2, cfg.eps_adam);
            model.bn.beta_affine = d_mat;
        }
        if (opts.variational) {
            Matrix t_mat(1, 1);
            t_mat(0, 0) = std::log(model.heads[j].alpha);
            Matrix t_grad(1, 1);
            t_grad(0, 0) = grads.log_alpha;
            adam_step(st_alpha[j], t_mat, t_grad, cfg.lr, cfg.beta1, cfg.beta2,
                      cfg.eps_adam);
            model.heads[j].alpha =
                std::clamp(std::exp(t_mat(0, 0)), kAlphaFloor, kAlphaCeil);
        }

        run.loss_trace.push_back(loss);
        run.samples_seen += static_cast<long long>(take);
    }

    run.model = std::move(model);
    return run;
}

}  // namespace

TrainedRun fit_multistudy(const Corpus& corpus, const Dictionary& D,
                          const Matrix& L_init, const TrainConfig& config) {
    TrainConfig cfg = config;
    cfg.lambda_l2 = 0.0;
    return train_core(corpus, D, L_init, cfg);
}

TrainedRun fit_l2_factored(const Corpus& corpus, const Dictionary& D,
                           const Matrix& L_init, const TrainConfig& config) {
    return train_core(corpus, D, L_init, config);
}

void fold_head(const MultiStudyModel& model, std::size_t study, Matrix& W_dict,
               Vector& b_fold) {
    const auto& head = model.heads.at(study);
    const Eigen::ArrayXd istd =
        (model.bn.running_var.array() + model.bn.epsilon).sqrt().inverse();
    const Vector scale = (model.bn.gamma.array() * istd).matrix();
    const Vector shift =
        (model.bn.beta_affine.array() -
         model.bn.gamma.array() * model.bn.running_mean.array() * istd)
            .matrix();
    const Matrix U_scaled =
        (head.U.array().rowwise() * scale.transpose().array()).matrix();
    W_dict = U_scaled * model.L;
    b_fold = head.b + head.U * shift;
}

std::vector<int> predict(const MultiStudyModel& model, std::size_t study,
                         const Matrix& X) {
    return argmax_rows(forward_logits(model, study, X, ForwardMode::eval));
}

NoTransferReport verify_no_transfer_construction(const Corpus& corpus,
                                                 const Dictionary& D,
                                                 Eigen::Index l, double beta,
                                                 double tol) {
    corpus.validate();
    Eigen::Index c_total = 0;
    for (const auto& s : corpus.studies) c_total += s.n_contrasts();
    if (l < c_total)
        throw config_error("no-transfer construction needs l >= total classes (" +
                           std::to_string(c_total) + "), got l=" + std::to_string(l));

    SolverConfig tight;
    tight.grad_tol = 1e-10;
    tight.max_iters = 3000;

    MultiStudyModel model;
    model.D = D;
    model.L = Matrix::Zero(l, D.k());
    model.alpha_in = 0.0;
    model.bn = BatchNormState::identity(l);
    model.bn.epsilon = 0.0;  // exact identity for the equality check

    std::vector<long long> sizes;
    std::vector<double> separate_opt;
    Eigen::Index offset = 0;
    for (const auto& s : corpus.studies) {
        const LinearDecoder dec = fit_reduced_decoder(s, D, 0.0, tight);
        model.L.middleRows(offset, dec.W.rows()) = dec.W;

        StudyHead head;
        head.study_id = s.id;
        head.class_names = s.contrast_names;
        head.U = Matrix::Zero(dec.W.rows(), l);
        for (Eigen::Index r = 0; r < dec.W.rows(); ++r) head.U(r, offset + r) = 1.0;
        head.b = dec.b;
        head.alpha = 0.0;
        model.heads.push_back(std::move(head));

        const Matrix loadings = s.data * D.D.transpose();
        const Matrix logits =
            (loadings * dec.W.transpose()).rowwise() + dec.b.transpose();
        separate_opt.push_back(softmax_nll(logits, s.labels));
        sizes.push_back(s.n_maps());
        offset += dec.W.rows();
    }

    const StudyWeights w = study_weights(sizes, beta);
    NoTransferReport report;
    for (std::size_t j = 0; j < corpus.n_studies(); ++j) {
        const Matrix logits = forward_logits(model, j, corpus.studies[j].data,
                                             ForwardMode::eval);
        report.joint_objective +=
            w.pow_size[j] * softmax_nll(logits, corpus.studies[j].labels);
        report.separate_total += w.pow_size[j] * separate_opt[j];
    }
    report.rel_error = std::abs(report.joint_objective - report.separate_total) /
                       std::max(std::abs(report.separate_total), 1e-12);
    report.passed = report.rel_error < tol;
    return report;
}

}  // namespace cogdec
