#include "cogdec/consensus.hpp"

#include <algorithm>
#include <cmath>
#include <future>
#include <iostream>

#include "cogdec/detail/nmf_core.hpp"
#include "cogdec/errors.hpp"
#include "cogdec/softmax.hpp"

namespace cogdec {

std::size_t ConsensusModel::head_index(const std::string& study_id) const {
    for (std::size_t i = 0; i < heads.size(); ++i)
        if (heads[i].study_id == study_id) return i;
    throw data_error("consensus model has no head for study '" + study_id + "'");
}

void ConsensusModel::validate() const {
    if ((L_bar.array() < -1e-9).any())
        throw data_error("consensus layer has negative entries");
    for (Eigen::Index j = 0; j < L_bar.rows(); ++j)
        if (L_bar.row(j).lpNorm<1>() > 1.0 + 1e-9)
            throw data_error("consensus row " + std::to_string(j) +
                             " leaves the l1 ball");
}

std::vector<TrainedRun> run_ensemble(const Corpus& corpus, const Dictionary& D,
                                     const Matrix& L_init, const TrainConfig& config,
                                     int r, std::uint64_t seed0, int threads,
                                     std::vector<std::string>* failures) {
    if (r < 1) throw config_error("ensemble needs r >= 1");
    threads = std::max(1, threads);

    std::vector<std::optional<TrainedRun>> slots(static_cast<std::size_t>(r));
    std::vector<std::string> errors(static_cast<std::size_t>(r));

    auto run_one = [&](int s) {
        TrainConfig cfg = config;
        cfg.seed = seed0 + static_cast<std::uint64_t>(s);
        try {
            slots[static_cast<std::size_t>(s)] =
                fit_l2_factored(corpus, D, L_init, cfg);
        } catch (const std::exception& e) {
            errors[static_cast<std::size_t>(s)] =
                "run seed " + std::to_string(cfg.seed) + ": " + e.what();
        }
    };

    if (threads == 1) {
        for (int s = 0; s < r; ++s) run_one(s);
    } else {
        // Fixed seed-to-run mapping keeps results scheduling-independent.
        std::vector<std::future<void>> pending;
        for (int s = 0; s < r; ++s) {
            pending.push_back(std::async(std::launch::async, run_one, s));
            if (static_cast<int>(pending.size()) == threads) {
                for (auto& f : pending) f.get();
                pending.clear();
            }
        }
        for (auto& f : pending) f.get();
    }

    std::vector<TrainedRun> runs;
    for (int s = 0; s < r; ++s) {
        if (slots[static_cast<std::size_t>(s)]) {
            runs.push_back(std::move(*slots[static_cast<std::size_t>(s)]));
        } else {
            std::cerr << "warning: ensemble " << errors[static_cast<std::size_t>(s)]
                      << "\n";
            if (failures) failures->push_back(errors[static_cast<std::size_t>(s)]);
        }
    }
    if (runs.empty()) throw numeric_error("every ensemble run diverged");
    return runs;
}

std::vector<AveragedHead> average_heads(const std::vector<TrainedRun>& runs) {
    if (runs.empty()) throw config_error("average_heads needs at least one run");
    const std::size_t n_studies = runs.front().model.heads.size();
    for (const auto& run : runs)
        if (run.model.heads.size() != n_studies)
            throw data_error("ensemble runs disagree on the study set");

    std::vector<AveragedHead> out;
    for (std::size_t j = 0; j < n_studies; ++j) {
        AveragedHead avg;
        avg.study_id = runs.front().model.heads[j].study_id;
        avg.class_names = runs.front().model.heads[j].class_names;
        for (const auto& run : runs) {
            Matrix W;
            Vector b;
            fold_head(run.model, j, W, b);
            if (avg.W.size() == 0) {
                avg.W = W;
                avg.b = b;
            } else {
                if (W.rows() != avg.W.rows() || W.cols() != avg.W.cols())
                    throw data_error("ensemble runs disagree on head shapes");
                avg.W += W;
                avg.b += b;
            }
        }
        avg.W /= static_cast<double>(runs.size());
        avg.b /= static_cast<double>(runs.size());
        out.push_back(std::move(avg));
    }
    return out;
}

Matrix consensus_nmf(const Matrix& L_stack, Eigen::Index l, double lambda,
                     const Matrix& L_init, double* sparsity_out) {
    if (!(lambda > 0.0)) throw config_error("consensus NMF needs lambda > 0");
    if (L_init.rows() != l || L_init.cols() != L_stack.cols())
        throw config_error("consensus NMF init must be l x k");

    Matrix L_bar(l, L_stack.cols());
    for (Eigen::Index j = 0; j < l; ++j)
        L_bar.row(j) = simplex_project(L_init.row(j).transpose()).transpose();

    Matrix K;
    nmf_alternating_core(L_stack, L_bar, K, lambda, 0.5, 300, 1e-8);

    if (L_bar.cwiseAbs().maxCoeff() <= 0.0)
        throw numeric_error("consensus factorization collapsed to zero");

    const double zeros =
        static_cast<double>((L_bar.array() == 0.0).count()) /
        static_cast<double>(L_bar.size());
    if (zeros < 0.5 || zeros > 0.95)
        std::cerr << "warning: consensus sparsity " << zeros
                  << " outside [0.5, 0.95]; consider adjusting lambda\n";
    if (sparsity_out) *sparsity_out = zeros;
    return L_bar;
}

Matrix refit_heads(const Matrix& W_bar, const Matrix& L_bar, double jitter) {
    if (W_bar.cols() != L_bar.cols())
        throw data_error("refit: W_bar and L_bar disagree on k");
    Matrix gram = L_bar * L_bar.transpose();
    gram.diagonal().array() += jitter;
    return gram.ldlt().solve(L_bar * W_bar.transpose()).transpose();
}

double span_stability(const std::vector<Matrix>& L_list, Eigen::Index l) {
    if (L_list.size() < 2)
        throw config_error("span stability needs at least 2 matrices");
    Eigen::Index rows = 0;
    for (const auto& L : L_list) rows += L.rows();
    Matrix stack(rows, L_list.front().cols());
    Eigen::Index at = 0;
    for (const auto& L : L_list) {
        stack.middleRows(at, L.rows()) = L;
        at += L.rows();
    }
    Eigen::BDCSVD<Matrix> svd(stack);
    const Vector sv = svd.singularValues();
    const double total = sv.array().square().sum();
    if (total <= 0.0) return 1.0;
    const Eigen::Index top = std::min(l, sv.size());
    return sv.head(top).array().square().sum() / total;
}

ConsensusModel build_consensus(const std::vector<TrainedRun>& runs, double lambda,
                               const Matrix& L_init) {
    if (runs.empty()) throw config_error("consensus needs at least one run");
    const Eigen::Index l = runs.front().model.l();
    const Eigen::Index k = runs.front().model.k();

    Matrix stack(static_cast<Eigen::Index>(runs.size()) * l, k);
    for (std::size_t s = 0; s < runs.size(); ++s)
        stack.middleRows(static_cast<Eigen::Index>(s) * l, l) = runs[s].model.L;

    ConsensusModel model;
    model.D = runs.front().model.D;
    model.L_bar = consensus_nmf(stack, l, lambda, L_init, &model.sparsity);

    for (const auto& avg : average_heads(runs)) {
        ConsensusHead head;
        head.study_id = avg.study_id;
        head.class_names = avg.class_names;
        head.U = refit_heads(avg.W, model.L_bar);
        head.b = avg.b;
        model.heads.push_back(std::move(head));
    }
    model.validate();
    return model;
}

Matrix consensus_logits(const ConsensusModel& model, std::size_t study,
                        const Matrix& X) {
    const auto& head = model.heads.at(study);
    return (((X * model.D.D.transpose()) * model.L_bar.transpose()) *
            head.U.transpose())
               .rowwise() +
           head.b.transpose();
}

std::vector<int> predict(const ConsensusModel& model, std::size_t study,
                         const Matrix& X) {
    return argmax_rows(consensus_logits(model, study, X));
}

}  // namespace cogdec
