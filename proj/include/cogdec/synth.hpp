#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <utility>
#include <vector>

#include "cogdec/corpus.hpp"

namespace cogdec {

// Configuration of the shared-latent-subspace generator. Studies draw their
// class means from a common latent pool, so joint structure is real and
// transfer effects are measurable against known ground truth.
struct GenConfig {
    int n_studies = 2;
    Eigen::Index p = 100;
    Eigen::Index l_true = 4;
    std::vector<int> n_subjects;  // per study
    std::vector<int> n_contrasts; // per study
    double subject_noise_sd = 0.5;
    double voxel_noise_sd = 0.05;
    double class_sep = 1.0;
    std::vector<std::pair<int, int>> shared_subject_pairs;  // study indices
    std::uint64_t seed = 0;

    void validate() const;
};

struct GroundTruth {
    Matrix M_true;                        // l_true x p, rows in the simplex
    std::vector<std::string> study_ids;
    std::vector<Matrix> class_means;      // per study: c_j x l_true
    double subject_noise_sd = 0.0;
    double voxel_noise_sd = 0.0;
};

// Maps are x = (class_mean + subject_offset)^T M_true + voxel noise, one map
// per (subject, contrast). Deterministic in cfg.seed.
std::pair<Corpus, GroundTruth> generate_corpus(const GenConfig& cfg);

// Unlabeled draws from the same latent model (standard-normal latents), for
// dictionary learning.
Matrix generate_rest_data(const GroundTruth& gt, Eigen::Index n_samples,
                          std::uint64_t seed);

// Monte-Carlo estimate of the Bayes-optimal accuracy for one study under the
// generative model (LDA with the true class means and covariance).
double bayes_reference(const GroundTruth& gt, const std::string& study_id,
                       int n_mc, std::uint64_t seed);

void save_ground_truth(const GroundTruth& gt, const std::filesystem::path& path);
GroundTruth load_ground_truth(const std::filesystem::path& path);

}  // namespace cogdec
