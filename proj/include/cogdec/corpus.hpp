#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "cogdec/matrix_io.hpp"

namespace cogdec {

// One study: a labeled set of statistical maps, one row per map. Labels
// index into contrast_names; subject_ids gives the acquiring subject per map.
struct Study {
    std::string id;
    Matrix data;                             // nmaps x p, row = one z-map
    std::vector<int> labels;                 // nmaps, in [0, n_contrasts)
    std::vector<std::string> subject_ids;    // nmaps
    std::vector<std::string> contrast_names; // n_contrasts

    Eigen::Index n_maps() const { return data.rows(); }
    Eigen::Index n_features() const { return data.cols(); }
    int n_contrasts() const { return static_cast<int>(contrast_names.size()); }
    int n_subjects() const;

    std::vector<std::string> unique_subjects() const;

    // Throws data_error on any violated invariant.
    void validate() const;
};

struct Corpus {
    std::vector<Study> studies;

    Eigen::Index n_features() const {
        return studies.empty() ? 0 : studies.front().n_features();
    }
    std::size_t n_studies() const { return studies.size(); }
    Eigen::Index total_maps() const;

    const Study& study(const std::string& id) const;
    bool has_study(const std::string& id) const;
    void validate() const;
};

struct SplitPair {
    Corpus train;
    Corpus test;
    std::uint64_t seed = 0;
    double fraction = 0.5;
};

// Reads a JSON manifest referencing per-study label / subject / matrix files.
// Maps are used exactly as stored; no standardization is applied.
Corpus load_corpus(const std::filesystem::path& manifest_path);

// Writes a corpus in the manifest + container layout load_corpus reads.
void save_corpus(const Corpus& corpus, const std::filesystem::path& dir);

// Splits subjects of every study into train/test. Subjects appearing in
// several studies are grouped first (union-find over (study, subject) nodes
// keyed by subject id) and each group lands on one side everywhere. With an
// odd subject count the extra subject goes to train. Deterministic in
// (corpus, seed, fraction).
SplitPair half_split(const Corpus& corpus, std::uint64_t seed, double fraction = 0.5);

}  // namespace cogdec
