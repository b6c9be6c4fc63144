#pragma once

#include <filesystem>
#include <random>
#include <string>

#include "cogdec/corpus.hpp"
#include "cogdec/rng.hpp"

namespace cogdec::testing {

// Unique scratch directory, removed on destruction.
struct TempDir {
    std::filesystem::path path;
    TempDir() {
        std::random_device rd;
        path = std::filesystem::temp_directory_path() /
               ("cogdec-test-" + std::to_string(rd()) + "-" + std::to_string(rd()));
        std::filesystem::create_directories(path);
    }
    ~TempDir() {
        std::error_code ec;
        std::filesystem::remove_all(path, ec);
    }
    TempDir(const TempDir&) = delete;
    TempDir& operator=(const TempDir&) = delete;
};

inline Matrix random_matrix(Eigen::Index rows, Eigen::Index cols, Rng& rng,
                            double scale = 1.0) {
    Matrix m(rows, cols);
    for (Eigen::Index i = 0; i < rows; ++i)
        for (Eigen::Index j = 0; j < cols; ++j) m(i, j) = scale * rng.normal();
    return m;
}

// Small hand-built study: n_subjects x c maps, one map per (subject,
// contrast), Gaussian features shifted by a per-class mean on feature 0.
inline Study make_study(const std::string& id, int n_subjects, int c,
                        Eigen::Index p, std::uint64_t seed, double sep = 3.0) {
    Rng rng(seed);
    Study s;
    s.id = id;
    for (int y = 0; y < c; ++y) s.contrast_names.push_back("c" + std::to_string(y));
    s.data.resize(static_cast<Eigen::Index>(n_subjects) * c, p);
    Eigen::Index row = 0;
    for (int t = 0; t < n_subjects; ++t) {
        for (int y = 0; y < c; ++y, ++row) {
            for (Eigen::Index v = 0; v < p; ++v) s.data(row, v) = rng.normal();
            s.data(row, y % p) += sep;
            s.labels.push_back(y);
            s.subject_ids.push_back(id + "_s" + std::to_string(t));
        }
    }
    return s;
}

inline Corpus make_corpus(int n_studies, int n_subjects, int c, Eigen::Index p,
                          std::uint64_t seed) {
    Corpus corpus;
    for (int j = 0; j < n_studies; ++j)
        corpus.studies.push_back(
            make_study("study" + std::to_string(j), n_subjects, c, p, seed + 17 * j));
    return corpus;
}

}  // namespace cogdec::testing
