#include "cogdec/analysis.hpp"

#include <algorithm>
#include <cmath>
#include <iostream>
#include <limits>
#include <numeric>

#include "cogdec/errors.hpp"

namespace cogdec {

ClassificationAtlas classification_maps(const MultiStudyModel& model) {
    ClassificationAtlas atlas;
    for (std::size_t j = 0; j < model.heads.size(); ++j) {
        StudyMaps maps;
        maps.study_id = model.heads[j].study_id;
        maps.contrast_names = model.heads[j].class_names;
        Matrix W_dict;
        fold_head(model, j, W_dict, maps.b);
        maps.W = W_dict * model.D.D;
        atlas.studies.push_back(std::move(maps));
    }
    return atlas;
}

ClassificationAtlas classification_maps(const ConsensusModel& model) {
    ClassificationAtlas atlas;
    for (const auto& head : model.heads) {
        StudyMaps maps;
        maps.study_id = head.study_id;
        maps.contrast_names = head.class_names;
        maps.W = head.U * model.L_bar * model.D.D;
        maps.b = head.b;
        atlas.studies.push_back(std::move(maps));
    }
    return atlas;
}

MstonAtlas mston_atlas(const ConsensusModel& model) {
    MstonAtlas atlas;
    atlas.M = model.mston();
    for (Eigen::Index h = 0; h < atlas.M.rows(); ++h)
        atlas.network_names.push_back("network" + std::to_string(h));
    return atlas;
}

Vector project_map(const MstonAtlas& atlas, const Vector& x, double jitter) {
    if (x.size() != atlas.M.cols())
        throw data_error("projection input has wrong dimension");
    Matrix gram = atlas.M * atlas.M.transpose();
    gram.diagonal().array() += jitter;
    return atlas.M.transpose() * gram.ldlt().solve(atlas.M * x);
}

namespace {

double cosine(const Eigen::RowVectorXd& a, const Eigen::RowVectorXd& b) {
    const double na = a.norm(), nb = b.norm();
    if (na <= 0.0 || nb <= 0.0) return 0.0;
    return a.dot(b) / (na * nb);
}

struct FlatMaps {
    Matrix W;  // total contrasts x p
    std::vector<std::string> names;
};

FlatMaps flatten(const ClassificationAtlas& maps) {
    Eigen::Index total = 0, p = 0;
    for (const auto& s : maps.studies) {
        total += s.W.rows();
        p = s.W.cols();
    }
    FlatMaps flat;
    flat.W.resize(total, p);
    Eigen::Index at = 0;
    for (const auto& s : maps.studies) {
        for (Eigen::Index r = 0; r < s.W.rows(); ++r) {
            flat.W.row(at++) = s.W.row(r);
            flat.names.push_back(s.study_id + ":" +
                                 s.contrast_names[static_cast<std::size_t>(r)]);
        }
    }
    return flat;
}

}  // namespace

std::vector<std::vector<RankedContrast>> network_contrast_ranking(
    const MstonAtlas& atlas, const ClassificationAtlas& maps, int top) {
    struct Entry {
        std::string study;
        std::string contrast;
        Eigen::Index row;
        const Matrix* W;
    };
    std::vector<Entry> entries;
    for (const auto& s : maps.studies) {
        for (Eigen::Index r = 0; r < s.W.rows(); ++r) {
            if (s.W.row(r).norm() <= 0.0) {
                std::cerr << "warning: zero-norm classification map " << s.study_id
                          << ":" << s.contrast_names[static_cast<std::size_t>(r)]
                          << " excluded from ranking\n";
                continue;
            }
            entries.push_back({s.study_id,
                               s.contrast_names[static_cast<std::size_t>(r)], r, &s.W});
        }
    }

    std::vector<std::vector<RankedContrast>> out;
    for (Eigen::Index h = 0; h < atlas.M.rows(); ++h) {
        std::vector<RankedContrast> ranked;
        ranked.reserve(entries.size());
        for (const auto& e : entries) {
            ranked.push_back(
                {e.study, e.contrast, cosine(atlas.M.row(h), e.W->row(e.row))});
        }
        // Stable sort keeps the contrast enumeration order on exact ties.
        std::stable_sort(ranked.begin(), ranked.end(),
                         [](const RankedContrast& a, const RankedContrast& b) {
                             return a.score > b.score;
                         });
        if (top > 0 && static_cast<int>(ranked.size()) > top) ranked.resize(top);
        out.push_back(std::move(ranked));
    }
    return out;
}

Dendrogram cluster_maps(const ClassificationAtlas& maps) {
    const FlatMaps flat = flatten(maps);
    const int n = static_cast<int>(flat.W.rows());
    if (n < 2) throw data_error("clustering needs at least 2 maps");

    // Condensed 1 - |cosine| distances.
    Matrix dist = Matrix::Zero(n, n);
    for (int i = 0; i < n; ++i)
        for (int j = i + 1; j < n; ++j)
            dist(i, j) = dist(j, i) =
                1.0 - std::abs(cosine(flat.W.row(i), flat.W.row(j)));

    Dendrogram dendro;
    dendro.leaf_names = flat.names;

    struct Cluster {
        int id;
        std::vector<int> members;
    };
    std::vector<Cluster> active;
    for (int i = 0; i < n; ++i) active.push_back({i, {i}});

    Matrix coph = Matrix::Zero(n, n);
    int next_id = n;
    while (active.size() > 1) {
        // Smallest average-linkage pair; deterministic tie break on ids.
        double best = std::numeric_limits<double>::infinity();
        std::size_t bi = 0, bj = 1;
        for (std::size_t i = 0; i < active.size(); ++i) {
            for (std::size_t j = i + 1; j < active.size(); ++j) {
                double sum = 0.0;
                for (int a : active[i].members)
                    for (int b : active[j].members) sum += dist(a, b);
                const double avg =
                    sum / static_cast<double>(active[i].members.size() *
                                              active[j].members.size());
                if (avg < best) {
                    best = avg;
                    bi = i;
                    bj = j;
                }
            }
        }
        for (int a : active[bi].members)
            for (int b : active[bj].members) coph(a, b) = coph(b, a) = best;

        Dendrogram::Merge merge;
        merge.a = active[bi].id;
        merge.b = active[bj].id;
        merge.distance = best;
        merge.size = static_cast<int>(active[bi].members.size() +
                                      active[bj].members.size());
        dendro.merges.push_back(merge);

        active[bi].members.insert(active[bi].members.end(),
                                  active[bj].members.begin(),
                                  active[bj].members.end());
        active[bi].id = next_id++;
        active.erase(active.begin() + static_cast<std::ptrdiff_t>(bj));
    }

    // Pearson correlation between condensed original and cophenetic distances.
    std::vector<double> x, y;
    for (int i = 0; i < n; ++i)
        for (int j = i + 1; j < n; ++j) {
            x.push_back(dist(i, j));
            y.push_back(coph(i, j));
        }
    const double mx = std::accumulate(x.begin(), x.end(), 0.0) / x.size();
    const double my = std::accumulate(y.begin(), y.end(), 0.0) / y.size();
    double sxy = 0.0, sxx = 0.0, syy = 0.0;
    for (std::size_t i = 0; i < x.size(); ++i) {
        sxy += (x[i] - mx) * (y[i] - my);
        sxx += (x[i] - mx) * (x[i] - mx);
        syy += (y[i] - my) * (y[i] - my);
    }
    dendro.cophenetic_coefficient =
        sxx > 0.0 && syy > 0.0 ? sxy / std::sqrt(sxx * syy) : 1.0;
    return dendro;
}

double mean_abs_cosine(const ClassificationAtlas& maps) {
    const FlatMaps flat = flatten(maps);
    const Eigen::Index n = flat.W.rows();
    if (n < 2) return 0.0;
    double total = 0.0;
    long long pairs = 0;
    for (Eigen::Index i = 0; i < n; ++i)
        for (Eigen::Index j = i + 1; j < n; ++j) {
            total += std::abs(cosine(flat.W.row(i), flat.W.row(j)));
            ++pairs;
        }
    return total / static_cast<double>(pairs);
}

}  // namespace cogdec
