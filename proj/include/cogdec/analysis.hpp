#pragma once

#include <string>
#include <vector>

#include "cogdec/consensus.hpp"
#include "cogdec/trainer.hpp"

namespace cogdec {

struct MstonAtlas {
    Matrix M;  // l x p, non-negative task-optimized networks
    std::vector<std::string> network_names;
};

// Explicit voxel-space classification maps, one row per contrast.
struct StudyMaps {
    std::string study_id;
    std::vector<std::string> contrast_names;
    Matrix W;  // c x p
    Vector b;  // c
};

struct ClassificationAtlas {
    std::vector<StudyMaps> studies;
};

// Folded linear maps W^j = U' L D (batch norm absorbed); argmax over
// W^j x + b^j reproduces the model's eval predictions.
ClassificationAtlas classification_maps(const MultiStudyModel& model);
ClassificationAtlas classification_maps(const ConsensusModel& model);

MstonAtlas mston_atlas(const ConsensusModel& model);

// Orthogonal projection onto the row span of M:
//   x_proj = M^T (M M^T)^-1 M x, with a ridge jitter for rank deficiency.
Vector project_map(const MstonAtlas& atlas, const Vector& x, double jitter = 1e-10);

struct RankedContrast {
    std::string study_id;
    std::string contrast;
    double score = 0.0;  // cosine similarity
};

// Per network, the `top` contrasts by cosine similarity between the network
// map and each classification map; ties resolved by contrast order.
// Zero-norm maps are excluded with a warning.
std::vector<std::vector<RankedContrast>> network_contrast_ranking(
    const MstonAtlas& atlas, const ClassificationAtlas& maps, int top = 20);

// Average-linkage agglomerative clustering on 1 - |cosine| distances.
struct Dendrogram {
    struct Merge {
        int a = 0;
        int b = 0;
        double distance = 0.0;
        int size = 0;
    };
    std::vector<std::string> leaf_names;
    std::vector<Merge> merges;          // n-1 rows; new cluster id = n + row
    double cophenetic_coefficient = 0.0;
};

Dendrogram cluster_maps(const ClassificationAtlas& maps);

// Mean absolute off-diagonal cosine similarity across all classification
// maps; the multi-study model should not fall below the per-study baseline.
double mean_abs_cosine(const ClassificationAtlas& maps);

}  // namespace cogdec
