#pragma once

#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <utility>
#include <vector>

namespace cogdec {

// Fraction of exact matches.
double accuracy(const std::vector<int>& pred, const std::vector<int>& truth);

// One-vs-rest balanced accuracy for class y:
// (sensitivity + specificity) / 2, chance level 0.5.
double balanced_accuracy(const std::vector<int>& pred,
                         const std::vector<int>& truth, int y);

// Linear-interpolation quantile of unsorted values, q in [0,1].
double quantile(std::vector<double> values, double q);

struct GainSummary {
    double median = 0.0;
    double q25 = 0.0;
    double q75 = 0.0;
    double mean = 0.0;
    double fraction_positive = 0.0;
    std::size_t count = 0;
};

// (study, split) -> score
using ScoreTable = std::map<std::pair<std::string, int>, double>;

// Summary of {score - baseline} over matched keys; throws on key mismatch.
GainSummary gain_summary(const ScoreTable& scores, const ScoreTable& baseline);

struct EvaluationReport {
    struct AccuracyRow {
        std::string study;
        int split = 0;
        double accuracy = 0.0;
    };
    struct BalancedRow {
        std::string study;
        std::string contrast;
        double balanced_accuracy = 0.0;
    };
    std::vector<AccuracyRow> accuracy_rows;
    std::vector<BalancedRow> balanced_rows;
    std::string baseline_name;
    std::optional<GainSummary> gains;

    ScoreTable score_table() const;
    // accuracy.csv, balanced.csv and summary.txt under dir.
    void write_csv(const std::filesystem::path& dir) const;
};

}  // namespace cogdec
