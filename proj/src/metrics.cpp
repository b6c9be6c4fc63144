#include "cogdec/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>

#include "cogdec/errors.hpp"

namespace cogdec {

double accuracy(const std::vector<int>& pred, const std::vector<int>& truth) {
    if (pred.size() != truth.size())
        throw data_error("accuracy: prediction/truth length mismatch");
    if (truth.empty()) throw data_error("accuracy of empty input");
    std::size_t hits = 0;
    for (std::size_t i = 0; i < truth.size(); ++i)
        if (pred[i] == truth[i]) ++hits;
    return static_cast<double>(hits) / static_cast<double>(truth.size());
}

double balanced_accuracy(const std::vector<int>& pred,
                         const std::vector<int>& truth, int y) {
    if (pred.size() != truth.size())
        throw data_error("balanced accuracy: prediction/truth length mismatch");
    long long tp = 0, fn = 0, tn = 0, fp = 0;
    for (std::size_t i = 0; i < truth.size(); ++i) {
        const bool pos = truth[i] == y;
        const bool hat = pred[i] == y;
        if (pos && hat) ++tp;
        else if (pos && !hat) ++fn;
        else if (!pos && hat) ++fp;
        else ++tn;
    }
    if (tp + fn == 0)
        throw data_error("balanced accuracy: class " + std::to_string(y) +
                         " absent from truth");
    const double sens = static_cast<double>(tp) / static_cast<double>(tp + fn);
    // Vacuous specificity (no negatives) counts as perfect.
    const double spec = tn + fp == 0
                            ? 1.0
                            : static_cast<double>(tn) / static_cast<double>(tn + fp);
    return 0.5 * (sens + spec);
}

double quantile(std::vector<double> values, double q) {
    if (values.empty()) throw data_error("quantile of empty input");
    std::sort(values.begin(), values.end());
    const double pos = q * static_cast<double>(values.size() - 1);
    const auto lo = static_cast<std::size_t>(std::floor(pos));
    const auto hi = static_cast<std::size_t>(std::ceil(pos));
    const double frac = pos - std::floor(pos);
    return values[lo] * (1.0 - frac) + values[hi] * frac;
}

GainSummary gain_summary(const ScoreTable& scores, const ScoreTable& baseline) {
    if (scores.size() != baseline.size())
        throw data_error("gain summary: table sizes differ");
    std::vector<double> diffs;
    diffs.reserve(scores.size());
    for (const auto& [key, value] : scores) {
        auto it = baseline.find(key);
        if (it == baseline.end())
            throw data_error("gain summary: baseline is missing (" + key.first +
                             ", split " + std::to_string(key.second) + ")");
        diffs.push_back(value - it->second);
    }
    GainSummary g;
    g.count = diffs.size();
    if (diffs.empty()) return g;
    g.median = quantile(diffs, 0.5);
    g.q25 = quantile(diffs, 0.25);
    g.q75 = quantile(diffs, 0.75);
    double total = 0.0;
    std::size_t pos = 0;
    for (double d : diffs) {
        total += d;
        if (d > 0.0) ++pos;
    }
    g.mean = total / static_cast<double>(diffs.size());
    g.fraction_positive = static_cast<double>(pos) / static_cast<double>(diffs.size());
    return g;
}

ScoreTable EvaluationReport::score_table() const {
    ScoreTable table;
    for (const auto& row : accuracy_rows) table[{row.study, row.split}] = row.accuracy;
    return table;
}

namespace {
std::string fmt(double v) {
    char buf[64];
    std::snprintf(buf, sizeof buf, "%.10g", v);
    return buf;
}
}  // namespace

void EvaluationReport::write_csv(const std::filesystem::path& dir) const {
    std::filesystem::create_directories(dir);
    {
        std::ofstream out(dir / "accuracy.csv");
        out << "study,split,accuracy\n";
        for (const auto& row : accuracy_rows)
            out << row.study << "," << row.split << "," << fmt(row.accuracy) << "\n";
    }
    {
        std::ofstream out(dir / "balanced.csv");
        out << "study,contrast,balanced_accuracy\n";
        for (const auto& row : balanced_rows)
            out << row.study << "," << row.contrast << ","
                << fmt(row.balanced_accuracy) << "\n";
    }
    std::ofstream out(dir / "summary.txt");
    out << "rows: " << accuracy_rows.size() << "\n";
    if (!baseline_name.empty()) out << "baseline: " << baseline_name << "\n";
    if (gains) {
        out << "gain median: " << fmt(gains->median) << "\n";
        out << "gain q25: " << fmt(gains->q25) << "\n";
        out << "gain q75: " << fmt(gains->q75) << "\n";
        out << "gain mean: " << fmt(gains->mean) << "\n";
        out << "fraction positive: " << fmt(gains->fraction_positive) << "\n";
    }
}

}  // namespace cogdec
