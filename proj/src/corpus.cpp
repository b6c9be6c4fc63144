#include "cogdec/corpus.hpp"

#include <algorithm>
#include <fstream>
#include <map>
#include <set>
#include <sstream>
#include <unordered_map>
#include <unordered_set>

#include <json.hpp>

#include "cogdec/errors.hpp"
#include "cogdec/rng.hpp"

namespace cogdec {

namespace {

std::vector<std::string> read_lines(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw data_error("missing file: " + path.string());
    std::vector<std::string> lines;
    std::string line;
    while (std::getline(in, line)) {
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (!line.empty()) lines.push_back(line);
    }
    return lines;
}

}  // namespace

int Study::n_subjects() const {
    return static_cast<int>(unique_subjects().size());
}

std::vector<std::string> Study::unique_subjects() const {
    std::vector<std::string> out;
    std::unordered_set<std::string> seen;
    for (const auto& s : subject_ids) {
        if (seen.insert(s).second) out.push_back(s);
    }
    return out;
}

void Study::validate() const {
    const auto n = static_cast<std::size_t>(data.rows());
    if (labels.size() != n)
        throw data_error("study '" + id + "': shape mismatch, " +
                         std::to_string(labels.size()) + " labels for " +
                         std::to_string(n) + " rows");
    if (subject_ids.size() != n)
        throw data_error("study '" + id + "': shape mismatch, " +
                         std::to_string(subject_ids.size()) + " subject ids for " +
                         std::to_string(n) + " rows");
    const int c = n_contrasts();
    if (c < 1) throw data_error("study '" + id + "': no contrasts declared");
    std::set<std::pair<std::string, int>> seen;
    for (std::size_t i = 0; i < n; ++i) {
        if (labels[i] < 0 || labels[i] >= c)
            throw data_error("study '" + id + "': label out of range at row " +
                             std::to_string(i) + " (value " +
                             std::to_string(labels[i]) + ", " + std::to_string(c) +
                             " contrasts)");
        if (!seen.insert({subject_ids[i], labels[i]}).second)
            throw data_error("study '" + id + "': subject '" + subject_ids[i] +
                             "' repeats contrast " + std::to_string(labels[i]));
    }
    if (!data.allFinite())
        throw data_error("study '" + id + "': non-finite values in data");
}

Eigen::Index Corpus::total_maps() const {
    Eigen::Index n = 0;
    for (const auto& s : studies) n += s.n_maps();
    return n;
}

const Study& Corpus::study(const std::string& id) const {
    for (const auto& s : studies)
        if (s.id == id) return s;
    throw data_error("unknown study id: " + id);
}

bool Corpus::has_study(const std::string& id) const {
    return std::any_of(studies.begin(), studies.end(),
                       [&](const Study& s) { return s.id == id; });
}

void Corpus::validate() const {
    std::unordered_set<std::string> ids;
    for (const auto& s : studies) {
        if (!ids.insert(s.id).second)
            throw data_error("duplicate study id: " + s.id);
        s.validate();
        if (s.n_features() != n_features())
            throw data_error("study '" + s.id + "': shape mismatch, p=" +
                             std::to_string(s.n_features()) + " differs from corpus p=" +
                             std::to_string(n_features()));
    }
}

Corpus load_corpus(const std::filesystem::path& manifest_path) {
    std::ifstream in(manifest_path);
    if (!in) throw data_error("missing manifest: " + manifest_path.string());
    nlohmann::json manifest;
    try {
        in >> manifest;
    } catch (const nlohmann::json::exception& e) {
        throw data_error("bad manifest " + manifest_path.string() + ": " + e.what());
    }
    if (!manifest.contains("studies") || !manifest["studies"].is_array())
        throw data_error("manifest missing 'studies' array: " + manifest_path.string());
    const Eigen::Index p = manifest.value("p", Eigen::Index{0});
    const auto base = manifest_path.parent_path();

    Corpus corpus;
    for (const auto& entry : manifest["studies"]) {
        Study s;
        s.id = entry.at("id").get<std::string>();
        s.contrast_names = entry.at("contrasts").get<std::vector<std::string>>();
        s.data = read_matrix(base / entry.at("matrix").get<std::string>());
        if (p > 0 && s.data.cols() != p)
            throw data_error("study '" + s.id + "': shape mismatch, matrix has " +
                             std::to_string(s.data.cols()) + " cols, manifest declares p=" +
                             std::to_string(p));
        for (const auto& line : read_lines(base / entry.at("labels").get<std::string>())) {
            try {
                s.labels.push_back(std::stoi(line));
            } catch (const std::exception&) {
                throw data_error("study '" + s.id + "': bad label line '" + line + "'");
            }
        }
        s.subject_ids = read_lines(base / entry.at("subjects").get<std::string>());
        corpus.studies.push_back(std::move(s));
    }
    corpus.validate();
    return corpus;
}

void save_corpus(const Corpus& corpus, const std::filesystem::path& dir) {
    std::filesystem::create_directories(dir);
    nlohmann::json manifest;
    manifest["p"] = corpus.n_features();
    manifest["studies"] = nlohmann::json::array();
    for (const auto& s : corpus.studies) {
        const std::string stem = s.id;
        write_matrix(dir / (stem + "_X.mat"), s.data, MatrixPrecision::f32);
        {
            std::ofstream out(dir / (stem + "_labels.txt"));
            for (int y : s.labels) out << y << "\n";
        }
        {
            std::ofstream out(dir / (stem + "_subjects.txt"));
            for (const auto& sub : s.subject_ids) out << sub << "\n";
        }
        manifest["studies"].push_back({{"id", s.id},
                                       {"contrasts", s.contrast_names},
                                       {"matrix", stem + "_X.mat"},
                                       {"labels", stem + "_labels.txt"},
                                       {"subjects", stem + "_subjects.txt"}});
    }
    std::ofstream out(dir / "manifest.json");
    out << manifest.dump(2) << "\n";
}

SplitPair half_split(const Corpus& corpus, std::uint64_t seed, double fraction) {
    if (!(fraction > 0.0 && fraction < 1.0))
        throw config_error("split fraction must lie in (0,1)");
    corpus.validate();

    // Feasibility first, so the error names the offending study.
    for (const auto& s : corpus.studies) {
        if (s.n_subjects() < 2)
            throw data_error("split infeasible: study '" + s.id +
                             "' has fewer than 2 subjects");
    }

    // A subject id names the same person wherever it appears, so each unique
    // id is one atomic group. 0 = unassigned, 1 = train, 2 = test.
    std::unordered_map<std::string, int> side;

    Rng master(seed);
    for (std::size_t j = 0; j < corpus.studies.size(); ++j) {
        const auto& s = corpus.studies[j];
        auto subjects = s.unique_subjects();
        const int n = static_cast<int>(subjects.size());
        // Round half toward train; keep both sides nonempty.
        int target = static_cast<int>(std::floor(fraction * n + 0.5));
        target = std::clamp(target, 1, n - 1);

        Rng rng = master.derive(j);
        rng.shuffle(subjects);

        int assigned_train = 0;
        for (const auto& sub : subjects) {
            auto it = side.find(sub);
            if (it != side.end() && it->second == 1) ++assigned_train;
        }
        for (const auto& sub : subjects) {
            if (side.count(sub)) continue;
            if (assigned_train < target) {
                side[sub] = 1;
                ++assigned_train;
            } else {
                side[sub] = 2;
            }
        }
    }

    SplitPair pair;
    pair.seed = seed;
    pair.fraction = fraction;
    for (const auto& s : corpus.studies) {
        Study tr, te;
        tr.id = te.id = s.id;
        tr.contrast_names = te.contrast_names = s.contrast_names;
        std::vector<Eigen::Index> tr_rows, te_rows;
        for (Eigen::Index i = 0; i < s.n_maps(); ++i) {
            (side.at(s.subject_ids[static_cast<std::size_t>(i)]) == 1 ? tr_rows : te_rows)
                .push_back(i);
        }
        if (tr_rows.empty() || te_rows.empty())
            throw data_error("split infeasible: study '" + s.id +
                             "' ends with an empty side under shared-subject constraints");
        auto take = [&](Study& dst, const std::vector<Eigen::Index>& rows) {
            dst.data.resize(static_cast<Eigen::Index>(rows.size()), s.data.cols());
            for (std::size_t r = 0; r < rows.size(); ++r) {
                dst.data.row(static_cast<Eigen::Index>(r)) = s.data.row(rows[r]);
                dst.labels.push_back(s.labels[static_cast<std::size_t>(rows[r])]);
                dst.subject_ids.push_back(s.subject_ids[static_cast<std::size_t>(rows[r])]);
            }
        };
        take(tr, tr_rows);
        take(te, te_rows);
        pair.train.studies.push_back(std::move(tr));
        pair.test.studies.push_back(std::move(te));
    }
    return pair;
}

}  // namespace cogdec
