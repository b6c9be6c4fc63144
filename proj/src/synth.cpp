#include "cogdec/synth.hpp"

#include <algorithm>
#include <map>
#include <numeric>
#include <set>

#include <json.hpp>

#include "cogdec/errors.hpp"
#include "cogdec/rng.hpp"

namespace cogdec {

namespace {

Matrix sparse_simplex_rows(Eigen::Index rows, Eigen::Index cols, Rng& rng,
                           double density = 0.3) {
    Matrix M = Matrix::Zero(rows, cols);
    for (Eigen::Index i = 0; i < rows; ++i) {
        double total = 0.0;
        for (Eigen::Index j = 0; j < cols; ++j) {
            if (rng.uniform() < density) {
                M(i, j) = std::abs(rng.normal());
                total += M(i, j);
            }
        }
        if (total <= 0.0) {
            M(i, static_cast<Eigen::Index>(rng.uniform_int(static_cast<std::uint64_t>(cols)))) = 1.0;
            total = 1.0;
        }
        M.row(i) /= total;
    }
    return M;
}

}  // namespace

void GenConfig::validate() const {
    if (n_studies < 1) throw config_error("generator needs at least 1 study");
    if (l_true > p) throw config_error("l_true must not exceed p");
    if (static_cast<int>(n_subjects.size()) != n_studies ||
        static_cast<int>(n_contrasts.size()) != n_studies)
        throw config_error("per-study subject/contrast counts must match n_studies");
    for (int n : n_subjects)
        if (n < 1) throw config_error("every study needs at least 1 subject");
    for (int c : n_contrasts)
        if (c < 1) throw config_error("every study needs at least 1 contrast");
    if (subject_noise_sd < 0.0 || voxel_noise_sd < 0.0)
        throw config_error("noise standard deviations must be >= 0");
    for (auto [a, b] : shared_subject_pairs)
        if (a < 0 || b < 0 || a >= n_studies || b >= n_studies || a == b)
            throw config_error("bad shared-subject pair");
}

std::pair<Corpus, GroundTruth> generate_corpus(const GenConfig& cfg) {
    cfg.validate();
    Rng rng(cfg.seed);

    GroundTruth gt;
    gt.subject_noise_sd = cfg.subject_noise_sd;
    gt.voxel_noise_sd = cfg.voxel_noise_sd;
    gt.M_true = sparse_simplex_rows(cfg.l_true, cfg.p, rng);

    // Shared pool of latent class means; each study selects a subset, so
    // class structure genuinely overlaps across studies.
    const int c_max = *std::max_element(cfg.n_contrasts.begin(), cfg.n_contrasts.end());
    const int pool_size = c_max + 2;
    Matrix pool(pool_size, cfg.l_true);
    for (int i = 0; i < pool_size; ++i)
        for (Eigen::Index j = 0; j < cfg.l_true; ++j)
            pool(i, j) = cfg.class_sep * rng.normal();

    for (int j = 0; j < cfg.n_studies; ++j) {
        std::vector<int> idx(static_cast<std::size_t>(pool_size));
        std::iota(idx.begin(), idx.end(), 0);
        rng.shuffle(idx);
        Matrix means(cfg.n_contrasts[static_cast<std::size_t>(j)], cfg.l_true);
        for (int y = 0; y < cfg.n_contrasts[static_cast<std::size_t>(j)]; ++y)
            means.row(y) = pool.row(idx[static_cast<std::size_t>(y)]);
        gt.class_means.push_back(std::move(means));
        gt.study_ids.push_back("study" + std::to_string(j));
    }

    // Subject identity groups: (study, t) nodes unioned through the shared
    // pairs, so a shared person keeps one id and one latent offset.
    std::map<std::pair<int, int>, int> group;
    int n_groups = 0;
    auto group_of = [&](int study, int t) -> int& {
        auto it = group.find({study, t});
        if (it == group.end())
            it = group.insert({{study, t}, -1}).first;
        return it->second;
    };
    for (int j = 0; j < cfg.n_studies; ++j)
        for (int t = 0; t < cfg.n_subjects[static_cast<std::size_t>(j)]; ++t)
            group_of(j, t);
    for (auto [a, b] : cfg.shared_subject_pairs) {
        const int shared = std::min(cfg.n_subjects[static_cast<std::size_t>(a)],
                                    cfg.n_subjects[static_cast<std::size_t>(b)]);
        for (int t = 0; t < shared; ++t) {
            int& ga = group_of(a, t);
            int& gb = group_of(b, t);
            if (ga < 0 && gb < 0) {
                ga = gb = n_groups++;
            } else if (ga < 0) {
                ga = gb;
            } else if (gb < 0) {
                gb = ga;
            } else if (ga != gb) {
                const int from = gb, to = ga;
                for (auto& [key, g] : group)
                    if (g == from) g = to;
            }
        }
    }
    for (auto& [key, g] : group)
        if (g < 0) g = n_groups++;

    std::map<int, Vector> offsets;
    std::map<int, std::string> group_names;
    // Offsets drawn in group order so the draw sequence is independent of
    // map iteration details.
    {
        std::set<int> ids;
        for (auto& [key, g] : group) ids.insert(g);
        for (int g : ids) {
            Vector off(cfg.l_true);
            for (Eigen::Index d = 0; d < cfg.l_true; ++d)
                off(d) = cfg.subject_noise_sd * rng.normal();
            offsets[g] = std::move(off);
            group_names[g] = "s" + std::to_string(g);
        }
    }

    Corpus corpus;
    for (int j = 0; j < cfg.n_studies; ++j) {
        const int c = cfg.n_contrasts[static_cast<std::size_t>(j)];
        const int ns = cfg.n_subjects[static_cast<std::size_t>(j)];
        Study s;
        s.id = gt.study_ids[static_cast<std::size_t>(j)];
        for (int y = 0; y < c; ++y)
            s.contrast_names.push_back("contrast" + std::to_string(y));
        s.data.resize(static_cast<Eigen::Index>(ns) * c, cfg.p);
        Eigen::Index row = 0;
        for (int t = 0; t < ns; ++t) {
            const int g = group.at({j, t});
            for (int y = 0; y < c; ++y, ++row) {
                const Vector latent =
                    gt.class_means[static_cast<std::size_t>(j)].row(y).transpose() +
                    offsets.at(g);
                s.data.row(row) = (latent.transpose() * gt.M_true);
                for (Eigen::Index v = 0; v < cfg.p; ++v)
                    s.data(row, v) += cfg.voxel_noise_sd * rng.normal();
                s.labels.push_back(y);
                s.subject_ids.push_back(group_names.at(g));
            }
        }
        corpus.studies.push_back(std::move(s));
    }
    corpus.validate();
    return {std::move(corpus), std::move(gt)};
}

Matrix generate_rest_data(const GroundTruth& gt, Eigen::Index n_samples,
                          std::uint64_t seed) {
    Rng rng(seed);
    const Eigen::Index l = gt.M_true.rows(), p = gt.M_true.cols();
    Matrix X(n_samples, p);
    for (Eigen::Index i = 0; i < n_samples; ++i) {
        Vector latent(l);
        for (Eigen::Index d = 0; d < l; ++d) latent(d) = rng.normal();
        X.row(i) = latent.transpose() * gt.M_true;
        for (Eigen::Index v = 0; v < p; ++v)
            X(i, v) += gt.voxel_noise_sd * rng.normal();
    }
    return X;
}

double bayes_reference(const GroundTruth& gt, const std::string& study_id,
                       int n_mc, std::uint64_t seed) {
    auto it = std::find(gt.study_ids.begin(), gt.study_ids.end(), study_id);
    if (it == gt.study_ids.end())
        throw data_error("unknown study id: " + study_id);
    const auto j = static_cast<std::size_t>(it - gt.study_ids.begin());
    const Matrix& mu_latent = gt.class_means[j];  // c x l
    const int c = static_cast<int>(mu_latent.rows());
    const Eigen::Index p = gt.M_true.cols();

    const Matrix means = mu_latent * gt.M_true;  // c x p, feature-space means
    Matrix sigma = gt.subject_noise_sd * gt.subject_noise_sd *
                   (gt.M_true.transpose() * gt.M_true);
    sigma.diagonal().array() += gt.voxel_noise_sd * gt.voxel_noise_sd + 1e-12;
    const Eigen::LLT<Matrix> llt(sigma);

    // LDA scores: score_y(x) = m_y Sigma^-1 x - 0.5 m_y Sigma^-1 m_y.
    const Matrix A = llt.solve(means.transpose());  // p x c
    const Vector q = 0.5 * (means * A).diagonal();

    Rng rng(seed);
    int hits = 0;
    for (int i = 0; i < n_mc; ++i) {
        const int y = static_cast<int>(rng.uniform_int(static_cast<std::uint64_t>(c)));
        Vector latent = mu_latent.row(y).transpose();
        for (Eigen::Index d = 0; d < latent.size(); ++d)
            latent(d) += gt.subject_noise_sd * rng.normal();
        Vector x = (latent.transpose() * gt.M_true).transpose();
        for (Eigen::Index v = 0; v < p; ++v)
            x(v) += gt.voxel_noise_sd * rng.normal();

        Vector scores = (x.transpose() * A).transpose() - q;
        int best = 0;
        for (int k = 1; k < c; ++k)
            if (scores(k) > scores(best)) best = k;
        if (best == y) ++hits;
    }
    return static_cast<double>(hits) / static_cast<double>(n_mc);
}

void save_ground_truth(const GroundTruth& gt, const std::filesystem::path& path) {
    nlohmann::json header;
    header["kind"] = "ground_truth";
    header["study_ids"] = gt.study_ids;
    header["subject_noise_sd"] = gt.subject_noise_sd;
    header["voxel_noise_sd"] = gt.voxel_noise_sd;
    std::vector<std::pair<std::string, Matrix>> blocks;
    blocks.emplace_back("M_true", gt.M_true);
    for (std::size_t j = 0; j < gt.study_ids.size(); ++j)
        blocks.emplace_back("means_" + gt.study_ids[j], gt.class_means[j]);
    write_bundle(path, header.dump(), blocks);
}

GroundTruth load_ground_truth(const std::filesystem::path& path) {
    const Bundle bundle = read_bundle(path);
    nlohmann::json header;
    try {
        header = nlohmann::json::parse(bundle.header_json);
    } catch (const nlohmann::json::exception& e) {
        throw data_error("bad ground-truth header in " + path.string() + ": " + e.what());
    }
    if (header.value("kind", "") != "ground_truth")
        throw data_error("not a ground-truth file: " + path.string());
    GroundTruth gt;
    gt.study_ids = header.at("study_ids").get<std::vector<std::string>>();
    gt.subject_noise_sd = header.at("subject_noise_sd").get<double>();
    gt.voxel_noise_sd = header.at("voxel_noise_sd").get<double>();
    gt.M_true = bundle.block("M_true");
    for (const auto& id : gt.study_ids)
        gt.class_means.push_back(bundle.block("means_" + id));
    return gt;
}

}  // namespace cogdec
