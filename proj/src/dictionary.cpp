#include "cogdec/dictionary.hpp"

#include <algorithm>
#include <cmath>
#include <iostream>
#include <numeric>

#include "cogdec/errors.hpp"
#include "cogdec/rng.hpp"

#include "cogdec/detail/nmf_core.hpp"

namespace cogdec {

namespace {

constexpr double kFeasTol = 1e-9;

Matrix random_simplex_rows(Eigen::Index k, Eigen::Index p, Rng& rng) {
    Matrix D = Matrix::Zero(k, p);
    for (Eigen::Index j = 0; j < k; ++j) {
        double total = 0.0;
        for (Eigen::Index t = 0; t < p; ++t) {
            if (rng.uniform() < 0.5) {
                D(j, t) = rng.uniform();
                total += D(j, t);
            }
        }
        if (total <= 0.0) {
            D(j, static_cast<Eigen::Index>(rng.uniform_int(static_cast<std::uint64_t>(p)))) = 1.0;
            total = 1.0;
        }
        D.row(j) /= total;
    }
    return D;
}

}  // namespace

std::vector<double> nmf_alternating_core(const Matrix& X, Matrix& D, Matrix& A,
                                         double lambda, double scale,
                                         int max_epochs, double rel_tol) {
    const Eigen::Index k = D.rows();
    std::vector<double> trace;
    trace.reserve(static_cast<std::size_t>(max_epochs));
    for (int epoch = 0; epoch < max_epochs; ++epoch) {
        // Ridge solve for A: A = X D^T (D D^T + (lambda/scale) I)^-1.
        Matrix gram = D * D.transpose();
        gram.diagonal().array() += lambda / scale;
        A = gram.ldlt().solve(D * X.transpose()).transpose();

        // Exact block minimization of each dictionary row. The quadratic in
        // row j is isotropic, so the constrained optimum is the projection of
        // the unconstrained one.
        const Matrix G = A.transpose() * A;  // k x k
        const Matrix H = A.transpose() * X;  // k x p
        for (Eigen::Index j = 0; j < k; ++j) {
            const double gjj = G(j, j);
            if (gjj <= 1e-12) continue;  // dead atom, row untouched
            Vector target =
                (H.row(j) - G.row(j) * D + gjj * D.row(j)).transpose() / gjj;
            D.row(j) = simplex_project(target).transpose();
        }

        const double obj =
            scale * (X - A * D).squaredNorm() + lambda * A.squaredNorm();
        trace.push_back(obj);
        if (rel_tol > 0.0 && trace.size() >= 2) {
            const double prev = trace[trace.size() - 2];
            if (prev - obj <= rel_tol * std::max(1.0, std::abs(prev))) break;
        }
    }
    return trace;
}

void Dictionary::validate() const {
    if ((D.array() < -kFeasTol).any())
        throw data_error("dictionary has negative entries");
    for (Eigen::Index j = 0; j < D.rows(); ++j) {
        if (D.row(j).lpNorm<1>() > 1.0 + kFeasTol)
            throw data_error("dictionary row " + std::to_string(j) +
                             " leaves the l1 ball");
    }
    if (!component_names.empty() &&
        component_names.size() != static_cast<std::size_t>(D.rows()))
        throw data_error("dictionary name count mismatch");
}

Vector simplex_project(const Vector& v) {
    // Projection onto the intersection of the nonnegative orthant and the
    // l1 ball. If clipping negatives already lands inside the ball the sum
    // constraint is inactive; otherwise project onto the simplex face
    // (Duchi et al. threshold rule).
    Vector w = v.cwiseMax(0.0);
    if (w.sum() <= 1.0) return w;

    std::vector<double> u(static_cast<std::size_t>(v.size()));
    for (Eigen::Index i = 0; i < v.size(); ++i) u[static_cast<std::size_t>(i)] = v(i);
    std::sort(u.begin(), u.end(), std::greater<double>());
    double cum = 0.0, tau = 0.0;
    int rho = 0;
    for (std::size_t j = 0; j < u.size(); ++j) {
        cum += u[j];
        const double t = (cum - 1.0) / static_cast<double>(j + 1);
        if (u[j] - t > 0.0) {
            rho = static_cast<int>(j + 1);
            tau = t;
        }
    }
    (void)rho;
    return (v.array() - tau).max(0.0).matrix();
}

NmfResult fit_sparse_nmf(const Matrix& X, Eigen::Index k, double lambda,
                         int epochs, std::uint64_t seed) {
    if (!X.allFinite()) throw data_error("NMF input contains non-finite values");
    if (k < 1) throw config_error("NMF needs k >= 1");
    if (!(lambda > 0.0)) throw config_error("NMF needs lambda > 0");
    if (k > std::min(X.rows(), X.cols()))
        std::cerr << "warning: NMF k=" << k << " exceeds min(input dims)\n";

    Rng rng(seed);
    NmfResult res;
    res.dictionary.D = random_simplex_rows(k, X.cols(), rng);
    res.objective_trace =
        nmf_alternating_core(X, res.dictionary.D, res.codes, lambda, 1.0, epochs);
    res.dictionary.validate();
    return res;
}

Matrix init_second_layer(const Dictionary& coarse, const Dictionary& dict,
                         double jitter) {
    if (coarse.p() != dict.p())
        throw data_error("second-layer init: dictionaries disagree on p");
    Matrix gram = dict.D * dict.D.transpose();
    gram.diagonal().array() += jitter;
    // L = D_coarse D^T (D D^T + eps I)^-1
    return gram.ldlt().solve(dict.D * coarse.D.transpose()).transpose();
}

Dictionary restrict_components(const Dictionary& dict,
                               const std::vector<bool>& mask,
                               double threshold) {
    if (static_cast<Eigen::Index>(mask.size()) != dict.p())
        throw data_error("mask length differs from feature count");
    std::vector<Eigen::Index> keep;
    for (Eigen::Index j = 0; j < dict.k(); ++j) {
        double in_mask = 0.0, total = 0.0;
        for (Eigen::Index t = 0; t < dict.p(); ++t) {
            const double m = std::abs(dict.D(j, t));
            total += m;
            if (mask[static_cast<std::size_t>(t)]) in_mask += m;
        }
        const double fraction = total > 0.0 ? in_mask / total : 1.0;
        if (fraction >= threshold) keep.push_back(j);
    }
    if (keep.empty()) throw data_error("component restriction removed every component");

    Dictionary out;
    out.D.resize(static_cast<Eigen::Index>(keep.size()), dict.p());
    for (std::size_t r = 0; r < keep.size(); ++r) {
        out.D.row(static_cast<Eigen::Index>(r)) = dict.D.row(keep[r]);
        if (!dict.component_names.empty())
            out.component_names.push_back(
                dict.component_names[static_cast<std::size_t>(keep[r])]);
    }
    return out;
}

double select_dictionary_lambda(const Matrix& X, Eigen::Index k,
                                const std::vector<double>& grid, int epochs,
                                std::uint64_t seed, double coverage) {
    if (grid.empty()) throw config_error("empty lambda grid");
    std::vector<double> sorted = grid;
    std::sort(sorted.begin(), sorted.end());

    double best_cov = -1.0, best_lambda = sorted.front();
    double chosen = -1.0;
    for (double lambda : sorted) {
        const NmfResult res = fit_sparse_nmf(X, k, lambda, epochs, seed);
        Eigen::Index covered = 0;
        for (Eigen::Index t = 0; t < X.cols(); ++t) {
            if ((res.dictionary.D.col(t).array() > 0.0).any()) ++covered;
        }
        const double cov = static_cast<double>(covered) / static_cast<double>(X.cols());
        if (cov >= coverage) chosen = lambda;  // keep the largest passing one
        if (cov > best_cov) {
            best_cov = cov;
            best_lambda = lambda;
        }
    }
    return chosen > 0.0 ? chosen : best_lambda;
}

}  // namespace cogdec
