#include "cogdec/baseline.hpp"

#include <algorithm>
#include <cmath>
#include <set>

#include "cogdec/errors.hpp"
#include "cogdec/softmax.hpp"

namespace cogdec {

namespace {

// theta = [W row-major (c*d), b (c)]
void unpack(const Vector& theta, int c, Eigen::Index d, Matrix& W, Vector& b) {
    W.resize(c, d);
    for (int i = 0; i < c; ++i)
        W.row(i) = theta.segment(i * d, d).transpose();
    b = theta.segment(static_cast<Eigen::Index>(c) * d, c);
}

Vector pack(const Matrix& W, const Vector& b) {
    const Eigen::Index d = W.cols();
    Vector theta(W.size() + b.size());
    for (Eigen::Index i = 0; i < W.rows(); ++i)
        theta.segment(i * d, d) = W.row(i).transpose();
    theta.tail(b.size()) = b;
    return theta;
}

LinearDecoder fit_on_features(const Matrix& X, const std::vector<int>& labels,
                              int n_classes, double lambda,
                              const SolverConfig& opt) {
    std::set<int> present(labels.begin(), labels.end());
    if (present.size() < 2)
        throw data_error("decoder fit needs at least 2 classes present");
    if (lambda < 0.0) throw config_error("lambda must be >= 0");

    const Eigen::Index d = X.cols();
    const Vector theta0 = Vector::Zero(static_cast<Eigen::Index>(n_classes) * d + n_classes);
    const auto res = lbfgs_minimize(
        [&](const Vector& theta, Vector& grad) {
            return decoder_objective(X, labels, n_classes, lambda, theta, grad);
        },
        theta0, opt);

    LinearDecoder dec;
    dec.lambda = lambda;
    unpack(res.x, n_classes, d, dec.W, dec.b);
    return dec;
}

}  // namespace

Matrix decoder_logits(const LinearDecoder& dec, const Matrix& X) {
    if (X.cols() != dec.input_dim())
        throw data_error("decoder expects " + std::to_string(dec.input_dim()) +
                         " features, got " + std::to_string(X.cols()));
    return (X * dec.W.transpose()).rowwise() + dec.b.transpose();
}

std::vector<int> predict(const LinearDecoder& dec, const Matrix& X) {
    return argmax_rows(decoder_logits(dec, X));
}

double decoder_objective(const Matrix& X, const std::vector<int>& labels,
                         int n_classes, double lambda, const Vector& theta,
                         Vector& grad) {
    const Eigen::Index d = X.cols();
    Matrix W;
    Vector b;
    unpack(theta, n_classes, d, W, b);

    Matrix logits = (X * W.transpose()).rowwise() + b.transpose();
    Matrix dlogits;
    double loss = softmax_nll(logits, labels, &dlogits);
    loss += lambda * W.squaredNorm();

    const Matrix dW = dlogits.transpose() * X + 2.0 * lambda * W;
    const Vector db = dlogits.colwise().sum().transpose();
    grad = pack(dW, db);
    return loss;
}

LinearDecoder fit_voxel_decoder(const Study& study, double lambda,
                                const SolverConfig& opt) {
    LinearDecoder dec = fit_on_features(study.data, study.labels,
                                        study.n_contrasts(), lambda, opt);
    dec.input_space = InputSpace::voxels;
    dec.class_names = study.contrast_names;
    return dec;
}

LinearDecoder fit_reduced_decoder(const Study& study, const Dictionary& dict,
                                  double lambda, const SolverConfig& opt) {
    if (dict.p() != study.n_features())
        throw data_error("dictionary p differs from study p");
    const Matrix loadings = study.data * dict.D.transpose();
    LinearDecoder dec = fit_on_features(loadings, study.labels,
                                        study.n_contrasts(), lambda, opt);
    dec.input_space = InputSpace::dictionary;
    dec.class_names = study.contrast_names;
    return dec;
}

double select_lambda(const Study& study, const std::vector<double>& grid,
                     int n_splits, std::uint64_t seed, InputSpace mode,
                     const SolverConfig& opt) {
    if (grid.empty()) throw config_error("empty lambda grid");
    if (grid.size() == 1) return grid.front();

    Corpus single;
    single.studies.push_back(study);

    std::vector<double> mean_acc(grid.size(), 0.0);
    for (int split = 0; split < n_splits; ++split) {
        const SplitPair pair = half_split(single, seed + static_cast<std::uint64_t>(split));
        const Study& tr = pair.train.studies.front();
        const Study& te = pair.test.studies.front();
        for (std::size_t gi = 0; gi < grid.size(); ++gi) {
            LinearDecoder dec =
                fit_on_features(tr.data, tr.labels, tr.n_contrasts(), grid[gi], opt);
            dec.input_space = mode;
            const auto pred = predict(dec, te.data);
            Eigen::Index hits = 0;
            for (std::size_t i = 0; i < pred.size(); ++i)
                if (pred[i] == te.labels[i]) ++hits;
            mean_acc[gi] += static_cast<double>(hits) / static_cast<double>(te.n_maps());
        }
    }

    std::size_t best = 0;
    for (std::size_t gi = 1; gi < grid.size(); ++gi) {
        // >= so exact ties move to the larger lambda
        const bool better = mean_acc[gi] > mean_acc[best] ||
                            (mean_acc[gi] == mean_acc[best] && grid[gi] > grid[best]);
        if (better) best = gi;
    }
    return grid[best];
}

std::vector<double> default_lambda_grid() {
    return {1e-3, 1e-2, 1e-1, 1.0, 1e1, 1e2, 1e3};
}

}  // namespace cogdec
