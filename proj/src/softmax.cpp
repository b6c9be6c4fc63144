#include "cogdec/softmax.hpp"

namespace cogdec {

Vector log_sum_exp_rows(const Matrix& logits) {
    Vector out(logits.rows());
    for (Eigen::Index i = 0; i < logits.rows(); ++i) {
        const double m = logits.row(i).maxCoeff();
        out(i) = m + std::log((logits.row(i).array() - m).exp().sum());
    }
    return out;
}

Matrix softmax_rows(const Matrix& logits) {
    Matrix p(logits.rows(), logits.cols());
    for (Eigen::Index i = 0; i < logits.rows(); ++i) {
        const double m = logits.row(i).maxCoeff();
        p.row(i) = (logits.row(i).array() - m).exp();
        p.row(i) /= p.row(i).sum();
    }
    return p;
}

double softmax_nll(const Matrix& logits, const std::vector<int>& labels,
                   Matrix* grad_out) {
    const Eigen::Index n = logits.rows();
    const Vector lse = log_sum_exp_rows(logits);
    double loss = 0.0;
    for (Eigen::Index i = 0; i < n; ++i) {
        loss += lse(i) - logits(i, labels[static_cast<std::size_t>(i)]);
    }
    loss /= static_cast<double>(n);
    if (grad_out) {
        *grad_out = softmax_rows(logits);
        for (Eigen::Index i = 0; i < n; ++i) {
            (*grad_out)(i, labels[static_cast<std::size_t>(i)]) -= 1.0;
        }
        *grad_out /= static_cast<double>(n);
    }
    return loss;
}

std::vector<int> argmax_rows(const Matrix& logits) {
    std::vector<int> out(static_cast<std::size_t>(logits.rows()));
    for (Eigen::Index i = 0; i < logits.rows(); ++i) {
        int best = 0;
        for (Eigen::Index c = 1; c < logits.cols(); ++c) {
            if (logits(i, c) > logits(i, best)) best = static_cast<int>(c);
        }
        out[static_cast<std::size_t>(i)] = best;
    }
    return out;
}

}  // namespace cogdec
