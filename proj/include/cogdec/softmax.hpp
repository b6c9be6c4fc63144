#pragma once

#include <vector>

#include "cogdec/matrix_io.hpp"

namespace cogdec {

// Row-wise log-sum-exp, computed against the row maximum.
Vector log_sum_exp_rows(const Matrix& logits);

// Row-wise softmax probabilities.
Matrix softmax_rows(const Matrix& logits);

// Mean multinomial negative log-likelihood of `labels` under row logits:
//   (1/n) sum_i [ logsumexp(l_i) - l_{i,y_i} ].
// When grad_out is non-null it receives d(meanNLL)/d(logits) = (P - Y)/n.
double softmax_nll(const Matrix& logits, const std::vector<int>& labels,
                   Matrix* grad_out = nullptr);

// argmax per row; ties resolved toward the lowest class index.
std::vector<int> argmax_rows(const Matrix& logits);

}  // namespace cogdec
