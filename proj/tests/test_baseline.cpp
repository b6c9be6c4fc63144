#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>

#include "cogdec/baseline.hpp"
#include "cogdec/errors.hpp"
#include "cogdec/metrics.hpp"
#include "cogdec/softmax.hpp"
#include "test_common.hpp"

using namespace cogdec;
using cogdec::testing::make_study;
using cogdec::testing::random_matrix;

namespace {

// Central finite differences of the decoder objective.
double fd_max_rel_error(const Matrix& X, const std::vector<int>& y, int c,
                        double lambda, const Vector& theta, double h = 1e-6) {
    Vector grad(theta.size());
    decoder_objective(X, y, c, lambda, theta, grad);
    double worst = 0.0;
    Vector probe = theta;
    Vector scratch(theta.size());
    for (Eigen::Index i = 0; i < theta.size(); ++i) {
        probe(i) = theta(i) + h;
        const double fp = decoder_objective(X, y, c, lambda, probe, scratch);
        probe(i) = theta(i) - h;
        const double fm = decoder_objective(X, y, c, lambda, probe, scratch);
        probe(i) = theta(i);
        const double fd = (fp - fm) / (2.0 * h);
        const double denom = std::max({std::abs(fd), std::abs(grad(i)), 1e-8});
        worst = std::max(worst, std::abs(fd - grad(i)) / denom);
    }
    return worst;
}

}  // namespace

TEST_CASE("predict trivia") {
    LinearDecoder dec;
    dec.W = Matrix::Zero(2, 4);
    dec.b = Vector::Zero(2);
    dec.b(1) = 1.0;
    Rng rng(3);
    const Matrix X = random_matrix(10, 4, rng);
    for (int y : predict(dec, X)) CHECK(y == 1);

    // exact tie resolves to the lowest class index
    dec.b(1) = 0.0;
    for (int y : predict(dec, X)) CHECK(y == 0);

    CHECK_THROWS_AS(predict(dec, random_matrix(3, 5, rng)), data_error);
}

TEST_CASE("predict equals a brute-force per-row maximum scan") {
    Rng rng(17);
    LinearDecoder dec;
    dec.W = random_matrix(5, 7, rng);
    dec.b = random_matrix(5, 1, rng).col(0);
    const Matrix X = random_matrix(40, 7, rng);
    const auto got = predict(dec, X);
    for (Eigen::Index i = 0; i < X.rows(); ++i) {
        int best = 0;
        double best_v = -1e300;
        for (int cidx = 0; cidx < 5; ++cidx) {
            const double v = dec.W.row(cidx).dot(X.row(i)) + dec.b(cidx);
            if (v > best_v) {
                best_v = v;
                best = cidx;
            }
        }
        CHECK(got[static_cast<std::size_t>(i)] == best);
    }
}

TEST_CASE("softmax cross-entropy of uniform logits is log c exactly") {
    for (int c : {2, 3, 7}) {
        const Matrix logits = Matrix::Constant(5, c, 0.4);
        std::vector<int> y(5, c - 1);
        CHECK(softmax_nll(logits, y) == doctest::Approx(std::log(c)).epsilon(1e-15));
    }
}

TEST_CASE("per-class logit translation leaves probabilities unchanged") {
    Rng rng(5);
    Matrix logits = random_matrix(6, 4, rng);
    const Matrix p0 = softmax_rows(logits);
    logits.array() += 3.25;  // constant shift per row
    const Matrix p1 = softmax_rows(logits);
    CHECK((p0 - p1).cwiseAbs().maxCoeff() < 1e-12);
}

TEST_CASE("separable two-class study trains to accuracy 1") {
    const Study s = make_study("sep", 10, 2, 15, 42, 4.0);
    const LinearDecoder dec = fit_voxel_decoder(s, 1e-3);
    CHECK(accuracy(predict(dec, s.data), s.labels) == 1.0);
}

TEST_CASE("huge lambda shrinks W until the bias decides alone") {
    Study s = make_study("shrink", 8, 3, 10, 43, 2.0);
    // unbalanced class counts so b has a clear preference
    s.data.conservativeResize(s.data.rows() - 2, Eigen::NoChange);
    s.labels.resize(s.labels.size() - 2);
    s.subject_ids.resize(s.subject_ids.size() - 2);

    const LinearDecoder dec = fit_voxel_decoder(s, 1e6);
    CHECK(dec.W.norm() < 1e-2);
    const auto pred = predict(dec, s.data);
    int best_b = 0;
    for (int cidx = 1; cidx < 3; ++cidx)
        if (dec.b(cidx) > dec.b(best_b)) best_b = cidx;
    for (int y : pred) CHECK(y == best_b);
}

TEST_CASE("analytic gradient matches central finite differences") {
    Rng rng(7);
    const Matrix X = random_matrix(12, 6, rng);
    std::vector<int> y;
    for (int i = 0; i < 12; ++i) y.push_back(i % 3);
    for (int rep = 0; rep < 5; ++rep) {
        const Vector theta = random_matrix(3 * 6 + 3, 1, rng, 0.5).col(0);
        CHECK(fd_max_rel_error(X, y, 3, 0.37, theta) < 1e-5);
    }
}

TEST_CASE("objective descends from the zero initialization and is convex") {
    const Study s = make_study("desc", 6, 3, 8, 11, 1.0);
    const LinearDecoder dec = fit_voxel_decoder(s, 0.05);

    Vector grad;
    Vector theta_opt(dec.W.size() + dec.b.size());
    for (Eigen::Index i = 0; i < dec.W.rows(); ++i)
        theta_opt.segment(i * dec.W.cols(), dec.W.cols()) = dec.W.row(i).transpose();
    theta_opt.tail(dec.b.size()) = dec.b;
    grad.resize(theta_opt.size());

    const double at_opt = decoder_objective(s.data, s.labels, 3, 0.05, theta_opt, grad);
    const double at_zero = decoder_objective(s.data, s.labels, 3, 0.05,
                                             Vector::Zero(theta_opt.size()), grad);
    CHECK(at_opt <= at_zero);

    // convexity along random chords
    Rng rng(9);
    for (int rep = 0; rep < 10; ++rep) {
        const Vector t1 = random_matrix(theta_opt.size(), 1, rng).col(0);
        const Vector t2 = random_matrix(theta_opt.size(), 1, rng).col(0);
        const double f1 = decoder_objective(s.data, s.labels, 3, 0.05, t1, grad);
        const double f2 = decoder_objective(s.data, s.labels, 3, 0.05, t2, grad);
        const double fm = decoder_objective(s.data, s.labels, 3, 0.05,
                                            Vector(0.5 * (t1 + t2)), grad);
        CHECK(fm <= 0.5 * (f1 + f2) + 1e-9);
    }
}

TEST_CASE("reduced decoder with identity dictionary matches the voxel fit") {
    const Study s = make_study("ident", 6, 2, 7, 3, 2.0);
    Dictionary ident;
    ident.D = Matrix::Identity(7, 7);
    const LinearDecoder voxel = fit_voxel_decoder(s, 0.01);
    const LinearDecoder reduced = fit_reduced_decoder(s, ident, 0.01);
    CHECK((voxel.W - reduced.W).cwiseAbs().maxCoeff() < 1e-4);
    CHECK((voxel.b - reduced.b).cwiseAbs().maxCoeff() < 1e-4);
    CHECK(reduced.input_space == InputSpace::dictionary);
}

TEST_CASE("single informative dictionary row recovers a separable solution") {
    // data varies only in feature 0; D's single row selects it
    Rng rng(23);
    Study s;
    s.id = "one";
    s.contrast_names = {"a", "b"};
    s.data = Matrix::Zero(12, 5);
    for (int i = 0; i < 12; ++i) {
        const int y = i % 2;
        s.data(i, 0) = y == 0 ? -1.0 : 1.0;
        s.labels.push_back(y);
        s.subject_ids.push_back("s" + std::to_string(i / 2));
    }
    Dictionary d;
    d.D = Matrix::Zero(1, 5);
    d.D(0, 0) = 1.0;
    const LinearDecoder dec = fit_reduced_decoder(s, d, 1e-3);
    CHECK(accuracy(predict(dec, s.data * d.D.transpose()), s.labels) == 1.0);
}

TEST_CASE("reduced-decoder gradient against finite differences") {
    Rng rng(29);
    Dictionary d;
    d.D = Matrix::Zero(4, 9);
    for (Eigen::Index j = 0; j < 4; ++j) {
        Vector row = random_matrix(9, 1, rng).col(0).cwiseAbs();
        d.D.row(j) = (row / (row.lpNorm<1>() + 1.0)).transpose();
    }
    const Matrix X = random_matrix(10, 9, rng);
    const Matrix loadings = X * d.D.transpose();
    std::vector<int> y;
    for (int i = 0; i < 10; ++i) y.push_back(i % 2);
    for (int rep = 0; rep < 5; ++rep) {
        const Vector theta = random_matrix(2 * 4 + 2, 1, rng, 0.7).col(0);
        CHECK(fd_max_rel_error(loadings, y, 2, 0.11, theta) < 1e-5);
    }
}

TEST_CASE("lambda selection") {
    SUBCASE("single-element grid returns the element") {
        const Study s = make_study("grid", 4, 2, 6, 1);
        CHECK(select_lambda(s, {0.25}, 3, 9) == 0.25);
    }
    SUBCASE("exact accuracy tie returns the larger lambda") {
        // both lambdas decode a cleanly separable study perfectly
        const Study s = make_study("tie", 8, 2, 6, 2, 6.0);
        CHECK(select_lambda(s, {1e-2, 1e-1}, 3, 4) == 1e-1);
    }
    SUBCASE("noisy instance prefers strong shrinkage") {
        // Tiny informative signal drowned in noise: with 3 subjects per class
        // split in half, the near-unregularized fit overfits subject noise.
        int wins = 0;
        for (std::uint64_t seed = 0; seed < 20; ++seed) {
            const Study s = make_study("noisy", 6, 2, 40, 100 + seed, 0.35);
            const double lambda = select_lambda(s, {1e-3, 1e2}, 4, seed);
            if (lambda == 1e2) ++wins;
        }
        CHECK(wins > 10);
    }
}

TEST_CASE("default grid spans 1e-3..1e3") {
    const auto grid = default_lambda_grid();
    REQUIRE(grid.size() == 7);
    CHECK(grid.front() == 1e-3);
    CHECK(grid.back() == 1e3);
}
