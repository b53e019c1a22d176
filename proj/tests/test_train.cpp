#include <doctest.h>

#include <Eigen/Dense>
#include <cmath>
#include <functional>
#include <random>

#include "egd/errors.hpp"
#include "egd/train.hpp"

using namespace egd;
using namespace egd::train;
using Eigen::MatrixXd;
using Eigen::VectorXd;

namespace {

MatrixXd random_matrix(std::mt19937_64& rng, Eigen::Index n, Eigen::Index d, double scale = 1.0) {
    std::normal_distribution<double> g(0.0, scale);
    MatrixXd X(n, d);
    for (Eigen::Index i = 0; i < n; ++i)
        for (Eigen::Index j = 0; j < d; ++j) X(i, j) = g(rng);
    return X;
}

VectorXd random_vector(std::mt19937_64& rng, Eigen::Index n, double scale = 1.0) {
    std::normal_distribution<double> g(0.0, scale);
    VectorXd v(n);
    for (Eigen::Index i = 0; i < n; ++i) v(i) = g(rng);
    return v;
}

// Central finite differences of a scalar loss in theta.
VectorXd numeric_grad(const std::function<double(const VectorXd&)>& f, const VectorXd& theta,
                      double eps = 1e-6) {
    VectorXd g(theta.size());
    for (Eigen::Index j = 0; j < theta.size(); ++j) {
        VectorXd hi = theta, lo = theta;
        hi(j) += eps;
        lo(j) -= eps;
        g(j) = (f(hi) - f(lo)) / (2 * eps);
    }
    return g;
}

} // namespace

TEST_CASE("MSE loss oracles") {
    MatrixXd X(2, 1);
    X << 1.0, 2.0;
    VectorXd y(2);
    y << 1.0, 2.0;
    VectorXd theta(1);
    theta << 1.0;
    CHECK(loss_mse(X, y, theta, 2.0) == 0.0);

    theta << 2.0; // residuals 1 and 2 -> (1+4)/(2*2)
    CHECK(loss_mse(X, y, theta, 2.0) == doctest::Approx(1.25).epsilon(1e-15));

    VectorXd w(2);
    w << 3.0, 1.0; // weighted: (3*1 + 1*4)/(2*4) with n_effective 4
    CHECK(loss_mse_weighted(X, y, w, theta, 4.0) == doctest::Approx(7.0 / 8.0).epsilon(1e-15));
}

TEST_CASE("GD step oracles") {
    MatrixXd X(1, 1);
    X << 1.0;
    VectorXd y(1);
    y << 1.0;
    VectorXd theta = VectorXd::Zero(1);
    // theta' = theta - (alpha/n) X^T(X theta - y) = 0 - 1*(0-1) = 1
    CHECK(gd_step_full(X, y, theta, 1.0)(0) == doctest::Approx(1.0));
    // at the optimum the step is a fixed point
    theta << 1.0;
    CHECK(gd_step_full(X, y, theta, 0.7)(0) == doctest::Approx(1.0));

    VectorXd w(1);
    w << 4.0; // one sample standing for n=4 copies
    VectorXd t0 = VectorXd::Zero(1);
    // theta' = 0 - (alpha/4) * 4 * (0 - 1) * 1 = alpha
    CHECK(gd_step_condensed(X, y, w, t0, 0.25, 4.0)(0) == doctest::Approx(0.25));
}

TEST_CASE("condensed step with unit weights reproduces the full step exactly") {
    std::mt19937_64 rng(42);
    for (int trial = 0; trial < 20; ++trial) {
        Eigen::Index n = 2 + static_cast<Eigen::Index>(rng() % 40);
        Eigen::Index d = 1 + static_cast<Eigen::Index>(rng() % 8);
        MatrixXd X = random_matrix(rng, n, d);
        VectorXd y = random_vector(rng, n);
        VectorXd theta = random_vector(rng, d);
        VectorXd w = VectorXd::Ones(n);
        VectorXd full = gd_step_full(X, y, theta, 0.01);
        VectorXd cond = gd_step_condensed(X, y, w, theta, 0.01, static_cast<double>(n));
        CHECK((full - cond).lpNorm<Eigen::Infinity>() <= 1e-15);
    }
}

TEST_CASE("weight-expanded data matches the weighted step and solvers") {
    std::mt19937_64 rng(43);
    for (int trial = 0; trial < 20; ++trial) {
        Eigen::Index d = 1 + static_cast<Eigen::Index>(rng() % 5);
        // overdetermined so the normal equations are well-posed in both forms
        Eigen::Index m = d + 2 + static_cast<Eigen::Index>(rng() % 10);
        MatrixXd Xc = random_matrix(rng, m, d);
        VectorXd yc = random_vector(rng, m);
        VectorXd w(m);
        Eigen::Index n = 0;
        for (Eigen::Index j = 0; j < m; ++j) {
            w(j) = 1.0 + static_cast<double>(rng() % 5);
            n += static_cast<Eigen::Index>(w(j));
        }
        MatrixXd X(n, d);
        VectorXd y(n);
        Eigen::Index row = 0;
        for (Eigen::Index j = 0; j < m; ++j)
            for (int k = 0; k < static_cast<int>(w(j)); ++k) {
                X.row(row) = Xc.row(j);
                y(row) = yc(j);
                ++row;
            }

        VectorXd theta = random_vector(rng, d);
        VectorXd full = gd_step_full(X, y, theta, 0.05);
        VectorXd cond = gd_step_condensed(Xc, yc, w, theta, 0.05, static_cast<double>(n));
        CHECK((full - cond).lpNorm<Eigen::Infinity>() <= 1e-12);

        auto tf = closed_form_full(X, y);
        auto tw = closed_form_weighted(Xc, yc, w);
        CHECK((tf.params.theta - tw.params.theta).lpNorm<Eigen::Infinity>() <= 1e-10);
    }
}

TEST_CASE("analytic gradients match central finite differences") {
    std::mt19937_64 rng(44);
    for (int trial = 0; trial < 10; ++trial) {
        Eigen::Index n = 3 + static_cast<Eigen::Index>(rng() % 20);
        Eigen::Index d = 1 + static_cast<Eigen::Index>(rng() % 6);
        MatrixXd X = random_matrix(rng, n, d);
        VectorXd y = random_vector(rng, n);
        VectorXd w = VectorXd::Ones(n) + random_vector(rng, n).cwiseAbs();
        double ne = w.sum();
        VectorXd theta = random_vector(rng, d);

        // weighted MSE: gradient recovered from the condensed step identity
        VectorXd analytic =
            (theta - gd_step_condensed(X, y, w, theta, 1.0, ne)); // = grad when alpha=1
        VectorXd numeric = numeric_grad(
            [&](const VectorXd& t) { return loss_mse_weighted(X, y, w, t, ne); }, theta);
        CHECK((analytic - numeric).norm() <= 1e-6 * (1.0 + numeric.norm()));

        // weighted logistic NLL
        VectorXd yl(n);
        for (Eigen::Index i = 0; i < n; ++i) yl(i) = static_cast<double>(rng() % 2);
        VectorXd g = logistic_grad_weighted(X, yl, w, theta, ne);
        VectorXd gn = numeric_grad(
            [&](const VectorXd& t) { return logistic_loss_weighted(X, yl, w, t, ne); }, theta);
        CHECK((g - gn).norm() <= 1e-6 * (1.0 + gn.norm()));
    }
}

TEST_CASE("closed-form oracles") {
    // orthonormal design: theta* = X^T y
    MatrixXd X = MatrixXd::Identity(3, 3);
    VectorXd y(3);
    y << 2.0, -1.0, 0.5;
    auto r = closed_form_full(X, y);
    CHECK((r.params.theta - y).lpNorm<Eigen::Infinity>() <= 1e-14);
    CHECK_FALSE(r.ridge_fallback);

    MatrixXd X2(2, 1);
    X2 << 1.0, 2.0;
    VectorXd y2(2);
    y2 << 1.0, 2.0;
    CHECK(closed_form_full(X2, y2).params.theta(0) == doctest::Approx(1.0).epsilon(1e-14));

    SUBCASE("duplicate column triggers the ridge fallback, not a crash") {
        MatrixXd Xs(4, 2);
        Xs << 1, 1, 2, 2, 3, 3, 4, 4;
        VectorXd ys(4);
        ys << 2, 4, 6, 8;
        auto rs = closed_form_full(Xs, ys);
        CHECK(rs.ridge_fallback);
        // prediction is still exact even though theta is not unique
        CHECK((Xs * rs.params.theta - ys).lpNorm<Eigen::Infinity>() <= 1e-6);
    }
}

TEST_CASE("train_linear recovers a noiseless model and reports convergence") {
    std::mt19937_64 rng(45);
    MatrixXd X = random_matrix(rng, 200, 4);
    VectorXd truth(4);
    truth << 1.5, -2.0, 0.25, 3.0;
    VectorXd y = X * truth;

    TrainConfig cfg;
    cfg.learning_rate = 0.1;
    cfg.tol = 1e-12;
    cfg.max_iters = 200000;
    cfg.loss_sample_every = 100;
    auto r = train_linear(X, y, std::nullopt, 200.0, cfg);
    CHECK(r.converged);
    CHECK((r.params.theta - truth).lpNorm<Eigen::Infinity>() <= 1e-6);
    CHECK(r.final_loss <= 1e-10);
    // sampled losses never increase for a small enough learning rate
    for (size_t k = 1; k < r.loss_curve.size(); ++k)
        CHECK(r.loss_curve[k].second <= r.loss_curve[k - 1].second + 1e-12);

    SUBCASE("intercept column is appended last") {
        VectorXd yb = X * truth + VectorXd::Constant(200, 0.75);
        cfg.intercept = true;
        auto rb = train_linear(X, yb, std::nullopt, 200.0, cfg);
        REQUIRE(rb.params.theta.size() == 5);
        CHECK(rb.params.intercept);
        CHECK(rb.params.theta(4) == doctest::Approx(0.75).epsilon(1e-5));
    }
}

TEST_CASE("condensed and full GD trajectories coincide for singleton clusters") {
    std::mt19937_64 rng(46);
    MatrixXd X = random_matrix(rng, 30, 3);
    VectorXd y = random_vector(rng, 30);
    VectorXd w = VectorXd::Ones(30);
    VectorXd a = VectorXd::Zero(3), b = VectorXd::Zero(3);
    for (int it = 0; it < 100; ++it) {
        a = gd_step_full(X, y, a, 0.05);
        b = gd_step_condensed(X, y, w, b, 0.05, 30.0);
        CHECK((a - b).lpNorm<Eigen::Infinity>() <= 1e-12);
    }
}

TEST_CASE("weight validation") {
    MatrixXd X(2, 1);
    X << 1.0, 2.0;
    VectorXd y(2);
    y << 1.0, 2.0;
    VectorXd w(2);
    w << 1.0, 5.0; // sums to 6, n claimed 2
    CHECK_THROWS_AS(gd_step_condensed(X, y, w, VectorXd::Zero(1), 0.1, 2.0), WeightMismatch);
    TrainConfig cfg;
    CHECK_THROWS_AS(train_linear(X, y, w, 2.0, cfg), WeightMismatch);
}

TEST_CASE("logistic training") {
    CHECK(sigmoid(0.0) == doctest::Approx(0.5));
    CHECK(sigmoid(1000.0) == doctest::Approx(1.0));
    CHECK(sigmoid(-1000.0) == doctest::Approx(0.0));

    std::mt19937_64 rng(47);
    // linearly separable in one dimension
    Eigen::Index n = 400;
    MatrixXd X(n, 1);
    VectorXd y(n);
    std::normal_distribution<double> g(0.0, 0.5);
    for (Eigen::Index i = 0; i < n; ++i) {
        bool cls = i % 2 == 0;
        X(i, 0) = (cls ? 2.0 : -2.0) + g(rng);
        y(i) = cls ? 1.0 : 0.0;
    }
    // theta = 0 gives NLL log(2)
    VectorXd w = VectorXd::Ones(n);
    CHECK(logistic_loss_weighted(X, y, w, VectorXd::Zero(1), static_cast<double>(n)) ==
          doctest::Approx(std::log(2.0)).epsilon(1e-12));

    TrainConfig cfg;
    cfg.learning_rate = 0.5;
    cfg.max_iters = 20000;
    cfg.tol = 1e-9;
    auto r = train_logistic(X, y, std::nullopt, static_cast<double>(n), cfg);
    auto metrics = evaluate(r.params, X, y);
    CHECK(metrics.accuracy >= 0.95);
    CHECK(r.params.theta(0) > 0.0);

    SUBCASE("non-binary labels are rejected on the full path") {
        VectorXd bad = y;
        bad(0) = 0.5;
        CHECK_THROWS_AS(train_logistic(X, bad, std::nullopt, static_cast<double>(n), cfg),
                        NonBinaryLabels);
        // ...but fractional centroid labels are fine on the condensed path
        CHECK_NOTHROW(train_logistic(X, bad, w, static_cast<double>(n), cfg));
    }
}

TEST_CASE("evaluate oracles") {
    MatrixXd X(4, 1);
    X << 1, 2, 3, 4;
    VectorXd y(4);
    y << 1, 2, 3, 4;
    ModelParams perfect{VectorXd::Ones(1), ModelKind::Linear, false};
    CHECK(evaluate(perfect, X, y).mse == 0.0);
    ModelParams off{VectorXd::Constant(1, 2.0), ModelKind::Linear, false};
    // residuals 1,2,3,4 -> mse 30/4
    CHECK(evaluate(off, X, y).mse == doctest::Approx(7.5).epsilon(1e-15));

    // logistic: theta 0 predicts p=0.5 -> class 1 everywhere
    MatrixXd Xl(4, 1);
    Xl << 1, -1, 1, -1;
    VectorXd yl(4);
    yl << 1, 0, 0, 1;
    ModelParams zero{VectorXd::Zero(1), ModelKind::Logistic, false};
    CHECK(evaluate(zero, Xl, yl).accuracy == doctest::Approx(0.5));
    ModelParams sharp{VectorXd::Constant(1, 50.0), ModelKind::Logistic, false};
    CHECK(evaluate(sharp, Xl, yl).accuracy == doctest::Approx(0.5));
    VectorXd yl2(4);
    yl2 << 1, 0, 1, 0;
    CHECK(evaluate(sharp, Xl, yl2).accuracy == doctest::Approx(1.0));
}

TEST_CASE("standardizer") {
    std::mt19937_64 rng(48);
    MatrixXd X = random_matrix(rng, 100, 3, 5.0);
    X.col(2).setConstant(7.0); // zero variance
    auto s = Standardizer::fit(X);
    MatrixXd Z = s.apply(X);
    for (int j = 0; j < 2; ++j) {
        CHECK(Z.col(j).mean() == doctest::Approx(0.0).epsilon(1e-12));
        double var = (Z.col(j).array() - Z.col(j).mean()).square().sum() / 100.0;
        CHECK(var == doctest::Approx(1.0).epsilon(1e-9));
    }
    CHECK(s.stddev(2) == 1.0);
    CHECK(Z.col(2).cwiseAbs().maxCoeff() == doctest::Approx(0.0));
}

TEST_CASE("typed-row conversion keeps the target column out of the features") {
    std::vector<TypedRow> rows{{TypedValue{1.0}, TypedValue{int64_t{3}}, TypedValue{2.5f}},
                               {TypedValue{-1.0}, TypedValue{int64_t{4}}, TypedValue{0.5f}}};
    auto [X, y] = rows_to_matrices(rows, 1);
    REQUIRE(X.rows() == 2);
    REQUIRE(X.cols() == 2);
    CHECK(y(0) == 3.0);
    CHECK(y(1) == 4.0);
    CHECK(X(0, 0) == 1.0);
    CHECK(X(0, 1) == doctest::Approx(2.5));
    CHECK(X(1, 0) == -1.0);

    CondensedSet cs;
    cs.samples = rows;
    cs.weights = {3, 5};
    auto [Xc, yc, w] = condensed_to_matrices(cs, 2);
    CHECK(yc(0) == doctest::Approx(2.5));
    CHECK(w(0) == 3.0);
    CHECK(w(1) == 5.0);
    CHECK(Xc(1, 1) == 4.0);
}
