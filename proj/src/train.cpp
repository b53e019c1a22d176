#include "egd/train.hpp"

#include <chrono>
#include <cmath>

#include "egd/errors.hpp"

namespace egd::train {

namespace {

void check_shapes(const Eigen::MatrixXd& X, const Eigen::VectorXd& y, const Eigen::VectorXd& theta) {
    if (X.rows() != y.size()) throw ShapeMismatch("X rows != y size");
    if (X.cols() != theta.size()) throw ShapeMismatch("X cols != theta size");
}

void check_weights(const Eigen::VectorXd& w, Eigen::Index rows, double n) {
    if (w.size() != rows) throw WeightMismatch("weight count != sample count");
    if (std::abs(w.sum() - n) > 0.5) throw WeightMismatch("weights do not sum to n");
}

Eigen::MatrixXd with_intercept(const Eigen::MatrixXd& X) {
    Eigen::MatrixXd Xa(X.rows(), X.cols() + 1);
    Xa << X, Eigen::VectorXd::Ones(X.rows());
    return Xa;
}

} // namespace

Standardizer Standardizer::fit(const Eigen::MatrixXd& X) {
    Standardizer s;
    s.mean = X.colwise().mean();
    Eigen::VectorXd var =
        (X.rowwise() - s.mean.transpose()).array().square().colwise().mean();
    s.stddev = var.array().sqrt();
    for (Eigen::Index c = 0; c < s.stddev.size(); ++c)
        if (s.stddev[c] == 0.0) s.stddev[c] = 1.0;
    return s;
}

Eigen::MatrixXd Standardizer::apply(const Eigen::MatrixXd& X) const {
    return (X.rowwise() - mean.transpose()).array().rowwise() / stddev.transpose().array();
}

double loss_mse(const Eigen::MatrixXd& X, const Eigen::VectorXd& y, const Eigen::VectorXd& theta,
                double n_effective) {
    check_shapes(X, y, theta);
    return (X * theta - y).squaredNorm() / (2.0 * n_effective);
}

double loss_mse_weighted(const Eigen::MatrixXd& X, const Eigen::VectorXd& y,
                         const Eigen::VectorXd& w, const Eigen::VectorXd& theta,
                         double n_effective) {
    check_shapes(X, y, theta);
    check_weights(w, X.rows(), n_effective);
    Eigen::VectorXd r = X * theta - y;
    return (w.array() * r.array().square()).sum() / (2.0 * n_effective);
}

Eigen::VectorXd gd_step_full(const Eigen::MatrixXd& X, const Eigen::VectorXd& y,
                             const Eigen::VectorXd& theta, double alpha) {
    check_shapes(X, y, theta);
    Eigen::VectorXd next =
        theta - (alpha / static_cast<double>(X.rows())) * (X.transpose() * (X * theta - y));
    if (!next.allFinite()) throw NonFinite("gradient step diverged");
    return next;
}

Eigen::VectorXd gd_step_condensed(const Eigen::MatrixXd& X_c, const Eigen::VectorXd& y_c,
                                  const Eigen::VectorXd& w, const Eigen::VectorXd& theta,
                                  double alpha, double n) {
    check_shapes(X_c, y_c, theta);
    check_weights(w, X_c.rows(), n);
    Eigen::VectorXd wr = (w.array() * (X_c * theta - y_c).array()).matrix();
    Eigen::VectorXd next = theta - (alpha / n) * (X_c.transpose() * wr);
    if (!next.allFinite()) throw NonFinite("gradient step diverged");
    return next;
}

namespace {

template <typename Step, typename Loss>
TrainReport run_gd(Eigen::Index dim, const TrainConfig& cfg, Step step, Loss loss) {
    auto t0 = std::chrono::steady_clock::now();
    TrainReport report;
    Eigen::VectorXd theta = Eigen::VectorXd::Zero(dim);
    for (uint64_t t = 0; t < cfg.max_iters; ++t) {
        Eigen::VectorXd next = step(theta);
        double delta = (next - theta).template lpNorm<Eigen::Infinity>();
        theta = std::move(next);
        report.iters_run = t + 1;
        if (cfg.loss_sample_every && (t % cfg.loss_sample_every == 0))
            report.loss_curve.emplace_back(t, loss(theta));
        if (delta <= cfg.tol) {
            report.converged = true;
            break;
        }
    }
    report.params.theta = theta;
    report.params.intercept = cfg.intercept;
    report.final_loss = loss(theta);
    report.wall_time = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    return report;
}

} // namespace

TrainReport train_linear(const Eigen::MatrixXd& X, const Eigen::VectorXd& y,
                         const std::optional<Eigen::VectorXd>& w, double n_effective,
                         const TrainConfig& cfg) {
    Eigen::MatrixXd Xa = cfg.intercept ? with_intercept(X) : X;
    TrainReport report;
    if (w) {
        check_weights(*w, Xa.rows(), n_effective);
        report = run_gd(
            Xa.cols(), cfg,
            [&](const Eigen::VectorXd& th) {
                return gd_step_condensed(Xa, y, *w, th, cfg.learning_rate, n_effective);
            },
            [&](const Eigen::VectorXd& th) { return loss_mse_weighted(Xa, y, *w, th, n_effective); });
    } else {
        report = run_gd(
            Xa.cols(), cfg,
            [&](const Eigen::VectorXd& th) { return gd_step_full(Xa, y, th, cfg.learning_rate); },
            [&](const Eigen::VectorXd& th) {
                return loss_mse(Xa, y, th, static_cast<double>(Xa.rows()));
            });
    }
    report.params.kind = ModelKind::Linear;
    return report;
}

namespace {

/// Solves A theta = b; falls back to ridge when A is numerically singular.
TrainReport solve_normal(Eigen::MatrixXd A, const Eigen::VectorXd& b, bool intercept) {
    auto t0 = std::chrono::steady_clock::now();
    TrainReport report;
    Eigen::Index d = A.rows();
    Eigen::FullPivLU<Eigen::MatrixXd> lu(A);
    if (!lu.isInvertible()) {
        double lambda = 1e-8 * A.trace() / static_cast<double>(d);
        if (lambda <= 0.0) lambda = 1e-8;
        A.diagonal().array() += lambda;
        lu.compute(A);
        if (!lu.isInvertible()) throw SingularSystem("normal equations singular even with ridge");
        report.ridge_fallback = true;
    }
    report.params.theta = lu.solve(b);
    report.params.kind = ModelKind::Linear;
    report.params.intercept = intercept;
    if (!report.params.theta.allFinite()) throw SingularSystem("non-finite solution");
    report.converged = true;
    report.iters_run = 0;
    report.wall_time = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    return report;
}

} // namespace

TrainReport closed_form_full(const Eigen::MatrixXd& X, const Eigen::VectorXd& y, bool intercept) {
    if (X.rows() != y.size()) throw ShapeMismatch("X rows != y size");
    Eigen::MatrixXd Xa = intercept ? with_intercept(X) : X;
    TrainReport report = solve_normal(Xa.transpose() * Xa, Xa.transpose() * y, intercept);
    report.final_loss = loss_mse(Xa, y, report.params.theta, static_cast<double>(Xa.rows()));
    return report;
}

TrainReport closed_form_weighted(const Eigen::MatrixXd& X_c, const Eigen::VectorXd& y_c,
                                 const Eigen::VectorXd& w, bool intercept) {
    if (X_c.rows() != y_c.size()) throw ShapeMismatch("X rows != y size");
    if (w.size() != X_c.rows()) throw WeightMismatch("weight count != sample count");
    Eigen::MatrixXd Xa = intercept ? with_intercept(X_c) : X_c;
    Eigen::MatrixXd Xw = w.asDiagonal() * Xa;
    TrainReport report = solve_normal(Xa.transpose() * Xw, Xw.transpose() * y_c, intercept);
    report.final_loss = loss_mse_weighted(Xa, y_c, w, report.params.theta, w.sum());
    return report;
}

double sigmoid(double z) {
    if (z >= 0.0) {
        double e = std::exp(-z);
        return 1.0 / (1.0 + e);
    }
    double e = std::exp(z);
    return e / (1.0 + e);
}

double logistic_loss_weighted(const Eigen::MatrixXd& X, const Eigen::VectorXd& y,
                              const Eigen::VectorXd& w, const Eigen::VectorXd& theta,
                              double n_effective) {
    check_shapes(X, y, theta);
    check_weights(w, X.rows(), n_effective);
    Eigen::VectorXd z = X * theta;
    double total = 0.0;
    for (Eigen::Index i = 0; i < z.size(); ++i) {
        // -y log sigma(z) - (1-y) log(1 - sigma(z)), stable form
        double zi = z[i];
        double log1pe = zi > 0.0 ? zi + std::log1p(std::exp(-zi)) : std::log1p(std::exp(zi));
        total += w[i] * (log1pe - y[i] * zi);
    }
    return total / n_effective;
}

Eigen::VectorXd logistic_grad_weighted(const Eigen::MatrixXd& X, const Eigen::VectorXd& y,
                                       const Eigen::VectorXd& w, const Eigen::VectorXd& theta,
                                       double n_effective) {
    check_shapes(X, y, theta);
    check_weights(w, X.rows(), n_effective);
    Eigen::VectorXd z = X * theta;
    Eigen::VectorXd r(z.size());
    for (Eigen::Index i = 0; i < z.size(); ++i) r[i] = w[i] * (sigmoid(z[i]) - y[i]);
    return (X.transpose() * r) / n_effective;
}

TrainReport train_logistic(const Eigen::MatrixXd& X, const Eigen::VectorXd& y,
                           const std::optional<Eigen::VectorXd>& w, double n_effective,
                           const TrainConfig& cfg) {
    if (!w) {
        for (Eigen::Index i = 0; i < y.size(); ++i)
            if (y[i] != 0.0 && y[i] != 1.0) throw NonBinaryLabels();
    } else {
        for (Eigen::Index i = 0; i < y.size(); ++i)
            if (y[i] < 0.0 || y[i] > 1.0)
                throw std::invalid_argument("condensed targets must lie in [0,1]");
    }
    Eigen::MatrixXd Xa = cfg.intercept ? with_intercept(X) : X;
    Eigen::VectorXd weights = w ? *w : Eigen::VectorXd::Ones(Xa.rows());
    TrainReport report = run_gd(
        Xa.cols(), cfg,
        [&](const Eigen::VectorXd& th) {
            Eigen::VectorXd next =
                th - cfg.learning_rate * logistic_grad_weighted(Xa, y, weights, th, n_effective);
            if (!next.allFinite()) throw NonFinite("gradient step diverged");
            return next;
        },
        [&](const Eigen::VectorXd& th) {
            return logistic_loss_weighted(Xa, y, weights, th, n_effective);
        });
    report.params.kind = ModelKind::Logistic;
    return report;
}

Metrics evaluate(const ModelParams& params, const Eigen::MatrixXd& X_test,
                 const Eigen::VectorXd& y_test) {
    if (X_test.rows() != y_test.size()) throw ShapeMismatch("X rows != y size");
    Eigen::MatrixXd Xa = params.intercept ? with_intercept(X_test) : X_test;
    if (Xa.cols() != params.theta.size()) throw ShapeMismatch("feature count != theta size");
    Eigen::VectorXd z = Xa * params.theta;
    Metrics metrics;
    if (params.kind == ModelKind::Linear) {
        metrics.mse = (z - y_test).squaredNorm() / static_cast<double>(z.size());
    } else {
        size_t correct = 0;
        double mse = 0.0;
        for (Eigen::Index i = 0; i < z.size(); ++i) {
            double p = sigmoid(z[i]);
            if ((p >= 0.5 ? 1.0 : 0.0) == y_test[i]) ++correct;
            mse += (p - y_test[i]) * (p - y_test[i]);
        }
        metrics.accuracy = static_cast<double>(correct) / static_cast<double>(z.size());
        metrics.mse = mse / static_cast<double>(z.size());
    }
    return metrics;
}

std::pair<Eigen::MatrixXd, Eigen::VectorXd> rows_to_matrices(const std::vector<TypedRow>& rows,
                                                             size_t target_col) {
    if (rows.empty()) return {Eigen::MatrixXd(0, 0), Eigen::VectorXd(0)};
    size_t d = rows[0].size();
    if (target_col >= d) throw IndexOutOfRange("target column");
    Eigen::MatrixXd X(rows.size(), d - 1);
    Eigen::VectorXd y(rows.size());
    for (size_t r = 0; r < rows.size(); ++r) {
        if (rows[r].size() != d) throw ShapeMismatch("ragged rows");
        size_t k = 0;
        for (size_t c = 0; c < d; ++c) {
            double v = as_double(rows[r][c]);
            if (c == target_col)
                y[static_cast<Eigen::Index>(r)] = v;
            else
                X(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(k++)) = v;
        }
    }
    return {std::move(X), std::move(y)};
}

std::tuple<Eigen::MatrixXd, Eigen::VectorXd, Eigen::VectorXd>
condensed_to_matrices(const CondensedSet& cs, size_t target_col) {
    auto [X, y] = rows_to_matrices(cs.samples, target_col);
    Eigen::VectorXd w(cs.weights.size());
    for (size_t j = 0; j < cs.weights.size(); ++j)
        w[static_cast<Eigen::Index>(j)] = static_cast<double>(cs.weights[j]);
    return {std::move(X), std::move(y), std::move(w)};
}

} // namespace egd::train
