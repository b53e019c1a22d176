#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <optional>
#include <utility>
#include <vector>

#include "egd/gede.hpp"

namespace egd::train {

enum class ModelKind : uint8_t { Linear = 0, Logistic = 1 };

struct ModelParams {
    Eigen::VectorXd theta; // feature weights, intercept last when enabled
    ModelKind kind = ModelKind::Linear;
    bool intercept = false;
};

struct TrainConfig {
    double learning_rate = 0.001;
    uint64_t max_iters = 1'000'000;
    double tol = 1e-8; // infinity norm of the parameter step
    bool intercept = false;
    bool standardize = false;
    uint64_t seed = 0;
    uint64_t loss_sample_every = 0; // 0 disables the loss curve
};

struct TrainReport {
    ModelParams params;
    uint64_t iters_run = 0;
    double final_loss = 0.0;
    bool converged = false;
    double wall_time = 0.0; // seconds
    std::vector<std::pair<uint64_t, double>> loss_curve;
    bool ridge_fallback = false; // closed-form solvers only
};

struct Metrics {
    double mse = 0.0;
    double accuracy = 0.0; // logistic only
};

/// Per-column affine transform fitted on a training split.
struct Standardizer {
    Eigen::VectorXd mean;
    Eigen::VectorXd stddev; // zero-variance columns keep stddev 1

    static Standardizer fit(const Eigen::MatrixXd& X);
    Eigen::MatrixXd apply(const Eigen::MatrixXd& X) const;
};

double loss_mse(const Eigen::MatrixXd& X, const Eigen::VectorXd& y, const Eigen::VectorXd& theta,
                double n_effective);

double loss_mse_weighted(const Eigen::MatrixXd& X, const Eigen::VectorXd& y,
                         const Eigen::VectorXd& w, const Eigen::VectorXd& theta,
                         double n_effective);

Eigen::VectorXd gd_step_full(const Eigen::MatrixXd& X, const Eigen::VectorXd& y,
                             const Eigen::VectorXd& theta, double alpha);

/// One Eq-5-style update: weights scale each sample's gradient, normalized by
/// the original record count n (which the weights must sum to).
Eigen::VectorXd gd_step_condensed(const Eigen::MatrixXd& X_c, const Eigen::VectorXd& y_c,
                                  const Eigen::VectorXd& w, const Eigen::VectorXd& theta,
                                  double alpha, double n);

/// Batch GD for the linear model. Pass weights for the condensed path;
/// n_effective is the original record count either way.
TrainReport train_linear(const Eigen::MatrixXd& X, const Eigen::VectorXd& y,
                         const std::optional<Eigen::VectorXd>& w, double n_effective,
                         const TrainConfig& cfg);

TrainReport closed_form_full(const Eigen::MatrixXd& X, const Eigen::VectorXd& y,
                             bool intercept = false);

TrainReport closed_form_weighted(const Eigen::MatrixXd& X_c, const Eigen::VectorXd& y_c,
                                 const Eigen::VectorXd& w, bool intercept = false);

double logistic_loss_weighted(const Eigen::MatrixXd& X, const Eigen::VectorXd& y,
                              const Eigen::VectorXd& w, const Eigen::VectorXd& theta,
                              double n_effective);

Eigen::VectorXd logistic_grad_weighted(const Eigen::MatrixXd& X, const Eigen::VectorXd& y,
                                       const Eigen::VectorXd& w, const Eigen::VectorXd& theta,
                                       double n_effective);

TrainReport train_logistic(const Eigen::MatrixXd& X, const Eigen::VectorXd& y,
                           const std::optional<Eigen::VectorXd>& w, double n_effective,
                           const TrainConfig& cfg);

Metrics evaluate(const ModelParams& params, const Eigen::MatrixXd& X_test,
                 const Eigen::VectorXd& y_test);

/// Overflow-safe sigmoid.
double sigmoid(double z);

/// Splits typed rows into (features, target) matrices, converting to double.
std::pair<Eigen::MatrixXd, Eigen::VectorXd> rows_to_matrices(const std::vector<TypedRow>& rows,
                                                             size_t target_col);

/// Same split for a condensed set, plus its weight vector.
std::tuple<Eigen::MatrixXd, Eigen::VectorXd, Eigen::VectorXd>
condensed_to_matrices(const CondensedSet& cs, size_t target_col);

} // namespace egd::train
