#pragma once

#include <vector>

#include "panelcast/tree.hpp"

namespace panelcast {

struct BoostStage {
    double weight;  // beta_m, fixed to the learning rate
    RegressionTree tree;
};

/// Least-squares boosting: prediction = base_offset + sum_m beta_m * h_m(x).
struct BoostModel {
    double base_offset = 0.0;
    std::vector<BoostStage> stages;
    std::size_t n_features = 0;
};

struct BoostParams {
    std::size_t stages = 100;
    double learning_rate = 0.1;
    TreeHyperparams tree{4, 3, 0.0};

    void validate() const;
};

/// Each stage fits a tree to the current residuals y - yhat and is added
/// with weight equal to the learning rate. `training_mse`, when given,
/// receives the training MSE after stage 0 (offset only) through M.
BoostModel fit_lsboost(const Matrix& X, std::span<const double> y, const BoostParams& params,
                       std::vector<double>* training_mse = nullptr);

Vector predict_lsboost(const BoostModel& model, const Matrix& X);

}  // namespace panelcast
