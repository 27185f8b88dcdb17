#pragma once

#include <span>

#include "panelcast/matrix.hpp"

namespace panelcast {

/// Linear epsilon-insensitive SVR: f(x) = <w, x> + b.
struct SvrModel {
    Vector w;
    double b = 0.0;
    double epsilon = 0.0;
    double C = 0.01;
    double objective = 0.0;  // primal objective at (w, b) on the training data
};

struct SvrParams {
    double C = 0.01;
    double epsilon = 0.1;
    std::size_t epochs = 2000;
    double step0 = 0.1;  // step size at epoch k is step0 / (1 + k)

    void validate() const;
};

/// 0.5 * |w|^2 + C * sum_i max(0, |y_i - f(x_i)| - epsilon)
double svr_objective(const Matrix& X, std::span<const double> y, std::span<const double> w, double b,
                     double C, double epsilon);

/// Full-batch subgradient descent from (w = 0, b = mean(y)), returning the
/// iterate with the lowest objective seen.
SvrModel fit_svr(const Matrix& X, std::span<const double> y, const SvrParams& params = {});

Vector predict_svr(const SvrModel& model, const Matrix& X);

}  // namespace panelcast
