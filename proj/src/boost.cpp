#include "panelcast/boost.hpp"

#include <memory>
#include <numeric>

#include "panelcast/error.hpp"

namespace panelcast {

void BoostParams::validate() const {
    if (stages < 1) throw ConfigError("boosting needs at least one stage");
    if (!(learning_rate > 0.0 && learning_rate <= 1.0)) {
        throw ConfigError("boosting learning rate must lie in (0, 1]");
    }
    tree.validate();
}

namespace {

double mse(std::span<const double> y, std::span<const double> yhat) {
    double s = 0.0;
    for (std::size_t i = 0; i < y.size(); ++i) {
        const double e = y[i] - yhat[i];
        s += e * e;
    }
    return s / static_cast<double>(y.size());
}

}  // namespace

BoostModel fit_lsboost(const Matrix& X, std::span<const double> y, const BoostParams& params,
                       std::vector<double>* training_mse) {
    params.validate();
    const std::size_t n = X.rows();
    if (n == 0) throw DimensionError("cannot boost on an empty training set");
    if (y.size() != n) throw DimensionError("fit_lsboost: X and y row counts differ");

    BoostModel model;
    model.n_features = X.cols();
    model.base_offset = std::accumulate(y.begin(), y.end(), 0.0) / static_cast<double>(n);

    const auto columns = std::make_shared<const SortedColumns>(X);
    const std::vector<double> ones(n, 1.0);
    Vector yhat(n, model.base_offset);
    Vector residual(n);
    if (training_mse) training_mse->assign(1, mse(y, yhat));

    model.stages.reserve(params.stages);
    for (std::size_t m = 0; m < params.stages; ++m) {
        for (std::size_t i = 0; i < n; ++i) residual[i] = y[i] - yhat[i];
        RegressionTree h = fit_tree(columns, residual, ones, params.tree);
        for (std::size_t i = 0; i < n; ++i) yhat[i] += params.learning_rate * h.predict_row(X.row(i));
        model.stages.push_back({params.learning_rate, std::move(h)});
        if (training_mse) training_mse->push_back(mse(y, yhat));
    }
    return model;
}

Vector predict_lsboost(const BoostModel& model, const Matrix& X) {
    if (X.cols() != model.n_features) {
        throw DimensionError("boost model expects " + std::to_string(model.n_features) + " features, got " +
                             std::to_string(X.cols()));
    }
    Vector out(X.rows(), model.base_offset);
    for (const auto& stage : model.stages) {
        for (std::size_t i = 0; i < X.rows(); ++i) out[i] += stage.weight * stage.tree.predict_row(X.row(i));
    }
    return out;
}

}  // namespace panelcast
