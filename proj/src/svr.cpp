#include "panelcast/svr.hpp"

#include <cmath>
#include <limits>
#include <numeric>

#include "panelcast/error.hpp"

namespace panelcast {

void SvrParams::validate() const {
    if (!(C > 0.0)) throw ConfigError("SVR C must be positive");
    if (!(epsilon >= 0.0)) throw ConfigError("SVR epsilon must be non-negative");
    if (epochs < 1) throw ConfigError("SVR needs at least one epoch");
    if (!(step0 > 0.0)) throw ConfigError("SVR step size must be positive");
}

namespace {

double dot(std::span<const double> a, std::span<const double> b) {
    double s = 0.0;
    for (std::size_t j = 0; j < a.size(); ++j) s += a[j] * b[j];
    return s;
}

}  // namespace

double svr_objective(const Matrix& X, std::span<const double> y, std::span<const double> w, double b,
                     double C, double epsilon) {
    double loss = 0.0;
    for (std::size_t i = 0; i < X.rows(); ++i) {
        const double r = std::abs(y[i] - (dot(w, X.row(i)) + b));
        if (r > epsilon) loss += r - epsilon;
    }
    return 0.5 * dot(w, w) + C * loss;
}

SvrModel fit_svr(const Matrix& X, std::span<const double> y, const SvrParams& params) {
    params.validate();
    const std::size_t n = X.rows();
    const std::size_t d = X.cols();
    if (n == 0) throw DimensionError("cannot fit SVR on an empty training set");
    if (y.size() != n) throw DimensionError("fit_svr: X and y row counts differ");

    Vector w(d, 0.0);
    double b = std::accumulate(y.begin(), y.end(), 0.0) / static_cast<double>(n);

    SvrModel best{w, b, params.epsilon, params.C, std::numeric_limits<double>::infinity()};
    Vector gw(d);
    // Each pass evaluates the objective of the current iterate and its
    // subgradient together; the final pass only scores the last step.
    for (std::size_t k = 0; k <= params.epochs; ++k) {
        gw = w;
        double gb = 0.0;
        double loss = 0.0;
        for (std::size_t i = 0; i < n; ++i) {
            const auto x = X.row(i);
            const double r = y[i] - (dot(w, x) + b);
            if (std::abs(r) <= params.epsilon) continue;
            loss += std::abs(r) - params.epsilon;
            const double s = r > 0.0 ? -params.C : params.C;
            for (std::size_t j = 0; j < d; ++j) gw[j] += s * x[j];
            gb += s;
        }
        const double obj = 0.5 * dot(w, w) + params.C * loss;
        if (!std::isfinite(obj)) break;
        if (obj < best.objective) {
            best.w = w;
            best.b = b;
            best.objective = obj;
        }
        if (k == params.epochs) break;
        const double step = params.step0 / (1.0 + static_cast<double>(k));
        for (std::size_t j = 0; j < d; ++j) w[j] -= step * gw[j];
        b -= step * gb;
    }
    return best;
}

Vector predict_svr(const SvrModel& model, const Matrix& X) {
    if (X.cols() != model.w.size()) {
        throw DimensionError("SVR model expects " + std::to_string(model.w.size()) + " features, got " +
                             std::to_string(X.cols()));
    }
    Vector out(X.rows());
    for (std::size_t i = 0; i < X.rows(); ++i) out[i] = dot(model.w, X.row(i)) + model.b;
    return out;
}

}  // namespace panelcast
