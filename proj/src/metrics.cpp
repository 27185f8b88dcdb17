#include "panelcast/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "panelcast/error.hpp"

namespace panelcast {

bool MetricsReport::flagged(const std::string& f) const {
    return std::find(flags.begin(), flags.end(), f) != flags.end();
}

MetricsReport compute_metrics(std::span<const double> y, std::span<const double> yhat) {
    if (y.size() != yhat.size()) {
        throw DimensionError("metrics: " + std::to_string(y.size()) + " actuals but " + std::to_string(yhat.size()) +
                             " predictions");
    }
    if (y.empty()) throw DimensionError("metrics need at least one observation");
    const double n = static_cast<double>(y.size());
    constexpr double nan = std::numeric_limits<double>::quiet_NaN();

    MetricsReport m;
    m.n = y.size();
    double abs_sum = 0.0, sq_sum = 0.0, pct_sum = 0.0, y_sum = 0.0;
    bool zero_actual = false;
    for (std::size_t i = 0; i < y.size(); ++i) {
        const double e = y[i] - yhat[i];
        abs_sum += std::abs(e);
        sq_sum += e * e;
        if (y[i] == 0.0) {
            zero_actual = true;
        } else {
            pct_sum += std::abs(e / y[i]);
        }
        y_sum += y[i];
    }
    m.mae = abs_sum / n;
    m.rmse = std::sqrt(sq_sum / n);
    if (zero_actual) {
        m.mape = nan;
        m.flags.emplace_back(kFlagMapeZeroActual);
    } else {
        m.mape = 100.0 / n * pct_sum;
    }
    const double mean = y_sum / n;
    double sst = 0.0;
    for (double v : y) sst += (v - mean) * (v - mean);
    if (sst == 0.0) {
        m.r2 = nan;
        m.flags.emplace_back(kFlagR2ConstantTarget);
    } else {
        m.r2 = 1.0 - sq_sum / sst;
    }
    return m;
}

}  // namespace panelcast
