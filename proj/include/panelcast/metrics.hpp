#pragma once

#include <chrono>
#include <cstddef>
#include <span>
#include <string>
#include <type_traits>
#include <utility>
#include <vector>

namespace panelcast {

struct MetricsReport {
    double mae = 0.0;
    double rmse = 0.0;
    double mape = 0.0;  // percent
    double r2 = 0.0;
    double train_seconds = 0.0;
    double predict_seconds = 0.0;
    double total_seconds = 0.0;
    std::size_t n = 0;
    /// Set when a metric is undefined for the data; the metric is then NaN.
    std::vector<std::string> flags;

    [[nodiscard]] bool flagged(const std::string& f) const;
};

inline constexpr const char* kFlagMapeZeroActual = "mape_undefined_zero_actual";
inline constexpr const char* kFlagR2ConstantTarget = "r2_undefined_constant_target";

/// MAE, RMSE, MAPE (percent) and R^2 against the mean of y. A zero actual
/// makes MAPE NaN and a constant y makes R^2 NaN; both are flagged.
MetricsReport compute_metrics(std::span<const double> y, std::span<const double> yhat);

/// Runs fn and measures it on the steady clock. Returns (result, seconds),
/// or just seconds for void callables.
template <class Fn>
auto time_phase(Fn&& fn) {
    using Clock = std::chrono::steady_clock;
    const auto start = Clock::now();
    auto seconds = [&] { return std::chrono::duration<double>(Clock::now() - start).count(); };
    if constexpr (std::is_void_v<std::invoke_result_t<Fn>>) {
        std::forward<Fn>(fn)();
        return seconds();
    } else {
        auto result = std::forward<Fn>(fn)();
        const double s = seconds();
        return std::pair<decltype(result), double>(std::move(result), s);
    }
}

}  // namespace panelcast
