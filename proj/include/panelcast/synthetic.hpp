#pragma once

#include <cstdint>
#include <string>
#include <utility>
#include <vector>

#include "panelcast/panel.hpp"

namespace panelcast {

/// Parameters of the synthetic panel. The target follows
///
///   y[s,t] = intercept + sum_k coef_k * x[s,t,k] + lag_coef * y[s,t-1] + e[s,t]
///   e[s,t] = noise_autocorr * e[s,t-1] + noise_scale * N(0,1)
///
/// with the first year started at the noise-free fixed point
/// (intercept + sum_k coef_k * x[s,t0,k]) / (1 - lag_coef) + e[s,t0].
struct SyntheticConfig {
    double intercept = -1.0;
    double lag_coef = 0.5;
    std::vector<std::pair<std::string, double>> drivers{
        {"cdi_obesity_pct", 0.08},
        {"age_60_plus_pct", 0.05},
        {"econ_poverty_pct", 0.06},
        {"cdi_no_leisure_activity_pct", 0.03},
        {"cdi_hypertension_pct", 0.03},
    };
    double noise_scale = 0.25;
    double noise_autocorr = 0.5;
    /// Predictor idiosyncratic noise, as a fraction of each feature's mean level.
    double predictor_noise = 0.03;
    /// Per-year drift of predictor means, as a fraction of the feature's level.
    double predictor_trend = 0.01;
    /// Spread of state-level predictor means, as a fraction of the global mean.
    double state_spread = 0.15;
};

/// Deterministic synthetic panel over the canonical schema.
/// States are postal codes when n_states <= 51, otherwise S001, S002, ...
PanelTable generate_synthetic(std::uint64_t seed, std::size_t n_states, int first_year,
                              int last_year, const SyntheticConfig& config = {});

}  // namespace panelcast
