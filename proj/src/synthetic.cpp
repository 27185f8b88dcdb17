#include "panelcast/synthetic.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>

#include "panelcast/error.hpp"
#include "panelcast/random.hpp"

namespace panelcast {

PanelTable generate_synthetic(std::uint64_t seed, std::size_t n_states, int first_year, int last_year,
                              const SyntheticConfig& config) {
    if (n_states < 2) throw ConfigError("synthetic panel needs at least 2 states");
    if (last_year - first_year < 2) throw ConfigError("synthetic panel needs at least 3 years");
    if (!(config.lag_coef > -1.0 && config.lag_coef < 1.0)) {
        throw ConfigError("synthetic lag_coef must lie in (-1, 1)");
    }
    if (config.noise_scale < 0.0 || config.predictor_noise < 0.0 || config.state_spread < 0.0) {
        throw ConfigError("synthetic noise and spread parameters must be non-negative");
    }

    const Schema& schema = Schema::canonical();
    const std::size_t nf = schema.size();
    const std::size_t ny = static_cast<std::size_t>(last_year - first_year + 1);

    std::vector<std::string> states;
    if (n_states <= us_state_codes().size()) {
        states.assign(us_state_codes().begin(), us_state_codes().begin() + static_cast<long>(n_states));
    } else {
        for (std::size_t s = 1; s <= n_states; ++s) {
            char buf[16];
            std::snprintf(buf, sizeof buf, "S%03zu", s);
            states.emplace_back(buf);
        }
    }

    std::vector<std::pair<std::size_t, double>> drivers;
    for (const auto& [name, coef] : config.drivers) {
        auto idx = schema.index_of(name);
        if (!idx || *idx == 0) throw ConfigError("unknown synthetic driver feature '" + name + "'");
        drivers.emplace_back(*idx, coef);
    }

    Rng rng(derive_seed(seed, 0x5157));
    std::vector<double> values(ny * n_states * nf);
    auto cell = [&](std::size_t y, std::size_t s, std::size_t f) -> double& {
        return values[(y * n_states + s) * nf + f];
    };

    // Predictors: state level + linear drift + AR(1) wobble, clipped to range.
    for (std::size_t f = 1; f < nf; ++f) {
        const bool currency = schema.features()[f].unit == Unit::currency;
        const double level = currency ? 50000.0 : rng.uniform(2.0, 60.0);
        const double global_drift = rng.normal(0.0, config.predictor_trend * level);
        for (std::size_t s = 0; s < n_states; ++s) {
            const double state_level = level * (1.0 + config.state_spread * rng.normal());
            const double drift = global_drift + rng.normal(0.0, 0.5 * config.predictor_trend * level);
            double wobble = 0.0;
            for (std::size_t y = 0; y < ny; ++y) {
                wobble = 0.5 * wobble + rng.normal(0.0, config.predictor_noise * level);
                double v = state_level + drift * static_cast<double>(y) + wobble;
                v = currency ? std::max(v, 0.0) : std::clamp(v, 0.0, 100.0);
                cell(y, s, f) = v;
            }
        }
    }

    for (std::size_t s = 0; s < n_states; ++s) {
        double noise = 0.0;
        double prev = 0.0;
        for (std::size_t y = 0; y < ny; ++y) {
            double signal = config.intercept;
            for (const auto& [f, coef] : drivers) signal += coef * cell(y, s, f);
            noise = config.noise_autocorr * noise + config.noise_scale * rng.normal();
            const double base = y == 0 ? signal / (1.0 - config.lag_coef) : signal + config.lag_coef * prev;
            const double target = std::clamp(base + noise, 0.0, 100.0);
            cell(y, s, 0) = target;
            prev = target;
        }
    }

    std::vector<int> years(ny);
    for (std::size_t y = 0; y < ny; ++y) years[y] = first_year + static_cast<int>(y);
    return PanelTable(std::move(states), std::move(years), schema.features(), std::move(values));
}

}  // namespace panelcast
