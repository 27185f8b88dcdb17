#pragma once

#include <cstddef>
#include <iosfwd>
#include <map>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "panelcast/schema.hpp"

namespace panelcast {

/// Immutable state x year x feature table. Years are contiguous and
/// increasing; states are sorted; the target feature is column 0.
class PanelTable {
public:
    PanelTable() = default;

    /// `values` is laid out year-major, then state, then feature.
    PanelTable(std::vector<std::string> states, std::vector<int> years,
               std::vector<FeatureSpec> features, std::vector<double> values);

    [[nodiscard]] const std::vector<std::string>& states() const noexcept { return states_; }
    [[nodiscard]] const std::vector<int>& years() const noexcept { return years_; }
    [[nodiscard]] const std::vector<FeatureSpec>& features() const noexcept { return features_; }
    [[nodiscard]] const std::vector<double>& values() const noexcept { return values_; }

    [[nodiscard]] std::size_t n_states() const noexcept { return states_.size(); }
    [[nodiscard]] std::size_t n_years() const noexcept { return years_.size(); }
    [[nodiscard]] std::size_t n_features() const noexcept { return features_.size(); }
    [[nodiscard]] std::size_t n_rows() const noexcept { return states_.size() * years_.size(); }

    [[nodiscard]] double at(std::size_t year_idx, std::size_t state_idx, std::size_t feature) const {
        return values_[(year_idx * states_.size() + state_idx) * features_.size() + feature];
    }
    [[nodiscard]] double target(std::size_t year_idx, std::size_t state_idx) const {
        return at(year_idx, state_idx, 0);
    }

    [[nodiscard]] std::optional<std::size_t> year_index(int year) const;
    [[nodiscard]] std::optional<std::size_t> state_index(const std::string& state) const;
    [[nodiscard]] std::optional<std::size_t> feature_index(const std::string& name) const;

    friend bool operator==(const PanelTable&, const PanelTable&) = default;

private:
    std::vector<std::string> states_;
    std::vector<int> years_;
    std::vector<FeatureSpec> features_;
    std::vector<double> values_;
};

struct LoadOptions {
    /// Enforce exactly the 90 canonical features and 51 states.
    bool schema_strict = false;
    /// Unit/category lookup for columns; the canonical schema when unset.
    std::optional<Schema> schema;
};

PanelTable read_panel(std::istream& is, const LoadOptions& opts = {});
PanelTable load_panel(const std::string& path, const LoadOptions& opts = {});
void write_panel(const PanelTable& table, std::ostream& os);
void save_panel(const PanelTable& table, const std::string& path);

/// Sparse (year, value) observations of one feature for one state.
struct SourceSeries {
    std::string state;
    std::string feature;
    std::vector<std::pair<int, double>> points;
};

/// Piecewise-linear fill of `target_years`. Known points are kept exactly;
/// at most one year beyond the known hull is extrapolated from the nearest
/// two points.
SourceSeries interpolate_series(const SourceSeries& series, const std::vector<int>& target_years);

/// One upstream dataset keyed by (state, year); NaN marks a missing cell.
struct SourceTable {
    std::string name;
    std::vector<std::string> features;
    struct Row {
        std::string state;
        int year;
        std::vector<double> values;
    };
    std::vector<Row> rows;
};

/// Combines per-category sources into one table over `years`, filling
/// missing years by interpolate_series. Feature order follows `schema`.
PanelTable integrate(const std::vector<SourceTable>& sources, const std::vector<int>& years,
                     const Schema& schema = Schema::canonical());

/// Projects an integrated table back onto one source's features and the
/// (state, year) keys present in it.
SourceTable project(const PanelTable& table, const SourceTable& like);

}  // namespace panelcast
