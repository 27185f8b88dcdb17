#pragma once

#include <iosfwd>
#include <string>
#include <vector>

#include "panelcast/matrix.hpp"
#include "panelcast/panel.hpp"

namespace panelcast {

struct LagConfig {
    int lag = 1;
    int train_year_max = 2020;
    int test_year = 2021;

    /// Train through the second-to-last panel year, test on the last.
    static LagConfig for_panel(const PanelTable& panel, int lag);
};

enum class Split { train, test };

struct ColumnLabel {
    enum class Kind { predictor, lagged_target };
    Kind kind;
    std::string feature;
    int offset;  // years before the target year, 0..lag

    [[nodiscard]] std::string str() const;
    friend bool operator==(const ColumnLabel&, const ColumnLabel&) = default;
};

struct RowProvenance {
    std::string state;
    int target_year;
    friend bool operator==(const RowProvenance&, const RowProvenance&) = default;
};

/// Lag-expanded design matrix. Columns are (lag+1) blocks of predictors for
/// offsets 0..lag followed by the lagged targets for offsets 1..lag. Rows are
/// ordered by (target year, state).
struct SupervisedMatrix {
    Matrix X;
    Vector y;
    std::vector<RowProvenance> provenance;
    std::vector<ColumnLabel> columns;
    int lag = 0;

    [[nodiscard]] std::size_t n() const noexcept { return X.rows(); }
    [[nodiscard]] std::size_t d() const noexcept { return X.cols(); }
};

/// Number of design columns for `predictors` features per year at lag l.
constexpr std::size_t lag_dimension(std::size_t predictors, int lag) {
    return predictors * static_cast<std::size_t>(lag + 1) + static_cast<std::size_t>(lag);
}

SupervisedMatrix build_supervised(const PanelTable& panel, const LagConfig& cfg, Split split);

struct NormalizationParams {
    Vector center;
    Vector scale;
};

/// Z-score parameters from training rows (sample standard deviation).
/// Constant columns get scale 1; lagged-target columns pass through unchanged.
NormalizationParams fit_normalization(const SupervisedMatrix& train);
SupervisedMatrix apply_normalization(const SupervisedMatrix& m, const NormalizationParams& p);
SupervisedMatrix invert_normalization(const SupervisedMatrix& m, const NormalizationParams& p);

/// CSV dump with provenance columns, the target, and one column per label.
void write_supervised_csv(const SupervisedMatrix& m, std::ostream& os);

}  // namespace panelcast
