#pragma once

#include <array>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "panelcast/boost.hpp"
#include "panelcast/ensemble.hpp"
#include "panelcast/metrics.hpp"
#include "panelcast/neural.hpp"
#include "panelcast/panel.hpp"
#include "panelcast/svr.hpp"
#include "panelcast/tree.hpp"

namespace panelcast {

inline constexpr const char* kVersion = "0.1.0";

enum class ModelKind { svmreg, bdtree, lsboost, nn, lstm, ermbag, ermbag_plus };

inline constexpr std::array<ModelKind, 7> kAllModels{ModelKind::svmreg, ModelKind::bdtree, ModelKind::lsboost,
                                                     ModelKind::nn,     ModelKind::lstm,   ModelKind::ermbag,
                                                     ModelKind::ermbag_plus};

std::string model_name(ModelKind m);     // config name, e.g. "ermbag_plus"
std::string model_display(ModelKind m);  // table name, e.g. "ERMBag+"
ModelKind parse_model(std::string_view name);

struct DataSource {
    std::string path;  // empty: synthetic panel
    bool schema_strict = false;
    std::optional<std::uint64_t> synthetic_seed;  // default: the master seed
    std::size_t synthetic_states = 51;
    int first_year = 2011;
    int last_year = 2021;
};

struct MlpSettings {
    std::vector<std::size_t> hidden{10, 10};
    TrainOptions train{500, 0.01, 0.005, 0};
};

struct LstmSettings {
    std::size_t hidden = 8;
    TrainOptions train{500, 0.05, 0.005, 0};
};

struct ExperimentConfig {
    DataSource data;
    std::vector<ModelKind> models{kAllModels.begin(), kAllModels.end()};
    std::vector<int> lags{1, 2, 3, 4, 5, 6, 7, 8, 9};
    std::uint64_t seed = 42;
    std::string output_dir = "panelcast-out";
    std::size_t threads = 1;  // concurrent grid cells

    SvrParams svmreg;
    TreeHyperparams bdtree;
    BoostParams lsboost;
    MlpSettings nn;
    LstmSettings lstm;
    BaggingConfig ermbag = default_ermbag();
    TreeHyperparams ermbag_tree;
    BaggingConfig ermbag_plus;
    TreeHyperparams ermbag_plus_tree;

    /// Plain bagging: iid row bootstrap (blocks of one row, no strata).
    static BaggingConfig default_ermbag();

    void validate() const;
};

/// Sets one `key = value` entry. Throws ConfigError for unknown keys or bad values.
void set_config_value(ExperimentConfig& cfg, std::string_view key, std::string_view value);

/// Parses `key = value` lines; '#' starts a comment. Unset keys keep defaults.
ExperimentConfig parse_config(std::string_view text);
ExperimentConfig load_config(const std::filesystem::path& path);

/// Every key with its resolved value, one per line, in a fixed order. With
/// include_runtime false, keys that cannot change results (threads,
/// output_dir) are left out.
std::string render_config(const ExperimentConfig& cfg, bool include_runtime = true);

/// FNV-1a of the result-defining resolved config, as 16 hex digits.
std::string config_hash(const ExperimentConfig& cfg);

/// Seed for one grid cell, derived from (master seed, model, lag).
std::uint64_t cell_seed(std::uint64_t master, ModelKind model, int lag);

struct CellResult {
    ModelKind model;
    int lag;
    std::optional<MetricsReport> metrics;  // empty when the cell failed
    std::string error;
    std::size_t n_train = 0;
    std::size_t n_test = 0;
    std::size_t n_features = 0;

    [[nodiscard]] bool ok() const noexcept { return metrics.has_value(); }
};

struct GridReport {
    std::string config_hash;
    std::uint64_t seed = 0;
    std::string version = kVersion;
    std::string config_text;  // render_config(cfg, false)
    std::string data_description;
    std::vector<CellResult> cells;  // model-major in config order, then lag

    [[nodiscard]] const CellResult* find(ModelKind model, int lag) const;
};

/// Loads or generates the panel named by cfg.data.
PanelTable load_experiment_panel(const ExperimentConfig& cfg);

/// Trains and evaluates one (model, lag) cell. Errors propagate.
CellResult run_cell(const ExperimentConfig& cfg, const PanelTable& panel, ModelKind model, int lag);

/// Runs every (model, lag) cell, cfg.threads at a time. A failing cell is
/// recorded with its error and does not affect the others.
GridReport run_grid(const ExperimentConfig& cfg);
GridReport run_grid(const ExperimentConfig& cfg, const PanelTable& panel);

/// Lag with minimum test RMSE among successful cells; ties go to the
/// smaller lag.
std::pair<int, MetricsReport> select_best(const GridReport& report, ModelKind model);

/// Structured report. Timings sit in a separate "timing" object per cell.
std::string report_json(const GridReport& report, bool include_timings = true);
GridReport parse_report_json(std::string_view text);

/// Table-2-style summary: best-lag row per model, then RMSE by lag.
std::string summary_table(const GridReport& report);

/// One row per cell: model, lag, four metrics, three timings, error.
std::string cells_csv(const GridReport& report);

/// Writes report.json, summary.txt and cells.csv into dir, plus config.txt
/// when config_text is given.
void emit_reports(const GridReport& report, const std::filesystem::path& dir,
                  const std::optional<std::string>& config_text = std::nullopt);

}  // namespace panelcast
