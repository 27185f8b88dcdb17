#pragma once

#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <vector>

#include "panelcast/lag_features.hpp"
#include "panelcast/matrix.hpp"
#include "panelcast/tree.hpp"

namespace panelcast {

enum class StrataKey { state, none };

StrataKey parse_strata_key(const std::string& s);
std::string to_string(StrataKey k);

struct EarlyStop {
    std::size_t patience = 2;
    double tolerance = 1e-4;
};

struct BaggingConfig {
    std::size_t M = 100;
    std::size_t B = 0;  // 0: default_block_size for the lag
    int lag = 1;
    StrataKey strata_key = StrataKey::state;
    double rmse_floor = 1e-8;
    EarlyStop early_stop;
    std::uint64_t seed = 0;
    std::size_t threads = 1;

    void validate() const;
};

/// Target years per state for the lag, halved when lag <= 2.
std::size_t default_block_size(int lag, std::size_t years_per_state);

struct Block {
    std::size_t stratum;            // index into BootstrapPlan::strata
    std::vector<std::size_t> rows;  // ascending target year
};

struct BootstrapPlan {
    std::size_t n_rows = 0;
    std::size_t block_size = 1;
    std::vector<std::string> strata;
    std::vector<Block> blocks;
    std::vector<std::vector<std::size_t>> samples;  // block indices per sample, in draw order
    std::vector<std::vector<std::size_t>> oob;      // ascending row indices per sample

    /// Rows of sample i in draw order (repeats included).
    [[nodiscard]] std::vector<std::size_t> sample_rows(std::size_t i) const;
    /// Per-row multiplicity of sample i.
    [[nodiscard]] Vector sample_weights(std::size_t i) const;
    /// Block count per stratum.
    [[nodiscard]] std::vector<std::size_t> stratum_block_counts() const;
};

/// Partitions rows into time-contiguous blocks of up to B rows within each
/// stratum. A stratum's rows are ordered by year; the last block of a
/// stratum may be short. Strata that end up with a single block are merged
/// into one shared stratum so that resampling them is not degenerate.
BootstrapPlan make_blocks(std::span<const std::string> stratum_of_row, std::span<const int> year_of_row,
                          std::size_t B);
BootstrapPlan make_blocks(const SupervisedMatrix& train, std::size_t B, StrataKey key);

/// Draws M samples. Within each stratum, blocks of equal length form a
/// class; each class is resampled with replacement to its own size, so every
/// stratum keeps its block count and every sample has exactly n_rows rows.
/// Sample i depends only on (seed, i).
void draw_samples(BootstrapPlan& plan, std::size_t M, std::uint64_t seed);

enum class EnsembleKind { uniform, weighted };

struct EnsembleModel {
    EnsembleKind kind = EnsembleKind::uniform;
    std::vector<RegressionTree> learners;
    Vector weights;
    Vector validation_rmse;       // per learner; NaN when it had no validation rows
    std::vector<int> kept_depth;  // depth of each kept tree
    std::vector<std::uint64_t> seeds;
    BaggingConfig config;

    [[nodiscard]] std::size_t size() const noexcept { return learners.size(); }
};

/// Inverse-RMSE weights normalized to sum 1. Equal RMSEs give exactly 1/M.
Vector inverse_rmse_weights(std::span<const double> rmse, double rmse_floor);

/// Assembles a model from trained learners. Uniform kind ignores the RMSEs
/// for weighting and may be given an empty RMSE list.
EnsembleModel assemble_ensemble(std::vector<RegressionTree> learners, Vector validation_rmse, EnsembleKind kind,
                                double rmse_floor);

/// Uniform bagging: M trees grown to hp on the plan's samples.
EnsembleModel fit_ermbag(const SupervisedMatrix& train, const BaggingConfig& cfg, const TreeHyperparams& hp);
EnsembleModel fit_ermbag(const SupervisedMatrix& train, const BootstrapPlan& plan, const BaggingConfig& cfg,
                         const TreeHyperparams& hp);

/// Weighted bagging with per-learner depth-wise early stopping on
/// out-of-bag RMSE.
EnsembleModel fit_ermbag_plus(const SupervisedMatrix& train, const BaggingConfig& cfg, const TreeHyperparams& hp);
EnsembleModel fit_ermbag_plus(const SupervisedMatrix& train, const BootstrapPlan& plan, const BaggingConfig& cfg,
                              const TreeHyperparams& hp);

/// The plan fit_ermbag / fit_ermbag_plus build from cfg.
BootstrapPlan make_plan(const SupervisedMatrix& train, const BaggingConfig& cfg);

Vector predict_ensemble(const EnsembleModel& model, const Matrix& X);

/// Row i holds learner i's predictions.
Matrix member_predictions(const EnsembleModel& model, const Matrix& X);

/// Writes manifest.json plus tree_NNN.txt files into dir.
void save_ensemble(const EnsembleModel& model, const std::filesystem::path& dir);
EnsembleModel load_ensemble(const std::filesystem::path& dir);

}  // namespace panelcast
