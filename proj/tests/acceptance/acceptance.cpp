// Acceptance suite: one PASS/FAIL line per criterion. Pass criterion numbers
// as arguments to run a subset.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <functional>
#include <memory>
#include <numeric>
#include <set>
#include <string>
#include <vector>

#include "helpers.hpp"
#include "oracles/tree_oracle.hpp"
#include "panelcast/boost.hpp"
#include "panelcast/ensemble.hpp"
#include "panelcast/harness.hpp"
#include "panelcast/lag_features.hpp"
#include "panelcast/metrics.hpp"
#include "panelcast/panel.hpp"
#include "panelcast/synthetic.hpp"
#include "panelcast/tree.hpp"
#include "support/gradcheck.hpp"

using namespace panelcast;

namespace {

struct Outcome {
    bool pass;
    std::string detail;
};

std::string fmt(const char* f, auto... args) {
    char buf[512];
    std::snprintf(buf, sizeof buf, f, args...);
    return buf;
}

double median(std::vector<double> v) {
    std::sort(v.begin(), v.end());
    const std::size_t n = v.size();
    return n % 2 ? v[n / 2] : 0.5 * (v[n / 2 - 1] + v[n / 2]);
}

// 1 -------------------------------------------------------------------------

Outcome lag_dimensions() {
    const auto panel = generate_synthetic(1, 51, 2011, 2021);
    const std::size_t want_d[] = {179, 269, 359, 449, 539, 629, 719, 809, 899};
    const std::size_t want_n[] = {459, 408, 357, 306, 255, 204, 153, 102, 51};
    std::string bad;
    for (int l = 1; l <= 9; ++l) {
        const auto cfg = LagConfig::for_panel(panel, l);
        const auto tr = build_supervised(panel, cfg, Split::train);
        const auto te = build_supervised(panel, cfg, Split::test);
        if (tr.d() != want_d[l - 1] || te.d() != want_d[l - 1] || tr.n() != want_n[l - 1] || te.n() != 51)
            bad += fmt(" l=%d(d=%zu,n=%zu,test=%zu)", l, tr.d(), tr.n(), te.n());
    }
    return {bad.empty(), bad.empty() ? "d and n_train exact for l=1..9, n_test=51" : "mismatch:" + bad};
}

// 2 -------------------------------------------------------------------------

Outcome metrics_oracle() {
    const auto m = compute_metrics(Vector{1, 2, 3}, Vector{2, 2, 2});
    const double e_mae = std::abs(m.mae - 2.0 / 3.0);
    const double e_rmse = std::abs(m.rmse - std::sqrt(2.0 / 3.0));
    const double e_mape = std::abs(m.mape - 400.0 / 9.0);
    const double e_r2 = std::abs(m.r2);
    const auto p = compute_metrics(Vector{1, 2, 3}, Vector{1, 2, 3});
    const bool perfect = p.mae == 0.0 && p.rmse == 0.0 && p.mape == 0.0 && p.r2 == 1.0;
    const double worst = std::max({e_mae, e_rmse, e_mape, e_r2});
    return {worst <= 1e-12 && perfect, fmt("max abs error %.3g; perfect case %s", worst, perfect ? "exact" : "wrong")};
}

// 3 -------------------------------------------------------------------------

void collect_leaves(const RegressionTree& t, const Matrix& X, std::vector<oracle::Rows>& leaves) {
    std::vector<int> leaf_of(X.rows());
    for (std::size_t r = 0; r < X.rows(); ++r) {
        int id = 0;
        while (!t.nodes()[id].is_leaf()) {
            const auto& n = t.nodes()[id];
            id = X(r, static_cast<std::size_t>(n.feature)) <= n.threshold ? n.left : n.right;
        }
        leaf_of[r] = id;
    }
    std::vector<oracle::Rows> by_node(t.nodes().size());
    for (std::size_t r = 0; r < X.rows(); ++r) by_node[leaf_of[r]].push_back(r);
    for (auto& rows : by_node)
        if (!rows.empty()) leaves.push_back(std::move(rows));
    std::sort(leaves.begin(), leaves.end());
}

Outcome tree_oracle() {
    Rng rng(3003);
    int matched = 0;
    std::string first_bad;
    for (int trial = 0; trial < 200; ++trial) {
        const std::size_t n = 2 + rng.uniform_index(29);
        const std::size_t d = 1 + rng.uniform_index(3);
        const int depth = 1 + static_cast<int>(rng.uniform_index(2));
        const std::size_t min_leaf = 1 + rng.uniform_index(3);
        const bool coarse = rng.uniform_index(2) == 0;
        Matrix X(n, d);
        for (double& v : X.data()) v = coarse ? static_cast<double>(rng.uniform_index(5)) : rng.uniform(-2, 2);
        Vector y(n);
        for (double& v : y) v = rng.uniform(-5, 5);
        oracle::Table table(n);
        for (std::size_t i = 0; i < n; ++i) table[i].assign(X.row(i).begin(), X.row(i).end());

        const auto tree = fit_tree(X, y, {depth, min_leaf, 0.0});
        std::vector<oracle::Rows> leaves;
        collect_leaves(tree, X, leaves);
        // Both partitions are canonically ordered, so equal partitions give
        // bitwise-equal SSE sums.
        const auto expected = oracle::greedy_tree_leaves(table, y, depth, min_leaf);
        const double got = oracle::partition_sse(leaves, y);
        const double want = oracle::partition_sse(expected, y);
        if (got == want && leaves == expected) {
            ++matched;
        } else if (first_bad.empty()) {
            first_bad = fmt("; first mismatch at dataset %d: %.17g vs %.17g", trial, got, want);
        }
    }
    return {matched == 200, fmt("%d/200 datasets with identical leaf partitions and training SSE", matched) + first_bad};
}

// 4 -------------------------------------------------------------------------

Outcome boost_monotone() {
    Rng rng(4004);
    int violations = 0, runs = 0;
    double worst = 0.0;
    for (int data = 0; data < 50; ++data) {
        const std::size_t n = 20 + rng.uniform_index(100);
        const std::size_t d = 1 + rng.uniform_index(6);
        Matrix X(n, d);
        for (double& v : X.data()) v = rng.uniform(-3, 3);
        Vector y(n);
        for (std::size_t i = 0; i < n; ++i) y[i] = std::sin(X(i, 0)) * 4.0 + rng.normal(0.0, 1.0);
        for (double nu : {0.1, 0.5, 1.0}) {
            std::vector<double> mse;
            const int depth = 1 + static_cast<int>(rng.uniform_index(4));
            (void)fit_lsboost(X, y, {50, nu, {depth, 1 + rng.uniform_index(4), 0.0}}, &mse);
            ++runs;
            for (std::size_t m = 1; m < mse.size(); ++m) {
                worst = std::max(worst, mse[m] - mse[m - 1]);
                if (mse[m] > mse[m - 1] + 1e-12) ++violations;
            }
        }
    }
    return {violations == 0, fmt("%d runs x 50 stages, %d increases beyond 1e-12 (largest step change %+.3g)", runs,
                                 violations, worst)};
}

// 5 -------------------------------------------------------------------------

Outcome gradient_fidelity() {
    Rng rng(5005);
    testutil::GradStats mlp, lstm;
    for (int draw = 0; draw < 20; ++draw) {
        mlp.merge(testutil::mlp_gradient_draw(rng, 6, {10, 10}, 1e-5, 1e-6, 1e-4, 1e-3));
        lstm.merge(testutil::lstm_gradient_draw(rng, 4, 3, 3, 1e-5, 1e-6, 1e-4, 1e-3));
    }
    const bool ok = mlp.checked > 0 && lstm.checked > 0 && mlp.within_tight == mlp.checked &&
                    lstm.within_tight == lstm.checked;
    return {ok, fmt("MLP %zu/%zu coords within 1e-4 (worst %.2g); LSTM %zu/%zu (worst %.2g)", mlp.within_tight,
                    mlp.checked, mlp.worst, lstm.within_tight, lstm.checked, lstm.worst)};
}

// 6 -------------------------------------------------------------------------

Outcome bootstrap_contracts() {
    const auto panel = generate_synthetic(6, 51, 2011, 2021);
    std::size_t bad_counts = 0, split_blocks = 0, size_off = 0, samples = 0;
    for (int lag : {1, 2, 5}) {
        const auto train = build_supervised(panel, LagConfig::for_panel(panel, lag), Split::train);
        for (std::size_t B : {std::size_t{0}, std::size_t{3}}) {
            BaggingConfig cfg;
            cfg.lag = lag;
            cfg.B = B;
            cfg.M = 100;
            cfg.seed = 600 + static_cast<std::uint64_t>(lag) * 10 + B;
            const auto plan = make_plan(train, cfg);
            const auto counts = plan.stratum_block_counts();
            // Row -> (block, position) for the integrity check.
            std::vector<std::pair<std::size_t, std::size_t>> where(train.n());
            for (std::size_t b = 0; b < plan.blocks.size(); ++b)
                for (std::size_t k = 0; k < plan.blocks[b].rows.size(); ++k) where[plan.blocks[b].rows[k]] = {b, k};
            for (std::size_t i = 0; i < cfg.M; ++i, ++samples) {
                std::vector<std::size_t> drawn(plan.strata.size(), 0);
                for (auto b : plan.samples[i]) ++drawn[plan.blocks[b].stratum];
                bad_counts += drawn != counts;
                const auto rows = plan.sample_rows(i);
                for (std::size_t k = 0; k < rows.size();) {
                    const auto [b, pos] = where[rows[k]];
                    const auto& blk = plan.blocks[b].rows;
                    if (pos != 0 || k + blk.size() > rows.size() ||
                        !std::equal(blk.begin(), blk.end(), rows.begin() + static_cast<std::ptrdiff_t>(k))) {
                        ++split_blocks;
                        break;
                    }
                    k += blk.size();
                }
                const auto diff = static_cast<long>(rows.size()) - static_cast<long>(train.n());
                size_off += static_cast<std::size_t>(std::labs(diff)) > plan.block_size;
            }
        }
    }
    const std::vector<std::string> one(4, "AL");
    const std::vector<int> years{1, 2, 3, 4};
    auto two = make_blocks(one, years, 2);
    draw_samples(two, 10000, 66);
    std::size_t first = 0, total = 0;
    for (const auto& s : two.samples)
        for (auto b : s) {
            first += b == 0;
            ++total;
        }
    const double freq = static_cast<double>(first) / static_cast<double>(total);
    const bool ok = bad_counts == 0 && split_blocks == 0 && size_off == 0 && std::abs(freq - 0.5) <= 0.02;
    return {ok, fmt("%zu samples: %zu stratum-count violations, %zu split blocks, %zu size violations; "
                    "two-block frequency %.4f",
                    samples, bad_counts, split_blocks, size_off, freq)};
}

// 7 -------------------------------------------------------------------------

Outcome ensemble_algebra() {
    const auto w = inverse_rmse_weights(std::vector<double>{0.5, 1.0}, 1e-8);
    const bool exact = w[0] == 2.0 / 3.0 && w[1] == 1.0 / 3.0;

    const auto panel = generate_synthetic(7, 20, 2011, 2021);
    const auto train = build_supervised(panel, LagConfig::for_panel(panel, 2), Split::train);
    const auto test = build_supervised(panel, LagConfig::for_panel(panel, 2), Split::test);
    bool simplex = true;
    bool bitwise = true;
    Rng rng(77);
    for (int trial = 0; trial < 5; ++trial) {
        BaggingConfig cfg;
        cfg.M = 10 + 10 * static_cast<std::size_t>(trial);
        cfg.lag = 2;
        cfg.seed = 700 + static_cast<std::uint64_t>(trial);
        const auto plus = fit_ermbag_plus(train, cfg, {});
        for (const auto& ws : {plus.weights, inverse_rmse_weights(testutil::random_vector(rng, cfg.M, 0.0, 3.0), 1e-8)}) {
            double s = 0.0;
            for (double v : ws) {
                simplex = simplex && v >= 0.0;
                s += v;
            }
            simplex = simplex && std::abs(s - 1.0) <= 1e-12;
        }
        const auto plan = make_plan(train, cfg);
        const auto uniform = fit_ermbag(train, plan, cfg, {});
        const auto equal = assemble_ensemble(uniform.learners, Vector(cfg.M, 0.25 + 0.1 * trial),
                                             EnsembleKind::weighted, cfg.rmse_floor);
        bitwise = bitwise && predict_ensemble(equal, test.X) == predict_ensemble(uniform, test.X) &&
                  predict_ensemble(equal, train.X) == predict_ensemble(uniform, train.X);
    }
    return {exact && simplex && bitwise,
            fmt("(0.5,1.0)->(%.17g, %.17g) %s; simplex %s; equal-RMSE vs uniform predictions %s", w[0], w[1],
                exact ? "exact" : "inexact", simplex ? "holds" : "violated", bitwise ? "bit-identical" : "differ")};
}

// 8, 9, 10 ------------------------------------------------------------------

struct SweepResult {
    int variance_wins = 0;           // ERMBag <= median member, lag 2
    std::vector<double> ermbag_l2;   // test RMSE at lag 2
    std::vector<double> plus_l2;
    int plus_wins = 0;               // ERMBag+ < ERMBag at lag 2
    int ermbag_beats_tree = 0;       // at each model's best lag
    int plus_beats_tree = 0;
    double seconds_8 = 0.0;
    double seconds_rest = 0.0;
};

struct Prepared {
    SupervisedMatrix train, test;
};

Prepared prepare(const PanelTable& panel, int lag) {
    const auto lc = LagConfig::for_panel(panel, lag);
    const auto raw_train = build_supervised(panel, lc, Split::train);
    const auto norm = fit_normalization(raw_train);
    return {apply_normalization(raw_train, norm), apply_normalization(build_supervised(panel, lc, Split::test), norm)};
}

const SweepResult& sweep() {
    static const SweepResult result = [] {
        using Clock = std::chrono::steady_clock;
        SweepResult r;
        for (int s = 0; s < 20; ++s) {
            ExperimentConfig cfg;
            cfg.seed = 1000 + static_cast<std::uint64_t>(s);
            const auto panel = load_experiment_panel(cfg);

            // Variance reduction: the lag-2 ERMBag fit, scored per member.
            const auto t0 = Clock::now();
            const auto l2 = prepare(panel, 2);
            BaggingConfig bag = cfg.ermbag;
            bag.lag = 2;
            bag.seed = cell_seed(cfg.seed, ModelKind::ermbag, 2);
            const auto ens = fit_ermbag(l2.train, bag, cfg.ermbag_tree);
            const auto members = member_predictions(ens, l2.test.X);
            std::vector<double> member_rmse;
            for (std::size_t i = 0; i < ens.size(); ++i)
                member_rmse.push_back(compute_metrics(l2.test.y, members.row(i)).rmse);
            const double ens_rmse = compute_metrics(l2.test.y, predict_ensemble(ens, l2.test.X)).rmse;
            r.variance_wins += ens_rmse <= median(member_rmse);
            const auto t1 = Clock::now();
            r.seconds_8 += std::chrono::duration<double>(t1 - t0).count();

            // Grid cells for the three tree models across all lags.
            double best_tree = INFINITY, best_bag = INFINITY, best_plus = INFINITY;
            for (int lag = 1; lag <= 9; ++lag) {
                const double tree = run_cell(cfg, panel, ModelKind::bdtree, lag).metrics->rmse;
                const double bagged =
                    lag == 2 ? ens_rmse : run_cell(cfg, panel, ModelKind::ermbag, lag).metrics->rmse;
                const double plus = run_cell(cfg, panel, ModelKind::ermbag_plus, lag).metrics->rmse;
                best_tree = std::min(best_tree, tree);
                best_bag = std::min(best_bag, bagged);
                best_plus = std::min(best_plus, plus);
                if (lag == 2) {
                    r.ermbag_l2.push_back(bagged);
                    r.plus_l2.push_back(plus);
                    r.plus_wins += plus < bagged;
                }
            }
            r.ermbag_beats_tree += best_bag < best_tree;
            r.plus_beats_tree += best_plus < best_tree;
            r.seconds_rest += std::chrono::duration<double>(Clock::now() - t1).count();
            std::printf("  seed %d: lag-2 ERMBag %.4f ERMBag+ %.4f | best BDTree %.4f ERMBag %.4f ERMBag+ %.4f\n",
                        1000 + s, r.ermbag_l2.back(), r.plus_l2.back(), best_tree, best_bag, best_plus);
            std::fflush(stdout);
        }
        return r;
    }();
    return result;
}

Outcome variance_reduction() {
    const auto& r = sweep();
    return {r.variance_wins >= 16 && r.seconds_8 < 180.0,
            fmt("ERMBag <= median member RMSE in %d/20 seeds (need 16); %.1f s", r.variance_wins, r.seconds_8)};
}

Outcome plus_tendency() {
    const auto& r = sweep();
    const double mp = median(r.plus_l2), me = median(r.ermbag_l2);
    return {mp <= me && r.plus_wins >= 12 && r.seconds_rest < 300.0,
            fmt("lag 2 median RMSE ERMBag+ %.4f vs ERMBag %.4f; ERMBag+ wins %d/20 (need 12); sweep %.1f s", mp, me,
                r.plus_wins, r.seconds_rest)};
}

Outcome table_ordering() {
    const auto& r = sweep();
    return {r.ermbag_beats_tree >= 16 && r.plus_beats_tree >= 16,
            fmt("best-lag RMSE below BDTree: ERMBag %d/20, ERMBag+ %d/20 (need 16 each)", r.ermbag_beats_tree,
                r.plus_beats_tree)};
}

// 11 ------------------------------------------------------------------------

Outcome determinism() {
    ExperimentConfig serial;
    serial.seed = 2024;
    ExperimentConfig parallel = serial;
    parallel.threads = 4;
    const auto t0 = std::chrono::steady_clock::now();
    const auto a = run_grid(serial);
    const auto b = run_grid(parallel);
    const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    const auto ja = report_json(a, false), jb = report_json(b, false);
    std::size_t finite = 0;
    for (const auto& c : a.cells)
        finite += c.ok() && std::isfinite(c.metrics->mae) && std::isfinite(c.metrics->rmse) &&
                  std::isfinite(c.metrics->mape) && std::isfinite(c.metrics->r2);
    const bool ok = ja == jb && a.cells.size() == 63 && finite == 63 && secs < 600.0;
    return {ok, fmt("63-cell grid run serially and with 4 threads: reports %s, %zu/63 cells finite, %.1f s total",
                    ja == jb ? "byte-identical" : "DIFFER", finite, secs)};
}

// 12 ------------------------------------------------------------------------

Outcome interpolation() {
    const auto mid = interpolate_series({"AL", "x", {{2010, 100.0}, {2020, 200.0}}}, {2015});
    bool exact = false;
    for (const auto& [y, v] : mid.points) exact = exact || (y == 2015 && v == 150.0);
    Rng rng(1212);
    double worst = 0.0;
    for (int t = 0; t < 1000; ++t) {
        const double a = rng.uniform(-100, 100), slope = rng.uniform(-10, 10);
        const int y0 = 1990 + static_cast<int>(rng.uniform_index(30));
        const int y1 = y0 + 1 + static_cast<int>(rng.uniform_index(15));
        const double x0 = static_cast<double>(y0 - 2000), x1 = static_cast<double>(y1 - 2000);
        std::vector<int> targets;
        for (int y = y0 - 1; y <= y1 + 1; ++y) targets.push_back(y);
        const auto out = interpolate_series({"AL", "x", {{y0, a + slope * x0}, {y1, a + slope * x1}}}, targets);
        for (const auto& [y, v] : out.points)
            worst = std::max(worst, std::abs(v - (a + slope * static_cast<double>(y - 2000))));
    }
    return {exact && worst <= 1e-9, fmt("max error over 1000 lines %.3g; 2015 midpoint %s", worst,
                                        exact ? "exactly 150" : "not exact")};
}

}  // namespace

int main(int argc, char** argv) {
    struct Criterion {
        int id;
        const char* name;
        std::function<Outcome()> run;
    };
    const std::vector<Criterion> all{
        {1, "lag dimensions", lag_dimensions},
        {2, "metrics oracle", metrics_oracle},
        {3, "tree oracle equivalence", tree_oracle},
        {4, "LSBoost monotone training loss", boost_monotone},
        {5, "gradient fidelity", gradient_fidelity},
        {6, "bootstrap contracts", bootstrap_contracts},
        {7, "ensemble algebra", ensemble_algebra},
        {8, "variance reduction", variance_reduction},
        {9, "ERMBag+ improvement tendency", plus_tendency},
        {10, "ensembles beat the single tree", table_ordering},
        {11, "end-to-end determinism", determinism},
        {12, "interpolation exactness", interpolation},
    };
    std::set<int> wanted;
    for (int i = 1; i < argc; ++i) wanted.insert(std::atoi(argv[i]));

    int failed = 0;
    for (const auto& c : all) {
        if (!wanted.empty() && !wanted.count(c.id)) continue;
        Outcome o{false, ""};
        const auto t0 = std::chrono::steady_clock::now();
        try {
            o = c.run();
        } catch (const std::exception& e) {
            o = {false, std::string("exception: ") + e.what()};
        }
        const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
        failed += !o.pass;
        std::printf("%s %2d %s (%.2f s): %s\n", o.pass ? "PASS" : "FAIL", c.id, c.name, secs, o.detail.c_str());
        std::fflush(stdout);
    }
    return failed == 0 ? 0 : 1;
}
