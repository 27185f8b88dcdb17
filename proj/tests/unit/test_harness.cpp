#include <cmath>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "doctest.h"
#include "panelcast/error.hpp"
#include "panelcast/harness.hpp"
#include "panelcast/synthetic.hpp"

using namespace panelcast;

namespace {

CellResult cell(ModelKind m, int lag, double rmse) {
    MetricsReport r;
    r.mae = rmse * 0.8;
    r.rmse = rmse;
    r.mape = rmse * 10.0;
    r.r2 = 1.0 - rmse;
    r.n = 51;
    r.train_seconds = 0.5;
    r.predict_seconds = 0.25;
    r.total_seconds = 0.75;
    return {m, lag, r, "", 408, 51, 269};
}

std::string slurp(const std::filesystem::path& p) {
    std::ifstream is(p);
    std::stringstream ss;
    ss << is.rdbuf();
    return ss.str();
}

std::size_t count_lines(const std::string& s) {
    std::size_t n = 0;
    for (char c : s) n += c == '\n';
    return n;
}

}  // namespace

TEST_SUITE("harness") {

TEST_CASE("model names") {
    CHECK(kAllModels.size() == 7);
    for (auto m : kAllModels) CHECK(parse_model(model_name(m)) == m);
    CHECK(model_display(ModelKind::ermbag_plus) == "ERMBag+");
    CHECK_THROWS_AS(parse_model("xgboost"), ConfigError);
}

TEST_CASE("config parsing and rendering") {
    const auto cfg = parse_config("# comment\nmodels = bdtree, ermbag_plus\nlags = 1-3\nseed = 7\n"
                                  "ermbag_plus.M = 30\nnn.hidden = 10,10\nthreads = 2 # trailing\n");
    CHECK(cfg.models == std::vector<ModelKind>{ModelKind::bdtree, ModelKind::ermbag_plus});
    CHECK(cfg.lags == std::vector<int>{1, 2, 3});
    CHECK(cfg.seed == 7);
    CHECK(cfg.ermbag_plus.M == 30);
    CHECK(cfg.threads == 2);
    const auto again = parse_config(render_config(cfg));
    CHECK(render_config(again) == render_config(cfg));
    CHECK(config_hash(again) == config_hash(cfg));

    auto other = cfg;
    other.threads = 8;
    other.output_dir = "elsewhere";
    CHECK(config_hash(other) == config_hash(cfg));
    other.seed = 8;
    CHECK(config_hash(other) != config_hash(cfg));
    CHECK(config_hash(cfg).size() == 16);
}

TEST_CASE("config errors cite the line") {
    try {
        (void)parse_config("seed = 1\nbogus.key = 3\n");
        FAIL("expected an error");
    } catch (const ConfigError& e) {
        CHECK(std::string(e.what()).find("line 2") != std::string::npos);
    }
    CHECK_THROWS_AS(parse_config("lags = 0-3\n").validate(), ConfigError);
    CHECK_THROWS_AS(parse_config("seed\n"), ConfigError);
    CHECK_THROWS_AS(parse_config("ermbag.M = -1\n"), ConfigError);
}

TEST_CASE("cell seeds differ by model and lag") {
    CHECK(cell_seed(1, ModelKind::bdtree, 1) == cell_seed(1, ModelKind::bdtree, 1));
    CHECK(cell_seed(1, ModelKind::bdtree, 1) != cell_seed(1, ModelKind::bdtree, 2));
    CHECK(cell_seed(1, ModelKind::bdtree, 1) != cell_seed(1, ModelKind::lsboost, 1));
    CHECK(cell_seed(1, ModelKind::bdtree, 1) != cell_seed(2, ModelKind::bdtree, 1));
}

TEST_CASE("single tree cell on a synthetic panel") {
    auto cfg = parse_config("models = bdtree\nlags = 1\nseed = 3\n");
    const auto report = run_grid(cfg);
    REQUIRE(report.cells.size() == 1);
    const auto& c = report.cells[0];
    REQUIRE(c.ok());
    CHECK(c.n_test == 51);
    CHECK(c.n_train == 459);
    CHECK(c.n_features == 179);
    CHECK(c.metrics->n == 51);
    CHECK(std::isfinite(c.metrics->rmse));
    CHECK(c.metrics->rmse >= c.metrics->mae);
    CHECK(std::abs(c.metrics->total_seconds - (c.metrics->train_seconds + c.metrics->predict_seconds)) <= 1e-3);
    CHECK(report.config_hash == config_hash(cfg));
}

TEST_CASE("a failing cell does not disturb the others") {
    auto cfg = parse_config("models = bdtree, lsboost\nlags = 1, 5\nseed = 4\n"
                            "data.synthetic.states = 6\ndata.synthetic.last_year = 2016\n");
    const auto panel = load_experiment_panel(cfg);
    const auto report = run_grid(cfg, panel);
    REQUIRE(report.cells.size() == 4);
    const auto* bad = report.find(ModelKind::bdtree, 5);
    REQUIRE(bad);
    CHECK_FALSE(bad->ok());
    CHECK_FALSE(bad->error.empty());
    auto solo = cfg;
    solo.lags = {1};
    const auto alone = run_grid(solo, panel);
    CHECK(alone.find(ModelKind::bdtree, 1)->metrics->rmse == report.find(ModelKind::bdtree, 1)->metrics->rmse);
    CHECK(alone.find(ModelKind::lsboost, 1)->metrics->rmse == report.find(ModelKind::lsboost, 1)->metrics->rmse);
}

TEST_CASE("best lag selection") {
    GridReport r;
    r.cells = {cell(ModelKind::bdtree, 4, 0.9)};
    CHECK(select_best(r, ModelKind::bdtree).first == 4);
    r.cells = {cell(ModelKind::bdtree, 1, 0.8), cell(ModelKind::bdtree, 2, 0.6), cell(ModelKind::bdtree, 3, 0.6)};
    CHECK(select_best(r, ModelKind::bdtree).first == 2);
    CHECK_THROWS_AS(select_best(r, ModelKind::nn), ConfigError);
}

TEST_CASE("published best-lag rows as a fixture") {
    GridReport r;
    r.cells = {cell(ModelKind::svmreg, 6, 0.65), cell(ModelKind::bdtree, 1, 0.70), cell(ModelKind::lsboost, 1, 0.80),
               cell(ModelKind::nn, 4, 0.59),     cell(ModelKind::lstm, 9, 0.73),   cell(ModelKind::ermbag, 2, 0.60),
               cell(ModelKind::ermbag_plus, 2, 0.53)};
    CHECK(select_best(r, ModelKind::ermbag_plus).first == 2);
    double best = 1e9;
    ModelKind winner = ModelKind::svmreg;
    for (auto m : kAllModels) {
        const auto [lag, metrics] = select_best(r, m);
        if (metrics.rmse < best) {
            best = metrics.rmse;
            winner = m;
        }
    }
    CHECK(winner == ModelKind::ermbag_plus);
}

TEST_CASE("report shapes and error cells") {
    GridReport r;
    r.config_hash = "0123456789abcdef";
    r.seed = 42;
    r.config_text = "seed = 42\n";
    r.data_description = "synthetic";
    for (auto m : kAllModels)
        for (int lag = 1; lag <= 9; ++lag) r.cells.push_back(cell(m, lag, 0.5 + 0.01 * lag));
    r.cells[5].metrics.reset();
    r.cells[5].error = "NumericError: boom";
    const auto csv = cells_csv(r);
    CHECK(count_lines(csv) == 64);
    CHECK(csv.substr(0, csv.find('\n')) ==
          "model,lag,mae,rmse,mape,r2,train_seconds,predict_seconds,total_seconds,error");
    CHECK(csv.find("boom") != std::string::npos);

    const auto json = report_json(r);
    CHECK(json.find("boom") != std::string::npos);
    const auto back = parse_report_json(json);
    REQUIRE(back.cells.size() == 63);
    CHECK_FALSE(back.cells[5].ok());
    CHECK(back.cells[5].error == "NumericError: boom");
    CHECK(report_json(back) == json);
    CHECK(report_json(r, false).find("train_seconds") == std::string::npos);
    const auto table = summary_table(r);
    CHECK(table.find("ERMBag+") != std::string::npos);
}

TEST_CASE("re-emission is idempotent") {
    GridReport r;
    r.config_hash = "feedfacecafebeef";
    r.seed = 1;
    r.cells = {cell(ModelKind::bdtree, 1, 0.4), cell(ModelKind::ermbag, 1, 0.3)};
    const auto dir = std::filesystem::temp_directory_path() / "panelcast_emit_test";
    std::filesystem::remove_all(dir);
    emit_reports(r, dir / "a", std::string("seed = 1\n"));
    emit_reports(parse_report_json(slurp(dir / "a" / "report.json")), dir / "b", std::string("seed = 1\n"));
    for (const char* f : {"report.json", "summary.txt", "cells.csv", "config.txt"}) {
        CHECK(std::filesystem::exists(dir / "a" / f));
        CHECK(slurp(dir / "a" / f) == slurp(dir / "b" / f));
    }
    std::filesystem::remove_all(dir);
}

}  // TEST_SUITE
