// panelcast command-line interface: synth, fit, grid, report.

#include <cstdio>
#include <fstream>
#include <iostream>
#include <sstream>

#include "CLI11.hpp"
#include "panelcast/error.hpp"
#include "panelcast/harness.hpp"
#include "panelcast/schema.hpp"
#include "panelcast/synthetic.hpp"

namespace {

using namespace panelcast;

struct RunOptions {
    std::string config;
    std::string data;
    std::string models;
    std::string lags;
    std::string out;
    std::vector<std::string> sets;
    long long seed = -1;
    long long threads = -1;
};

void add_run_options(CLI::App* cmd, RunOptions& o, bool single) {
    cmd->add_option("-c,--config", o.config, "Config file (key = value lines)")->check(CLI::ExistingFile);
    cmd->add_option("-d,--data", o.data, "Panel CSV; synthetic data when omitted");
    if (!single) {
        cmd->add_option("-m,--models", o.models, "Comma-separated models, or 'all'");
        cmd->add_option("-l,--lags", o.lags, "Lags, e.g. 1-9 or 1,2,6");
        cmd->add_option("-t,--threads", o.threads, "Grid cells run concurrently");
    }
    cmd->add_option("-s,--seed", o.seed, "Master seed");
    cmd->add_option("-o,--out", o.out, "Output directory");
    cmd->add_option("--set", o.sets, "Override a config key: --set ermbag_plus.M=50");
}

ExperimentConfig resolve(const RunOptions& o) {
    ExperimentConfig cfg = o.config.empty() ? ExperimentConfig{} : load_config(o.config);
    if (!o.data.empty()) cfg.data.path = o.data;
    if (!o.models.empty()) set_config_value(cfg, "models", o.models);
    if (!o.lags.empty()) set_config_value(cfg, "lags", o.lags);
    if (o.seed >= 0) cfg.seed = static_cast<std::uint64_t>(o.seed);
    if (o.threads >= 0) cfg.threads = static_cast<std::size_t>(o.threads);
    if (!o.out.empty()) cfg.output_dir = o.out;
    for (const auto& s : o.sets) {
        const auto eq = s.find('=');
        if (eq == std::string::npos) throw ConfigError("--set expects key=value, got '" + s + "'");
        set_config_value(cfg, s.substr(0, eq), s.substr(eq + 1));
    }
    cfg.validate();
    return cfg;
}

int run_and_emit(const ExperimentConfig& cfg) {
    const GridReport report = run_grid(cfg);
    emit_reports(report, cfg.output_dir, render_config(cfg));
    std::cout << summary_table(report);
    std::cout << "\nwrote " << cfg.output_dir << "/{report.json,summary.txt,cells.csv,config.txt}\n";
    for (const auto& c : report.cells) {
        if (!c.ok()) return 3;
    }
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"panelcast: state-level diabetes prevalence forecasting experiments"};
    app.require_subcommand(1);

    auto* synth = app.add_subcommand("synth", "Write a synthetic 90-feature state-by-year panel");
    std::string synth_out = "panel.csv";
    std::string schema_out;
    long long synth_seed = 42;
    std::size_t states = 51;
    int first_year = 2011;
    int last_year = 2021;
    synth->add_option("-o,--out", synth_out, "Panel CSV path");
    synth->add_option("-s,--seed", synth_seed, "Generator seed");
    synth->add_option("--states", states, "Number of states");
    synth->add_option("--first-year", first_year, "First year");
    synth->add_option("--last-year", last_year, "Last year");
    synth->add_option("--schema", schema_out, "Also write the feature schema manifest here");

    RunOptions fit_opts;
    std::string fit_model = "ermbag_plus";
    int fit_lag = 2;
    auto* fit = app.add_subcommand("fit", "Train and evaluate one model at one lag");
    fit->add_option("model", fit_model, "Model name")->required();
    fit->add_option("lag", fit_lag, "Lag order (1-9)")->required();
    add_run_options(fit, fit_opts, true);

    RunOptions grid_opts;
    auto* grid = app.add_subcommand("grid", "Run the model x lag grid and write reports");
    add_run_options(grid, grid_opts, false);
    std::string dump_config;
    grid->add_option("--print-config", dump_config, "Write the resolved config to this path and exit");

    auto* report = app.add_subcommand("report", "Re-emit tables and CSV from a saved report.json");
    std::string report_in;
    std::string report_out;
    report->add_option("input", report_in, "report.json or a run directory")->required();
    report->add_option("-o,--out", report_out, "Output directory (default: alongside the input)");

    CLI11_PARSE(app, argc, argv);

    try {
        if (*synth) {
            if (synth_seed < 0) throw ConfigError("seed must be non-negative");
            const PanelTable panel =
                generate_synthetic(static_cast<std::uint64_t>(synth_seed), states, first_year, last_year);
            save_panel(panel, synth_out);
            std::cout << "wrote " << synth_out << " (" << panel.n_states() << " states, " << first_year << "-"
                      << last_year << ", " << panel.n_features() << " features)\n";
            if (!schema_out.empty()) {
                Schema::canonical().save(schema_out);
                std::cout << "wrote " << schema_out << '\n';
            }
            return 0;
        }
        if (*fit) {
            fit_opts.models = fit_model;
            fit_opts.lags = std::to_string(fit_lag);
            ExperimentConfig cfg = resolve(fit_opts);
            if (fit_opts.out.empty()) cfg.output_dir = "panelcast-fit";
            return run_and_emit(cfg);
        }
        if (*grid) {
            const ExperimentConfig cfg = resolve(grid_opts);
            if (!dump_config.empty()) {
                std::ofstream os(dump_config);
                if (!os) throw Error("cannot write " + dump_config);
                os << render_config(cfg);
                return 0;
            }
            return run_and_emit(cfg);
        }
        if (*report) {
            std::filesystem::path in(report_in);
            if (std::filesystem::is_directory(in)) in /= "report.json";
            std::ifstream is(in);
            if (!is) throw Error("cannot read " + in.string());
            std::stringstream ss;
            ss << is.rdbuf();
            const GridReport r = parse_report_json(ss.str());
            const std::filesystem::path out = report_out.empty() ? in.parent_path() : std::filesystem::path(report_out);
            emit_reports(r, out.empty() ? "." : out);
            std::cout << summary_table(r);
            return 0;
        }
    } catch (const std::exception& e) {
        std::cerr << "panelcast: " << e.what() << '\n';
        return 2;
    }
    return 0;
}
