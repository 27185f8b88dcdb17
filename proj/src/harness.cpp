#include "panelcast/harness.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <limits>
#include <numeric>
#include <sstream>

#include "json.hpp"
#include "panelcast/error.hpp"
#include "panelcast/lag_features.hpp"
#include "panelcast/parallel.hpp"
#include "panelcast/random.hpp"
#include "panelcast/synthetic.hpp"
#include "text.hpp"

namespace panelcast {

namespace {

using nlohmann::json;

struct ModelNames {
    ModelKind kind;
    const char* name;
    const char* display;
};

constexpr std::array<ModelNames, 7> kModelNames{{
    {ModelKind::svmreg, "svmreg", "SVMReg"},
    {ModelKind::bdtree, "bdtree", "BDTree"},
    {ModelKind::lsboost, "lsboost", "LSBoost"},
    {ModelKind::nn, "nn", "NN"},
    {ModelKind::lstm, "lstm", "LSTM"},
    {ModelKind::ermbag, "ermbag", "ERMBag"},
    {ModelKind::ermbag_plus, "ermbag_plus", "ERMBag+"},
}};

std::string fmt(double v) { return detail::format_double(v); }

std::size_t parse_count(std::string_view v, std::string_view key) {
    const auto n = detail::parse_int(v, key);
    if (n < 0) throw ConfigError(std::string(key) + " must be non-negative");
    return static_cast<std::size_t>(n);
}

bool parse_bool(std::string_view v, std::string_view key) {
    if (v == "true" || v == "1" || v == "yes") return true;
    if (v == "false" || v == "0" || v == "no") return false;
    throw ConfigError(std::string(key) + ": expected true or false, got '" + std::string(v) + "'");
}

std::vector<int> parse_lags(std::string_view v) {
    std::vector<int> lags;
    for (auto part : detail::split(v, ',')) {
        part = detail::trim(part);
        if (part.empty()) continue;
        const auto dash = part.find('-');
        if (dash != std::string_view::npos) {
            const auto lo = detail::parse_int(detail::trim(part.substr(0, dash)), "lags");
            const auto hi = detail::parse_int(detail::trim(part.substr(dash + 1)), "lags");
            if (lo > hi) throw ConfigError("lags: empty range '" + std::string(part) + "'");
            for (auto l = lo; l <= hi; ++l) lags.push_back(static_cast<int>(l));
        } else {
            lags.push_back(static_cast<int>(detail::parse_int(part, "lags")));
        }
    }
    return lags;
}

std::vector<std::size_t> parse_sizes(std::string_view v, std::string_view key) {
    std::vector<std::size_t> out;
    for (auto part : detail::split(v, ',')) {
        part = detail::trim(part);
        if (!part.empty()) out.push_back(parse_count(part, key));
    }
    return out;
}

template <class T>
std::string join(const std::vector<T>& items) {
    std::string s;
    for (std::size_t i = 0; i < items.size(); ++i) {
        if (i) s += ',';
        if constexpr (std::is_same_v<T, ModelKind>) {
            s += model_name(items[i]);
        } else {
            s += std::to_string(items[i]);
        }
    }
    return s;
}

void set_tree(TreeHyperparams& hp, std::string_view field, std::string_view v, std::string_view key, bool& ok) {
    ok = true;
    if (field == "max_depth") {
        hp.max_depth = static_cast<int>(detail::parse_int(v, key));
    } else if (field == "min_leaf") {
        hp.min_leaf = parse_count(v, key);
    } else if (field == "min_split_improvement") {
        hp.min_split_improvement = detail::parse_double(v, key);
    } else {
        ok = false;
    }
}

void set_train(TrainOptions& t, std::string_view field, std::string_view v, std::string_view key, bool& ok) {
    ok = true;
    if (field == "epochs") {
        t.epochs = parse_count(v, key);
    } else if (field == "rate") {
        t.rate = detail::parse_double(v, key);
    } else if (field == "dropout") {
        t.dropout = detail::parse_double(v, key);
    } else {
        ok = false;
    }
}

void set_bagging(BaggingConfig& b, TreeHyperparams& hp, std::string_view field, std::string_view v,
                 std::string_view key, bool& ok) {
    set_tree(hp, field, v, key, ok);
    if (ok) return;
    ok = true;
    if (field == "M") {
        b.M = parse_count(v, key);
    } else if (field == "B") {
        b.B = parse_count(v, key);
    } else if (field == "strata") {
        b.strata_key = parse_strata_key(std::string(v));
    } else if (field == "rmse_floor") {
        b.rmse_floor = detail::parse_double(v, key);
    } else if (field == "patience") {
        b.early_stop.patience = parse_count(v, key);
    } else if (field == "tolerance") {
        b.early_stop.tolerance = detail::parse_double(v, key);
    } else {
        ok = false;
    }
}

void render_tree(std::ostringstream& os, const std::string& prefix, const TreeHyperparams& hp) {
    os << prefix << ".max_depth = " << hp.max_depth << '\n';
    os << prefix << ".min_leaf = " << hp.min_leaf << '\n';
    os << prefix << ".min_split_improvement = " << fmt(hp.min_split_improvement) << '\n';
}

void render_train(std::ostringstream& os, const std::string& prefix, const TrainOptions& t) {
    os << prefix << ".epochs = " << t.epochs << '\n';
    os << prefix << ".rate = " << fmt(t.rate) << '\n';
    os << prefix << ".dropout = " << fmt(t.dropout) << '\n';
}

void render_bagging(std::ostringstream& os, const std::string& prefix, const BaggingConfig& b,
                    const TreeHyperparams& hp, bool early_stop) {
    os << prefix << ".M = " << b.M << '\n';
    os << prefix << ".B = " << b.B << '\n';
    os << prefix << ".strata = " << to_string(b.strata_key) << '\n';
    if (early_stop) {
        os << prefix << ".patience = " << b.early_stop.patience << '\n';
        os << prefix << ".tolerance = " << fmt(b.early_stop.tolerance) << '\n';
        os << prefix << ".rmse_floor = " << fmt(b.rmse_floor) << '\n';
    }
    render_tree(os, prefix, hp);
}

double mean_of(std::span<const double> v) {
    return std::accumulate(v.begin(), v.end(), 0.0) / static_cast<double>(v.size());
}

json number_or_null(double v) { return std::isfinite(v) ? json(v) : json(); }

double number_from(const json& j) {
    return j.is_null() ? std::numeric_limits<double>::quiet_NaN() : j.get<double>();
}

std::string pad(std::string s, std::size_t width) {
    if (s.size() < width) s.append(width - s.size(), ' ');
    return s;
}

std::string fixed(double v, int decimals) {
    if (!std::isfinite(v)) return "nan";
    char buf[64];
    std::snprintf(buf, sizeof buf, "%.*f", decimals, v);
    return buf;
}

}  // namespace

std::string model_name(ModelKind m) {
    for (const auto& n : kModelNames) {
        if (n.kind == m) return n.name;
    }
    throw ConfigError("unknown model kind");
}

std::string model_display(ModelKind m) {
    for (const auto& n : kModelNames) {
        if (n.kind == m) return n.display;
    }
    throw ConfigError("unknown model kind");
}

ModelKind parse_model(std::string_view name) {
    for (const auto& n : kModelNames) {
        if (name == n.name) return n.kind;
    }
    throw ConfigError("unknown model '" + std::string(name) +
                      "' (expected svmreg, bdtree, lsboost, nn, lstm, ermbag or ermbag_plus)");
}

BaggingConfig ExperimentConfig::default_ermbag() {
    BaggingConfig b;
    b.B = 1;
    b.strata_key = StrataKey::none;
    return b;
}

void ExperimentConfig::validate() const {
    if (models.empty()) throw ConfigError("no models selected");
    if (lags.empty()) throw ConfigError("no lags selected");
    for (int l : lags) {
        if (l < 1 || l > 9) throw ConfigError("lag " + std::to_string(l) + " outside 1..9");
    }
    if (threads < 1) throw ConfigError("threads must be >= 1");
    if (!data.path.empty() && !std::filesystem::exists(data.path)) {
        throw ConfigError("data file not found: " + data.path);
    }
    svmreg.validate();
    bdtree.validate();
    lsboost.validate();
    if (nn.hidden.empty()) throw ConfigError("nn.hidden needs at least one layer");
    nn.train.validate();
    if (lstm.hidden < 1) throw ConfigError("lstm.hidden must be >= 1");
    lstm.train.validate();
    ermbag.validate();
    ermbag_tree.validate();
    ermbag_plus.validate();
    ermbag_plus_tree.validate();
}

void set_config_value(ExperimentConfig& cfg, std::string_view key, std::string_view value) {
    const std::string k(detail::trim(key));
    const std::string_view v = detail::trim(value);
    bool ok = true;
    if (k == "data.path") {
        cfg.data.path = std::string(v);
    } else if (k == "data.schema_strict") {
        cfg.data.schema_strict = parse_bool(v, k);
    } else if (k == "data.synthetic.seed") {
        if (v == "auto") {
            cfg.data.synthetic_seed.reset();
        } else {
            cfg.data.synthetic_seed = static_cast<std::uint64_t>(parse_count(v, k));
        }
    } else if (k == "data.synthetic.states") {
        cfg.data.synthetic_states = parse_count(v, k);
    } else if (k == "data.synthetic.first_year") {
        cfg.data.first_year = static_cast<int>(detail::parse_int(v, k));
    } else if (k == "data.synthetic.last_year") {
        cfg.data.last_year = static_cast<int>(detail::parse_int(v, k));
    } else if (k == "models") {
        cfg.models.clear();
        if (v == "all") {
            cfg.models.assign(kAllModels.begin(), kAllModels.end());
        } else {
            for (auto part : detail::split(v, ',')) {
                part = detail::trim(part);
                if (!part.empty()) cfg.models.push_back(parse_model(part));
            }
        }
    } else if (k == "lags") {
        cfg.lags = parse_lags(v);
    } else if (k == "seed") {
        cfg.seed = static_cast<std::uint64_t>(parse_count(v, k));
    } else if (k == "output_dir") {
        cfg.output_dir = std::string(v);
    } else if (k == "threads") {
        cfg.threads = parse_count(v, k);
    } else if (k == "svmreg.C") {
        cfg.svmreg.C = detail::parse_double(v, k);
    } else if (k == "svmreg.epsilon") {
        cfg.svmreg.epsilon = detail::parse_double(v, k);
    } else if (k == "svmreg.epochs") {
        cfg.svmreg.epochs = parse_count(v, k);
    } else if (k == "svmreg.step0") {
        cfg.svmreg.step0 = detail::parse_double(v, k);
    } else if (k.starts_with("bdtree.")) {
        set_tree(cfg.bdtree, std::string_view(k).substr(7), v, k, ok);
    } else if (k == "lsboost.stages") {
        cfg.lsboost.stages = parse_count(v, k);
    } else if (k == "lsboost.learning_rate") {
        cfg.lsboost.learning_rate = detail::parse_double(v, k);
    } else if (k.starts_with("lsboost.")) {
        set_tree(cfg.lsboost.tree, std::string_view(k).substr(8), v, k, ok);
    } else if (k == "nn.hidden") {
        cfg.nn.hidden = parse_sizes(v, k);
    } else if (k.starts_with("nn.")) {
        set_train(cfg.nn.train, std::string_view(k).substr(3), v, k, ok);
    } else if (k == "lstm.hidden") {
        cfg.lstm.hidden = parse_count(v, k);
    } else if (k.starts_with("lstm.")) {
        set_train(cfg.lstm.train, std::string_view(k).substr(5), v, k, ok);
    } else if (k.starts_with("ermbag_plus.")) {
        set_bagging(cfg.ermbag_plus, cfg.ermbag_plus_tree, std::string_view(k).substr(12), v, k, ok);
    } else if (k.starts_with("ermbag.")) {
        set_bagging(cfg.ermbag, cfg.ermbag_tree, std::string_view(k).substr(7), v, k, ok);
    } else {
        ok = false;
    }
    if (!ok) throw ConfigError("unknown config key '" + k + "'");
}

ExperimentConfig parse_config(std::string_view text) {
    ExperimentConfig cfg;
    std::size_t line_no = 0;
    for (auto line : detail::split(text, '\n')) {
        ++line_no;
        if (const auto hash = line.find('#'); hash != std::string_view::npos) line = line.substr(0, hash);
        line = detail::trim(line);
        if (line.empty()) continue;
        const auto eq = line.find('=');
        if (eq == std::string_view::npos) {
            throw ConfigError("config line " + std::to_string(line_no) + ": expected 'key = value'");
        }
        try {
            set_config_value(cfg, line.substr(0, eq), line.substr(eq + 1));
        } catch (const Error& e) {
            throw ConfigError("config line " + std::to_string(line_no) + ": " + e.what());
        }
    }
    return cfg;
}

ExperimentConfig load_config(const std::filesystem::path& path) {
    std::ifstream is(path);
    if (!is) throw ConfigError("cannot read config file " + path.string());
    std::ostringstream ss;
    ss << is.rdbuf();
    return parse_config(ss.str());
}

std::string render_config(const ExperimentConfig& cfg, bool include_runtime) {
    std::ostringstream os;
    os << "# panelcast resolved configuration\n";
    os << "data.path = " << cfg.data.path << '\n';
    os << "data.schema_strict = " << (cfg.data.schema_strict ? "true" : "false") << '\n';
    os << "data.synthetic.seed = "
       << (cfg.data.synthetic_seed ? std::to_string(*cfg.data.synthetic_seed) : std::string("auto")) << '\n';
    os << "data.synthetic.states = " << cfg.data.synthetic_states << '\n';
    os << "data.synthetic.first_year = " << cfg.data.first_year << '\n';
    os << "data.synthetic.last_year = " << cfg.data.last_year << '\n';
    os << "models = " << join(cfg.models) << '\n';
    os << "lags = " << join(cfg.lags) << '\n';
    os << "seed = " << cfg.seed << '\n';
    if (include_runtime) {
        os << "output_dir = " << cfg.output_dir << '\n';
        os << "threads = " << cfg.threads << '\n';
    }
    os << "svmreg.C = " << fmt(cfg.svmreg.C) << '\n';
    os << "svmreg.epsilon = " << fmt(cfg.svmreg.epsilon) << '\n';
    os << "svmreg.epochs = " << cfg.svmreg.epochs << '\n';
    os << "svmreg.step0 = " << fmt(cfg.svmreg.step0) << '\n';
    render_tree(os, "bdtree", cfg.bdtree);
    os << "lsboost.stages = " << cfg.lsboost.stages << '\n';
    os << "lsboost.learning_rate = " << fmt(cfg.lsboost.learning_rate) << '\n';
    render_tree(os, "lsboost", cfg.lsboost.tree);
    os << "nn.hidden = " << join(cfg.nn.hidden) << '\n';
    render_train(os, "nn", cfg.nn.train);
    os << "lstm.hidden = " << cfg.lstm.hidden << '\n';
    render_train(os, "lstm", cfg.lstm.train);
    render_bagging(os, "ermbag", cfg.ermbag, cfg.ermbag_tree, false);
    render_bagging(os, "ermbag_plus", cfg.ermbag_plus, cfg.ermbag_plus_tree, true);
    return os.str();
}

std::string config_hash(const ExperimentConfig& cfg) {
    char buf[17];
    std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(fnv1a(render_config(cfg, false))));
    return buf;
}

std::uint64_t cell_seed(std::uint64_t master, ModelKind model, int lag) {
    return derive_seed(master, fnv1a(model_name(model) + ":" + std::to_string(lag)));
}

const CellResult* GridReport::find(ModelKind model, int lag) const {
    for (const auto& c : cells) {
        if (c.model == model && c.lag == lag) return &c;
    }
    return nullptr;
}

PanelTable load_experiment_panel(const ExperimentConfig& cfg) {
    if (!cfg.data.path.empty()) {
        LoadOptions opts;
        opts.schema_strict = cfg.data.schema_strict;
        return load_panel(cfg.data.path, opts);
    }
    return generate_synthetic(cfg.data.synthetic_seed.value_or(cfg.seed), cfg.data.synthetic_states,
                              cfg.data.first_year, cfg.data.last_year);
}

CellResult run_cell(const ExperimentConfig& cfg, const PanelTable& panel, ModelKind model, int lag) {
    const LagConfig lc = LagConfig::for_panel(panel, lag);
    const SupervisedMatrix raw_train = build_supervised(panel, lc, Split::train);
    const SupervisedMatrix raw_test = build_supervised(panel, lc, Split::test);
    const NormalizationParams norm = fit_normalization(raw_train);
    const SupervisedMatrix train = apply_normalization(raw_train, norm);
    const SupervisedMatrix test = apply_normalization(raw_test, norm);
    const std::uint64_t seed = cell_seed(cfg.seed, model, lag);

    double train_s = 0.0;
    double predict_s = 0.0;
    Vector pred;
    auto run = [&](auto fit, auto predict) {
        auto [fitted, t1] = time_phase(fit);
        train_s = t1;
        auto [p, t2] = time_phase([&] { return predict(fitted); });
        predict_s = t2;
        pred = std::move(p);
    };

    switch (model) {
        case ModelKind::svmreg:
            run([&] { return fit_svr(train.X, train.y, cfg.svmreg); },
                [&](const SvrModel& m) { return predict_svr(m, test.X); });
            break;
        case ModelKind::bdtree:
            run([&] { return fit_tree(train.X, train.y, cfg.bdtree); },
                [&](const RegressionTree& t) { return predict_tree(t, test.X); });
            break;
        case ModelKind::lsboost:
            run([&] { return fit_lsboost(train.X, train.y, cfg.lsboost); },
                [&](const BoostModel& m) { return predict_lsboost(m, test.X); });
            break;
        case ModelKind::nn:
            run(
                [&] {
                    MlpModel m = MlpModel::create(train.d(), cfg.nn.hidden, seed);
                    m.layers.back().b[0] = mean_of(train.y);
                    TrainOptions opts = cfg.nn.train;
                    opts.seed = derive_seed(seed, 1);
                    return train_gd(std::move(m), train.X, train.y, opts);
                },
                [&](const MlpModel& m) { return predict_mlp(m, test.X); });
            break;
        case ModelKind::lstm:
            run(
                [&] {
                    const auto seqs = to_sequences(train);
                    LstmParams p = LstmParams::create(seqs.front().front().size(), cfg.lstm.hidden, seed);
                    p.readout_b = mean_of(train.y);
                    TrainOptions opts = cfg.lstm.train;
                    opts.seed = derive_seed(seed, 1);
                    return train_gd(std::move(p), seqs, train.y, opts);
                },
                [&](const LstmParams& p) { return predict_lstm(p, to_sequences(test)); });
            break;
        case ModelKind::ermbag:
        case ModelKind::ermbag_plus: {
            const bool plus = model == ModelKind::ermbag_plus;
            BaggingConfig b = plus ? cfg.ermbag_plus : cfg.ermbag;
            b.lag = lag;
            b.seed = seed;
            b.threads = 1;
            const TreeHyperparams& hp = plus ? cfg.ermbag_plus_tree : cfg.ermbag_tree;
            run([&] { return plus ? fit_ermbag_plus(train, b, hp) : fit_ermbag(train, b, hp); },
                [&](const EnsembleModel& m) { return predict_ensemble(m, test.X); });
            break;
        }
    }

    CellResult cell{model, lag, compute_metrics(test.y, pred), {}, train.n(), test.n(), train.d()};
    cell.metrics->train_seconds = train_s;
    cell.metrics->predict_seconds = predict_s;
    cell.metrics->total_seconds = train_s + predict_s;
    for (double v : pred) {
        if (!std::isfinite(v)) throw NumericError("non-finite prediction");
    }
    return cell;
}

GridReport run_grid(const ExperimentConfig& cfg) {
    cfg.validate();
    return run_grid(cfg, load_experiment_panel(cfg));
}

GridReport run_grid(const ExperimentConfig& cfg, const PanelTable& panel) {
    cfg.validate();
    GridReport report;
    report.config_hash = config_hash(cfg);
    report.seed = cfg.seed;
    report.config_text = render_config(cfg, false);
    report.data_description = (cfg.data.path.empty() ? std::string("synthetic") : cfg.data.path) + ": " +
                              std::to_string(panel.states().size()) + " states, " +
                              std::to_string(panel.years().front()) + "-" + std::to_string(panel.years().back()) +
                              ", " + std::to_string(panel.features().size()) + " features";
    for (auto m : cfg.models) {
        for (int l : cfg.lags) report.cells.push_back({m, l, std::nullopt, {}, 0, 0, 0});
    }
    parallel_for(report.cells.size(), cfg.threads, [&](std::size_t i) {
        CellResult& cell = report.cells[i];
        try {
            cell = run_cell(cfg, panel, cell.model, cell.lag);
        } catch (const std::exception& e) {
            cell.metrics.reset();
            cell.error = e.what();
        }
    });
    return report;
}

std::pair<int, MetricsReport> select_best(const GridReport& report, ModelKind model) {
    const CellResult* best = nullptr;
    for (const auto& c : report.cells) {
        if (c.model != model || !c.ok() || !std::isfinite(c.metrics->rmse)) continue;
        if (!best || c.metrics->rmse < best->metrics->rmse ||
            (c.metrics->rmse == best->metrics->rmse && c.lag < best->lag)) {
            best = &c;
        }
    }
    if (!best) throw ConfigError("model " + model_name(model) + " has no successful cells in the report");
    return {best->lag, *best->metrics};
}

std::string report_json(const GridReport& report, bool include_timings) {
    json j;
    j["format"] = "panelcast-grid-report 1";
    j["version"] = report.version;
    j["config_hash"] = report.config_hash;
    j["seed"] = report.seed;
    j["data"] = report.data_description;
    j["config"] = report.config_text;
    auto& cells = j["cells"] = json::array();
    std::vector<ModelKind> models;
    for (const auto& c : report.cells) {
        if (std::find(models.begin(), models.end(), c.model) == models.end()) models.push_back(c.model);
        json cj = {{"model", model_name(c.model)},
                   {"lag", c.lag},
                   {"n_train", c.n_train},
                   {"n_test", c.n_test},
                   {"n_features", c.n_features}};
        if (c.ok()) {
            const auto& m = *c.metrics;
            cj["metrics"] = {{"mae", number_or_null(m.mae)},   {"rmse", number_or_null(m.rmse)},
                             {"mape", number_or_null(m.mape)}, {"r2", number_or_null(m.r2)},
                             {"n", m.n},                       {"flags", m.flags}};
            cj["error"] = nullptr;
            if (include_timings) {
                cj["timing"] = {{"train_seconds", m.train_seconds},
                                {"predict_seconds", m.predict_seconds},
                                {"total_seconds", m.total_seconds}};
            }
        } else {
            cj["metrics"] = nullptr;
            cj["error"] = c.error;
        }
        cells.push_back(std::move(cj));
    }
    auto& best = j["best"] = json::array();
    for (auto m : models) {
        try {
            const auto [lag, metrics] = select_best(report, m);
            best.push_back({{"model", model_name(m)}, {"lag", lag}, {"rmse", number_or_null(metrics.rmse)}});
        } catch (const ConfigError&) {
            best.push_back({{"model", model_name(m)}, {"lag", nullptr}, {"rmse", nullptr}});
        }
    }
    return j.dump(2) + "\n";
}

GridReport parse_report_json(std::string_view text) {
    GridReport r;
    try {
        const json j = json::parse(text);
        if (j.value("format", "") != "panelcast-grid-report 1") throw ParseError("not a panelcast grid report");
        r.version = j.at("version");
        r.config_hash = j.at("config_hash");
        r.seed = j.at("seed");
        r.data_description = j.at("data");
        r.config_text = j.at("config");
        for (const auto& cj : j.at("cells")) {
            CellResult c{parse_model(cj.at("model").get<std::string>()), cj.at("lag"), std::nullopt, {},
                         cj.at("n_train"), cj.at("n_test"), cj.at("n_features")};
            if (!cj.at("metrics").is_null()) {
                const auto& mj = cj.at("metrics");
                MetricsReport m;
                m.mae = number_from(mj.at("mae"));
                m.rmse = number_from(mj.at("rmse"));
                m.mape = number_from(mj.at("mape"));
                m.r2 = number_from(mj.at("r2"));
                m.n = mj.at("n");
                m.flags = mj.at("flags").get<std::vector<std::string>>();
                if (cj.contains("timing")) {
                    const auto& tj = cj.at("timing");
                    m.train_seconds = tj.at("train_seconds");
                    m.predict_seconds = tj.at("predict_seconds");
                    m.total_seconds = tj.at("total_seconds");
                }
                c.metrics = std::move(m);
            } else {
                c.error = cj.at("error").is_null() ? std::string("unknown error") : cj.at("error").get<std::string>();
            }
            r.cells.push_back(std::move(c));
        }
    } catch (const json::exception& e) {
        throw ParseError(std::string("grid report: ") + e.what());
    }
    return r;
}

std::string summary_table(const GridReport& report) {
    std::vector<ModelKind> models;
    std::vector<int> lags;
    for (const auto& c : report.cells) {
        if (std::find(models.begin(), models.end(), c.model) == models.end()) models.push_back(c.model);
        if (std::find(lags.begin(), lags.end(), c.lag) == lags.end()) lags.push_back(c.lag);
    }
    std::sort(lags.begin(), lags.end());

    std::ostringstream os;
    os << "Model performance summary (best lag by RMSE)\n\n";
    const std::vector<std::pair<std::string, std::size_t>> head{
        {"Model", 10}, {"Lag", 5},   {"MAE", 8},      {"RMSE", 8},       {"MAPE", 8},
        {"R2", 8},     {"Train", 10}, {"Predict", 10}, {"Total", 10}};
    std::string line;
    for (const auto& [h, w] : head) line += pad(h, w);
    os << line << '\n' << std::string(line.size(), '-') << '\n';
    for (auto m : models) {
        std::string row = pad(model_display(m), 10);
        try {
            const auto [lag, r] = select_best(report, m);
            row += pad(std::to_string(lag), 5) + pad(fixed(r.mae, 4), 8) + pad(fixed(r.rmse, 4), 8) +
                   pad(fixed(r.mape, 3), 8) + pad(fixed(r.r2, 4), 8) + pad(fixed(r.train_seconds, 3), 10) +
                   pad(fixed(r.predict_seconds, 3), 10) + fixed(r.total_seconds, 3);
        } catch (const ConfigError&) {
            row += "(no successful cells)";
        }
        os << row << '\n';
    }

    os << "\nTest RMSE by lag\n\n";
    line = pad("Model", 10);
    for (int l : lags) line += pad("l=" + std::to_string(l), 9);
    os << line << '\n' << std::string(line.size(), '-') << '\n';
    for (auto m : models) {
        std::string row = pad(model_display(m), 10);
        for (int l : lags) {
            const CellResult* c = report.find(m, l);
            row += pad(!c ? "-" : c->ok() ? fixed(c->metrics->rmse, 4) : "error", 9);
        }
        os << row << '\n';
    }
    bool any_error = false;
    for (const auto& c : report.cells) {
        if (c.ok()) continue;
        if (!any_error) os << "\nFailed cells\n\n";
        any_error = true;
        os << model_display(c.model) << " lag " << c.lag << ": " << c.error << '\n';
    }
    return os.str();
}

std::string cells_csv(const GridReport& report) {
    std::ostringstream os;
    os << "model,lag,mae,rmse,mape,r2,train_seconds,predict_seconds,total_seconds,error\n";
    auto num = [](double v) { return std::isfinite(v) ? fmt(v) : std::string(); };
    for (const auto& c : report.cells) {
        os << model_name(c.model) << ',' << c.lag << ',';
        if (c.ok()) {
            const auto& m = *c.metrics;
            os << num(m.mae) << ',' << num(m.rmse) << ',' << num(m.mape) << ',' << num(m.r2) << ','
               << num(m.train_seconds) << ',' << num(m.predict_seconds) << ',' << num(m.total_seconds) << ",\n";
        } else {
            std::string err = c.error;
            std::replace(err.begin(), err.end(), '"', '\'');
            std::replace(err.begin(), err.end(), '\n', ' ');
            os << ",,,,,,,\"" << err << "\"\n";
        }
    }
    return os.str();
}

void emit_reports(const GridReport& report, const std::filesystem::path& dir,
                  const std::optional<std::string>& config_text) {
    std::error_code ec;
    std::filesystem::create_directories(dir, ec);
    if (ec) throw Error("cannot create output directory " + dir.string() + ": " + ec.message());
    auto write = [&](const char* name, const std::string& content) {
        std::ofstream os(dir / name, std::ios::binary);
        if (!os) throw Error("cannot write " + (dir / name).string());
        os << content;
        if (!os) throw Error("write failed for " + (dir / name).string());
    };
    write("report.json", report_json(report));
    write("summary.txt", summary_table(report));
    write("cells.csv", cells_csv(report));
    if (config_text) write("config.txt", *config_text);
}

}  // namespace panelcast
