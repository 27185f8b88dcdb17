#include "panelcast/ensemble.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <limits>
#include <map>
#include <memory>
#include "json.hpp"
#include <set>

#include "panelcast/error.hpp"
#include "panelcast/parallel.hpp"
#include "panelcast/random.hpp"

namespace panelcast {

namespace {

constexpr const char* kPooledStratum = "(pooled)";

double rmse_on(const RegressionTree& tree, const SupervisedMatrix& m, std::span<const std::size_t> rows) {
    double s = 0.0;
    for (auto r : rows) {
        const double e = tree.predict_row(m.X.row(r)) - m.y[r];
        s += e * e;
    }
    return std::sqrt(s / static_cast<double>(rows.size()));
}

/// Rows of the last 20% of distinct target years (at least one year).
std::vector<std::size_t> tail_holdout(const SupervisedMatrix& m) {
    std::set<int> years;
    for (const auto& p : m.provenance) years.insert(p.target_year);
    const auto n_years = years.size();
    const auto k = std::max<std::size_t>(1, static_cast<std::size_t>(std::ceil(0.2 * static_cast<double>(n_years))));
    if (k >= n_years) {
        throw ConfigError("empty out-of-bag set and too few target years for a tail holdout");
    }
    const int cutoff = *std::next(years.begin(), static_cast<std::ptrdiff_t>(n_years - k));
    std::vector<std::size_t> rows;
    for (std::size_t i = 0; i < m.n(); ++i) {
        if (m.provenance[i].target_year >= cutoff) rows.push_back(i);
    }
    return rows;
}

void check_plan(const SupervisedMatrix& train, const BootstrapPlan& plan, const BaggingConfig& cfg) {
    cfg.validate();
    if (plan.n_rows != train.n()) throw DimensionError("bootstrap plan does not match the training matrix");
    if (plan.samples.size() != cfg.M) throw ConfigError("bootstrap plan has a different sample count than M");
    if (train.provenance.size() != train.n()) throw DimensionError("training matrix lacks row provenance");
}

struct LearnerFit {
    RegressionTree tree;
    double rmse = std::numeric_limits<double>::quiet_NaN();
    int depth = 0;
};

EnsembleModel finish(std::vector<LearnerFit> fits, EnsembleKind kind, const BaggingConfig& cfg) {
    std::vector<RegressionTree> trees;
    Vector rmse;
    std::vector<int> depths;
    for (auto& f : fits) {
        trees.push_back(std::move(f.tree));
        rmse.push_back(f.rmse);
        depths.push_back(f.depth);
    }
    EnsembleModel m = assemble_ensemble(std::move(trees), std::move(rmse), kind, cfg.rmse_floor);
    m.kept_depth = std::move(depths);
    m.config = cfg;
    for (std::size_t i = 0; i < cfg.M; ++i) m.seeds.push_back(derive_seed(cfg.seed, i));
    return m;
}

}  // namespace

StrataKey parse_strata_key(const std::string& s) {
    if (s == "state") return StrataKey::state;
    if (s == "none") return StrataKey::none;
    throw ConfigError("unknown strata key '" + s + "' (expected state or none)");
}

std::string to_string(StrataKey k) { return k == StrataKey::state ? "state" : "none"; }

void BaggingConfig::validate() const {
    if (M < 1) throw ConfigError("ensemble needs M >= 1");
    if (lag < 1) throw ConfigError("ensemble lag must be >= 1");
    if (!(rmse_floor > 0.0)) throw ConfigError("rmse_floor must be positive");
    if (early_stop.patience < 1) throw ConfigError("early-stopping patience must be >= 1");
    if (!(early_stop.tolerance >= 0.0)) throw ConfigError("early-stopping tolerance must be >= 0");
}

std::size_t default_block_size(int lag, std::size_t years_per_state) {
    std::size_t b = std::max<std::size_t>(1, years_per_state);
    if (lag <= 2) b = std::max<std::size_t>(1, b / 2);
    return b;
}

std::vector<std::size_t> BootstrapPlan::sample_rows(std::size_t i) const {
    std::vector<std::size_t> rows;
    rows.reserve(n_rows);
    for (auto b : samples.at(i)) rows.insert(rows.end(), blocks[b].rows.begin(), blocks[b].rows.end());
    return rows;
}

Vector BootstrapPlan::sample_weights(std::size_t i) const {
    Vector w(n_rows, 0.0);
    for (auto b : samples.at(i)) {
        for (auto r : blocks[b].rows) w[r] += 1.0;
    }
    return w;
}

std::vector<std::size_t> BootstrapPlan::stratum_block_counts() const {
    std::vector<std::size_t> counts(strata.size(), 0);
    for (const auto& b : blocks) ++counts[b.stratum];
    return counts;
}

BootstrapPlan make_blocks(std::span<const std::string> stratum_of_row, std::span<const int> year_of_row,
                          std::size_t B) {
    if (stratum_of_row.empty()) throw DimensionError("cannot block an empty training matrix");
    if (stratum_of_row.size() != year_of_row.size()) throw DimensionError("stratum and year lists differ in length");
    if (B < 1) throw ConfigError("block size must be >= 1");

    std::map<std::string, std::vector<std::size_t>> groups;
    for (std::size_t r = 0; r < stratum_of_row.size(); ++r) groups[stratum_of_row[r]].push_back(r);

    struct Pending {
        std::string stratum;
        std::vector<std::vector<std::size_t>> blocks;
    };
    std::vector<Pending> pending;
    for (auto& [name, rows] : groups) {
        std::stable_sort(rows.begin(), rows.end(),
                         [&](std::size_t a, std::size_t b) { return year_of_row[a] < year_of_row[b]; });
        Pending p{name, {}};
        for (std::size_t k = 0; k < rows.size(); k += B) {
            const auto end = std::min(rows.size(), k + B);
            p.blocks.emplace_back(rows.begin() + static_cast<std::ptrdiff_t>(k),
                                  rows.begin() + static_cast<std::ptrdiff_t>(end));
        }
        pending.push_back(std::move(p));
    }

    const auto singletons = static_cast<std::size_t>(
        std::count_if(pending.begin(), pending.end(), [](const Pending& p) { return p.blocks.size() == 1; }));
    const bool pool = singletons >= 2;

    BootstrapPlan plan;
    plan.n_rows = stratum_of_row.size();
    plan.block_size = B;
    std::size_t pooled_index = SIZE_MAX;
    for (auto& p : pending) {
        std::size_t s;
        if (pool && p.blocks.size() == 1) {
            if (pooled_index == SIZE_MAX) {
                pooled_index = plan.strata.size();
                plan.strata.emplace_back(kPooledStratum);
            }
            s = pooled_index;
        } else {
            s = plan.strata.size();
            plan.strata.push_back(p.stratum);
        }
        for (auto& rows : p.blocks) plan.blocks.push_back({s, std::move(rows)});
    }
    return plan;
}

BootstrapPlan make_blocks(const SupervisedMatrix& train, std::size_t B, StrataKey key) {
    if (train.n() == 0) throw DimensionError("cannot block an empty training matrix");
    if (train.provenance.size() != train.n()) throw DimensionError("training matrix lacks row provenance");
    std::vector<std::string> strata;
    std::vector<int> years;
    for (const auto& p : train.provenance) {
        strata.push_back(key == StrataKey::state ? p.state : std::string("all"));
        years.push_back(p.target_year);
    }
    return make_blocks(strata, years, B);
}

void draw_samples(BootstrapPlan& plan, std::size_t M, std::uint64_t seed) {
    if (plan.blocks.empty()) throw DimensionError("bootstrap plan has no blocks");
    // Resampling classes: (stratum, block length) -> block indices.
    std::map<std::pair<std::size_t, std::size_t>, std::vector<std::size_t>> classes;
    for (std::size_t b = 0; b < plan.blocks.size(); ++b) {
        classes[{plan.blocks[b].stratum, plan.blocks[b].rows.size()}].push_back(b);
    }
    plan.samples.assign(M, {});
    plan.oob.assign(M, {});
    for (std::size_t i = 0; i < M; ++i) {
        Rng rng(derive_seed(seed, i));
        auto& sample = plan.samples[i];
        sample.reserve(plan.blocks.size());
        for (const auto& [key, members] : classes) {
            for (std::size_t k = 0; k < members.size(); ++k) sample.push_back(members[rng.uniform_index(members.size())]);
        }
        std::vector<char> in_bag(plan.n_rows, 0);
        for (auto b : sample) {
            for (auto r : plan.blocks[b].rows) in_bag[r] = 1;
        }
        for (std::size_t r = 0; r < plan.n_rows; ++r) {
            if (!in_bag[r]) plan.oob[i].push_back(r);
        }
    }
}

Vector inverse_rmse_weights(std::span<const double> rmse, double rmse_floor) {
    if (rmse.empty()) throw ConfigError("no learners to weight");
    if (!(rmse_floor > 0.0)) throw ConfigError("rmse_floor must be positive");
    Vector r(rmse.size());
    for (std::size_t i = 0; i < rmse.size(); ++i) {
        if (!(rmse[i] >= 0.0) || !std::isfinite(rmse[i])) throw NumericError("validation RMSE must be finite and >= 0");
        r[i] = std::max(rmse[i], rmse_floor);
    }
    // Scaling by the smallest RMSE first keeps equal RMSEs at exactly 1/M.
    const double r_min = *std::min_element(r.begin(), r.end());
    Vector w(r.size());
    double total = 0.0;
    for (std::size_t i = 0; i < r.size(); ++i) {
        w[i] = r_min / r[i];
        total += w[i];
    }
    for (double& v : w) v /= total;
    return w;
}

EnsembleModel assemble_ensemble(std::vector<RegressionTree> learners, Vector validation_rmse, EnsembleKind kind,
                                double rmse_floor) {
    if (learners.empty()) throw ConfigError("ensemble needs at least one learner");
    if (kind == EnsembleKind::uniform && validation_rmse.empty()) {
        validation_rmse.assign(learners.size(), std::numeric_limits<double>::quiet_NaN());
    }
    if (validation_rmse.size() != learners.size()) throw DimensionError("one validation RMSE per learner required");
    EnsembleModel m;
    m.kind = kind;
    if (kind == EnsembleKind::uniform) {
        m.weights.assign(learners.size(), 1.0 / static_cast<double>(learners.size()));
    } else {
        m.weights = inverse_rmse_weights(validation_rmse, rmse_floor);
    }
    m.learners = std::move(learners);
    m.validation_rmse = std::move(validation_rmse);
    m.kept_depth.clear();
    for (const auto& t : m.learners) m.kept_depth.push_back(t.depth());
    return m;
}

BootstrapPlan make_plan(const SupervisedMatrix& train, const BaggingConfig& cfg) {
    cfg.validate();
    std::size_t B = cfg.B;
    if (B == 0) {
        std::set<int> years;
        for (const auto& p : train.provenance) years.insert(p.target_year);
        B = default_block_size(cfg.lag, years.size());
    }
    BootstrapPlan plan = make_blocks(train, B, cfg.strata_key);
    draw_samples(plan, cfg.M, cfg.seed);
    return plan;
}

EnsembleModel fit_ermbag(const SupervisedMatrix& train, const BaggingConfig& cfg, const TreeHyperparams& hp) {
    return fit_ermbag(train, make_plan(train, cfg), cfg, hp);
}

EnsembleModel fit_ermbag(const SupervisedMatrix& train, const BootstrapPlan& plan, const BaggingConfig& cfg,
                         const TreeHyperparams& hp) {
    check_plan(train, plan, cfg);
    hp.validate();
    const auto cols = std::make_shared<const SortedColumns>(train.X);
    std::vector<LearnerFit> fits(cfg.M);
    parallel_for(cfg.M, cfg.threads, [&](std::size_t i) {
        const Vector w = plan.sample_weights(i);
        LearnerFit f{fit_tree(cols, train.y, w, hp)};
        f.depth = f.tree.depth();
        if (!plan.oob[i].empty()) f.rmse = rmse_on(f.tree, train, plan.oob[i]);
        fits[i] = std::move(f);
    });
    return finish(std::move(fits), EnsembleKind::uniform, cfg);
}

EnsembleModel fit_ermbag_plus(const SupervisedMatrix& train, const BaggingConfig& cfg, const TreeHyperparams& hp) {
    return fit_ermbag_plus(train, make_plan(train, cfg), cfg, hp);
}

EnsembleModel fit_ermbag_plus(const SupervisedMatrix& train, const BootstrapPlan& plan, const BaggingConfig& cfg,
                              const TreeHyperparams& hp) {
    check_plan(train, plan, cfg);
    hp.validate();
    if (std::all_of(plan.oob.begin(), plan.oob.end(), [](const auto& o) { return o.empty(); })) {
        throw ConfigError("every bootstrap sample covers all training rows; no out-of-bag rows to validate on");
    }
    const auto cols = std::make_shared<const SortedColumns>(train.X);
    std::vector<LearnerFit> fits(cfg.M);
    parallel_for(cfg.M, cfg.threads, [&](std::size_t i) {
        Vector w = plan.sample_weights(i);
        std::vector<std::size_t> val = plan.oob[i];
        if (val.empty()) {
            val = tail_holdout(train);
            for (auto r : val) w[r] = 0.0;
        }
        TreeBuilder builder(cols, train.y, w, hp);
        double best = rmse_on(builder.tree(), train, val);
        int best_depth = 0;
        std::size_t stale = 0;
        while (builder.grow_level()) {
            const double r = rmse_on(builder.tree(), train, val);
            const bool improved = r < best - cfg.early_stop.tolerance;
            if (r < best) {
                best = r;
                best_depth = builder.depth();
            }
            stale = improved ? 0 : stale + 1;
            if (stale >= cfg.early_stop.patience) break;
        }
        fits[i] = {builder.tree().truncated(best_depth), best, best_depth};
    });
    return finish(std::move(fits), EnsembleKind::weighted, cfg);
}

Vector predict_ensemble(const EnsembleModel& model, const Matrix& X) {
    if (model.learners.empty()) throw ConfigError("empty ensemble");
    const std::size_t d = model.learners.front().n_features();
    if (X.cols() != d) {
        throw DimensionError("ensemble expects " + std::to_string(d) + " features, got " + std::to_string(X.cols()));
    }
    Vector out(X.rows(), 0.0);
    for (std::size_t r = 0; r < X.rows(); ++r) {
        const auto x = X.row(r);
        double s = 0.0;
        for (std::size_t i = 0; i < model.learners.size(); ++i) s += model.weights[i] * model.learners[i].predict_row(x);
        out[r] = s;
    }
    return out;
}

Matrix member_predictions(const EnsembleModel& model, const Matrix& X) {
    Matrix out(model.learners.size(), X.rows());
    for (std::size_t i = 0; i < model.learners.size(); ++i) {
        const Vector p = model.learners[i].predict(X);
        std::copy(p.begin(), p.end(), out.row(i).begin());
    }
    return out;
}

void save_ensemble(const EnsembleModel& model, const std::filesystem::path& dir) {
    std::filesystem::create_directories(dir);
    nlohmann::json j;
    j["format"] = "panelcast-ensemble 1";
    j["kind"] = model.kind == EnsembleKind::uniform ? "uniform" : "weighted";
    const auto& c = model.config;
    j["config"] = {{"M", c.M},
                   {"B", c.B},
                   {"lag", c.lag},
                   {"strata_key", to_string(c.strata_key)},
                   {"rmse_floor", c.rmse_floor},
                   {"patience", c.early_stop.patience},
                   {"tolerance", c.early_stop.tolerance},
                   {"seed", c.seed}};
    auto& learners = j["learners"] = nlohmann::json::array();
    for (std::size_t i = 0; i < model.size(); ++i) {
        char name[32];
        std::snprintf(name, sizeof name, "tree_%03zu.txt", i);
        std::ofstream os(dir / name);
        if (!os) throw Error("cannot write " + (dir / name).string());
        model.learners[i].write(os);
        nlohmann::json entry = {{"file", name}, {"weight", model.weights[i]}, {"kept_depth", model.kept_depth.at(i)}};
        entry["validation_rmse"] =
            std::isfinite(model.validation_rmse[i]) ? nlohmann::json(model.validation_rmse[i]) : nlohmann::json();
        if (i < model.seeds.size()) entry["seed"] = model.seeds[i];
        learners.push_back(std::move(entry));
    }
    std::ofstream os(dir / "manifest.json");
    if (!os) throw Error("cannot write " + (dir / "manifest.json").string());
    os << j.dump(2) << '\n';
}

EnsembleModel load_ensemble(const std::filesystem::path& dir) {
    std::ifstream is(dir / "manifest.json");
    if (!is) throw Error("cannot read " + (dir / "manifest.json").string());
    nlohmann::json j;
    try {
        j = nlohmann::json::parse(is);
    } catch (const nlohmann::json::exception& e) {
        throw ParseError(std::string("ensemble manifest: ") + e.what());
    }
    if (j.value("format", "") != "panelcast-ensemble 1") throw ParseError("not a panelcast ensemble manifest");
    EnsembleModel m;
    try {
        m.kind = j.at("kind") == "uniform" ? EnsembleKind::uniform : EnsembleKind::weighted;
        const auto& c = j.at("config");
        m.config.M = c.at("M");
        m.config.B = c.at("B");
        m.config.lag = c.at("lag");
        m.config.strata_key = parse_strata_key(c.at("strata_key"));
        m.config.rmse_floor = c.at("rmse_floor");
        m.config.early_stop.patience = c.at("patience");
        m.config.early_stop.tolerance = c.at("tolerance");
        m.config.seed = c.at("seed");
        for (const auto& e : j.at("learners")) {
            std::ifstream ts(dir / e.at("file").get<std::string>());
            if (!ts) throw Error("cannot read tree file " + e.at("file").get<std::string>());
            m.learners.push_back(RegressionTree::read(ts));
            m.weights.push_back(e.at("weight"));
            m.kept_depth.push_back(e.at("kept_depth"));
            const auto& v = e.at("validation_rmse");
            m.validation_rmse.push_back(v.is_null() ? std::numeric_limits<double>::quiet_NaN() : v.get<double>());
            if (e.contains("seed")) m.seeds.push_back(e.at("seed"));
        }
    } catch (const nlohmann::json::exception& e) {
        throw ParseError(std::string("ensemble manifest: ") + e.what());
    }
    if (m.learners.empty()) throw ParseError("ensemble manifest lists no learners");
    return m;
}

}  // namespace panelcast
