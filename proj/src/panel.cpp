#include "panelcast/panel.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <limits>
#include <set>
#include <sstream>

#include "panelcast/error.hpp"
#include "text.hpp"

namespace panelcast {

namespace {

void check_range(const FeatureSpec& f, double v, const std::string& where) {
    if (!std::isfinite(v)) {
        throw RangeError("non-finite value for '" + f.name + "' " + where);
    }
    if (f.unit == Unit::percent && (v < 0.0 || v > 100.0)) {
        throw RangeError("percentage feature '" + f.name + "' has value " + detail::format_double(v) +
                         " outside [0, 100] " + where);
    }
}

}  // namespace

PanelTable::PanelTable(std::vector<std::string> states, std::vector<int> years,
                       std::vector<FeatureSpec> features, std::vector<double> values)
    : states_(std::move(states)),
      years_(std::move(years)),
      features_(std::move(features)),
      values_(std::move(values)) {
    if (values_.size() != states_.size() * years_.size() * features_.size()) {
        throw DimensionError("panel values do not match states x years x features");
    }
    if (features_.empty() || features_.front().name != kTargetFeature) {
        throw SchemaError("panel must have '" + std::string(kTargetFeature) + "' as first feature");
    }
    for (std::size_t i = 1; i < years_.size(); ++i) {
        if (years_[i] != years_[i - 1] + 1) {
            throw SchemaError("panel years must be strictly increasing and contiguous");
        }
    }
    if (!std::is_sorted(states_.begin(), states_.end()) ||
        std::adjacent_find(states_.begin(), states_.end()) != states_.end()) {
        throw SchemaError("panel states must be unique and sorted");
    }
    for (std::size_t y = 0; y < years_.size(); ++y) {
        for (std::size_t s = 0; s < states_.size(); ++s) {
            for (std::size_t f = 0; f < features_.size(); ++f) {
                check_range(features_[f], at(y, s, f),
                            "(state " + states_[s] + ", year " + std::to_string(years_[y]) + ")");
            }
        }
    }
}

std::optional<std::size_t> PanelTable::year_index(int year) const {
    if (years_.empty() || year < years_.front() || year > years_.back()) return std::nullopt;
    return static_cast<std::size_t>(year - years_.front());
}

std::optional<std::size_t> PanelTable::state_index(const std::string& state) const {
    auto it = std::lower_bound(states_.begin(), states_.end(), state);
    if (it == states_.end() || *it != state) return std::nullopt;
    return static_cast<std::size_t>(it - states_.begin());
}

std::optional<std::size_t> PanelTable::feature_index(const std::string& name) const {
    for (std::size_t i = 0; i < features_.size(); ++i) {
        if (features_[i].name == name) return i;
    }
    return std::nullopt;
}

PanelTable read_panel(std::istream& is, const LoadOptions& opts) {
    const Schema& schema = opts.schema ? *opts.schema : Schema::canonical();
    std::string line;
    if (!std::getline(is, line)) throw SchemaError("panel CSV has no header row");
    if (line.size() >= 3 && line.compare(0, 3, "\xEF\xBB\xBF") == 0) line.erase(0, 3);
    const auto header = detail::split(detail::trim(line), ',');

    std::optional<std::size_t> state_col, year_col;
    std::vector<std::pair<std::string, std::size_t>> feature_cols;  // name -> csv column
    std::set<std::string> seen;
    for (std::size_t c = 0; c < header.size(); ++c) {
        std::string name(detail::trim(header[c]));
        if (!seen.insert(name).second) throw SchemaError("duplicate column '" + name + "'");
        if (name == "state") {
            state_col = c;
        } else if (name == "year") {
            year_col = c;
        } else {
            feature_cols.emplace_back(std::move(name), c);
        }
    }
    std::vector<std::string> missing;
    if (!state_col) missing.emplace_back("state");
    if (!year_col) missing.emplace_back("year");
    if (!seen.count(std::string(kTargetFeature))) missing.emplace_back(kTargetFeature);
    if (opts.schema_strict) {
        for (const auto& f : schema.features()) {
            if (!seen.count(f.name)) missing.push_back(f.name);
        }
    }
    if (!missing.empty()) {
        std::string msg = "panel CSV is missing required column(s):";
        for (const auto& m : missing) msg += " " + m;
        throw SchemaError(msg);
    }

    // Column order: schema order for known names, then unknown names in file order.
    std::vector<FeatureSpec> features;
    std::vector<std::size_t> csv_col;
    for (const auto& f : schema.features()) {
        for (const auto& [name, c] : feature_cols) {
            if (name == f.name) {
                features.push_back(f);
                csv_col.push_back(c);
            }
        }
    }
    for (const auto& [name, c] : feature_cols) {
        if (schema.find(name)) continue;
        if (opts.schema_strict) throw SchemaError("unexpected column '" + name + "' in strict mode");
        features.push_back({name, Category::chronic, Unit::percent});
        csv_col.push_back(c);
    }
    if (opts.schema_strict && features.size() != kCanonicalFeatureCount) {
        throw SchemaError("strict mode requires exactly " + std::to_string(kCanonicalFeatureCount) +
                          " features, found " + std::to_string(features.size()));
    }

    std::map<std::pair<int, std::string>, std::vector<double>> rows;
    std::size_t line_no = 1;
    while (std::getline(is, line)) {
        ++line_no;
        const auto t = detail::trim(line);
        if (t.empty()) continue;
        const auto cells = detail::split(t, ',');
        const std::string where = "at line " + std::to_string(line_no);
        if (cells.size() != header.size()) {
            throw ParseError("expected " + std::to_string(header.size()) + " cells, found " +
                             std::to_string(cells.size()) + " " + where);
        }
        std::string state(detail::trim(cells[*state_col]));
        if (state.empty()) throw ParseError("empty state " + where);
        const int year = static_cast<int>(detail::parse_int(cells[*year_col], "year " + where));
        std::vector<double> vals(features.size());
        for (std::size_t f = 0; f < features.size(); ++f) {
            vals[f] = detail::parse_double(cells[csv_col[f]], "'" + features[f].name + "' " + where);
            check_range(features[f], vals[f], where);
        }
        if (!rows.emplace(std::make_pair(year, state), std::move(vals)).second) {
            throw ParseError("duplicate (state, year) = (" + state + ", " + std::to_string(year) +
                             ") " + where);
        }
    }
    if (rows.empty()) throw SchemaError("panel CSV has no data rows");

    std::set<std::string> state_set;
    std::set<int> year_set;
    for (const auto& [key, _] : rows) {
        year_set.insert(key.first);
        state_set.insert(key.second);
    }
    std::vector<std::string> states(state_set.begin(), state_set.end());
    std::vector<int> years(year_set.begin(), year_set.end());
    if (opts.schema_strict && states.size() != kCanonicalStateCount) {
        throw SchemaError("strict mode requires " + std::to_string(kCanonicalStateCount) +
                          " states, found " + std::to_string(states.size()));
    }
    if (rows.size() != states.size() * years.size()) {
        for (int y : years) {
            for (const auto& s : states) {
                if (!rows.count({y, s})) {
                    throw SchemaError("panel is missing the row for state " + s + ", year " +
                                      std::to_string(y));
                }
            }
        }
    }
    std::vector<double> values;
    values.reserve(rows.size() * features.size());
    for (const auto& [_, v] : rows) values.insert(values.end(), v.begin(), v.end());
    return PanelTable(std::move(states), std::move(years), std::move(features), std::move(values));
}

PanelTable load_panel(const std::string& path, const LoadOptions& opts) {
    std::ifstream is(path);
    if (!is) throw Error("cannot open panel file '" + path + "'");
    return read_panel(is, opts);
}

void write_panel(const PanelTable& table, std::ostream& os) {
    os << "state,year";
    for (const auto& f : table.features()) os << ',' << f.name;
    os << '\n';
    for (std::size_t y = 0; y < table.n_years(); ++y) {
        for (std::size_t s = 0; s < table.n_states(); ++s) {
            os << table.states()[s] << ',' << table.years()[y];
            for (std::size_t f = 0; f < table.n_features(); ++f) {
                os << ',' << detail::format_double(table.at(y, s, f));
            }
            os << '\n';
        }
    }
}

void save_panel(const PanelTable& table, const std::string& path) {
    std::ofstream os(path);
    if (!os) throw Error("cannot open '" + path + "' for writing");
    write_panel(table, os);
}

SourceSeries interpolate_series(const SourceSeries& series, const std::vector<int>& target_years) {
    auto pts = series.points;
    std::sort(pts.begin(), pts.end());
    for (std::size_t i = 1; i < pts.size(); ++i) {
        if (pts[i].first == pts[i - 1].first) {
            throw RangeError("series (" + series.state + ", " + series.feature +
                             ") has duplicate year " + std::to_string(pts[i].first));
        }
    }
    if (pts.size() < 2) {
        throw RangeError("series (" + series.state + ", " + series.feature +
                         ") needs at least two known points to interpolate");
    }
    auto line = [](const std::pair<int, double>& a, const std::pair<int, double>& b, int t) {
        return a.second + (b.second - a.second) * static_cast<double>(t - a.first) /
                              static_cast<double>(b.first - a.first);
    };

    std::map<int, double> out(pts.begin(), pts.end());
    const int lo = pts.front().first;
    const int hi = pts.back().first;
    for (int t : target_years) {
        if (out.count(t)) continue;
        if (t < lo - 1 || t > hi + 1) {
            throw RangeError("year " + std::to_string(t) + " is more than one year outside the known range [" +
                             std::to_string(lo) + ", " + std::to_string(hi) + "] of series (" +
                             series.state + ", " + series.feature + ")");
        }
        if (t < lo) {
            out[t] = line(pts[0], pts[1], t);
        } else if (t > hi) {
            out[t] = line(pts[pts.size() - 2], pts.back(), t);
        } else {
            auto right = std::upper_bound(pts.begin(), pts.end(), std::make_pair(t, 0.0),
                                          [](const auto& a, const auto& b) { return a.first < b.first; });
            out[t] = line(*(right - 1), *right, t);
        }
    }
    SourceSeries result{series.state, series.feature, {}};
    result.points.assign(out.begin(), out.end());
    return result;
}

PanelTable integrate(const std::vector<SourceTable>& sources, const std::vector<int>& years,
                     const Schema& schema) {
    if (sources.empty()) throw SchemaError("integrate needs at least one source");

    // State sets must agree across sources.
    std::vector<std::set<std::string>> state_sets;
    for (const auto& src : sources) {
        std::set<std::string> s;
        for (const auto& r : src.rows) s.insert(r.state);
        state_sets.push_back(std::move(s));
    }
    for (std::size_t i = 1; i < sources.size(); ++i) {
        if (state_sets[i] == state_sets[0]) continue;
        std::vector<std::string> diff;
        std::set_symmetric_difference(state_sets[0].begin(), state_sets[0].end(),
                                      state_sets[i].begin(), state_sets[i].end(),
                                      std::back_inserter(diff));
        std::string msg = "sources '" + sources[0].name + "' and '" + sources[i].name +
                          "' disagree on states; symmetric difference:";
        for (const auto& d : diff) msg += " " + d;
        throw SchemaError(msg);
    }

    // Every schema feature supplied exactly once; category counts must match.
    std::vector<std::pair<std::size_t, std::size_t>> owner(schema.size(), {SIZE_MAX, 0});
    std::array<std::size_t, 7> counts{};
    for (std::size_t si = 0; si < sources.size(); ++si) {
        for (std::size_t fi = 0; fi < sources[si].features.size(); ++fi) {
            const auto& name = sources[si].features[fi];
            auto idx = schema.index_of(name);
            if (!idx) throw SchemaError("source '" + sources[si].name + "' has unknown feature '" + name + "'");
            if (owner[*idx].first != SIZE_MAX) {
                throw SchemaError("feature '" + name + "' is supplied by more than one source");
            }
            owner[*idx] = {si, fi};
            ++counts[static_cast<int>(schema.features()[*idx].category)];
        }
    }
    const auto expected = schema.category_counts();
    for (std::size_t c = 0; c < counts.size(); ++c) {
        if (counts[c] != expected[c]) {
            throw SchemaError("category '" + std::string(to_string(static_cast<Category>(c))) +
                              "' has " + std::to_string(counts[c]) + " features across sources, expected " +
                              std::to_string(expected[c]));
        }
    }

    std::vector<std::string> states(state_sets[0].begin(), state_sets[0].end());
    const std::size_t nf = schema.size();
    std::vector<double> values(years.size() * states.size() * nf);
    for (std::size_t f = 0; f < nf; ++f) {
        const auto [si, fi] = owner[f];
        const auto& src = sources[si];
        for (std::size_t s = 0; s < states.size(); ++s) {
            SourceSeries series{states[s], schema.features()[f].name, {}};
            for (const auto& r : src.rows) {
                if (r.state != states[s]) continue;
                if (r.values.size() != src.features.size()) {
                    throw DimensionError("source '" + src.name + "' row width mismatch");
                }
                if (!std::isnan(r.values[fi])) series.points.emplace_back(r.year, r.values[fi]);
            }
            const auto filled = interpolate_series(series, years);
            std::map<int, double> lookup(filled.points.begin(), filled.points.end());
            for (std::size_t y = 0; y < years.size(); ++y) {
                values[(y * states.size() + s) * nf + f] = lookup.at(years[y]);
            }
        }
    }
    return PanelTable(std::move(states), years, schema.features(), std::move(values));
}

SourceTable project(const PanelTable& table, const SourceTable& like) {
    SourceTable out{like.name, like.features, {}};
    std::vector<std::size_t> cols;
    for (const auto& name : like.features) {
        auto idx = table.feature_index(name);
        if (!idx) throw SchemaError("feature '" + name + "' not in table");
        cols.push_back(*idx);
    }
    for (const auto& r : like.rows) {
        auto yi = table.year_index(r.year);
        auto si = table.state_index(r.state);
        if (!yi || !si) continue;
        SourceTable::Row row{r.state, r.year, {}};
        for (auto c : cols) row.values.push_back(table.at(*yi, *si, c));
        out.rows.push_back(std::move(row));
    }
    return out;
}

}  // namespace panelcast
