#include "panelcast/lag_features.hpp"

#include <cmath>
#include <ostream>

#include "panelcast/error.hpp"
#include "text.hpp"

namespace panelcast {

LagConfig LagConfig::for_panel(const PanelTable& panel, int lag) {
    if (panel.n_years() < 2) throw ConfigError("panel needs at least two years");
    return {lag, panel.years().back() - 1, panel.years().back()};
}

std::string ColumnLabel::str() const {
    return feature + "@t-" + std::to_string(offset);
}

SupervisedMatrix build_supervised(const PanelTable& panel, const LagConfig& cfg, Split split) {
    const int l = cfg.lag;
    if (l < 1) throw ConfigError("lag must be at least 1");
    if (cfg.test_year != cfg.train_year_max + 1) {
        throw ConfigError("test year must immediately follow the last training year");
    }
    if (panel.n_years() == 0) throw ConfigError("panel has no years");
    const int first = panel.years().front();
    const int last = panel.years().back();
    if (static_cast<std::size_t>(l) + 2 > panel.n_years()) {
        throw ConfigError("lag " + std::to_string(l) + " too large for a panel spanning " +
                          std::to_string(panel.n_years()) + " years");
    }

    int y_lo, y_hi;
    if (split == Split::train) {
        y_lo = first + l;
        y_hi = cfg.train_year_max;
        if (y_hi > last) throw ConfigError("training years extend beyond the panel");
    } else {
        y_lo = y_hi = cfg.test_year;
        if (cfg.test_year > last || cfg.test_year - l < first) {
            throw ConfigError("test year " + std::to_string(cfg.test_year) + " with lag " +
                              std::to_string(l) + " is not covered by the panel");
        }
    }
    if (y_hi < y_lo) {
        throw ConfigError("lag " + std::to_string(l) + " leaves no training rows before " +
                          std::to_string(cfg.train_year_max));
    }

    const std::size_t p = panel.n_features() - 1;
    const std::size_t d = lag_dimension(p, l);

    SupervisedMatrix m;
    m.lag = l;
    m.columns.reserve(d);
    for (int o = 0; o <= l; ++o) {
        for (std::size_t f = 1; f <= p; ++f) {
            m.columns.push_back({ColumnLabel::Kind::predictor, panel.features()[f].name, o});
        }
    }
    for (int o = 1; o <= l; ++o) {
        m.columns.push_back({ColumnLabel::Kind::lagged_target, panel.features()[0].name, o});
    }

    const std::size_t n = static_cast<std::size_t>(y_hi - y_lo + 1) * panel.n_states();
    m.X = Matrix(n, d);
    m.y.resize(n);
    m.provenance.reserve(n);
    std::size_t r = 0;
    for (int t = y_lo; t <= y_hi; ++t) {
        const std::size_t yt = *panel.year_index(t);
        for (std::size_t s = 0; s < panel.n_states(); ++s, ++r) {
            auto row = m.X.row(r);
            std::size_t c = 0;
            for (int o = 0; o <= l; ++o) {
                for (std::size_t f = 1; f <= p; ++f) row[c++] = panel.at(yt - o, s, f);
            }
            for (int o = 1; o <= l; ++o) row[c++] = panel.target(yt - o, s);
            m.y[r] = panel.target(yt, s);
            m.provenance.push_back({panel.states()[s], t});
        }
    }
    return m;
}

NormalizationParams fit_normalization(const SupervisedMatrix& train) {
    const std::size_t n = train.n();
    const std::size_t d = train.d();
    if (n == 0 || d == 0) throw DimensionError("cannot fit normalization on an empty matrix");
    if (n < 2) throw DimensionError("normalization needs at least two training rows");

    NormalizationParams p{Vector(d, 0.0), Vector(d, 1.0)};
    for (std::size_t j = 0; j < d; ++j) {
        if (j < train.columns.size() && train.columns[j].kind == ColumnLabel::Kind::lagged_target) {
            continue;
        }
        const double first = train.X(0, j);
        bool constant = true;
        double sum = 0.0;
        for (std::size_t i = 0; i < n; ++i) {
            sum += train.X(i, j);
            constant = constant && train.X(i, j) == first;
        }
        if (constant) {
            p.center[j] = first;
            continue;
        }
        const double mean = sum / static_cast<double>(n);
        double ss = 0.0;
        for (std::size_t i = 0; i < n; ++i) {
            const double dv = train.X(i, j) - mean;
            ss += dv * dv;
        }
        const double sd = std::sqrt(ss / static_cast<double>(n - 1));
        p.center[j] = mean;
        p.scale[j] = sd > 0.0 ? sd : 1.0;
    }
    return p;
}

namespace {

void check_params(const SupervisedMatrix& m, const NormalizationParams& p) {
    if (p.center.size() != m.d() || p.scale.size() != m.d()) {
        throw DimensionError("normalization has " + std::to_string(p.center.size()) +
                             " columns, matrix has " + std::to_string(m.d()));
    }
}

}  // namespace

SupervisedMatrix apply_normalization(const SupervisedMatrix& m, const NormalizationParams& p) {
    check_params(m, p);
    SupervisedMatrix out = m;
    for (std::size_t i = 0; i < out.n(); ++i) {
        auto row = out.X.row(i);
        for (std::size_t j = 0; j < row.size(); ++j) row[j] = (row[j] - p.center[j]) / p.scale[j];
    }
    return out;
}

SupervisedMatrix invert_normalization(const SupervisedMatrix& m, const NormalizationParams& p) {
    check_params(m, p);
    SupervisedMatrix out = m;
    for (std::size_t i = 0; i < out.n(); ++i) {
        auto row = out.X.row(i);
        for (std::size_t j = 0; j < row.size(); ++j) row[j] = row[j] * p.scale[j] + p.center[j];
    }
    return out;
}

void write_supervised_csv(const SupervisedMatrix& m, std::ostream& os) {
    os << "state,target_year,y";
    for (const auto& c : m.columns) os << ',' << c.str();
    os << '\n';
    for (std::size_t i = 0; i < m.n(); ++i) {
        os << m.provenance[i].state << ',' << m.provenance[i].target_year << ','
           << detail::format_double(m.y[i]);
        for (double v : m.X.row(i)) os << ',' << detail::format_double(v);
        os << '\n';
    }
}

}  // namespace panelcast
