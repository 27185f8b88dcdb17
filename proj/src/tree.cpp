#include "panelcast/tree.hpp"

#include <algorithm>
#include <cmath>
#include <istream>
#include <limits>
#include <numeric>
#include <ostream>
#include <string>

#include "panelcast/error.hpp"
#include "text.hpp"

namespace panelcast {

void TreeHyperparams::validate() const {
    if (max_depth < 1) throw ConfigError("tree max_depth must be at least 1");
    if (min_leaf < 1) throw ConfigError("tree min_leaf must be at least 1");
    if (!(min_split_improvement >= 0.0)) throw ConfigError("tree min_split_improvement must be >= 0");
}

namespace {

struct NodeStats {
    double weight = 0.0;
    double mean = 0.0;
    double sse = 0.0;       // sum w (y - mean)^2
    double centered = 0.0;  // sum w (y - mean), ~0 up to rounding
    bool constant = true;
};

/// Stats over rows visited in ascending row order.
template <class Rows>
NodeStats node_stats(const Rows& rows, const double* y, const double* w) {
    NodeStats s;
    double sum = 0.0;
    bool first = true;
    double y0 = 0.0;
    for (auto r : rows) {
        s.weight += w[r];
        sum += w[r] * y[r];
        if (first) {
            y0 = y[r];
            first = false;
        } else if (y[r] != y0) {
            s.constant = false;
        }
    }
    s.mean = s.weight > 0.0 ? sum / s.weight : 0.0;
    for (auto r : rows) {
        const double z = y[r] - s.mean;
        s.sse += w[r] * z * z;
        s.centered += w[r] * z;
    }
    return s;
}

struct Candidate {
    bool found = false;
    std::size_t feature = 0;
    double threshold = 0.0;
    double criterion = std::numeric_limits<double>::infinity();
};

double midpoint(double lo, double hi) {
    const double t = lo + (hi - lo) * 0.5;
    // Adjacent doubles can round the midpoint up to `hi`, which would send
    // `hi` left; fall back to `lo` in that case.
    return t < hi ? t : lo;
}

/// Scans one feature whose node rows are visited in sorted value order.
template <class RowAt, class ValueAt>
void scan_feature(std::size_t count, RowAt row_at, ValueAt value_at, const double* y, const double* w,
                  const NodeStats& node, double min_leaf, std::size_t feature, Candidate& best) {
    double wl = 0.0;
    double sl = 0.0;
    for (std::size_t k = 0; k + 1 < count; ++k) {
        const auto r = row_at(k);
        wl += w[r];
        sl += w[r] * (y[r] - node.mean);
        const double v = value_at(k);
        const double vn = value_at(k + 1);
        if (!(v < vn)) continue;
        const double wr = node.weight - wl;
        if (wr < min_leaf) break;
        if (wl < min_leaf) continue;
        const double sr = node.centered - sl;
        const double criterion = node.sse - (sl * sl / wl + sr * sr / wr);
        if (criterion < best.criterion) {
            best = {true, feature, midpoint(v, vn), std::max(criterion, 0.0)};
        }
    }
}

bool accept(const Candidate& c, const NodeStats& node, double min_split_improvement) {
    if (!c.found || node.constant) return false;
    const double gain = node.sse - c.criterion;
    return gain > 0.0 && gain >= min_split_improvement;
}

}  // namespace

std::optional<NodeSplit> best_split(const Matrix& X, std::span<const double> y,
                                std::span<const std::size_t> rows, std::size_t min_leaf,
                                double min_split_improvement) {
    if (y.size() != X.rows()) throw DimensionError("best_split: X and y row counts differ");
    if (min_leaf < 1) throw ConfigError("min_leaf must be at least 1");
    std::vector<std::size_t> asc(rows.begin(), rows.end());
    std::sort(asc.begin(), asc.end());
    for (auto r : asc) {
        if (r >= X.rows()) throw DimensionError("best_split: row index out of range");
    }
    const std::vector<double> ones(X.rows(), 1.0);
    const NodeStats node = node_stats(asc, y.data(), ones.data());
    if (asc.size() < 2 * min_leaf || node.constant) return std::nullopt;

    Candidate best;
    std::vector<std::size_t> order(asc);
    for (std::size_t j = 0; j < X.cols(); ++j) {
        order = asc;
        std::stable_sort(order.begin(), order.end(),
                         [&](std::size_t a, std::size_t b) { return X(a, j) < X(b, j); });
        scan_feature(
            order.size(), [&](std::size_t k) { return order[k]; },
            [&](std::size_t k) { return X(order[k], j); }, y.data(), ones.data(), node,
            static_cast<double>(min_leaf), j, best);
    }
    if (!accept(best, node, min_split_improvement)) return std::nullopt;
    return NodeSplit{best.feature, best.threshold, best.criterion};
}

// ---------------------------------------------------------------------------

RegressionTree::RegressionTree(std::size_t n_features, std::vector<Node> nodes)
    : n_features_(n_features), nodes_(std::move(nodes)) {
    if (nodes_.empty()) throw Error("regression tree needs at least one node");
    const int count = static_cast<int>(nodes_.size());
    for (const auto& nd : nodes_) {
        if (nd.is_leaf()) continue;
        if (nd.feature >= static_cast<int>(n_features_) || nd.left <= 0 || nd.right <= 0 ||
            nd.left >= count || nd.right >= count) {
            throw Error("malformed regression tree node");
        }
    }
}

RegressionTree RegressionTree::constant(std::size_t n_features, double value) {
    Node leaf;
    leaf.value = value;
    return RegressionTree(n_features, {leaf});
}

double RegressionTree::predict_row(std::span<const double> x, int max_depth) const {
    const Node* nd = &nodes_[0];
    while (!nd->is_leaf() && nd->depth < max_depth) {
        nd = x[static_cast<std::size_t>(nd->feature)] <= nd->threshold ? &nodes_[nd->left] : &nodes_[nd->right];
    }
    return nd->value;
}

Vector RegressionTree::predict(const Matrix& X, int max_depth) const {
    if (X.cols() != n_features_) {
        throw DimensionError("tree expects " + std::to_string(n_features_) + " features, got " +
                             std::to_string(X.cols()));
    }
    Vector out(X.rows());
    for (std::size_t i = 0; i < X.rows(); ++i) out[i] = predict_row(X.row(i), max_depth);
    return out;
}

RegressionTree RegressionTree::truncated(int depth) const {
    std::vector<Node> kept;
    std::vector<int> remap(nodes_.size(), -1);
    for (std::size_t i = 0; i < nodes_.size(); ++i) {
        if (nodes_[i].depth > depth) continue;
        remap[i] = static_cast<int>(kept.size());
        kept.push_back(nodes_[i]);
    }
    for (auto& nd : kept) {
        if (nd.parent >= 0) nd.parent = remap[nd.parent];
        if (nd.is_leaf()) continue;
        if (nd.depth >= depth) {
            nd.feature = -1;
            nd.threshold = 0.0;
            nd.left = nd.right = -1;
        } else {
            nd.left = remap[nd.left];
            nd.right = remap[nd.right];
        }
    }
    return RegressionTree(n_features_, std::move(kept));
}

int RegressionTree::depth() const noexcept {
    int d = 0;
    for (const auto& nd : nodes_) d = std::max(d, nd.depth);
    return d;
}

std::size_t RegressionTree::leaf_count() const noexcept {
    return static_cast<std::size_t>(
        std::count_if(nodes_.begin(), nodes_.end(), [](const Node& n) { return n.is_leaf(); }));
}

void RegressionTree::write(std::ostream& os) const {
    os << "panelcast-tree 1\n";
    os << "features " << n_features_ << '\n';
    os << "nodes " << nodes_.size() << '\n';
    os << "# id parent depth feature threshold value weight left right\n";
    for (std::size_t i = 0; i < nodes_.size(); ++i) {
        const auto& n = nodes_[i];
        os << i << ' ' << n.parent << ' ' << n.depth << ' ' << n.feature << ' '
           << detail::format_double(n.threshold) << ' ' << detail::format_double(n.value) << ' '
           << detail::format_double(n.weight) << ' ' << n.left << ' ' << n.right << '\n';
    }
}

RegressionTree RegressionTree::read(std::istream& is) {
    std::string line;
    auto next = [&]() -> std::string_view {
        while (std::getline(is, line)) {
            auto t = detail::trim(line);
            if (!t.empty() && t.front() != '#') return t;
        }
        throw ParseError("unexpected end of tree file");
    };
    if (next() != "panelcast-tree 1") throw ParseError("not a panelcast-tree v1 file");
    auto kv = [&](std::string_view key) {
        auto parts = detail::split(next(), ' ');
        if (parts.size() != 2 || parts[0] != key) throw ParseError("expected '" + std::string(key) + "'");
        return static_cast<std::size_t>(detail::parse_int(parts[1], key));
    };
    const std::size_t nf = kv("features");
    const std::size_t count = kv("nodes");
    std::vector<Node> nodes(count);
    for (std::size_t i = 0; i < count; ++i) {
        auto p = detail::split(next(), ' ');
        if (p.size() != 9) throw ParseError("tree node line needs 9 fields");
        if (static_cast<std::size_t>(detail::parse_int(p[0], "node id")) != i) {
            throw ParseError("tree node ids must be sequential");
        }
        auto& n = nodes[i];
        n.parent = static_cast<int>(detail::parse_int(p[1], "parent"));
        n.depth = static_cast<int>(detail::parse_int(p[2], "depth"));
        n.feature = static_cast<int>(detail::parse_int(p[3], "feature"));
        n.threshold = detail::parse_double(p[4], "threshold");
        n.value = detail::parse_double(p[5], "value");
        n.weight = detail::parse_double(p[6], "weight");
        n.left = static_cast<int>(detail::parse_int(p[7], "left"));
        n.right = static_cast<int>(detail::parse_int(p[8], "right"));
    }
    return RegressionTree(nf, std::move(nodes));
}

// ---------------------------------------------------------------------------

SortedColumns::SortedColumns(const Matrix& X)
    : rows_(X.rows()), cols_(X.cols()), values_(X.rows() * X.cols()), order_(X.rows() * X.cols()) {
    if (rows_ > std::numeric_limits<std::uint32_t>::max()) throw DimensionError("too many rows");
    for (std::size_t j = 0; j < cols_; ++j) {
        double* col = values_.data() + j * rows_;
        for (std::size_t i = 0; i < rows_; ++i) col[i] = X(i, j);
        std::uint32_t* ord = order_.data() + j * rows_;
        std::iota(ord, ord + rows_, 0u);
        std::stable_sort(ord, ord + rows_, [col](std::uint32_t a, std::uint32_t b) { return col[a] < col[b]; });
    }
}

TreeBuilder::TreeBuilder(std::shared_ptr<const SortedColumns> columns, std::span<const double> y,
                         std::span<const double> weights, TreeHyperparams hp)
    : cols_(std::move(columns)), y_(y.begin(), y.end()), w_(weights.begin(), weights.end()), hp_(hp) {
    hp_.validate();
    const std::size_t n = cols_->rows();
    if (y_.size() != n || w_.size() != n) throw DimensionError("tree builder: y/weights length mismatch");
    for (double w : w_) {
        if (!(w >= 0.0)) throw ConfigError("tree row weights must be non-negative");
        if (w > 0.0) ++m_;
    }
    if (m_ == 0) throw DimensionError("cannot fit a tree on an empty training set");

    const std::size_t d = cols_->cols();
    sorted_.resize(d * m_);
    for (std::size_t j = 0; j < d; ++j) {
        const std::uint32_t* ord = cols_->order(j);
        std::uint32_t* dst = sorted_.data() + j * m_;
        for (std::size_t k = 0; k < n; ++k) {
            if (w_[ord[k]] > 0.0) *dst++ = ord[k];
        }
    }
    rowlist_.reserve(m_);
    for (std::uint32_t i = 0; i < n; ++i) {
        if (w_[i] > 0.0) rowlist_.push_back(i);
    }
    scratch_.resize(m_);
    goes_left_.assign(n, 0);

    nodes_.emplace_back();
    segments_.push_back({0, m_});
    open_node(0, segments_[0]);
    frontier_.push_back(0);
}

void TreeBuilder::open_node(int id, Segment seg) {
    const std::span<const std::uint32_t> rows(rowlist_.data() + seg.begin, seg.end - seg.begin);
    const NodeStats s = node_stats(rows, y_.data(), w_.data());
    nodes_[id].value = s.mean;
    nodes_[id].weight = s.weight;
}

bool TreeBuilder::grow_level() {
    if (frontier_.empty()) return false;
    if (depth_ >= hp_.max_depth) {
        frontier_.clear();
        return false;
    }
    const std::size_t d = cols_->cols();
    const double min_leaf = static_cast<double>(hp_.min_leaf);
    std::vector<int> next;
    for (int id : frontier_) {
        const Segment seg = segments_[id];
        const std::size_t count = seg.end - seg.begin;
        const std::span<const std::uint32_t> rows(rowlist_.data() + seg.begin, count);
        const NodeStats stats = node_stats(rows, y_.data(), w_.data());
        if (stats.constant || stats.weight < 2.0 * min_leaf) continue;

        Candidate best;
        for (std::size_t j = 0; j < d; ++j) {
            const std::uint32_t* ord = sorted_.data() + j * m_ + seg.begin;
            const double* col = cols_->column(j);
            scan_feature(
                count, [ord](std::size_t k) { return ord[k]; }, [ord, col](std::size_t k) { return col[ord[k]]; },
                y_.data(), w_.data(), stats, min_leaf, j, best);
        }
        if (!accept(best, stats, hp_.min_split_improvement)) continue;

        const double* col = cols_->column(best.feature);
        std::size_t n_left = 0;
        for (auto r : rows) {
            goes_left_[r] = col[r] <= best.threshold;
            n_left += goes_left_[r] ? 1 : 0;
        }
        auto partition = [&](std::uint32_t* seg_begin) {
            std::uint32_t* l = scratch_.data();
            std::uint32_t* r = scratch_.data() + n_left;
            for (std::size_t k = 0; k < count; ++k) {
                const auto row = seg_begin[k];
                if (goes_left_[row]) *l++ = row; else *r++ = row;
            }
            std::copy(scratch_.data(), scratch_.data() + count, seg_begin);
        };
        for (std::size_t j = 0; j < d; ++j) partition(sorted_.data() + j * m_ + seg.begin);
        partition(rowlist_.data() + seg.begin);

        const int left = static_cast<int>(nodes_.size());
        const int right = left + 1;
        auto& parent = nodes_[id];
        parent.feature = static_cast<int>(best.feature);
        parent.threshold = best.threshold;
        parent.left = left;
        parent.right = right;
        const int child_depth = parent.depth + 1;
        for (int c = 0; c < 2; ++c) {
            RegressionTree::Node child;
            child.parent = id;
            child.depth = child_depth;
            nodes_.push_back(child);
        }
        segments_.push_back({seg.begin, seg.begin + n_left});
        segments_.push_back({seg.begin + n_left, seg.end});
        open_node(left, segments_[left]);
        open_node(right, segments_[right]);
        next.push_back(left);
        next.push_back(right);
    }
    frontier_ = std::move(next);
    if (frontier_.empty()) return false;
    ++depth_;
    return true;
}

void TreeBuilder::grow_fully() {
    while (grow_level()) {
    }
}

RegressionTree TreeBuilder::tree() const { return RegressionTree(cols_->cols(), nodes_); }

RegressionTree fit_tree(const Matrix& X, std::span<const double> y, const TreeHyperparams& hp) {
    if (X.rows() == 0) throw DimensionError("cannot fit a tree on an empty training set");
    if (y.size() != X.rows()) throw DimensionError("fit_tree: X and y row counts differ");
    const std::vector<double> ones(X.rows(), 1.0);
    return fit_tree(std::make_shared<const SortedColumns>(X), y, ones, hp);
}

RegressionTree fit_tree(std::shared_ptr<const SortedColumns> columns, std::span<const double> y,
                        std::span<const double> weights, const TreeHyperparams& hp) {
    TreeBuilder builder(std::move(columns), y, weights, hp);
    builder.grow_fully();
    return builder.tree();
}

Vector predict_tree(const RegressionTree& tree, const Matrix& X) { return tree.predict(X); }

}  // namespace panelcast
