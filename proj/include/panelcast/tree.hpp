#pragma once

#include <climits>
#include <cstdint>
#include <iosfwd>
#include <memory>
#include <optional>
#include <span>
#include <vector>

#include "panelcast/matrix.hpp"

namespace panelcast {

struct TreeHyperparams {
    static constexpr int kUnlimitedDepth = INT_MAX;

    int max_depth = 8;
    std::size_t min_leaf = 3;
    double min_split_improvement = 0.0;

    void validate() const;
};

/// A chosen split: rows with x[feature] <= threshold go left.
struct NodeSplit {
    std::size_t feature;
    double threshold;
    /// Summed squared deviation of both children from their means.
    double criterion;
};

/// Exhaustive CART split search over `rows`. Thresholds are midpoints between
/// consecutive distinct values; ties go to the lowest feature, then the lowest
/// threshold. Returns nothing when no split leaves min_leaf rows on both
/// sides, when y is constant over `rows`, or when the SSE reduction is not
/// positive and at least min_split_improvement.
std::optional<NodeSplit> best_split(const Matrix& X, std::span<const double> y,
                                std::span<const std::size_t> rows, std::size_t min_leaf,
                                double min_split_improvement = 0.0);

class RegressionTree {
public:
    struct Node {
        int feature = -1;  // -1 for a leaf
        double threshold = 0.0;
        double value = 0.0;   // weighted mean of training targets reaching the node
        double weight = 0.0;  // training weight (row count) reaching the node
        int left = -1;
        int right = -1;
        int parent = -1;
        int depth = 0;

        [[nodiscard]] bool is_leaf() const noexcept { return feature < 0; }
        friend bool operator==(const Node&, const Node&) = default;
    };

    RegressionTree() = default;
    RegressionTree(std::size_t n_features, std::vector<Node> nodes);

    /// Single-leaf tree.
    static RegressionTree constant(std::size_t n_features, double value);

    [[nodiscard]] double predict_row(std::span<const double> x,
                                     int max_depth = TreeHyperparams::kUnlimitedDepth) const;
    [[nodiscard]] Vector predict(const Matrix& X, int max_depth = TreeHyperparams::kUnlimitedDepth) const;

    /// Copy with every node at `depth` turned into a leaf.
    [[nodiscard]] RegressionTree truncated(int depth) const;

    [[nodiscard]] std::size_t n_features() const noexcept { return n_features_; }
    [[nodiscard]] const std::vector<Node>& nodes() const noexcept { return nodes_; }
    [[nodiscard]] int depth() const noexcept;
    [[nodiscard]] std::size_t leaf_count() const noexcept;

    void write(std::ostream& os) const;
    static RegressionTree read(std::istream& is);

    friend bool operator==(const RegressionTree&, const RegressionTree&) = default;

private:
    std::size_t n_features_ = 0;
    std::vector<Node> nodes_;
};

/// Column-major copy of a design matrix with every column's row order
/// presorted by (value, row index). Built once and shared by every tree fit
/// on the same matrix.
class SortedColumns {
public:
    explicit SortedColumns(const Matrix& X);

    [[nodiscard]] std::size_t rows() const noexcept { return rows_; }
    [[nodiscard]] std::size_t cols() const noexcept { return cols_; }
    [[nodiscard]] const double* column(std::size_t j) const noexcept { return values_.data() + j * rows_; }
    [[nodiscard]] const std::uint32_t* order(std::size_t j) const noexcept { return order_.data() + j * rows_; }

private:
    std::size_t rows_;
    std::size_t cols_;
    std::vector<double> values_;
    std::vector<std::uint32_t> order_;
};

/// Breadth-first CART growth over weighted rows (weights are bootstrap
/// multiplicities; zero-weight rows are excluded). Each grow_level() call
/// expands every open node at the current depth.
class TreeBuilder {
public:
    TreeBuilder(std::shared_ptr<const SortedColumns> columns, std::span<const double> y,
                std::span<const double> weights, TreeHyperparams hp);

    /// Expands the frontier by one level. Returns false when nothing split.
    bool grow_level();
    void grow_fully();

    [[nodiscard]] int depth() const noexcept { return depth_; }
    [[nodiscard]] bool finished() const noexcept { return frontier_.empty(); }
    [[nodiscard]] RegressionTree tree() const;

private:
    struct Segment {
        std::size_t begin;
        std::size_t end;
    };

    void open_node(int id, Segment seg);

    std::shared_ptr<const SortedColumns> cols_;
    std::vector<double> y_;
    std::vector<double> w_;
    TreeHyperparams hp_;
    std::size_t m_ = 0;                  // rows with positive weight
    std::vector<std::uint32_t> sorted_;  // cols x m, per-column node segments
    std::vector<std::uint32_t> rowlist_; // node segments in ascending row order
    std::vector<RegressionTree::Node> nodes_;
    std::vector<Segment> segments_;
    std::vector<int> frontier_;
    std::vector<std::uint32_t> scratch_;
    std::vector<char> goes_left_;
    int depth_ = 0;
};

RegressionTree fit_tree(const Matrix& X, std::span<const double> y, const TreeHyperparams& hp = {});

/// Fit with per-row weights (bootstrap multiplicities) on a presorted matrix.
RegressionTree fit_tree(std::shared_ptr<const SortedColumns> columns, std::span<const double> y,
                        std::span<const double> weights, const TreeHyperparams& hp);

Vector predict_tree(const RegressionTree& tree, const Matrix& X);

}  // namespace panelcast
