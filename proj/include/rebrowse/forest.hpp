#pragma once
// Random-forest classifier built from scratch.
//
// Trees are grown on seeded row subsamples (without replacement) with
// per-node feature subsampling; splits minimize weighted Gini impurity.
// Numeric thresholds sit at midpoints of consecutive distinct sorted values;
// binary (0/1) columns use the equivalent fixed threshold 0.5 via counting.
// Everything is deterministic given (row order, seed), independent of the
// thread count used for training.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <cstdlib>
#include <cstring>
#include <istream>
#include <ostream>
#include <span>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include "rebrowse/feature_matrix.hpp"
#include "rebrowse/parallel.hpp"
#include "rebrowse/rng.hpp"

namespace rebrowse {

struct ForestParams {
    int n_trees = 50;
    int max_depth = 20;
    int64_t min_rows_per_leaf = 1;
    int features_per_split = 0;     // 0 = floor(sqrt(width))
    double row_sample_rate = 0.632;  // without replacement
    uint64_t seed = 0;
};

namespace forest_detail {

struct Node {
    int32_t feature = -1;           // -1: leaf
    float threshold = 0.0f;         // go left when value < threshold
    int32_t left = -1;
    int32_t right = -1;
    int64_t leaf_offset = -1;       // into Tree::leaf_counts (n_classes per leaf)
};

struct Tree {
    std::vector<Node> nodes;
    std::vector<int64_t> leaf_counts;
};

inline double gini(const std::vector<int64_t>& counts, int64_t total) {
    if (total == 0) return 0.0;
    double sum_sq = 0.0;
    for (int64_t c : counts) {
        double p = static_cast<double>(c) / static_cast<double>(total);
        sum_sq += p * p;
    }
    return 1.0 - sum_sq;
}

struct SplitChoice {
    int32_t feature = -1;
    float threshold = 0.0f;
    double decrease = 0.0;  // parent impurity minus weighted child impurity
};

// Best threshold for one feature at one node, or feature = -1 when the
// column cannot reduce impurity under the min-rows constraint.
inline SplitChoice best_split_for_feature(
    const FeatureMatrix& x, int col, std::span<const int64_t> rows,
    std::span<const int32_t> labels, const std::vector<int64_t>& parent_counts,
    int64_t min_rows, std::vector<std::pair<float, int32_t>>& scratch) {
    SplitChoice best;
    int n_classes = static_cast<int>(parent_counts.size());
    int64_t n = static_cast<int64_t>(rows.size());
    double parent = gini(parent_counts, n);

    if (x.is_binary(col)) {
        const auto& column = x.binary_column(col);
        std::vector<int64_t> ones(static_cast<size_t>(n_classes), 0);
        int64_t n_ones = 0;
        for (int64_t r : rows) {
            if (column[static_cast<size_t>(r)]) {
                ++ones[static_cast<size_t>(labels[static_cast<size_t>(r)])];
                ++n_ones;
            }
        }
        int64_t n_zeros = n - n_ones;
        if (n_zeros < min_rows || n_ones < min_rows) return best;
        std::vector<int64_t> zeros(static_cast<size_t>(n_classes));
        for (int k = 0; k < n_classes; ++k)
            zeros[static_cast<size_t>(k)] =
                parent_counts[static_cast<size_t>(k)] - ones[static_cast<size_t>(k)];
        double weighted = (static_cast<double>(n_zeros) * gini(zeros, n_zeros) +
                           static_cast<double>(n_ones) * gini(ones, n_ones)) /
                          static_cast<double>(n);
        double decrease = parent - weighted;
        if (decrease > 0.0) {
            best.feature = col;
            best.threshold = 0.5f;
            best.decrease = decrease;
        }
        return best;
    }

    const auto& column = x.numeric_column(col);
    scratch.clear();
    scratch.reserve(static_cast<size_t>(n));
    for (int64_t r : rows)
        scratch.emplace_back(column[static_cast<size_t>(r)], labels[static_cast<size_t>(r)]);
    std::sort(scratch.begin(), scratch.end(),
              [](const auto& a, const auto& b) { return a.first < b.first; });
    if (scratch.front().first == scratch.back().first) return best;

    std::vector<int64_t> left(static_cast<size_t>(n_classes), 0);
    std::vector<int64_t> right = parent_counts;
    for (int64_t i = 0; i + 1 < n; ++i) {
        int32_t lab = scratch[static_cast<size_t>(i)].second;
        ++left[static_cast<size_t>(lab)];
        --right[static_cast<size_t>(lab)];
        float a = scratch[static_cast<size_t>(i)].first;
        float b = scratch[static_cast<size_t>(i + 1)].first;
        if (a == b) continue;
        int64_t n_left = i + 1, n_right = n - n_left;
        if (n_left < min_rows || n_right < min_rows) continue;
        double weighted = (static_cast<double>(n_left) * gini(left, n_left) +
                           static_cast<double>(n_right) * gini(right, n_right)) /
                          static_cast<double>(n);
        double decrease = parent - weighted;
        if (decrease > best.decrease) {
            float mid = static_cast<float>(
                (static_cast<double>(a) + static_cast<double>(b)) / 2.0);
            if (!(mid > a)) mid = b;  // keep the sides separable in float
            best.feature = col;
            best.threshold = mid;
            best.decrease = decrease;
        }
    }
    if (best.decrease <= 0.0) best.feature = -1;
    return best;
}

class TreeBuilder {
  public:
    TreeBuilder(const FeatureMatrix& x, std::span<const int32_t> labels,
                int n_classes, const ForestParams& params, int features_per_split)
        : x_(x),
          labels_(labels),
          n_classes_(n_classes),
          params_(params),
          features_per_split_(features_per_split) {}

    Tree build(uint64_t tree_seed) {
        Rng rng(tree_seed);
        int64_t n = x_.row_count();
        int64_t k = static_cast<int64_t>(params_.row_sample_rate * static_cast<double>(n));
        k = std::clamp<int64_t>(k, 1, n);
        rows_ = rng.sample_without_replacement(n, k);
        std::sort(rows_.begin(), rows_.end());  // canonical row set

        tree_ = Tree{};
        grow(0, static_cast<int64_t>(rows_.size()), 0, rng);
        return std::move(tree_);
    }

  private:
    int32_t make_leaf(const std::vector<int64_t>& counts) {
        Node node;
        node.leaf_offset = static_cast<int64_t>(tree_.leaf_counts.size());
        tree_.leaf_counts.insert(tree_.leaf_counts.end(), counts.begin(), counts.end());
        tree_.nodes.push_back(node);
        return static_cast<int32_t>(tree_.nodes.size() - 1);
    }

    int32_t grow(int64_t begin, int64_t end, int depth, Rng& rng) {
        int64_t n = end - begin;
        std::vector<int64_t> counts(static_cast<size_t>(n_classes_), 0);
        for (int64_t i = begin; i < end; ++i)
            ++counts[static_cast<size_t>(labels_[static_cast<size_t>(rows_[static_cast<size_t>(i)])])];

        bool pure = false;
        for (int64_t c : counts)
            if (c == n) pure = true;
        if (pure || depth >= params_.max_depth || n < 2 * params_.min_rows_per_leaf)
            return make_leaf(counts);

        std::vector<int64_t> cols =
            rng.sample_without_replacement(x_.width(), features_per_split_);
        std::sort(cols.begin(), cols.end());

        std::span<const int64_t> rows(rows_.data() + begin, static_cast<size_t>(n));
        SplitChoice best;
        for (int64_t col : cols) {
            SplitChoice c = best_split_for_feature(x_, static_cast<int>(col), rows,
                                                   labels_, counts,
                                                   params_.min_rows_per_leaf, scratch_);
            if (c.feature >= 0 && c.decrease > best.decrease) best = c;
        }
        if (best.feature < 0 || best.decrease <= 0.0) return make_leaf(counts);

        int32_t feature = best.feature;
        float threshold = best.threshold;
        auto goes_left = [this, feature, threshold](int64_t r) {
            return x_.value(r, feature) < threshold;
        };
        auto* base = rows_.data();
        auto mid_it = std::partition(base + begin, base + end, goes_left);
        int64_t mid = mid_it - base;
        // The split search guarantees both sides are non-empty.

        int32_t node_index = static_cast<int32_t>(tree_.nodes.size());
        tree_.nodes.push_back(Node{});
        int32_t left = grow(begin, mid, depth + 1, rng);
        int32_t right = grow(mid, end, depth + 1, rng);
        Node& node = tree_.nodes[static_cast<size_t>(node_index)];
        node.feature = feature;
        node.threshold = threshold;
        node.left = left;
        node.right = right;
        return node_index;
    }

    const FeatureMatrix& x_;
    std::span<const int32_t> labels_;
    int n_classes_;
    const ForestParams& params_;
    int features_per_split_;
    std::vector<int64_t> rows_;
    std::vector<std::pair<float, int32_t>> scratch_;
    Tree tree_;
};

}  // namespace forest_detail

class Forest {
  public:
    Forest() = default;

    static Forest fit(const FeatureMatrix& x, const std::vector<int32_t>& labels,
                      const ForestParams& params,
                      int n_threads = default_thread_count()) {
        if (x.row_count() == 0) throw std::invalid_argument("empty training set");
        if (static_cast<int64_t>(labels.size()) != x.row_count())
            throw std::invalid_argument("label count does not match row count");
        if (params.n_trees < 1) throw std::invalid_argument("n_trees must be >= 1");
        if (!(params.row_sample_rate > 0.0 && params.row_sample_rate <= 1.0))
            throw std::invalid_argument("row_sample_rate must be in (0, 1]");

        Forest f;
        f.params_ = params;
        f.width_ = x.width();
        int32_t max_label = 0;
        for (int32_t l : labels) {
            if (l < 0) throw std::invalid_argument("negative class label");
            max_label = std::max(max_label, l);
        }
        f.n_classes_ = max_label + 1;
        f.class_totals_.assign(static_cast<size_t>(f.n_classes_), 0);
        for (int32_t l : labels) ++f.class_totals_[static_cast<size_t>(l)];

        int features_per_split = params.features_per_split;
        if (features_per_split <= 0)
            features_per_split = static_cast<int>(
                std::floor(std::sqrt(static_cast<double>(x.width()))));
        features_per_split = std::clamp(features_per_split, 1, x.width());
        f.features_per_split_used_ = features_per_split;

        f.trees_.resize(static_cast<size_t>(params.n_trees));
        parallel_for(params.n_trees, n_threads, [&](int64_t t) {
            forest_detail::TreeBuilder builder(x, labels, f.n_classes_, params,
                                               features_per_split);
            uint64_t tree_seed = splitmix64_mix(params.seed + static_cast<uint64_t>(t));
            f.trees_[static_cast<size_t>(t)] = builder.build(tree_seed);
        });
        return f;
    }

    int width() const { return width_; }
    int n_classes() const { return n_classes_; }
    const ForestParams& params() const { return params_; }
    const std::vector<int64_t>& class_totals() const { return class_totals_; }
    const std::vector<forest_detail::Tree>& trees() const { return trees_; }

    int32_t predict(std::span<const float> row) const {
        if (static_cast<int>(row.size()) != width_)
            throw std::invalid_argument("feature row width mismatch");
        std::vector<int64_t> votes(static_cast<size_t>(n_classes_), 0);
        for (const auto& tree : trees_)
            ++votes[static_cast<size_t>(tree_vote(tree, row))];
        return pick_class(votes);
    }

    std::vector<int32_t> predict_batch(const FeatureMatrix& x,
                                       int n_threads = default_thread_count()) const {
        if (x.width() != width_)
            throw std::invalid_argument("feature row width mismatch");
        std::vector<int32_t> out(static_cast<size_t>(x.row_count()));
        constexpr int64_t kChunk = 16384;
        int64_t chunks = (x.row_count() + kChunk - 1) / kChunk;
        parallel_for(chunks, n_threads, [&](int64_t chunk) {
            std::vector<float> row(static_cast<size_t>(width_));
            std::vector<int64_t> votes(static_cast<size_t>(n_classes_));
            int64_t lo = chunk * kChunk;
            int64_t hi = std::min(lo + kChunk, x.row_count());
            for (int64_t r = lo; r < hi; ++r) {
                for (int c = 0; c < width_; ++c)
                    row[static_cast<size_t>(c)] = x.value(r, c);
                std::fill(votes.begin(), votes.end(), 0);
                for (const auto& tree : trees_)
                    ++votes[static_cast<size_t>(tree_vote(tree, row))];
                out[static_cast<size_t>(r)] = pick_class(votes);
            }
        });
        return out;
    }

    // Versioned text serialization; byte-identical across runs and thread
    // counts for the same inputs and seed.
    std::string serialize() const {
        std::string out;
        out += "rebrowse-forest v1\n";
        char buf[256];
        std::snprintf(buf, sizeof buf, "width %d\nclasses %d\n", width_, n_classes_);
        out += buf;
        out += "class_totals";
        for (int64_t c : class_totals_) {
            out += ' ';
            out += std::to_string(c);
        }
        out += '\n';
        std::snprintf(buf, sizeof buf,
                      "params trees %d depth %d min_rows %lld feats %d rate %a seed %llu\n",
                      params_.n_trees, params_.max_depth,
                      static_cast<long long>(params_.min_rows_per_leaf),
                      features_per_split_used_, params_.row_sample_rate,
                      static_cast<unsigned long long>(params_.seed));
        out += buf;
        for (size_t t = 0; t < trees_.size(); ++t) {
            const auto& tree = trees_[t];
            std::snprintf(buf, sizeof buf, "tree %zu nodes %zu\n", t, tree.nodes.size());
            out += buf;
            for (const auto& node : tree.nodes) {
                if (node.feature >= 0) {
                    std::snprintf(buf, sizeof buf, "s %d %a %d %d\n", node.feature,
                                  static_cast<double>(node.threshold), node.left,
                                  node.right);
                    out += buf;
                } else {
                    out += 'l';
                    for (int k = 0; k < n_classes_; ++k) {
                        out += ' ';
                        out += std::to_string(
                            tree.leaf_counts[static_cast<size_t>(node.leaf_offset + k)]);
                    }
                    out += '\n';
                }
            }
        }
        out += "end\n";
        return out;
    }

    static Forest deserialize(std::istream& in) {
        Forest f;
        std::string line;
        auto next_line = [&](const char* what) -> std::string& {
            if (!std::getline(in, line))
                throw std::runtime_error(std::string("forest file truncated: ") + what);
            return line;
        };
        if (next_line("header") != "rebrowse-forest v1")
            throw std::runtime_error("not a rebrowse-forest v1 file");
        if (std::sscanf(next_line("width").c_str(), "width %d", &f.width_) != 1)
            throw std::runtime_error("bad width line");
        if (std::sscanf(next_line("classes").c_str(), "classes %d", &f.n_classes_) != 1)
            throw std::runtime_error("bad classes line");
        {
            std::istringstream ss(next_line("class_totals"));
            std::string tag;
            ss >> tag;
            if (tag != "class_totals") throw std::runtime_error("bad class_totals line");
            int64_t v;
            while (ss >> v) f.class_totals_.push_back(v);
            if (static_cast<int>(f.class_totals_.size()) != f.n_classes_)
                throw std::runtime_error("class_totals size mismatch");
        }
        {
            long long min_rows = 0;
            unsigned long long seed = 0;
            double rate = 0.0;
            if (std::sscanf(next_line("params").c_str(),
                            "params trees %d depth %d min_rows %lld feats %d rate %la seed %llu",
                            &f.params_.n_trees, &f.params_.max_depth, &min_rows,
                            &f.features_per_split_used_, &rate, &seed) != 6)
                throw std::runtime_error("bad params line");
            f.params_.min_rows_per_leaf = min_rows;
            f.params_.row_sample_rate = rate;
            f.params_.seed = seed;
            f.params_.features_per_split = f.features_per_split_used_;
        }
        f.trees_.resize(static_cast<size_t>(f.params_.n_trees));
        for (int t = 0; t < f.params_.n_trees; ++t) {
            size_t tree_index = 0, n_nodes = 0;
            if (std::sscanf(next_line("tree").c_str(), "tree %zu nodes %zu",
                            &tree_index, &n_nodes) != 2 ||
                tree_index != static_cast<size_t>(t))
                throw std::runtime_error("bad tree header");
            auto& tree = f.trees_[static_cast<size_t>(t)];
            tree.nodes.reserve(n_nodes);
            for (size_t i = 0; i < n_nodes; ++i) {
                std::string& l = next_line("node");
                forest_detail::Node node;
                if (l.size() >= 1 && l[0] == 's') {
                    double thr;
                    if (std::sscanf(l.c_str(), "s %d %la %d %d", &node.feature, &thr,
                                    &node.left, &node.right) != 4)
                        throw std::runtime_error("bad split node line");
                    node.threshold = static_cast<float>(thr);
                } else if (l.size() >= 1 && l[0] == 'l') {
                    node.leaf_offset = static_cast<int64_t>(tree.leaf_counts.size());
                    std::istringstream ss(l.substr(1));
                    int64_t v;
                    int k = 0;
                    while (ss >> v) {
                        tree.leaf_counts.push_back(v);
                        ++k;
                    }
                    if (k != f.n_classes_)
                        throw std::runtime_error("bad leaf counts line");
                } else {
                    throw std::runtime_error("unknown node line");
                }
                tree.nodes.push_back(node);
            }
        }
        if (next_line("end") != "end") throw std::runtime_error("missing end marker");
        return f;
    }

    static Forest deserialize(const std::string& text) {
        std::istringstream in(text);
        return deserialize(in);
    }

  private:
    int32_t tree_vote(const forest_detail::Tree& tree, std::span<const float> row) const {
        const forest_detail::Node* node = &tree.nodes[0];
        while (node->feature >= 0) {
            node = &tree.nodes[static_cast<size_t>(
                row[static_cast<size_t>(node->feature)] < node->threshold ? node->left
                                                                          : node->right)];
        }
        const int64_t* counts = &tree.leaf_counts[static_cast<size_t>(node->leaf_offset)];
        int32_t best = 0;
        for (int k = 1; k < n_classes_; ++k) {
            if (counts[k] > counts[best])
                best = k;
            else if (counts[k] == counts[best] && better_tie(k, best))
                best = k;
        }
        return best;
    }

    // Tie rule: larger total training count wins, then the smaller class index.
    bool better_tie(int32_t challenger, int32_t incumbent) const {
        int64_t tc = class_totals_[static_cast<size_t>(challenger)];
        int64_t ti = class_totals_[static_cast<size_t>(incumbent)];
        if (tc != ti) return tc > ti;
        return challenger < incumbent;
    }

    int32_t pick_class(const std::vector<int64_t>& votes) const {
        int32_t best = 0;
        for (int32_t k = 1; k < n_classes_; ++k) {
            if (votes[static_cast<size_t>(k)] > votes[static_cast<size_t>(best)])
                best = k;
            else if (votes[static_cast<size_t>(k)] == votes[static_cast<size_t>(best)] &&
                     better_tie(k, best))
                best = k;
        }
        return best;
    }

    ForestParams params_;
    int width_ = 0;
    int n_classes_ = 0;
    int features_per_split_used_ = 0;
    std::vector<int64_t> class_totals_;
    std::vector<forest_detail::Tree> trees_;
};

}  // namespace rebrowse
