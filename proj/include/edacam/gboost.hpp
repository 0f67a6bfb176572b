#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <numeric>
#include <vector>

#include <edacam/errors.hpp>
#include <edacam/rng.hpp>

namespace edacam {

struct GBConfig {
  int rounds = 100;
  int depth = 3;
  double learning_rate = 0.1;
  double subsample = 1.0;
  std::uint64_t seed = 0;

  void validate() const {
    if (rounds < 1) throw ConfigError("gboost: rounds must be >= 1");
    if (depth < 1 || depth > 8) throw ConfigError("gboost: depth must be in [1, 8]");
    if (!(learning_rate > 0.0)) throw ConfigError("gboost: learning_rate must be > 0");
    if (!(subsample > 0.0) || subsample > 1.0)
      throw ConfigError("gboost: subsample must be in (0, 1]");
  }
};

// binary logistic gradient boosting over shallow regression trees, Newton
// leaf values, greedy variance-reduction splits
class GradientBoostedClassifier {
 public:
  explicit GradientBoostedClassifier(GBConfig cfg = {}) : cfg_(cfg) {
    cfg_.validate();
  }

  void fit(const std::vector<std::vector<double>>& X, const std::vector<int>& y) {
    if (X.empty() || X.size() != y.size())
      throw InputError("gboost: feature/label size mismatch");
    const std::size_t n = X.size();
    const std::size_t d = X[0].size();
    if (d == 0) throw InputError("gboost: empty feature vectors");
    for (const auto& row : X) {
      if (row.size() != d) throw InputError("gboost: ragged feature matrix");
      for (double v : row)
        if (!std::isfinite(v))
          throw InputError("gboost: non-finite feature; impute before fitting");
    }
    std::size_t pos = 0;
    for (int v : y) {
      if (v != 0 && v != 1) throw InputError("gboost: labels must be 0/1");
      pos += static_cast<std::size_t>(v);
    }
    if (pos == 0 || pos == n)
      throw TrainingError("gboost: training data contains a single class");

    n_features_ = d;
    base_ = std::log(static_cast<double>(pos) / static_cast<double>(n - pos));
    trees_.clear();

    std::vector<double> F(n, base_), r(n), h(n);
    std::vector<std::size_t> all(n);
    std::iota(all.begin(), all.end(), 0);
    Rng rng(Rng::mix(cfg_.seed, 0x6b00));

    for (int round = 0; round < cfg_.rounds; ++round) {
      for (std::size_t i = 0; i < n; ++i) {
        const double p = sigmoid(F[i]);
        r[i] = static_cast<double>(y[i]) - p;
        h[i] = std::max(p * (1.0 - p), 1e-12);
      }
      std::vector<std::size_t> sample = all;
      if (cfg_.subsample < 1.0) {
        for (std::size_t i = sample.size(); i > 1; --i)
          std::swap(sample[i - 1], sample[rng.next() % i]);
        sample.resize(std::max<std::size_t>(
            1, static_cast<std::size_t>(cfg_.subsample * static_cast<double>(n))));
      }
      Tree tree;
      build_node(tree, X, r, h, sample, 0);
      for (std::size_t i = 0; i < n; ++i)
        F[i] += cfg_.learning_rate * tree.predict(X[i]);
      trees_.push_back(std::move(tree));
    }
  }

  double predict_proba(const std::vector<double>& x) const {
    if (trees_.empty()) throw InputError("gboost: predict before fit");
    if (x.size() != n_features_)
      throw InputError("gboost: feature dimension mismatch");
    for (double v : x)
      if (!std::isfinite(v)) throw InputError("gboost: non-finite feature");
    double F = base_;
    for (const auto& t : trees_) F += cfg_.learning_rate * t.predict(x);
    return sigmoid(F);
  }

  int predict(const std::vector<double>& x) const {
    return predict_proba(x) >= 0.5 ? 1 : 0;
  }

  const GBConfig& config() const { return cfg_; }

 private:
  struct Node {
    int feature = -1;  // -1 marks a leaf
    double threshold = 0.0;
    double value = 0.0;
    int left = -1, right = -1;
  };
  struct Tree {
    std::vector<Node> nodes;
    double predict(const std::vector<double>& x) const {
      int i = 0;
      while (nodes[static_cast<std::size_t>(i)].feature >= 0) {
        const Node& nd = nodes[static_cast<std::size_t>(i)];
        i = x[static_cast<std::size_t>(nd.feature)] <= nd.threshold ? nd.left
                                                                    : nd.right;
      }
      return nodes[static_cast<std::size_t>(i)].value;
    }
  };

  static double sigmoid(double z) { return 1.0 / (1.0 + std::exp(-z)); }

  static double leaf_value(const std::vector<double>& r, const std::vector<double>& h,
                           const std::vector<std::size_t>& idx) {
    double num = 0.0, den = 0.0;
    for (std::size_t i : idx) {
      num += r[i];
      den += h[i];
    }
    return std::clamp(num / std::max(den, 1e-12), -4.0, 4.0);
  }

  int build_node(Tree& tree, const std::vector<std::vector<double>>& X,
                 const std::vector<double>& r, const std::vector<double>& h,
                 const std::vector<std::size_t>& idx, int depth) {
    const int self = static_cast<int>(tree.nodes.size());
    tree.nodes.emplace_back();
    if (depth >= cfg_.depth || idx.size() < 2) {
      tree.nodes[static_cast<std::size_t>(self)].value = leaf_value(r, h, idx);
      return self;
    }

    // greedy best split by residual sum-of-squares reduction
    double base_sum = 0.0;
    for (std::size_t i : idx) base_sum += r[i];
    const double base_sse = -base_sum * base_sum / static_cast<double>(idx.size());
    double best_gain = 1e-12;
    int best_f = -1;
    double best_thr = 0.0;

    std::vector<std::size_t> order(idx);
    for (std::size_t f = 0; f < X[0].size(); ++f) {
      std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
        return X[a][f] < X[b][f];
      });
      double left_sum = 0.0;
      for (std::size_t k = 0; k + 1 < order.size(); ++k) {
        left_sum += r[order[k]];
        const double xa = X[order[k]][f], xb = X[order[k + 1]][f];
        if (xa == xb) continue;
        const double nl = static_cast<double>(k + 1);
        const double nr = static_cast<double>(order.size() - k - 1);
        const double right_sum = base_sum - left_sum;
        const double sse =
            -left_sum * left_sum / nl - right_sum * right_sum / nr;
        const double gain = base_sse - sse;
        if (gain > best_gain) {
          best_gain = gain;
          best_f = static_cast<int>(f);
          best_thr = 0.5 * (xa + xb);
        }
      }
    }

    if (best_f < 0) {
      tree.nodes[static_cast<std::size_t>(self)].value = leaf_value(r, h, idx);
      return self;
    }

    std::vector<std::size_t> li, ri;
    for (std::size_t i : idx)
      (X[i][static_cast<std::size_t>(best_f)] <= best_thr ? li : ri).push_back(i);
    tree.nodes[static_cast<std::size_t>(self)].feature = best_f;
    tree.nodes[static_cast<std::size_t>(self)].threshold = best_thr;
    const int l = build_node(tree, X, r, h, li, depth + 1);
    const int rn = build_node(tree, X, r, h, ri, depth + 1);
    tree.nodes[static_cast<std::size_t>(self)].left = l;
    tree.nodes[static_cast<std::size_t>(self)].right = rn;
    return self;
  }

  GBConfig cfg_;
  std::size_t n_features_ = 0;
  double base_ = 0.0;
  std::vector<Tree> trees_;
};

}  // namespace edacam
