// Copyright 2026 The exmos Authors.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     https://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#include "exmos/model.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <utility>

#include "exmos/error.hpp"

namespace exmos {

void DecisionTree::validate(std::size_t n_features) const {
  const std::size_t n = feature.size();
  if (n == 0 || threshold.size() != n || left.size() != n || right.size() != n ||
      leaf_class.size() != n) {
    throw Error(ErrorCode::kInvalidModel, "tree arrays have inconsistent sizes");
  }
  for (std::size_t i = 0; i < n; ++i) {
    if (feature[i] < 0) {
      if (leaf_class[i] != 0 && leaf_class[i] != 1) {
        throw Error(ErrorCode::kInvalidModel, "leaf class must be 0 or 1");
      }
      continue;
    }
    if (static_cast<std::size_t>(feature[i]) >= n_features) {
      throw Error(ErrorCode::kInvalidModel, "split feature out of range");
    }
    // Children always follow their parent in preorder, which rules out cycles.
    for (int child : {left[i], right[i]}) {
      if (child <= static_cast<int>(i) || static_cast<std::size_t>(child) >= n) {
        throw Error(ErrorCode::kInvalidModel, "bad child link");
      }
    }
  }
}

namespace {

struct Candidate {
  int feature = -1;
  double threshold = 0;
  double impurity = 0;
};

// n * gini for a node with the given class counts.
double weighted_gini(double c0, double c1) {
  const double n = c0 + c1;
  return n > 0 ? n - (c0 * c0 + c1 * c1) / n : 0.0;
}

class TreeGrower {
 public:
  TreeGrower(const Eigen::MatrixXd& x, std::span<const int> classes,
             const TreeParams& params, Rng& rng)
      : x_(x), classes_(classes), params_(params), rng_(rng) {}

  DecisionTree grow(std::vector<Eigen::Index> samples) {
    build(std::move(samples), 0);
    return std::move(tree_);
  }

 private:
  int add_node() {
    tree_.feature.push_back(-1);
    tree_.threshold.push_back(0.0);
    tree_.left.push_back(-1);
    tree_.right.push_back(-1);
    tree_.leaf_class.push_back(0);
    tree_.class_counts.push_back({0, 0});
    return static_cast<int>(tree_.feature.size() - 1);
  }

  int build(std::vector<Eigen::Index> samples, int depth) {
    const int node = add_node();
    std::array<std::int64_t, 2> counts{0, 0};
    for (Eigen::Index s : samples) ++counts[static_cast<std::size_t>(classes_[static_cast<std::size_t>(s)])];
    const auto n = static_cast<std::int64_t>(samples.size());
    tree_.class_counts[static_cast<std::size_t>(node)] = counts;
    tree_.leaf_class[static_cast<std::size_t>(node)] = counts[1] > counts[0] ? 1 : 0;

    const bool pure = counts[0] == 0 || counts[1] == 0;
    const bool depth_done = params_.max_depth && depth >= *params_.max_depth;
    if (pure || depth_done || n < 2 * static_cast<std::int64_t>(params_.min_leaf)) {
      return node;
    }
    const Candidate best = best_split(samples, counts);
    if (best.feature < 0) return node;

    std::vector<Eigen::Index> left, right;
    for (Eigen::Index s : samples) {
      (x_(s, best.feature) > best.threshold ? right : left).push_back(s);
    }
    samples.clear();
    samples.shrink_to_fit();
    tree_.feature[static_cast<std::size_t>(node)] = best.feature;
    tree_.threshold[static_cast<std::size_t>(node)] = best.threshold;
    const int l = build(std::move(left), depth + 1);
    tree_.left[static_cast<std::size_t>(node)] = l;
    const int r = build(std::move(right), depth + 1);
    tree_.right[static_cast<std::size_t>(node)] = r;
    return node;
  }

  Candidate best_split(const std::vector<Eigen::Index>& samples,
                       const std::array<std::int64_t, 2>& counts) {
    const auto n_features = static_cast<int>(x_.cols());
    const int budget =
        std::clamp(params_.features_per_split <= 0 ? n_features : params_.features_per_split,
                   1, n_features);
    std::vector<int> order(static_cast<std::size_t>(n_features));
    std::iota(order.begin(), order.end(), 0);
    rng_.shuffle(std::span(order));

    Candidate best;
    best.impurity = weighted_gini(static_cast<double>(counts[0]),
                                  static_cast<double>(counts[1]));
    bool found = false;
    int visited = 0;
    const auto min_leaf = static_cast<std::size_t>(params_.min_leaf);
    std::vector<std::pair<double, int>> column(samples.size());
    for (int f : order) {
      if (visited >= budget) break;
      for (std::size_t i = 0; i < samples.size(); ++i) {
        column[i] = {x_(samples[i], f), classes_[static_cast<std::size_t>(samples[i])]};
      }
      std::sort(column.begin(), column.end());
      if (column.front().first == column.back().first) continue;  // constant here
      ++visited;

      double l0 = 0, l1 = 0;
      const double t0 = static_cast<double>(counts[0]);
      const double t1 = static_cast<double>(counts[1]);
      for (std::size_t k = 0; k + 1 < column.size(); ++k) {
        (column[k].second == 0 ? l0 : l1) += 1;
        if (column[k].first == column[k + 1].first) continue;
        const std::size_t n_left = k + 1;
        if (n_left < min_leaf || column.size() - n_left < min_leaf) continue;
        const double impurity = weighted_gini(l0, l1) + weighted_gini(t0 - l0, t1 - l1);
        if (!found || impurity < best.impurity) {
          found = true;
          best.feature = f;
          best.impurity = impurity;
          const double a = column[k].first;
          const double b = column[k + 1].first;
          double mid = a + (b - a) / 2.0;
          if (!(mid >= a && mid < b)) mid = a;
          best.threshold = mid;
        }
      }
    }
    if (!found) best.feature = -1;
    return best;
  }

  const Eigen::MatrixXd& x_;
  std::span<const int> classes_;
  const TreeParams& params_;
  Rng& rng_;
  DecisionTree tree_;
};

}  // namespace

DecisionTree grow_tree(const Eigen::MatrixXd& x, std::span<const int> classes,
                       std::span<const Eigen::Index> samples, const TreeParams& params,
                       Rng& rng) {
  if (samples.empty()) throw Error(ErrorCode::kEmptyTable, "no samples to grow a tree on");
  TreeGrower grower(x, classes, params, rng);
  return grower.grow(std::vector<Eigen::Index>(samples.begin(), samples.end()));
}

// ---------------------------------------------------------------------------
// Forest

int FeaturesPerSplit::resolve(int n_features) const {
  switch (mode) {
    case Mode::kSqrt:
      return std::max(1, static_cast<int>(std::floor(std::sqrt(static_cast<double>(n_features)))));
    case Mode::kAll:
      return n_features;
    case Mode::kFixed:
      return std::clamp(k, 1, std::max(1, n_features));
  }
  return n_features;
}

void ForestParams::validate() const {
  if (n_trees < 1) throw Error(ErrorCode::kInvalidArgument, "n_trees must be >= 1");
  if (min_leaf < 1) throw Error(ErrorCode::kInvalidArgument, "min_leaf must be >= 1");
  if (max_depth && *max_depth < 0) {
    throw Error(ErrorCode::kInvalidArgument, "max_depth must be >= 0");
  }
  if (features_per_split.mode == FeaturesPerSplit::Mode::kFixed && features_per_split.k < 1) {
    throw Error(ErrorCode::kInvalidArgument, "fixed features_per_split must be >= 1");
  }
}

TrainedModel::TrainedModel(std::vector<DecisionTree> trees, ForestParams params,
                           std::vector<std::string> feature_names,
                           std::array<double, 2> labels, ModelMetrics metrics)
    : trees_(std::move(trees)),
      params_(std::move(params)),
      feature_names_(std::move(feature_names)),
      labels_(labels),
      metrics_(metrics) {
  if (trees_.empty()) throw Error(ErrorCode::kInvalidModel, "forest has no trees");
  if (feature_names_.empty()) throw Error(ErrorCode::kInvalidModel, "model has no features");
  for (const auto& t : trees_) t.validate(feature_names_.size());
}

double TrainedModel::predict_ordered(std::span<const double> x) const {
  int votes = 0;
  for (const auto& t : trees_) votes += t.predict(x);
  const int total = static_cast<int>(trees_.size());
  return 2 * votes > total ? labels_[1] : labels_[0];
}

Eigen::VectorXd TrainedModel::predict_matrix(const Eigen::MatrixXd& x) const {
  Eigen::VectorXd out(x.rows());
  std::vector<double> row(static_cast<std::size_t>(x.cols()));
  for (Eigen::Index r = 0; r < x.rows(); ++r) {
    for (Eigen::Index c = 0; c < x.cols(); ++c) row[static_cast<std::size_t>(c)] = x(r, c);
    out(r) = predict_ordered(row);
  }
  return out;
}

Eigen::MatrixXd TrainedModel::feature_matrix(const DataTable& table) const {
  Eigen::MatrixXd x(table.rows(), static_cast<Eigen::Index>(feature_names_.size()));
  for (std::size_t f = 0; f < feature_names_.size(); ++f) {
    const auto idx = table.find(feature_names_[f]);
    if (!idx) throw Error(ErrorCode::kMissingFeature, "missing feature", feature_names_[f]);
    x.col(static_cast<Eigen::Index>(f)) = table.cells().col(static_cast<Eigen::Index>(*idx));
  }
  return x;
}

TrainedModel train_forest(const DataTable& train, const DataTable& test,
                          const ForestParams& params) {
  params.validate();
  if (train.schema() != test.schema()) {
    throw Error(ErrorCode::kSchemaMismatch, "train and test schemas differ");
  }
  const DataTable canon = train.canonical();
  const ClassCounts classes = class_counts(canon);
  if (!classes.binary()) {
    throw Error(ErrorCode::kDegenerateClass, "training data needs both classes");
  }
  const auto predictors = canon.predictor_indices();
  if (predictors.empty()) throw Error(ErrorCode::kTooFewFeatures, "no predictors to train on");

  std::vector<std::string> names;
  Eigen::MatrixXd x(canon.rows(), static_cast<Eigen::Index>(predictors.size()));
  for (std::size_t f = 0; f < predictors.size(); ++f) {
    names.push_back(canon.schema()[predictors[f]].name);
    x.col(static_cast<Eigen::Index>(f)) = canon.cells().col(static_cast<Eigen::Index>(predictors[f]));
  }
  std::vector<int> y(static_cast<std::size_t>(canon.rows()));
  for (Eigen::Index r = 0; r < canon.rows(); ++r) {
    y[static_cast<std::size_t>(r)] = canon.target()(r) == classes.labels[1] ? 1 : 0;
  }

  TreeParams tree_params;
  tree_params.max_depth = params.max_depth;
  tree_params.min_leaf = params.min_leaf;
  tree_params.features_per_split =
      params.features_per_split.resolve(static_cast<int>(predictors.size()));

  const auto n = static_cast<std::size_t>(canon.rows());
  std::vector<DecisionTree> trees;
  trees.reserve(static_cast<std::size_t>(params.n_trees));
  std::vector<Eigen::Index> bootstrap(n);
  for (int t = 0; t < params.n_trees; ++t) {
    Rng rng(derive_seed(params.seed, {static_cast<std::uint64_t>(t)}));
    for (auto& s : bootstrap) s = static_cast<Eigen::Index>(rng.index(n));
    trees.push_back(grow_tree(x, y, bootstrap, tree_params, rng));
  }

  TrainedModel model(std::move(trees), params, std::move(names),
                     {classes.labels[0], classes.labels[1]});
  ModelMetrics metrics;
  metrics.train_accuracy = accuracy(model, canon);
  metrics.test_accuracy = accuracy(model, test);
  metrics.n_train_samples = canon.rows();
  metrics.n_features = static_cast<std::int64_t>(model.feature_names().size());
  return TrainedModel(model.trees(), params, model.feature_names(), model.labels(), metrics);
}

double predict(const TrainedModel& model, const Record& row) {
  std::vector<double> x;
  x.reserve(model.feature_names().size());
  for (const auto& name : model.feature_names()) {
    const auto it = row.find(name);
    if (it == row.end()) throw Error(ErrorCode::kMissingFeature, "missing feature", name);
    x.push_back(it->second);
  }
  return model.predict_ordered(x);
}

Eigen::VectorXd predict(const TrainedModel& model, const DataTable& table) {
  return model.predict_matrix(model.feature_matrix(table));
}

double accuracy(const TrainedModel& model, const DataTable& table) {
  const Eigen::VectorXd p = predict(model, table);
  return static_cast<double>((p.array() == table.target().array()).count()) /
         static_cast<double>(table.rows());
}

double round_half_up(double value, int decimals) {
  const double scale = std::pow(10.0, decimals);
  // The epsilon absorbs representation error such as 4.999999999999999.
  return std::floor(value * scale + 0.5 + 1e-9) / scale;
}

double accuracy_delta(const ModelMetrics& current, const ModelMetrics& previous) {
  if (!(previous.test_accuracy > 0.0)) {
    throw Error(ErrorCode::kZeroBaseline, "previous test accuracy is zero");
  }
  const double pct =
      100.0 * (current.test_accuracy - previous.test_accuracy) / previous.test_accuracy;
  const double rounded = round_half_up(pct, 1);
  return rounded == 0.0 ? 0.0 : rounded;
}

}  // namespace exmos
