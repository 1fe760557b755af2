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

// Gini CART trees and the bagged random-forest classifier that every
// explanation describes.

#ifndef EXMOS_MODEL_HPP_
#define EXMOS_MODEL_HPP_

#include <Eigen/Core>

#include <array>
#include <cstdint>
#include <functional>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "exmos/dataset.hpp"
#include "exmos/random.hpp"

namespace exmos {

/// Flattened binary tree. Node 0 is the root; a node with feature < 0 is a
/// leaf. Internal nodes send x[feature] > threshold to the right child.
struct DecisionTree {
  std::vector<int> feature;
  std::vector<double> threshold;
  std::vector<int> left;
  std::vector<int> right;
  // Class index (0 or 1) of the leaf's majority; unused on internal nodes.
  std::vector<int> leaf_class;
  // Training samples reaching each node, per class.
  std::vector<std::array<std::int64_t, 2>> class_counts;

  std::size_t size() const { return feature.size(); }
  bool is_leaf(std::size_t node) const { return feature[node] < 0; }

  /// Index of the leaf reached by the row.
  template <typename Row>
  std::size_t leaf_of(const Row& x) const {
    std::size_t node = 0;
    while (feature[node] >= 0) {
      node = static_cast<std::size_t>(x[feature[node]] > threshold[node] ? right[node]
                                                                         : left[node]);
    }
    return node;
  }

  template <typename Row>
  int predict(const Row& x) const {
    return leaf_class[leaf_of(x)];
  }

  /// Checks shape and child links; throws InvalidModel.
  void validate(std::size_t n_features) const;
};

struct TreeParams {
  std::optional<int> max_depth;
  int min_leaf = 1;
  // Candidate features examined per split; clamped to [1, n_features].
  int features_per_split = 0;
};

/// Grows a Gini CART tree on the rows listed in `samples` (duplicates
/// allowed, as produced by bootstrapping). `classes` holds 0/1 per row of x.
DecisionTree grow_tree(const Eigen::MatrixXd& x, std::span<const int> classes,
                       std::span<const Eigen::Index> samples, const TreeParams& params,
                       Rng& rng);

// ---------------------------------------------------------------------------
// Random forest

struct FeaturesPerSplit {
  enum class Mode { kSqrt, kAll, kFixed } mode = Mode::kSqrt;
  int k = 0;

  int resolve(int n_features) const;
  bool operator==(const FeaturesPerSplit&) const = default;
};

struct ForestParams {
  int n_trees = 100;
  std::optional<int> max_depth;
  int min_leaf = 1;
  FeaturesPerSplit features_per_split;
  std::uint64_t seed = 42;

  void validate() const;
  bool operator==(const ForestParams&) const = default;
};

struct ModelMetrics {
  double train_accuracy = 0;
  double test_accuracy = 0;
  std::int64_t n_train_samples = 0;
  std::int64_t n_features = 0;

  bool operator==(const ModelMetrics&) const = default;
};

using Record = std::map<std::string, double, std::less<>>;

class TrainedModel {
 public:
  TrainedModel(std::vector<DecisionTree> trees, ForestParams params,
               std::vector<std::string> feature_names, std::array<double, 2> labels,
               ModelMetrics metrics = {});

  const std::vector<DecisionTree>& trees() const { return trees_; }
  const ForestParams& params() const { return params_; }
  const std::vector<std::string>& feature_names() const { return feature_names_; }
  /// Class labels in ascending order; class index i maps to labels()[i].
  const std::array<double, 2>& labels() const { return labels_; }
  const ModelMetrics& metrics() const { return metrics_; }

  /// Majority vote over trees for a row given in feature_names() order.
  /// Ties go to the lower label.
  double predict_ordered(std::span<const double> x) const;

  /// Predictions for each row of a feature matrix in feature_names() order.
  Eigen::VectorXd predict_matrix(const Eigen::MatrixXd& x) const;

  /// Extracts this model's features from a table, in model order.
  /// Throws MissingFeature.
  Eigen::MatrixXd feature_matrix(const DataTable& table) const;

 private:
  std::vector<DecisionTree> trees_;
  ForestParams params_;
  std::vector<std::string> feature_names_;
  std::array<double, 2> labels_;
  ModelMetrics metrics_;
};

/// Trains on the canonical (row-id sorted) order of `train`. Tree t draws
/// its bootstrap and split features from a stream seeded by (seed, t).
TrainedModel train_forest(const DataTable& train, const DataTable& test,
                          const ForestParams& params);

double predict(const TrainedModel& model, const Record& row);
Eigen::VectorXd predict(const TrainedModel& model, const DataTable& table);
double accuracy(const TrainedModel& model, const DataTable& table);

/// Signed percent change of test accuracy, rounded half-up to one decimal.
double accuracy_delta(const ModelMetrics& current, const ModelMetrics& previous);

/// Rounds half-up (toward +inf) to the given number of decimals.
double round_half_up(double value, int decimals);

}  // namespace exmos

#endif  // EXMOS_MODEL_HPP_
