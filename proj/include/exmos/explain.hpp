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

// Global explanations: data-centric tiles (key insights, density, quality)
// and model-centric tiles (permutation importance, decision rules), plus
// the variant-filtered bundle the dashboard renders.

#ifndef EXMOS_EXPLAIN_HPP_
#define EXMOS_EXPLAIN_HPP_

#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "exmos/dataset.hpp"
#include "exmos/model.hpp"
#include "exmos/quality.hpp"

namespace exmos {

/// Dashboard variants: data-centric, model-centric, hybrid.
enum class Variant { kDCE, kMCE, kHYB };

std::string_view to_string(Variant variant);
/// Throws InvalidVariant.
Variant variant_from_string(std::string_view s);

enum class Tile { kKeyInsights, kDensity, kQuality, kImportances, kRules };

/// Short codes: KI, DDD, DQ, IRF, TDR.
std::string_view tile_code(Tile tile);
std::vector<Tile> tiles_for(Variant variant);

// ---------------------------------------------------------------------------
// Key insights

enum class InsightMetric { kZeroFraction, kExtremeFraction, kSkewFlag, kImbalanceNote };

std::string_view to_string(InsightMetric metric);

struct KeyInsight {
  std::string feature;
  InsightMetric metric = InsightMetric::kZeroFraction;
  double value_percent = 0;
  std::string text;
  // Ranking key; equal to value_percent.
  double severity = 0;

  bool operator==(const KeyInsight&) const = default;
};

struct InsightList {
  std::vector<KeyInsight> top;
  std::vector<KeyInsight> rest;
};

/// One candidate per (feature, metric) with nonzero severity, ranked by
/// severity (descending), then feature name, then metric.
///   zero_fraction    zero_invalid predictors: share of literal zeros
///   extreme_fraction numeric predictors: share outside the Tukey fences
///   skew_flag        predictors the quality report flags as skewed:
///                    share of values on the tail side of the mean
///   imbalance_note   the target, when imbalanced: the imbalance impact
InsightList key_insights(const DataTable& table, const QualityReport& quality,
                         std::size_t top_k = 4, const QualityConfig& config = {});

// ---------------------------------------------------------------------------
// Density

struct DensityProfile {
  std::string feature;
  std::vector<double> bin_edges;
  std::vector<std::int64_t> counts;
  double mean = 0;
  // Bin lies wholly outside the Tukey fences.
  std::vector<bool> outlier_bins;
};

/// Equal-width bins over [min, max]; bin i holds [edge_i, edge_i+1) and the
/// last bin is closed. A constant column gets one bin [v - 0.5, v + 0.5].
DensityProfile density_distribution(const DataTable& table, std::string_view feature,
                                    std::size_t n_bins = 10, double iqr_multiplier = 1.5);

/// Profiles of every numeric predictor, in schema order.
std::vector<DensityProfile> density_profiles(const DataTable& table, std::size_t n_bins = 10);

// ---------------------------------------------------------------------------
// Importance

struct ImportanceScore {
  std::string feature;
  double percent = 0;
};

struct FeatureImportance {
  // Sorted by percent descending, then name.
  std::vector<ImportanceScore> scores;
  // No permutation lowered accuracy; every percent is zero.
  bool uninformative = false;
  double baseline_accuracy = 0;
};

/// Permutation importance on held-out data: the mean accuracy drop over
/// `repeats` seeded shuffles of one column, clipped at zero and normalized
/// to percentages.
FeatureImportance feature_importance(const TrainedModel& model, const DataTable& test,
                                     int repeats = 10, std::uint64_t seed = 42);

// ---------------------------------------------------------------------------
// Decision rules

struct Condition {
  enum class Op { kGreater, kLessEqual };

  std::string feature;
  Op op = Op::kGreater;
  double threshold = 0;

  bool holds(double value) const { return op == Op::kGreater ? value > threshold : value <= threshold; }
  auto operator<=>(const Condition&) const = default;
};

std::string_view to_string(Condition::Op op);

struct DecisionRule {
  // Sorted by (feature, op, threshold); at most one bound per feature and op.
  std::vector<Condition> conditions;
  double predicted_class = 0;
  double precision = 0;
  double recall = 0;
  std::int64_t support = 0;
};

std::string to_string(const DecisionRule& rule);

struct RuleParams {
  int n_estimators = 30;
  int max_depth = 3;
  double min_precision = 0.6;
  double min_recall = 0.05;
  std::size_t top_k_per_class = 3;
  std::uint64_t seed = 42;
};

/// Rules harvested from bagged shallow trees: every root-to-leaf path is a
/// candidate for the leaf's class, scored on the full table, filtered by
/// precision and recall, deduplicated, and ranked per class by F1, support,
/// then condition order.
std::vector<DecisionRule> top_decision_rules(const DataTable& train, const RuleParams& params = {});

// ---------------------------------------------------------------------------
// Bundle

struct ExplanationParts {
  std::optional<InsightList> key_insights;
  std::optional<std::vector<DensityProfile>> density;
  std::optional<QualityReport> quality;
  std::optional<FeatureImportance> importances;
  std::optional<std::vector<DecisionRule>> rules;
};

struct BundleHeader {
  ModelMetrics metrics;
  // Percent change of test accuracy from the previous version.
  std::optional<double> accuracy_delta;
};

struct ExplanationBundle {
  Variant variant = Variant::kHYB;
  BundleHeader header;
  // Only the variant's tiles are set.
  ExplanationParts parts;
  std::map<Tile, std::string> help_texts;
  std::vector<std::string> notes;

  bool has(Tile tile) const;
};

std::string_view help_text(Tile tile);

/// Keeps exactly the variant's tiles; throws MissingPart when one is absent.
ExplanationBundle build_bundle(Variant variant, const ModelMetrics& metrics,
                               const std::optional<ModelMetrics>& previous,
                               const ExplanationParts& parts);

}  // namespace exmos

#endif  // EXMOS_EXPLAIN_HPP_
