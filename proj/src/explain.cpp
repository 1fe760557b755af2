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

#include "exmos/explain.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <set>
#include <tuple>

#include "exmos/error.hpp"
#include "exmos/random.hpp"
#include "exmos/stats.hpp"
#include "text_util.hpp"

namespace exmos {

using detail::fixed;

std::string_view to_string(Variant variant) {
  switch (variant) {
    case Variant::kDCE: return "DCE";
    case Variant::kMCE: return "MCE";
    case Variant::kHYB: return "HYB";
  }
  return "HYB";
}

Variant variant_from_string(std::string_view s) {
  if (s == "DCE" || s == "dce") return Variant::kDCE;
  if (s == "MCE" || s == "mce") return Variant::kMCE;
  if (s == "HYB" || s == "hyb") return Variant::kHYB;
  throw Error(ErrorCode::kInvalidVariant, "variant must be DCE, MCE or HYB", std::string(s));
}

std::string_view tile_code(Tile tile) {
  switch (tile) {
    case Tile::kKeyInsights: return "KI";
    case Tile::kDensity: return "DDD";
    case Tile::kQuality: return "DQ";
    case Tile::kImportances: return "IRF";
    case Tile::kRules: return "TDR";
  }
  return "KI";
}

std::vector<Tile> tiles_for(Variant variant) {
  switch (variant) {
    case Variant::kDCE: return {Tile::kKeyInsights, Tile::kDensity, Tile::kQuality};
    case Variant::kMCE: return {Tile::kRules, Tile::kImportances};
    case Variant::kHYB:
      return {Tile::kKeyInsights, Tile::kDensity, Tile::kQuality, Tile::kRules, Tile::kImportances};
  }
  return {};
}

std::string_view to_string(InsightMetric metric) {
  switch (metric) {
    case InsightMetric::kZeroFraction: return "zero_fraction";
    case InsightMetric::kExtremeFraction: return "extreme_fraction";
    case InsightMetric::kSkewFlag: return "skew_flag";
    case InsightMetric::kImbalanceNote: return "imbalance_note";
  }
  return "zero_fraction";
}

namespace {

// "48.7", "100" (a trailing ".0" is dropped).
std::string percent_text(double p) {
  std::string s = fixed(p, 1);
  if (s.size() > 2 && s.compare(s.size() - 2, 2, ".0") == 0) s.resize(s.size() - 2);
  return s;
}

double share(Eigen::Index part, Eigen::Index whole) {
  return whole == 0 ? 0.0 : 100.0 * static_cast<double>(part) / static_cast<double>(whole);
}

}  // namespace

// ---------------------------------------------------------------------------
// Key insights

InsightList key_insights(const DataTable& table, const QualityReport& quality, std::size_t top_k,
                         const QualityConfig& config) {
  std::vector<KeyInsight> all;
  auto add = [&](std::string feature, InsightMetric metric, double pct, std::string text) {
    if (!(pct > 0.0)) return;
    all.push_back({std::move(feature), metric, pct, std::move(text), pct});
  };
  const Eigen::Index n = table.rows();
  const IssueReport& skew = quality.issue(IssueKind::kSkewness);
  const std::set<std::string> skewed(skew.affected_features.begin(), skew.affected_features.end());

  for (std::size_t c : table.numeric_predictor_indices()) {
    const auto& meta = table.schema()[c];
    const auto col = table.cells().col(static_cast<Eigen::Index>(c));
    if (meta.zero_invalid) {
      const double pct = share((col.array() == 0.0).count(), n);
      add(meta.name, InsightMetric::kZeroFraction, pct,
          meta.name + ": " + percent_text(pct) + "% zero values, which are not valid measurements.");
    }
    if (n >= 4) {
      const auto fences = column_fences(table, c, config.iqr_multiplier);
      Eigen::Index extreme = 0;
      for (Eigen::Index r = 0; r < n; ++r) extreme += fences.outside(col(r)) ? 1 : 0;
      const double pct = share(extreme, n);
      add(meta.name, InsightMetric::kExtremeFraction, pct,
          meta.name + ": " + percent_text(pct) + "% extreme values outside [" +
              fixed(fences.lower, 2) + ", " + fixed(fences.upper, 2) + "].");
    }
    if (skewed.count(meta.name)) {
      const double mean = col.mean();
      const auto g1 = stats::skewness(col).value_or(0.0);
      const Eigen::Index tail = g1 >= 0 ? (col.array() > mean).count() : (col.array() < mean).count();
      const double pct = share(tail, n);
      add(meta.name, InsightMetric::kSkewFlag, pct,
          meta.name + ": skewed distribution; " + percent_text(pct) + "% of values lie " +
              (g1 >= 0 ? "above" : "below") + " the mean of " + fixed(mean, 2) + ".");
    }
  }
  const IssueReport& imbalance = quality.issue(IssueKind::kClassImbalance);
  if (imbalance.subscore < 100.0) {
    const std::string& target = table.target_meta().name;
    add(target, InsightMetric::kImbalanceNote, imbalance.impact,
        target + ": the minority class is " + percent_text(imbalance.impact) +
            "% smaller than the majority class.");
  }

  std::sort(all.begin(), all.end(), [](const KeyInsight& a, const KeyInsight& b) {
    return std::make_tuple(-a.severity, std::string_view(a.feature), a.metric) <
           std::make_tuple(-b.severity, std::string_view(b.feature), b.metric);
  });
  InsightList out;
  const std::size_t k = std::min(top_k, all.size());
  out.top.assign(all.begin(), all.begin() + static_cast<std::ptrdiff_t>(k));
  out.rest.assign(all.begin() + static_cast<std::ptrdiff_t>(k), all.end());
  return out;
}

// ---------------------------------------------------------------------------
// Density

DensityProfile density_distribution(const DataTable& table, std::string_view feature,
                                    std::size_t n_bins, double iqr_multiplier) {
  const std::size_t c = table.index_of(feature);
  if (table.schema()[c].kind != FeatureKind::kNumeric) {
    throw Error(ErrorCode::kNotNumeric, "density needs a numeric feature", std::string(feature));
  }
  if (n_bins == 0) throw Error(ErrorCode::kInvalidArgument, "n_bins must be >= 1");
  const auto col = table.cells().col(static_cast<Eigen::Index>(c));
  DensityProfile out;
  out.feature = std::string(feature);
  out.mean = col.mean();
  const double lo = col.minCoeff();
  const double hi = col.maxCoeff();

  bool degenerate = lo == hi;
  if (!degenerate) {
    const double width = (hi - lo) / static_cast<double>(n_bins);
    out.bin_edges.push_back(lo);
    for (std::size_t i = 1; i < n_bins; ++i) out.bin_edges.push_back(lo + width * static_cast<double>(i));
    out.bin_edges.push_back(hi);
    for (std::size_t i = 1; i < out.bin_edges.size(); ++i) {
      degenerate = degenerate || !(out.bin_edges[i] > out.bin_edges[i - 1]);
    }
  }
  if (degenerate) out.bin_edges = {lo - 0.5, hi + 0.5};

  const std::size_t bins = out.bin_edges.size() - 1;
  out.counts.assign(bins, 0);
  for (Eigen::Index r = 0; r < col.size(); ++r) {
    const auto it = std::upper_bound(out.bin_edges.begin(), out.bin_edges.end(), col(r));
    auto bin = static_cast<std::size_t>(it - out.bin_edges.begin());
    bin = std::clamp<std::size_t>(bin, 1, bins) - 1;
    ++out.counts[bin];
  }
  out.outlier_bins.assign(bins, false);
  if (table.rows() >= 4) {
    const auto fences = column_fences(table, c, iqr_multiplier);
    for (std::size_t b = 0; b < bins; ++b) {
      out.outlier_bins[b] = out.bin_edges[b + 1] < fences.lower || out.bin_edges[b] > fences.upper;
    }
  }
  return out;
}

std::vector<DensityProfile> density_profiles(const DataTable& table, std::size_t n_bins) {
  std::vector<DensityProfile> out;
  for (std::size_t c : table.numeric_predictor_indices()) {
    out.push_back(density_distribution(table, table.schema()[c].name, n_bins));
  }
  return out;
}

// ---------------------------------------------------------------------------
// Importance

FeatureImportance feature_importance(const TrainedModel& model, const DataTable& test, int repeats,
                                     std::uint64_t seed) {
  if (repeats < 1) throw Error(ErrorCode::kInvalidArgument, "repeats must be >= 1");
  const Eigen::MatrixXd x = model.feature_matrix(test);
  const Eigen::VectorXd y = test.target();
  auto score = [&](const Eigen::MatrixXd& m) {
    return static_cast<double>((model.predict_matrix(m).array() == y.array()).count()) /
           static_cast<double>(y.size());
  };
  FeatureImportance out;
  out.baseline_accuracy = score(x);

  const auto& names = model.feature_names();
  std::vector<double> raw(names.size(), 0.0);
  std::vector<Eigen::Index> perm(static_cast<std::size_t>(x.rows()));
  Eigen::MatrixXd shuffled = x;
  for (std::size_t f = 0; f < names.size(); ++f) {
    const auto col = static_cast<Eigen::Index>(f);
    double drop = 0;
    for (int r = 0; r < repeats; ++r) {
      std::iota(perm.begin(), perm.end(), Eigen::Index{0});
      Rng rng(derive_seed(seed, {f, static_cast<std::uint64_t>(r)}));
      rng.shuffle(std::span(perm));
      for (Eigen::Index i = 0; i < x.rows(); ++i) shuffled(i, col) = x(perm[static_cast<std::size_t>(i)], col);
      drop += out.baseline_accuracy - score(shuffled);
    }
    shuffled.col(col) = x.col(col);
    raw[f] = std::max(0.0, drop / repeats);
  }

  const double total = std::accumulate(raw.begin(), raw.end(), 0.0);
  out.uninformative = !(total > 0.0);
  for (std::size_t f = 0; f < names.size(); ++f) {
    out.scores.push_back({names[f], out.uninformative ? 0.0 : 100.0 * raw[f] / total});
  }
  std::sort(out.scores.begin(), out.scores.end(), [](const auto& a, const auto& b) {
    return a.percent != b.percent ? a.percent > b.percent : a.feature < b.feature;
  });
  return out;
}

// ---------------------------------------------------------------------------
// Rules

std::string_view to_string(Condition::Op op) { return op == Condition::Op::kGreater ? ">" : "<="; }

std::string to_string(const DecisionRule& rule) {
  std::string out;
  for (const auto& c : rule.conditions) {
    if (!out.empty()) out += " AND ";
    out += c.feature + " " + std::string(to_string(c.op)) + " " + fixed(c.threshold, 3);
  }
  return "IF " + out + " THEN " + fixed(rule.predicted_class, 0);
}

namespace {

// Tightest bound per (feature, op), sorted.
std::vector<Condition> simplify(std::vector<Condition> path) {
  std::sort(path.begin(), path.end());
  std::vector<Condition> out;
  for (const auto& c : path) {
    if (!out.empty() && out.back().feature == c.feature && out.back().op == c.op) {
      // Sorted ascending: for '>' the later (larger) threshold is tighter;
      // for '<=' the earlier (smaller) one is.
      if (c.op == Condition::Op::kGreater) out.back() = c;
      continue;
    }
    out.push_back(c);
  }
  return out;
}

void collect_paths(const DecisionTree& tree, std::size_t node, const std::vector<std::string>& names,
                   std::vector<Condition>& path, std::vector<std::pair<std::vector<Condition>, int>>& out) {
  if (tree.is_leaf(node)) {
    if (!path.empty()) out.emplace_back(simplify(path), tree.leaf_class[node]);
    return;
  }
  const auto& feature = names[static_cast<std::size_t>(tree.feature[node])];
  path.push_back({feature, Condition::Op::kLessEqual, tree.threshold[node]});
  collect_paths(tree, static_cast<std::size_t>(tree.left[node]), names, path, out);
  path.back().op = Condition::Op::kGreater;
  collect_paths(tree, static_cast<std::size_t>(tree.right[node]), names, path, out);
  path.pop_back();
}

double f1(const DecisionRule& r) {
  return r.precision + r.recall > 0 ? 2 * r.precision * r.recall / (r.precision + r.recall) : 0.0;
}

}  // namespace

std::vector<DecisionRule> top_decision_rules(const DataTable& train, const RuleParams& params) {
  if (params.n_estimators < 1) throw Error(ErrorCode::kInvalidArgument, "n_estimators must be >= 1");
  const DataTable canon = train.canonical();
  const ClassCounts classes = class_counts(canon);
  if (!classes.binary()) throw Error(ErrorCode::kDegenerateClass, "rules need both classes");

  const auto predictors = canon.predictor_indices();
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
  tree_params.features_per_split = static_cast<int>(predictors.size());

  const auto n = static_cast<std::size_t>(canon.rows());
  std::vector<std::pair<std::vector<Condition>, int>> candidates;
  std::vector<Eigen::Index> bootstrap(n);
  for (int t = 0; t < params.n_estimators; ++t) {
    Rng rng(derive_seed(params.seed, {static_cast<std::uint64_t>(t)}));
    for (auto& s : bootstrap) s = static_cast<Eigen::Index>(rng.index(n));
    const DecisionTree tree = grow_tree(x, y, bootstrap, tree_params, rng);
    std::vector<Condition> path;
    collect_paths(tree, 0, names, path, candidates);
  }

  std::set<std::vector<Condition>> seen;
  std::vector<DecisionRule> kept;
  for (auto& [conditions, cls] : candidates) {
    if (!seen.insert(conditions).second) continue;
    std::vector<std::size_t> cols;
    for (const auto& c : conditions) {
      cols.push_back(static_cast<std::size_t>(std::find(names.begin(), names.end(), c.feature) - names.begin()));
    }
    std::int64_t covered = 0, hits = 0;
    for (Eigen::Index r = 0; r < x.rows(); ++r) {
      bool all = true;
      for (std::size_t i = 0; i < conditions.size() && all; ++i) {
        all = conditions[i].holds(x(r, static_cast<Eigen::Index>(cols[i])));
      }
      if (!all) continue;
      ++covered;
      hits += y[static_cast<std::size_t>(r)] == cls ? 1 : 0;
    }
    if (covered == 0) continue;
    DecisionRule rule;
    rule.conditions = conditions;
    rule.predicted_class = classes.labels[static_cast<std::size_t>(cls)];
    rule.support = covered;
    rule.precision = static_cast<double>(hits) / static_cast<double>(covered);
    rule.recall = static_cast<double>(hits) / static_cast<double>(classes.counts[static_cast<std::size_t>(cls)]);
    if (rule.precision < params.min_precision || rule.recall < params.min_recall) continue;
    kept.push_back(std::move(rule));
  }

  std::vector<DecisionRule> out;
  for (double label : classes.labels) {
    std::vector<DecisionRule> mine;
    for (const auto& r : kept) {
      if (r.predicted_class == label) mine.push_back(r);
    }
    std::sort(mine.begin(), mine.end(), [](const DecisionRule& a, const DecisionRule& b) {
      const double fa = f1(a), fb = f1(b);
      if (fa != fb) return fa > fb;
      if (a.support != b.support) return a.support > b.support;
      return a.conditions < b.conditions;
    });
    if (mine.size() > params.top_k_per_class) mine.resize(params.top_k_per_class);
    out.insert(out.end(), mine.begin(), mine.end());
  }
  return out;
}

// ---------------------------------------------------------------------------
// Bundle

bool ExplanationBundle::has(Tile tile) const {
  switch (tile) {
    case Tile::kKeyInsights: return parts.key_insights.has_value();
    case Tile::kDensity: return parts.density.has_value();
    case Tile::kQuality: return parts.quality.has_value();
    case Tile::kImportances: return parts.importances.has_value();
    case Tile::kRules: return parts.rules.has_value();
  }
  return false;
}

std::string_view help_text(Tile tile) {
  switch (tile) {
    case Tile::kKeyInsights:
      return "Key Insights summarise the training data with descriptive statistics: the share "
             "of invalid zeros, extreme values, skewed features and class imbalance. The top "
             "insights are shown; hover for the rest.";
    case Tile::kDensity:
      return "Data Density Distribution shows how the values of each feature are spread, "
             "marks the average value, and highlights ranges that hold extreme values.";
    case Tile::kQuality:
      return "Data Quality scores the training data from 0 to 100 as the equal-weight mean of "
             "six checks: outliers, redundant records, correlated features, class imbalance, "
             "data drift and skewness. Above 80 is good, 50 to 80 moderate, below 50 poor.";
    case Tile::kImportances:
      return "Important Risk Factors rank features by how much the model's accuracy drops "
             "when that feature's values are shuffled, shown as percentages.";
    case Tile::kRules:
      return "Top Decision Rules are simple IF-THEN conditions that predict each outcome, "
             "with their precision (how often the rule is right) and recall (how many cases "
             "of the outcome it covers).";
  }
  return "";
}

ExplanationBundle build_bundle(Variant variant, const ModelMetrics& metrics,
                               const std::optional<ModelMetrics>& previous,
                               const ExplanationParts& parts) {
  ExplanationBundle b;
  b.variant = variant;
  b.header.metrics = metrics;
  if (previous && previous->test_accuracy > 0.0) {
    b.header.accuracy_delta = accuracy_delta(metrics, *previous);
  }
  for (Tile tile : tiles_for(variant)) {
    auto missing = [&] {
      return Error(ErrorCode::kMissingPart, "bundle part missing for variant",
                   std::string(to_string(variant)) + "/" + std::string(tile_code(tile)));
    };
    switch (tile) {
      case Tile::kKeyInsights:
        if (!parts.key_insights) throw missing();
        b.parts.key_insights = parts.key_insights;
        break;
      case Tile::kDensity:
        if (!parts.density) throw missing();
        b.parts.density = parts.density;
        break;
      case Tile::kQuality:
        if (!parts.quality) throw missing();
        b.parts.quality = parts.quality;
        break;
      case Tile::kImportances:
        if (!parts.importances) throw missing();
        b.parts.importances = parts.importances;
        if (parts.importances->uninformative) {
          b.notes.push_back("uninformative model: shuffling any feature leaves accuracy unchanged");
        }
        break;
      case Tile::kRules:
        if (!parts.rules) throw missing();
        b.parts.rules = parts.rules;
        break;
    }
    b.help_texts[tile] = std::string(help_text(tile));
  }
  return b;
}

}  // namespace exmos
