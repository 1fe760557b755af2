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

// Data-quality profiling: six issue detectors, the equal-weight quality
// score, and the automated correctors.

#ifndef EXMOS_QUALITY_HPP_
#define EXMOS_QUALITY_HPP_

#include <array>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "exmos/dataset.hpp"
#include "exmos/stats.hpp"

namespace exmos {

enum class IssueKind {
  kOutliers,
  kRedundantRows,
  kCorrelatedFeatures,
  kClassImbalance,
  kDataDrift,
  kSkewness,
};

inline constexpr std::array<IssueKind, 6> kAllIssueKinds = {
    IssueKind::kOutliers,        IssueKind::kRedundantRows, IssueKind::kCorrelatedFeatures,
    IssueKind::kClassImbalance,  IssueKind::kDataDrift,     IssueKind::kSkewness,
};

std::string_view to_string(IssueKind kind);
IssueKind issue_kind_from_string(std::string_view s);

/// DataDrift is advisory only; every other kind has a corrector.
constexpr bool is_correctable(IssueKind kind) { return kind != IssueKind::kDataDrift; }

/// Order in which corrections are applied when several are selected.
/// Redundant rows first, SMOTE last so synthetic rows come from cleaned data.
inline constexpr std::array<IssueKind, 5> kCorrectionOrder = {
    IssueKind::kRedundantRows, IssueKind::kOutliers, IssueKind::kSkewness,
    IssueKind::kCorrelatedFeatures, IssueKind::kClassImbalance,
};

struct QualityConfig {
  double iqr_multiplier = 1.5;
  double correlation_threshold = 0.8;
  double skew_threshold = 1.0;
  double ks_threshold = 0.1;
  int smote_k = 5;
};

struct IssueReport {
  IssueKind kind = IssueKind::kOutliers;
  // 100 means issue-free.
  double subscore = 100;
  // Always 100 - subscore.
  double impact = 0;
  std::vector<std::string> affected_features;
  std::vector<RowId> affected_row_ids;
  bool correctable = true;
  std::string description;
};

enum class QualityLevel { kGood, kModerate, kPoor };

std::string_view to_string(QualityLevel level);

/// good iff score > 80; moderate iff 50 <= score <= 80; poor iff score < 50.
QualityLevel quality_level(double score);

struct QualityReport {
  // One report per kind, in kAllIssueKinds order.
  std::vector<IssueReport> issues;
  double score = 100;
  QualityLevel level = QualityLevel::kGood;

  const IssueReport& issue(IssueKind kind) const;
};

// ---------------------------------------------------------------------------
// Detectors

/// Tukey fences for one column.
stats::Fences<double> column_fences(const DataTable& table, std::size_t column,
                                    double multiplier = 1.5);

/// Per-cell outlier flags over numeric predictors: outside the Tukey fences,
/// or a literal zero in a zero_invalid column. Rows x numeric predictors.
struct OutlierMask {
  std::vector<std::size_t> columns;
  Eigen::Array<bool, Eigen::Dynamic, Eigen::Dynamic> cells;
};

OutlierMask outlier_mask(const DataTable& table, const QualityConfig& config = {});

IssueReport detect_outliers(const DataTable& table, const QualityConfig& config = {});
IssueReport detect_duplicates(const DataTable& table);

struct CorrelatedPair {
  std::size_t a = 0;
  std::size_t b = 0;
  double r = 0;
};

struct CorrelationScan {
  std::vector<CorrelatedPair> offending;
  std::size_t total_pairs = 0;
  std::size_t skipped_pairs = 0;
};

/// Pearson |r| over every predictor pair (a < b in schema order).
CorrelationScan scan_correlations(const DataTable& table, double threshold);

IssueReport detect_correlated(const DataTable& table, const QualityConfig& config = {});
IssueReport detect_imbalance(const DataTable& table);
IssueReport detect_skewness(const DataTable& table, const QualityConfig& config = {});
IssueReport detect_drift(const DataTable& current, const DataTable& baseline,
                         const QualityConfig& config = {});

/// Runs the detector for one kind. A table too small for the detector's
/// preconditions yields a 100 report noting that the check was not applicable.
IssueReport detect(IssueKind kind, const DataTable& table, const DataTable& baseline,
                   const QualityConfig& config = {});

/// Equal-weight mean of exactly one report per kind.
QualityReport quality_score(std::vector<IssueReport> issues);

QualityReport assess_quality(const DataTable& table, const DataTable& baseline,
                             const QualityConfig& config = {});

// ---------------------------------------------------------------------------
// Corrections

struct CorrectionOutcome {
  IssueKind kind = IssueKind::kOutliers;
  IssueReport before;
  IssueReport after;
  DataTable table_after;
  std::int64_t rows_removed = 0;
  std::int64_t rows_added = 0;
  std::vector<std::string> features_removed;
  // For SMOTE: the (row, neighbor) parents of each appended row, in order.
  std::vector<std::pair<RowId, RowId>> synthetic_parents;
};

struct SmoteResult {
  DataTable table;
  std::vector<std::pair<RowId, RowId>> parents;
};

/// Oversamples the minority class until both classes have equal counts.
/// Neighbors are the k nearest minority rows by Euclidean distance over
/// predictors standardized with the whole table's mean and deviation.
SmoteResult smote(const DataTable& table, int k, std::uint64_t seed);

CorrectionOutcome correct_issue(const DataTable& table, IssueKind kind,
                                const DataTable& baseline, std::uint64_t seed,
                                const QualityConfig& config = {});

}  // namespace exmos

#endif  // EXMOS_QUALITY_HPP_
