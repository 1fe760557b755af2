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

#include "exmos/quality.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <numeric>
#include <set>

#include "exmos/error.hpp"
#include "exmos/random.hpp"
#include "text_util.hpp"

namespace exmos {

using detail::fixed;
using detail::join;

std::string_view to_string(IssueKind kind) {
  switch (kind) {
    case IssueKind::kOutliers: return "Outliers";
    case IssueKind::kRedundantRows: return "RedundantRows";
    case IssueKind::kCorrelatedFeatures: return "CorrelatedFeatures";
    case IssueKind::kClassImbalance: return "ClassImbalance";
    case IssueKind::kDataDrift: return "DataDrift";
    case IssueKind::kSkewness: return "Skewness";
  }
  return "Outliers";
}

IssueKind issue_kind_from_string(std::string_view s) {
  for (IssueKind k : kAllIssueKinds) {
    if (to_string(k) == s) return k;
  }
  throw Error(ErrorCode::kInvalidArgument, "unknown issue kind", std::string(s));
}

std::string_view to_string(QualityLevel level) {
  switch (level) {
    case QualityLevel::kGood: return "good";
    case QualityLevel::kModerate: return "moderate";
    case QualityLevel::kPoor: return "poor";
  }
  return "poor";
}

QualityLevel quality_level(double score) {
  if (score > 80.0) return QualityLevel::kGood;
  if (score >= 50.0) return QualityLevel::kModerate;
  return QualityLevel::kPoor;
}

const IssueReport& QualityReport::issue(IssueKind kind) const {
  for (const auto& r : issues) {
    if (r.kind == kind) return r;
  }
  throw Error(ErrorCode::kMissingIssueKind, "report lacks issue kind",
              std::string(to_string(kind)));
}

namespace {

IssueReport make_report(IssueKind kind, double subscore) {
  IssueReport r;
  r.kind = kind;
  r.subscore = std::clamp(subscore, 0.0, 100.0);
  r.impact = 100.0 - r.subscore;
  r.correctable = is_correctable(kind);
  return r;
}

double ratio_score(std::size_t bad, std::size_t total) {
  if (total == 0) return 100.0;
  return 100.0 * (1.0 - static_cast<double>(bad) / static_cast<double>(total));
}

std::string name_of(const DataTable& t, std::size_t i) { return t.schema()[i].name; }

}  // namespace

// ---------------------------------------------------------------------------
// Outliers

stats::Fences<double> column_fences(const DataTable& table, std::size_t column,
                                    double multiplier) {
  return stats::tukey_fences(table.cells().col(static_cast<Eigen::Index>(column)), multiplier);
}

OutlierMask outlier_mask(const DataTable& table, const QualityConfig& config) {
  OutlierMask mask;
  mask.columns = table.numeric_predictor_indices();
  mask.cells.setConstant(table.rows(), static_cast<Eigen::Index>(mask.columns.size()), false);
  for (std::size_t c = 0; c < mask.columns.size(); ++c) {
    const std::size_t col = mask.columns[c];
    const auto values = table.cells().col(static_cast<Eigen::Index>(col));
    const auto fences = column_fences(table, col, config.iqr_multiplier);
    const bool zero_invalid = table.schema()[col].zero_invalid;
    for (Eigen::Index r = 0; r < table.rows(); ++r) {
      const double v = values(r);
      mask.cells(r, static_cast<Eigen::Index>(c)) =
          fences.outside(v) || (zero_invalid && v == 0.0);
    }
  }
  return mask;
}

IssueReport detect_outliers(const DataTable& table, const QualityConfig& config) {
  if (table.rows() < 4) {
    throw Error(ErrorCode::kTooFewRows, "outlier detection needs at least 4 rows");
  }
  const OutlierMask mask = outlier_mask(table, config);
  std::vector<RowId> rows;
  for (Eigen::Index r = 0; r < table.rows(); ++r) {
    if (mask.cells.row(r).any()) rows.push_back(table.row_ids()[static_cast<std::size_t>(r)]);
  }
  IssueReport report = make_report(IssueKind::kOutliers,
                                   ratio_score(rows.size(), static_cast<std::size_t>(table.rows())));
  for (std::size_t c = 0; c < mask.columns.size(); ++c) {
    if (mask.cells.col(static_cast<Eigen::Index>(c)).any()) {
      report.affected_features.push_back(name_of(table, mask.columns[c]));
    }
  }
  report.affected_row_ids = std::move(rows);
  if (report.affected_row_ids.empty()) {
    report.description = "No extreme values or invalid zeros were found.";
  } else {
    report.description =
        std::to_string(report.affected_row_ids.size()) + " of " + std::to_string(table.rows()) +
        " records (" + fixed(report.impact) +
        "%) hold extreme values or invalid zeros, in: " + join(report.affected_features) +
        ". Extreme values can pull the model towards rare cases.";
  }
  return report;
}

// ---------------------------------------------------------------------------
// Duplicates

IssueReport detect_duplicates(const DataTable& table) {
  std::set<std::vector<double>> seen;
  std::vector<RowId> redundant;
  std::vector<double> row(static_cast<std::size_t>(table.cols()));
  for (Eigen::Index r = 0; r < table.rows(); ++r) {
    for (Eigen::Index c = 0; c < table.cols(); ++c) row[static_cast<std::size_t>(c)] = table.cells()(r, c);
    if (!seen.insert(row).second) redundant.push_back(table.row_ids()[static_cast<std::size_t>(r)]);
  }
  IssueReport report = make_report(
      IssueKind::kRedundantRows, ratio_score(redundant.size(), static_cast<std::size_t>(table.rows())));
  report.affected_row_ids = std::move(redundant);
  report.description =
      report.affected_row_ids.empty()
          ? "Every record is unique."
          : std::to_string(report.affected_row_ids.size()) +
                " records repeat an earlier record exactly. Repeated records give "
                "some cases more weight than they deserve.";
  return report;
}

// ---------------------------------------------------------------------------
// Correlation

CorrelationScan scan_correlations(const DataTable& table, double threshold) {
  const auto predictors = table.predictor_indices();
  CorrelationScan scan;
  for (std::size_t i = 0; i < predictors.size(); ++i) {
    for (std::size_t j = i + 1; j < predictors.size(); ++j) {
      ++scan.total_pairs;
      const auto r = stats::pearson(table.cells().col(static_cast<Eigen::Index>(predictors[i])),
                                    table.cells().col(static_cast<Eigen::Index>(predictors[j])));
      if (!r) {
        ++scan.skipped_pairs;
        continue;
      }
      if (std::abs(*r) >= threshold) scan.offending.push_back({predictors[i], predictors[j], *r});
    }
  }
  return scan;
}

IssueReport detect_correlated(const DataTable& table, const QualityConfig& config) {
  if (table.predictor_indices().size() < 2) {
    throw Error(ErrorCode::kTooFewFeatures, "correlation needs at least 2 predictors");
  }
  if (table.rows() < 3) {
    throw Error(ErrorCode::kTooFewRows, "correlation needs at least 3 rows");
  }
  const CorrelationScan scan = scan_correlations(table, config.correlation_threshold);
  IssueReport report = make_report(IssueKind::kCorrelatedFeatures,
                                   ratio_score(scan.offending.size(), scan.total_pairs));
  std::set<std::size_t> involved;
  std::vector<std::string> pairs;
  for (const auto& p : scan.offending) {
    involved.insert(p.a);
    involved.insert(p.b);
    pairs.push_back(name_of(table, p.a) + "/" + name_of(table, p.b) + " (r = " + fixed(p.r, 2) + ")");
  }
  for (std::size_t i : involved) report.affected_features.push_back(name_of(table, i));
  report.description =
      scan.offending.empty()
          ? "No pair of features is strongly correlated."
          : std::to_string(scan.offending.size()) + " of " + std::to_string(scan.total_pairs) +
                " feature pairs are strongly correlated: " + join(pairs) +
                ". Correlated features carry overlapping information.";
  if (scan.skipped_pairs > 0) {
    report.description += " " + std::to_string(scan.skipped_pairs) +
                          " pairs involving a constant feature were skipped.";
  }
  return report;
}

// ---------------------------------------------------------------------------
// Imbalance

IssueReport detect_imbalance(const DataTable& table) {
  const ClassCounts classes = class_counts(table);
  if (!classes.binary()) {
    throw Error(ErrorCode::kDegenerateClass, "class balance needs both classes present");
  }
  const double minority = static_cast<double>(classes.minority());
  const double majority = static_cast<double>(classes.majority());
  IssueReport report = make_report(IssueKind::kClassImbalance, 100.0 * minority / majority);
  if (report.subscore < 100.0) {
    report.affected_features.push_back(table.target_meta().name);
    report.description = "The minority class has " + std::to_string(classes.minority()) +
                         " records against " + std::to_string(classes.majority()) +
                         " for the majority class. The model may under-predict the "
                         "minority class.";
  } else {
    report.description = "Both classes have the same number of records.";
  }
  return report;
}

// ---------------------------------------------------------------------------
// Skewness

IssueReport detect_skewness(const DataTable& table, const QualityConfig& config) {
  if (table.rows() < 3) throw Error(ErrorCode::kTooFewRows, "skewness needs at least 3 rows");
  const auto numeric = table.numeric_predictor_indices();
  std::vector<std::string> flagged;
  std::vector<std::string> detail;
  for (std::size_t c : numeric) {
    const auto g1 = stats::skewness(table.cells().col(static_cast<Eigen::Index>(c)));
    if (g1 && std::abs(*g1) > config.skew_threshold) {
      flagged.push_back(name_of(table, c));
      detail.push_back(name_of(table, c) + " (g1 = " + fixed(*g1, 2) + ")");
    }
  }
  IssueReport report = make_report(IssueKind::kSkewness, ratio_score(flagged.size(), numeric.size()));
  report.affected_features = std::move(flagged);
  report.description = detail.empty()
                           ? "No feature has a strongly skewed distribution."
                           : "Strongly skewed features: " + join(detail) +
                                 ". Long tails let a few records dominate the splits.";
  return report;
}

// ---------------------------------------------------------------------------
// Drift

IssueReport detect_drift(const DataTable& current, const DataTable& baseline,
                         const QualityConfig& config) {
  if (current.target_meta().name != baseline.target_meta().name) {
    throw Error(ErrorCode::kSchemaMismatch, "current and baseline targets differ");
  }
  std::vector<std::pair<std::size_t, std::size_t>> shared;
  for (std::size_t c : current.predictor_indices()) {
    const auto b = baseline.find(name_of(current, c));
    if (!b || *b == baseline.target_index()) {
      throw Error(ErrorCode::kSchemaMismatch, "feature absent from baseline", name_of(current, c));
    }
    if (current.schema()[c].kind == FeatureKind::kNumeric) shared.emplace_back(c, *b);
  }
  std::vector<std::string> flagged;
  std::vector<std::string> detail;
  for (const auto& [c, b] : shared) {
    const double d = stats::ks_statistic(current.cells().col(static_cast<Eigen::Index>(c)),
                                         baseline.cells().col(static_cast<Eigen::Index>(b)));
    if (d > config.ks_threshold) {
      flagged.push_back(name_of(current, c));
      detail.push_back(name_of(current, c) + " (D = " + fixed(d, 2) + ")");
    }
  }
  IssueReport report = make_report(IssueKind::kDataDrift, ratio_score(flagged.size(), shared.size()));
  report.affected_features = std::move(flagged);
  report.correctable = false;
  report.description = detail.empty()
                           ? "Feature distributions match the original data."
                           : "Distributions moved away from the original data for: " +
                                 join(detail) +
                                 ". Review the filters that produced this shift.";
  return report;
}

// ---------------------------------------------------------------------------
// Score

IssueReport detect(IssueKind kind, const DataTable& table, const DataTable& baseline,
                   const QualityConfig& config) {
  try {
    switch (kind) {
      case IssueKind::kOutliers: return detect_outliers(table, config);
      case IssueKind::kRedundantRows: return detect_duplicates(table);
      case IssueKind::kCorrelatedFeatures: return detect_correlated(table, config);
      case IssueKind::kClassImbalance: return detect_imbalance(table);
      case IssueKind::kDataDrift: return detect_drift(table, baseline, config);
      case IssueKind::kSkewness: return detect_skewness(table, config);
    }
  } catch (const Error& e) {
    if (e.code() != ErrorCode::kTooFewRows && e.code() != ErrorCode::kTooFewFeatures) throw;
    IssueReport report = make_report(kind, 100.0);
    report.description = "Not assessed: " + e.message() + ".";
    return report;
  }
  throw Error(ErrorCode::kInvalidArgument, "unknown issue kind");
}

QualityReport quality_score(std::vector<IssueReport> issues) {
  std::array<const IssueReport*, kAllIssueKinds.size()> by_kind{};
  for (const auto& r : issues) {
    auto& slot = by_kind[static_cast<std::size_t>(r.kind)];
    if (slot) {
      throw Error(ErrorCode::kDuplicateIssueKind, "issue kind reported twice",
                  std::string(to_string(r.kind)));
    }
    slot = &r;
  }
  QualityReport report;
  double sum = 0;
  for (IssueKind k : kAllIssueKinds) {
    const IssueReport* r = by_kind[static_cast<std::size_t>(k)];
    if (!r) {
      throw Error(ErrorCode::kMissingIssueKind, "issue kind missing", std::string(to_string(k)));
    }
    report.issues.push_back(*r);
    sum += r->subscore;
  }
  report.score = sum / static_cast<double>(kAllIssueKinds.size());
  report.level = quality_level(report.score);
  return report;
}

QualityReport assess_quality(const DataTable& table, const DataTable& baseline,
                             const QualityConfig& config) {
  std::vector<IssueReport> issues;
  for (IssueKind k : kAllIssueKinds) issues.push_back(detect(k, table, baseline, config));
  return quality_score(std::move(issues));
}

// ---------------------------------------------------------------------------
// SMOTE

SmoteResult smote(const DataTable& table, int k, std::uint64_t seed) {
  if (k < 1) throw Error(ErrorCode::kInvalidArgument, "SMOTE k must be >= 1");
  const ClassCounts classes = class_counts(table);
  if (!classes.binary()) throw Error(ErrorCode::kDegenerateClass, "SMOTE needs both classes");
  const double minority_label = classes.minority_label();
  const Eigen::Index needed = classes.majority() - classes.minority();
  if (needed == 0) return {table, {}};

  const auto predictors = table.predictor_indices();
  const auto p = static_cast<Eigen::Index>(predictors.size());
  Eigen::MatrixXd x(table.rows(), p);
  for (Eigen::Index c = 0; c < p; ++c) {
    x.col(c) = table.cells().col(static_cast<Eigen::Index>(predictors[static_cast<std::size_t>(c)]));
  }
  const Eigen::RowVectorXd mean = x.colwise().mean();
  Eigen::RowVectorXd sd = ((x.rowwise() - mean).array().square().colwise().mean()).sqrt();
  for (Eigen::Index c = 0; c < p; ++c) {
    if (!(sd(c) > 0.0)) sd(c) = 1.0;
  }
  const Eigen::MatrixXd z = (x.rowwise() - mean).array().rowwise() / sd.array();

  std::vector<Eigen::Index> minority;
  for (Eigen::Index r = 0; r < table.rows(); ++r) {
    if (table.target()(r) == minority_label) minority.push_back(r);
  }
  const auto m = minority.size();
  const auto k_eff = std::min<std::size_t>(static_cast<std::size_t>(k), m - 1);

  // Nearest minority neighbors; distance ties resolve to the earlier row.
  std::vector<std::vector<Eigen::Index>> neighbors(m);
  for (std::size_t i = 0; i < m && k_eff > 0; ++i) {
    std::vector<std::pair<double, std::size_t>> dist;
    for (std::size_t j = 0; j < m; ++j) {
      if (j == i) continue;
      dist.emplace_back((z.row(minority[i]) - z.row(minority[j])).squaredNorm(), j);
    }
    std::partial_sort(dist.begin(), dist.begin() + static_cast<std::ptrdiff_t>(k_eff), dist.end());
    for (std::size_t n = 0; n < k_eff; ++n) neighbors[i].push_back(minority[dist[n].second]);
  }

  Rng rng(seed);
  Eigen::MatrixXd extra(needed, table.cols());
  std::vector<RowId> ids;
  std::vector<std::pair<RowId, RowId>> parents;
  RowId next_id = table.max_row_id() + 1;
  for (Eigen::Index s = 0; s < needed; ++s) {
    const std::size_t i = rng.index(m);
    const Eigen::Index a = minority[i];
    const Eigen::Index b = k_eff > 0 ? neighbors[i][rng.index(k_eff)] : a;
    const double lambda = rng.unit();
    for (Eigen::Index c = 0; c < table.cols(); ++c) {
      const double va = table.cells()(a, c);
      const double vb = table.cells()(b, c);
      double v = va + lambda * (vb - va);
      const auto& meta = table.schema()[static_cast<std::size_t>(c)];
      if (meta.target) {
        v = minority_label;
      } else if (meta.kind == FeatureKind::kBinaryCategorical) {
        v = lambda < 0.5 ? va : vb;
      }
      extra(s, c) = v;
    }
    ids.push_back(next_id++);
    parents.emplace_back(table.row_ids()[static_cast<std::size_t>(a)],
                         table.row_ids()[static_cast<std::size_t>(b)]);
  }
  return {table.append_rows(extra, ids), std::move(parents)};
}

// ---------------------------------------------------------------------------
// Correction

namespace {

DataTable drop_rows(const DataTable& table, const std::vector<RowId>& ids) {
  const std::set<RowId> drop(ids.begin(), ids.end());
  std::vector<Eigen::Index> keep;
  for (Eigen::Index r = 0; r < table.rows(); ++r) {
    if (!drop.count(table.row_ids()[static_cast<std::size_t>(r)])) keep.push_back(r);
  }
  if (keep.empty()) throw Error(ErrorCode::kAllRowsFiltered, "correction would remove every row");
  return table.select_rows(keep);
}

DataTable correct_outliers(const DataTable& table, const IssueReport& before,
                           const DataTable& baseline, const QualityConfig& config) {
  DataTable current = drop_rows(table, before.affected_row_ids);
  // Fences move once extreme rows are gone; trim again while the subscore
  // is still below where it started.
  while (current.rows() >= 4) {
    const IssueReport now = detect(IssueKind::kOutliers, current, baseline, config);
    if (now.subscore >= before.subscore || now.affected_row_ids.empty()) break;
    current = drop_rows(current, now.affected_row_ids);
  }
  return current;
}

DataTable correct_skewness(const DataTable& table, const IssueReport& before) {
  DataTable current = table;
  for (const auto& name : before.affected_features) {
    const std::size_t c = current.index_of(name);
    const Eigen::VectorXd col = current.cells().col(static_cast<Eigen::Index>(c));
    const double shift = col.minCoeff();
    Eigen::VectorXd out = col;
    for (Eigen::Index r = 0; r < col.size(); ++r) out(r) = std::log1p(col(r) - shift);
    current = current.with_column(c, out);
  }
  return current;
}

DataTable correct_correlated(const DataTable& table, const QualityConfig& config,
                             std::vector<std::string>& removed) {
  const CorrelationScan scan = scan_correlations(table, config.correlation_threshold);
  auto target_r = [&](std::size_t c) {
    const auto r = stats::pearson(table.cells().col(static_cast<Eigen::Index>(c)), table.target());
    return r ? std::abs(*r) : 0.0;
  };
  std::set<std::size_t> dropped;
  for (const auto& pair : scan.offending) {
    if (dropped.count(pair.a) || dropped.count(pair.b)) continue;
    // Keep the member more correlated with the target; ties drop the later one.
    dropped.insert(target_r(pair.a) < target_r(pair.b) ? pair.a : pair.b);
  }
  std::vector<std::size_t> keep;
  for (std::size_t c = 0; c < table.schema().size(); ++c) {
    if (dropped.count(c)) {
      removed.push_back(table.schema()[c].name);
    } else {
      keep.push_back(c);
    }
  }
  return table.select_columns(keep);
}

}  // namespace

CorrectionOutcome correct_issue(const DataTable& table, IssueKind kind,
                                const DataTable& baseline, std::uint64_t seed,
                                const QualityConfig& config) {
  if (!is_correctable(kind)) {
    throw Error(ErrorCode::kNotCorrectable, "issue has no automated correction",
                std::string(to_string(kind)));
  }
  CorrectionOutcome out{kind, detect(kind, table, baseline, config), {}, table, 0, 0, {}, {}};
  if (out.before.subscore >= 100.0) {
    throw Error(ErrorCode::kNothingToCorrect, "issue is not present",
                std::string(to_string(kind)));
  }
  switch (kind) {
    case IssueKind::kOutliers:
      out.table_after = correct_outliers(table, out.before, baseline, config);
      break;
    case IssueKind::kRedundantRows:
      out.table_after = drop_rows(table, out.before.affected_row_ids);
      break;
    case IssueKind::kSkewness:
      out.table_after = correct_skewness(table, out.before);
      break;
    case IssueKind::kCorrelatedFeatures:
      out.table_after = correct_correlated(table, config, out.features_removed);
      break;
    case IssueKind::kClassImbalance: {
      SmoteResult s = smote(table, config.smote_k, seed);
      out.table_after = std::move(s.table);
      out.synthetic_parents = std::move(s.parents);
      break;
    }
    case IssueKind::kDataDrift:
      break;
  }
  const auto before_rows = table.rows();
  const auto after_rows = out.table_after.rows();
  out.rows_added = static_cast<std::int64_t>(out.synthetic_parents.size());
  out.rows_removed = before_rows + out.rows_added - after_rows;
  out.after = detect(kind, out.table_after, baseline, config);
  return out;
}

}  // namespace exmos
