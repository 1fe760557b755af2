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

// Tabular binary-classification data: schema, storage, ingestion, splits.

#ifndef EXMOS_DATASET_HPP_
#define EXMOS_DATASET_HPP_

#include <Eigen/Core>

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

namespace exmos {

enum class FeatureKind { kNumeric, kBinaryCategorical };

std::string_view to_string(FeatureKind kind);
FeatureKind feature_kind_from_string(std::string_view s);

struct FeatureMeta {
  std::string name;
  FeatureKind kind = FeatureKind::kNumeric;
  std::string unit;
  // A literal 0 is an impossible measurement (e.g. zero insulin).
  bool zero_invalid = false;
  // Display metadata only.
  bool actionable = false;
  bool target = false;

  bool operator==(const FeatureMeta&) const = default;
};

using RowId = std::int64_t;
using Schema = std::vector<FeatureMeta>;

/// Immutable table of finite numeric cells with stable row identifiers.
///
/// Exactly one schema column is the binary target; it holds at most two
/// distinct values. Row ids are unique and survive every filtering step.
class DataTable {
 public:
  DataTable(Schema schema, Eigen::MatrixXd cells, std::vector<RowId> row_ids);

  const Schema& schema() const { return schema_; }
  const Eigen::MatrixXd& cells() const { return cells_; }
  const std::vector<RowId>& row_ids() const { return row_ids_; }

  Eigen::Index rows() const { return cells_.rows(); }
  Eigen::Index cols() const { return cells_.cols(); }

  std::size_t target_index() const { return target_; }
  const FeatureMeta& target_meta() const { return schema_[target_]; }
  auto target() const { return cells_.col(static_cast<Eigen::Index>(target_)); }

  /// Column index by name, or nullopt.
  std::optional<std::size_t> find(std::string_view name) const;
  /// Column index by name; throws UnknownFeature.
  std::size_t index_of(std::string_view name) const;
  auto column(std::string_view name) const {
    return cells_.col(static_cast<Eigen::Index>(index_of(name)));
  }

  /// Schema indices of all non-target columns, in schema order.
  std::vector<std::size_t> predictor_indices() const;
  /// Predictors of kind numeric, in schema order.
  std::vector<std::size_t> numeric_predictor_indices() const;
  std::vector<std::string> predictor_names() const;

  /// Rows at the given positions, in the given order.
  DataTable select_rows(std::span<const Eigen::Index> positions) const;
  /// Columns at the given schema indices (must include the target).
  DataTable select_columns(std::span<const std::size_t> indices) const;
  /// Same rows sorted by ascending row id.
  DataTable canonical() const;
  /// Copy with one column's cells replaced.
  DataTable with_column(std::size_t index, const Eigen::VectorXd& values) const;
  /// Copy with extra rows appended (cells in schema order).
  DataTable append_rows(const Eigen::MatrixXd& extra,
                        std::span<const RowId> extra_ids) const;

  RowId max_row_id() const;

  bool operator==(const DataTable& other) const;

 private:
  Schema schema_;
  Eigen::MatrixXd cells_;
  std::vector<RowId> row_ids_;
  std::size_t target_ = 0;
};

/// Distinct target labels in ascending order with their counts.
struct ClassCounts {
  std::vector<double> labels;
  std::vector<Eigen::Index> counts;

  bool binary() const { return labels.size() == 2; }
  Eigen::Index minority() const;
  Eigen::Index majority() const;
  /// Label with the smaller count (lower label on ties).
  double minority_label() const;
};

ClassCounts class_counts(const DataTable& table);

// ---------------------------------------------------------------------------
// Ingestion

/// Reads the sidecar document: either a JSON array of feature entries or an
/// object with a "features" array. Each entry has name, kind, unit,
/// zero_invalid, actionable and an optional target flag; without a flag the
/// last column is the target.
Schema load_meta(const std::filesystem::path& path);
Schema parse_meta(std::string_view json_text);

DataTable load_csv(const std::filesystem::path& path, const Schema& meta);
DataTable parse_csv(std::istream& in, const Schema& meta);

// ---------------------------------------------------------------------------
// Splitting

struct SplitSpec {
  double test_fraction = 0.2;
  std::uint64_t seed = 42;
  bool stratified = true;
};

struct Split {
  DataTable train;
  DataTable test;
};

/// Deterministic partition by row id. Rows are put in canonical order
/// before shuffling so the result does not depend on input row order.
Split split_train_test(const DataTable& table, const SplitSpec& spec);

// ---------------------------------------------------------------------------
// Description

struct ColumnStats {
  double mean = 0;
  double min = 0;
  double max = 0;
  double q1 = 0;
  double q2 = 0;
  double q3 = 0;
  double zero_fraction = 0;
  Eigen::Index count = 0;
};

ColumnStats column_stats(const DataTable& table, std::string_view feature);

/// Hex SHA-256 over schema names, row ids and cell bit patterns.
std::string table_digest(const DataTable& table);

}  // namespace exmos

#endif  // EXMOS_DATASET_HPP_
