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

// Model steering: configurations, retraining, version history, rollback.

#ifndef EXMOS_STEERING_HPP_
#define EXMOS_STEERING_HPP_

#include <cstdint>
#include <filesystem>
#include <functional>
#include <map>
#include <optional>
#include <string>
#include <variant>
#include <vector>

#include "exmos/dataset.hpp"
#include "exmos/explain.hpp"
#include "exmos/model.hpp"
#include "exmos/quality.hpp"

namespace exmos {

struct Range {
  double lower = 0;
  double upper = 0;

  bool contains(double v) const { return v >= lower && v <= upper; }
  bool operator==(const Range&) const = default;
};

/// Feature selection plus inclusive range filters.
struct ManualConfig {
  std::vector<std::string> included_features;
  std::map<std::string, Range, std::less<>> ranges;

  bool operator==(const ManualConfig&) const = default;
};

/// Issues to correct automatically.
struct AutoConfig {
  std::vector<IssueKind> selected_issues;
  std::uint64_t seed = 42;

  bool operator==(const AutoConfig&) const = default;
};

/// No change to the parent's data (version 0, or a plain retrain).
struct DefaultConfig {
  bool operator==(const DefaultConfig&) const = default;
};

using Config = std::variant<DefaultConfig, ManualConfig, AutoConfig>;

/// "default", "manual" or "auto".
std::string_view config_kind(const Config& config);

struct SampleWarning {
  std::int64_t before_rows = 0;
  std::int64_t after_rows = 0;
  double reduction_fraction = 0;
};

struct ManualResult {
  DataTable table;
  std::optional<SampleWarning> warning;
};

/// Drops excluded predictors and rows outside any range. Columns keep their
/// schema order. Throws UnknownFeature, InvertedRange, InvalidArgument,
/// AllRowsFiltered.
ManualResult apply_manual(const DataTable& baseline, const ManualConfig& config,
                          double warning_threshold = 0.5);

struct AutoResult {
  DataTable table;
  std::vector<CorrectionOutcome> outcomes;
};

/// Runs the selected corrections in the fixed correction order. Issues
/// that are already clean are skipped; NothingToCorrect if all are.
AutoResult apply_auto(const DataTable& baseline, const AutoConfig& config,
                      const DataTable& original_baseline, const QualityConfig& quality = {});

/// The table a config produces from its parent's table.
DataTable apply_config(const DataTable& parent, const Config& config, const DataTable& original,
                       const QualityConfig& quality = {});

// ---------------------------------------------------------------------------
// History

using VersionId = std::int64_t;

struct ConfigVersion {
  VersionId version_id = 0;
  std::optional<VersionId> parent_id;
  Config config;
  std::string table_digest;
  ModelMetrics metrics;
  QualityReport quality;
  // Always the full (HYB) bundle; the service filters it per variant.
  ExplanationBundle bundle;
  std::string created_at;
  bool saved = false;
};

struct SessionSettings {
  SplitSpec split;
  ForestParams forest;
  QualityConfig quality;
  RuleParams rules;
  int importance_repeats = 10;
  std::size_t insights_top_k = 4;
  std::size_t density_bins = 10;
  double warning_threshold = 0.5;
  // ISO-8601 UTC by default; injectable for tests.
  std::function<std::string()> clock;
};

/// Current UTC time as YYYY-MM-DDTHH:MM:SSZ.
std::string utc_timestamp();

/// One user's steering state. Not thread-safe; callers serialize access.
///
/// History is a tree rooted at version 0 (the default data). Each version
/// stores the config that turns its parent's table into its own, so any
/// version's table is rebuilt by replaying configs from the root. Retrain
/// consumes the staged config (or none) and appends an unsaved version
/// below the head.
class SteeringSession {
 public:
  /// Trains version 0. With a journal path, the file is truncated and every
  /// mutation is appended to it.
  explicit SteeringSession(DataTable original, SessionSettings settings = {},
                           std::optional<std::filesystem::path> journal = std::nullopt);

  /// Rebuilds a session from its journal and checks that replay reproduces
  /// every stored digest and metric. Throws JournalCorrupt.
  static SteeringSession restore(DataTable original, const std::filesystem::path& journal,
                                 SessionSettings settings = {});

  const ConfigVersion& head() const { return versions_[static_cast<std::size_t>(head_)]; }
  const ConfigVersion& version(VersionId id) const;
  const std::vector<ConfigVersion>& history() const { return versions_; }
  const DataTable& original() const { return original_; }
  const DataTable& head_table() const { return head_table_; }
  const SessionSettings& settings() const { return settings_; }
  bool has_unsaved() const { return !head().saved; }

  /// Stages a manual config against the head table and returns the preview.
  ManualResult stage_manual(const ManualConfig& config);
  /// Stages an auto config against the head table.
  AutoResult stage_auto(const AutoConfig& config);
  const std::optional<Config>& pending() const { return pending_; }
  void clear_pending();

  const ConfigVersion& retrain();
  const ConfigVersion& save();
  /// Moves the head back to its nearest saved ancestor.
  const ConfigVersion& discard();
  /// Moves the head to a saved version, rebuilding its table by replay.
  const ConfigVersion& revert_to(VersionId id);

  /// Table of a version, rebuilt from version 0.
  DataTable reconstruct(VersionId id) const;

  /// Recomputes every version by replay; returns ids whose digest or
  /// metrics differ from the stored record (empty when consistent).
  std::vector<VersionId> verify_replay() const;

 private:
  SteeringSession(DataTable original, SessionSettings settings, bool train_root);

  ConfigVersion build_version(const DataTable& table, Config config,
                              std::optional<VersionId> parent) const;
  void journal(std::string_view event, const ConfigVersion& v) const;

  DataTable original_;
  SessionSettings settings_;
  std::vector<ConfigVersion> versions_;
  VersionId head_ = 0;
  DataTable head_table_;
  std::optional<Config> pending_;
  std::optional<DataTable> pending_table_;
  std::optional<std::filesystem::path> journal_;
};

}  // namespace exmos

#endif  // EXMOS_STEERING_HPP_
