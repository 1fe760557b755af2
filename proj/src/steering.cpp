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

#include "exmos/steering.hpp"

#include <cmath>
#include <ctime>
#include <fstream>
#include <set>

#include "exmos/error.hpp"
#include "exmos/serialize.hpp"

namespace exmos {

std::string_view config_kind(const Config& config) {
  switch (config.index()) {
    case 1: return "manual";
    case 2: return "auto";
    default: return "default";
  }
}

ManualResult apply_manual(const DataTable& baseline, const ManualConfig& config,
                          double warning_threshold) {
  if (config.included_features.empty()) {
    throw Error(ErrorCode::kInvalidArgument, "at least one feature must be included");
  }
  std::set<std::size_t> included;
  for (const auto& name : config.included_features) {
    const std::size_t c = baseline.index_of(name);
    if (c == baseline.target_index()) {
      throw Error(ErrorCode::kInvalidArgument, "the target is always kept, not selected", name);
    }
    included.insert(c);
  }

  std::vector<std::pair<Eigen::Index, Range>> filters;
  for (const auto& [name, range] : config.ranges) {
    if (!std::isfinite(range.lower) || !std::isfinite(range.upper)) {
      throw Error(ErrorCode::kInvalidArgument, "range bounds must be finite", name);
    }
    if (range.lower > range.upper) {
      throw Error(ErrorCode::kInvertedRange, "lower bound exceeds upper bound",
                  name + ": [" + std::to_string(range.lower) + ", " +
                      std::to_string(range.upper) + "]");
    }
    const std::size_t c = baseline.index_of(name);
    if (!included.count(c)) {
      throw Error(ErrorCode::kInvalidArgument, "range given for an excluded feature", name);
    }
    filters.emplace_back(static_cast<Eigen::Index>(c), range);
  }

  std::vector<Eigen::Index> keep;
  for (Eigen::Index r = 0; r < baseline.rows(); ++r) {
    bool ok = true;
    for (const auto& [c, range] : filters) ok = ok && range.contains(baseline.cells()(r, c));
    if (ok) keep.push_back(r);
  }
  if (keep.empty()) throw Error(ErrorCode::kAllRowsFiltered, "the ranges exclude every row");

  std::vector<std::size_t> columns;
  for (std::size_t c = 0; c < baseline.schema().size(); ++c) {
    if (c == baseline.target_index() || included.count(c)) columns.push_back(c);
  }
  ManualResult out{baseline.select_rows(keep).select_columns(columns), std::nullopt};
  const auto before = static_cast<std::int64_t>(baseline.rows());
  const auto after = static_cast<std::int64_t>(out.table.rows());
  const double reduction = static_cast<double>(before - after) / static_cast<double>(before);
  if (reduction > warning_threshold) out.warning = SampleWarning{before, after, reduction};
  return out;
}

AutoResult apply_auto(const DataTable& baseline, const AutoConfig& config,
                      const DataTable& original_baseline, const QualityConfig& quality) {
  if (config.selected_issues.empty()) {
    throw Error(ErrorCode::kInvalidArgument, "select at least one issue to correct");
  }
  const std::set<IssueKind> selected(config.selected_issues.begin(), config.selected_issues.end());
  for (IssueKind k : selected) {
    if (!is_correctable(k)) {
      throw Error(ErrorCode::kNotCorrectable, "issue is advisory only", std::string(to_string(k)));
    }
  }
  AutoResult out{baseline, {}};
  for (IssueKind kind : kCorrectionOrder) {
    if (!selected.count(kind)) continue;
    try {
      auto outcome = correct_issue(out.table, kind, original_baseline, config.seed, quality);
      out.table = outcome.table_after;
      out.outcomes.push_back(std::move(outcome));
    } catch (const Error& e) {
      if (e.code() != ErrorCode::kNothingToCorrect) throw;
    }
  }
  if (out.outcomes.empty()) {
    throw Error(ErrorCode::kNothingToCorrect, "every selected issue is already clean");
  }
  return out;
}

DataTable apply_config(const DataTable& parent, const Config& config, const DataTable& original,
                       const QualityConfig& quality) {
  if (const auto* m = std::get_if<ManualConfig>(&config)) return apply_manual(parent, *m).table;
  if (const auto* a = std::get_if<AutoConfig>(&config)) {
    return apply_auto(parent, *a, original, quality).table;
  }
  return parent;
}

std::string utc_timestamp() {
  const std::time_t now = std::time(nullptr);
  std::tm tm{};
  gmtime_r(&now, &tm);
  char buf[32];
  std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &tm);
  return buf;
}

// ---------------------------------------------------------------------------
// Session

SteeringSession::SteeringSession(DataTable original, SessionSettings settings, bool train_root)
    : original_(std::move(original)), settings_(std::move(settings)), head_table_(original_) {
  if (!settings_.clock) settings_.clock = utc_timestamp;
  settings_.forest.validate();
  if (train_root) {
    ConfigVersion v0 = build_version(original_, DefaultConfig{}, std::nullopt);
    v0.saved = true;
    versions_.push_back(std::move(v0));
  }
}

SteeringSession::SteeringSession(DataTable original, SessionSettings settings,
                                 std::optional<std::filesystem::path> journal)
    : SteeringSession(std::move(original), std::move(settings), true) {
  if (journal) {
    std::ofstream out(*journal, std::ios::trunc);
    if (!out) throw Error(ErrorCode::kIoError, "cannot create journal", journal->string());
    journal_ = std::move(journal);
    this->journal("create", versions_.front());
  }
}

const ConfigVersion& SteeringSession::version(VersionId id) const {
  if (id < 0 || static_cast<std::size_t>(id) >= versions_.size()) {
    throw Error(ErrorCode::kUnknownVersion, "no such version", std::to_string(id));
  }
  return versions_[static_cast<std::size_t>(id)];
}

ConfigVersion SteeringSession::build_version(const DataTable& table, Config config,
                                             std::optional<VersionId> parent) const {
  const Split split = split_train_test(table, settings_.split);
  const TrainedModel model = train_forest(split.train, split.test, settings_.forest);

  ConfigVersion v;
  v.version_id = static_cast<VersionId>(versions_.size());
  v.parent_id = parent;
  v.config = std::move(config);
  v.table_digest = table_digest(table);
  v.metrics = model.metrics();
  v.quality = assess_quality(table, original_, settings_.quality);

  ExplanationParts parts;
  parts.key_insights = key_insights(table, v.quality, settings_.insights_top_k, settings_.quality);
  parts.density = density_profiles(table, settings_.density_bins);
  parts.quality = v.quality;
  parts.importances =
      feature_importance(model, split.test, settings_.importance_repeats, settings_.forest.seed);
  parts.rules = top_decision_rules(split.train, settings_.rules);
  std::optional<ModelMetrics> previous;
  if (parent) previous = version(*parent).metrics;
  v.bundle = build_bundle(Variant::kHYB, v.metrics, previous, parts);
  v.created_at = settings_.clock();
  return v;
}

void SteeringSession::journal(std::string_view event, const ConfigVersion& v) const {
  if (!journal_) return;
  std::ofstream out(*journal_, std::ios::app);
  Json line{{"event", event}, {"version", to_json(v, false)}};
  out << line.dump() << '\n';
  out.flush();
  if (!out) throw Error(ErrorCode::kIoError, "cannot append to journal", journal_->string());
}

ManualResult SteeringSession::stage_manual(const ManualConfig& config) {
  ManualResult result = apply_manual(head_table_, config, settings_.warning_threshold);
  pending_ = config;
  pending_table_ = result.table;
  return result;
}

AutoResult SteeringSession::stage_auto(const AutoConfig& config) {
  AutoResult result = apply_auto(head_table_, config, original_, settings_.quality);
  pending_ = config;
  pending_table_ = result.table;
  return result;
}

void SteeringSession::clear_pending() {
  pending_.reset();
  pending_table_.reset();
}

const ConfigVersion& SteeringSession::retrain() {
  const DataTable& table = pending_table_ ? *pending_table_ : head_table_;
  ConfigVersion v = build_version(table, pending_.value_or(DefaultConfig{}), head_);
  journal("retrain", v);
  DataTable next = table;
  versions_.push_back(std::move(v));
  head_ = versions_.back().version_id;
  head_table_ = std::move(next);
  clear_pending();
  return head();
}

const ConfigVersion& SteeringSession::save() {
  if (!has_unsaved()) throw Error(ErrorCode::kNothingUnsaved, "head is already saved");
  ConfigVersion copy = head();
  copy.saved = true;
  journal("save", copy);
  versions_[static_cast<std::size_t>(head_)].saved = true;
  return head();
}

const ConfigVersion& SteeringSession::discard() {
  if (!has_unsaved()) throw Error(ErrorCode::kNothingUnsaved, "no unsaved version to discard");
  VersionId id = head_;
  while (!version(id).saved) id = *version(id).parent_id;
  DataTable table = reconstruct(id);
  journal("discard", version(id));
  head_ = id;
  head_table_ = std::move(table);
  clear_pending();
  return head();
}

const ConfigVersion& SteeringSession::revert_to(VersionId id) {
  const ConfigVersion& target = version(id);
  if (!target.saved) {
    throw Error(ErrorCode::kUnknownVersion, "only saved versions can be restored",
                std::to_string(id));
  }
  DataTable table = reconstruct(id);
  if (table_digest(table) != target.table_digest) {
    throw Error(ErrorCode::kJournalCorrupt, "replayed table does not match its digest",
                std::to_string(id));
  }
  journal("revert", target);
  head_ = id;
  head_table_ = std::move(table);
  clear_pending();
  return head();
}

DataTable SteeringSession::reconstruct(VersionId id) const {
  std::vector<VersionId> path;
  for (std::optional<VersionId> v = id; v; v = version(*v).parent_id) path.push_back(*v);
  DataTable table = original_;
  for (auto it = path.rbegin(); it != path.rend(); ++it) {
    table = apply_config(table, version(*it).config, original_, settings_.quality);
  }
  return table;
}

std::vector<VersionId> SteeringSession::verify_replay() const {
  std::vector<VersionId> bad;
  for (const auto& v : versions_) {
    const DataTable table = reconstruct(v.version_id);
    const Split split = split_train_test(table, settings_.split);
    const ModelMetrics m = train_forest(split.train, split.test, settings_.forest).metrics();
    if (table_digest(table) != v.table_digest || !(m == v.metrics)) bad.push_back(v.version_id);
  }
  return bad;
}

SteeringSession SteeringSession::restore(DataTable original, const std::filesystem::path& path,
                                         SessionSettings settings) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorCode::kIoError, "cannot open journal", path.string());
  SteeringSession s(std::move(original), std::move(settings), false);

  std::string line;
  std::size_t line_no = 0;
  auto corrupt = [&](const std::string& why) {
    return Error(ErrorCode::kJournalCorrupt, why, path.string() + ":" + std::to_string(line_no));
  };
  while (std::getline(in, line)) {
    ++line_no;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    Json j;
    std::string event;
    VersionId id = 0;
    try {
      j = Json::parse(line);
      event = j.at("event").get<std::string>();
      id = j.at("version").at("version_id").get<VersionId>();
    } catch (const Json::exception& e) {
      throw corrupt(std::string("unreadable record: ") + e.what());
    }
    const Json& vj = j["version"];

    if (event == "create" || event == "retrain") {
      if ((event == "create") != s.versions_.empty() ||
          id != static_cast<VersionId>(s.versions_.size())) {
        throw corrupt("version ids out of sequence");
      }
      std::optional<VersionId> parent;
      Config config = DefaultConfig{};
      ModelMetrics stored;
      std::string digest, created_at;
      try {
        if (!vj.at("parent_id").is_null()) parent = vj.at("parent_id").get<VersionId>();
        config = config_from_json(vj.at("config"));
        stored = metrics_from_json(vj.at("metrics"));
        digest = vj.at("table_digest").get<std::string>();
        created_at = vj.at("created_at").get<std::string>();
      } catch (const Json::exception& e) {
        throw corrupt(std::string("bad version record: ") + e.what());
      } catch (const Error& e) {
        throw corrupt("bad version record: " + e.message());
      }
      if (parent && *parent >= id) throw corrupt("dangling parent");
      DataTable table = parent ? apply_config(s.reconstruct(*parent), config, s.original_,
                                              s.settings_.quality)
                               : s.original_;
      ConfigVersion v = s.build_version(table, std::move(config), parent);
      if (v.table_digest != digest) throw corrupt("replayed table digest differs");
      if (!(v.metrics == stored)) throw corrupt("replayed metrics differ");
      v.created_at = created_at;
      v.saved = !parent;
      s.versions_.push_back(std::move(v));
      s.head_ = id;
    } else if (event == "save" || event == "discard" || event == "revert") {
      if (id < 0 || static_cast<std::size_t>(id) >= s.versions_.size()) {
        throw corrupt("unknown version");
      }
      if (event == "save") s.versions_[static_cast<std::size_t>(id)].saved = true;
      s.head_ = id;
    } else {
      throw corrupt("unknown event '" + event + "'");
    }
  }
  if (s.versions_.empty()) throw corrupt("journal has no create record");
  s.head_table_ = s.reconstruct(s.head_);
  s.journal_ = path;
  return s;
}

}  // namespace exmos
