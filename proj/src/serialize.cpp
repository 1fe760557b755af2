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

#include "exmos/serialize.hpp"

#include <utility>

namespace exmos {

namespace {

Json optional_number(const std::optional<double>& v) { return v ? Json(*v) : Json(nullptr); }

// Runs a parser, turning JSON type and key errors into BadRequest.
template <typename F>
auto parse_guarded(std::string_view what, F&& f) -> decltype(f()) {
  try {
    return f();
  } catch (const Json::exception& e) {
    throw Error(ErrorCode::kBadRequest, "malformed " + std::string(what), e.what());
  }
}

}  // namespace

Json to_json(const Error& error) {
  return Json{{"code", to_string(error.code())},
              {"message", error.message()},
              {"detail", error.detail()}};
}

Json to_json(const FeatureMeta& meta) {
  Json j{{"name", meta.name},
         {"kind", to_string(meta.kind)},
         {"unit", meta.unit},
         {"zero_invalid", meta.zero_invalid},
         {"actionable", meta.actionable}};
  if (meta.target) j["target"] = true;
  return j;
}

Json to_json(const Schema& schema) {
  Json out = Json::array();
  for (const auto& f : schema) out.push_back(to_json(f));
  return out;
}

Json to_json(const ColumnStats& s) {
  return Json{{"mean", s.mean}, {"min", s.min},   {"max", s.max},
              {"q1", s.q1},     {"q2", s.q2},     {"q3", s.q3},
              {"zero_fraction", s.zero_fraction}, {"count", s.count}};
}

Json to_json(const ModelMetrics& m) {
  return Json{{"train_accuracy", m.train_accuracy},
              {"test_accuracy", m.test_accuracy},
              {"n_train_samples", m.n_train_samples},
              {"n_features", m.n_features}};
}

ModelMetrics metrics_from_json(const Json& j) {
  return parse_guarded("metrics", [&] {
    ModelMetrics m;
    m.train_accuracy = j.at("train_accuracy").get<double>();
    m.test_accuracy = j.at("test_accuracy").get<double>();
    m.n_train_samples = j.at("n_train_samples").get<std::int64_t>();
    m.n_features = j.at("n_features").get<std::int64_t>();
    return m;
  });
}

Json to_json(const IssueReport& r) {
  return Json{{"kind", to_string(r.kind)},
              {"subscore", r.subscore},
              {"impact", r.impact},
              {"affected_features", r.affected_features},
              {"affected_row_ids", r.affected_row_ids},
              {"correctable", r.correctable},
              {"description", r.description}};
}

Json to_json(const QualityReport& q) {
  Json issues = Json::array();
  for (const auto& r : q.issues) issues.push_back(to_json(r));
  return Json{{"score", q.score}, {"level", to_string(q.level)}, {"issues", std::move(issues)}};
}

Json to_json(const CorrectionOutcome& o) {
  Json parents = Json::array();
  for (const auto& [a, b] : o.synthetic_parents) parents.push_back({a, b});
  return Json{{"kind", to_string(o.kind)},
              {"before", to_json(o.before)},
              {"after", to_json(o.after)},
              {"rows_before", o.table_after.rows() + o.rows_removed - o.rows_added},
              {"rows_after", o.table_after.rows()},
              {"rows_removed", o.rows_removed},
              {"rows_added", o.rows_added},
              {"features_removed", o.features_removed},
              {"synthetic_parents", std::move(parents)}};
}

Json to_json(const KeyInsight& k) {
  return Json{{"feature", k.feature},
              {"metric", to_string(k.metric)},
              {"value_percent", k.value_percent},
              {"severity", k.severity},
              {"text", k.text}};
}

Json to_json(const InsightList& list) {
  Json top = Json::array(), rest = Json::array();
  for (const auto& k : list.top) top.push_back(to_json(k));
  for (const auto& k : list.rest) rest.push_back(to_json(k));
  return Json{{"top", std::move(top)}, {"rest", std::move(rest)}};
}

Json to_json(const DensityProfile& d) {
  Json flags = Json::array();
  for (bool b : d.outlier_bins) flags.push_back(b);
  return Json{{"feature", d.feature},
              {"bin_edges", d.bin_edges},
              {"counts", d.counts},
              {"mean", d.mean},
              {"outlier_bins", std::move(flags)}};
}

Json to_json(const FeatureImportance& fi) {
  Json scores = Json::array();
  for (const auto& s : fi.scores) scores.push_back({{"feature", s.feature}, {"percent", s.percent}});
  return Json{{"scores", std::move(scores)},
              {"uninformative", fi.uninformative},
              {"baseline_accuracy", fi.baseline_accuracy}};
}

Json to_json(const DecisionRule& r) {
  Json conditions = Json::array();
  for (const auto& c : r.conditions) {
    conditions.push_back(
        {{"feature", c.feature}, {"op", to_string(c.op)}, {"threshold", c.threshold}});
  }
  return Json{{"conditions", std::move(conditions)},
              {"predicted_class", r.predicted_class},
              {"precision", r.precision},
              {"recall", r.recall},
              {"support", r.support},
              {"text", to_string(r)}};
}

Json to_json(const ExplanationBundle& b) {
  Json header{{"metrics", to_json(b.header.metrics)},
              {"accuracy_delta", optional_number(b.header.accuracy_delta)}};
  Json j{{"variant", to_string(b.variant)}, {"header", std::move(header)}};
  Json tiles = Json::array();
  for (Tile t : tiles_for(b.variant)) tiles.push_back(tile_code(t));
  j["tiles"] = std::move(tiles);
  const auto& p = b.parts;
  if (p.key_insights) j["key_insights"] = to_json(*p.key_insights);
  if (p.density) {
    Json d = Json::array();
    for (const auto& prof : *p.density) d.push_back(to_json(prof));
    j["density"] = std::move(d);
  }
  if (p.quality) j["quality"] = to_json(*p.quality);
  if (p.importances) j["importances"] = to_json(*p.importances);
  if (p.rules) {
    Json r = Json::array();
    for (const auto& rule : *p.rules) r.push_back(to_json(rule));
    j["rules"] = std::move(r);
  }
  Json help = Json::object();
  for (const auto& [tile, text] : b.help_texts) help[std::string(tile_code(tile))] = text;
  j["help"] = std::move(help);
  j["notes"] = b.notes;
  return j;
}

// ---------------------------------------------------------------------------
// Steering

Json to_json(const ManualConfig& c) {
  Json ranges = Json::object();
  for (const auto& [name, r] : c.ranges) ranges[name] = {{"lower", r.lower}, {"upper", r.upper}};
  return Json{{"included_features", c.included_features}, {"ranges", std::move(ranges)}};
}

ManualConfig manual_config_from_json(const Json& j) {
  return parse_guarded("manual config", [&] {
    ManualConfig c;
    c.included_features = j.at("included_features").get<std::vector<std::string>>();
    if (j.contains("ranges")) {
      for (const auto& [name, r] : j.at("ranges").items()) {
        // {"lower": a, "upper": b} or [a, b].
        Range range = r.is_array() ? Range{r.at(0).get<double>(), r.at(1).get<double>()}
                                   : Range{r.at("lower").get<double>(), r.at("upper").get<double>()};
        c.ranges.emplace(name, range);
      }
    }
    return c;
  });
}

Json to_json(const AutoConfig& c) {
  Json kinds = Json::array();
  for (IssueKind k : c.selected_issues) kinds.push_back(to_string(k));
  return Json{{"selected_issues", std::move(kinds)}, {"seed", c.seed}};
}

AutoConfig auto_config_from_json(const Json& j) {
  return parse_guarded("auto config", [&] {
    AutoConfig c;
    for (const auto& k : j.at("selected_issues")) {
      c.selected_issues.push_back(issue_kind_from_string(k.get<std::string>()));
    }
    if (j.contains("seed")) c.seed = j.at("seed").get<std::uint64_t>();
    return c;
  });
}

Json to_json(const Config& config) {
  Json j{{"kind", config_kind(config)}};
  if (const auto* m = std::get_if<ManualConfig>(&config)) j.update(to_json(*m));
  if (const auto* a = std::get_if<AutoConfig>(&config)) j.update(to_json(*a));
  return j;
}

Config config_from_json(const Json& j) {
  const auto kind = parse_guarded("config", [&] { return j.at("kind").get<std::string>(); });
  if (kind == "default") return DefaultConfig{};
  if (kind == "manual") return manual_config_from_json(j);
  if (kind == "auto") return auto_config_from_json(j);
  throw Error(ErrorCode::kBadRequest, "unknown config kind", kind);
}

Json to_json(const SampleWarning& w) {
  return Json{{"before_rows", w.before_rows},
              {"after_rows", w.after_rows},
              {"reduction_fraction", w.reduction_fraction}};
}

Json to_json(const ConfigVersion& v, bool with_bundle) {
  Json j{{"version_id", v.version_id},
         {"parent_id", v.parent_id ? Json(*v.parent_id) : Json(nullptr)},
         {"config", to_json(v.config)},
         {"table_digest", v.table_digest},
         {"metrics", to_json(v.metrics)},
         {"quality", to_json(v.quality)},
         {"created_at", v.created_at},
         {"saved", v.saved}};
  if (with_bundle) j["bundle"] = to_json(v.bundle);
  return j;
}

// ---------------------------------------------------------------------------
// Analytics

Json to_json(const InteractionEvent& e) {
  Json j{{"kind", to_string(e.kind)}, {"target", e.target}};
  j["duration_s"] = optional_number(e.duration_s);
  j["timestamp"] = e.timestamp;
  j["attempt_id"] = e.attempt_id ? Json(*e.attempt_id) : Json(nullptr);
  j["session_id"] = e.session_id;
  return j;
}

InteractionEvent event_from_json(const Json& j) {
  auto e = parse_guarded("event", [&] {
    InteractionEvent e;
    e.kind = event_kind_from_string(j.at("kind").get<std::string>());
    e.target = j.at("target").get<std::string>();
    if (j.contains("duration_s") && !j["duration_s"].is_null()) {
      e.duration_s = j["duration_s"].get<double>();
    }
    e.timestamp = j.value("timestamp", 0.0);
    if (j.contains("attempt_id") && !j["attempt_id"].is_null()) {
      e.attempt_id = j["attempt_id"].get<std::int64_t>();
    }
    e.session_id = j.value("session_id", std::string());
    return e;
  });
  validate(e);
  return e;
}

Json to_json(const AttemptRecord& a) {
  return Json{{"attempt_id", a.attempt_id},
              {"session_id", a.session_id},
              {"mechanism", to_string(a.mechanism)},
              {"resulting_test_accuracy", a.resulting_test_accuracy},
              {"default_test_accuracy", a.default_test_accuracy},
              {"success", a.success}};
}

AttemptRecord attempt_from_json(const Json& j) {
  return parse_guarded("attempt", [&] {
    AttemptRecord a = make_attempt(j.at("attempt_id").get<std::int64_t>(),
                                   j.value("session_id", std::string()),
                                   mechanism_from_string(j.at("mechanism").get<std::string>()),
                                   j.at("resulting_test_accuracy").get<double>(),
                                   j.value("default_test_accuracy", 0.0));
    // An explicit flag wins; logs from elsewhere may only carry the outcome.
    if (j.contains("success")) a.success = j.at("success").get<bool>();
    return a;
  });
}

Json to_json(const UsageSummary& s) {
  Json mech = Json::object();
  for (const auto& [m, st] : s.mechanisms) {
    mech[std::string(to_string(m))] = {{"attempts", st.attempts},
                                       {"successes", st.successes},
                                       {"hover_seconds", st.hover_seconds},
                                       {"effectiveness", optional_number(st.effectiveness)},
                                       {"efficiency", optional_number(st.efficiency)}};
  }
  return Json{{"users", s.users},
              {"avg_cpu", s.avg_cpu},
              {"avg_htpu", s.avg_htpu},
              {"cpu_by_target", s.cpu_by_target},
              {"htpu_by_target", s.htpu_by_target},
              {"mechanisms", std::move(mech)}};
}

// ---------------------------------------------------------------------------
// Model snapshots

Json model_to_json(const TrainedModel& model) {
  const auto& p = model.params();
  Json fps{{"mode", p.features_per_split.mode == FeaturesPerSplit::Mode::kSqrt  ? "sqrt"
                    : p.features_per_split.mode == FeaturesPerSplit::Mode::kAll ? "all"
                                                                                : "fixed"},
           {"k", p.features_per_split.k}};
  Json params{{"n_trees", p.n_trees},
              {"max_depth", p.max_depth ? Json(*p.max_depth) : Json(nullptr)},
              {"min_leaf", p.min_leaf},
              {"features_per_split", std::move(fps)},
              {"seed", p.seed}};
  Json trees = Json::array();
  for (const auto& t : model.trees()) {
    Json counts = Json::array();
    for (const auto& c : t.class_counts) counts.push_back({c[0], c[1]});
    trees.push_back({{"feature", t.feature},
                     {"threshold", t.threshold},
                     {"left", t.left},
                     {"right", t.right},
                     {"leaf_class", t.leaf_class},
                     {"class_counts", std::move(counts)}});
  }
  return Json{{"format", "exmos.forest"},
              {"format_version", kModelFormatVersion},
              {"feature_names", model.feature_names()},
              {"labels", model.labels()},
              {"params", std::move(params)},
              {"metrics", to_json(model.metrics())},
              {"trees", std::move(trees)}};
}

TrainedModel model_from_json(const Json& j) {
  try {
    if (j.at("format").get<std::string>() != "exmos.forest") {
      throw Error(ErrorCode::kInvalidModel, "not a forest snapshot");
    }
    const int version = j.at("format_version").get<int>();
    if (version > kModelFormatVersion || version < 1) {
      throw Error(ErrorCode::kUnknownVersion, "unsupported snapshot format",
                  std::to_string(version));
    }
    const Json& pj = j.at("params");
    ForestParams params;
    params.n_trees = pj.at("n_trees").get<int>();
    if (!pj.at("max_depth").is_null()) params.max_depth = pj.at("max_depth").get<int>();
    params.min_leaf = pj.at("min_leaf").get<int>();
    const auto mode = pj.at("features_per_split").at("mode").get<std::string>();
    params.features_per_split.mode = mode == "sqrt"  ? FeaturesPerSplit::Mode::kSqrt
                                     : mode == "all" ? FeaturesPerSplit::Mode::kAll
                                                     : FeaturesPerSplit::Mode::kFixed;
    params.features_per_split.k = pj.at("features_per_split").at("k").get<int>();
    params.seed = pj.at("seed").get<std::uint64_t>();

    std::vector<DecisionTree> trees;
    for (const auto& tj : j.at("trees")) {
      DecisionTree t;
      t.feature = tj.at("feature").get<std::vector<int>>();
      t.threshold = tj.at("threshold").get<std::vector<double>>();
      t.left = tj.at("left").get<std::vector<int>>();
      t.right = tj.at("right").get<std::vector<int>>();
      t.leaf_class = tj.at("leaf_class").get<std::vector<int>>();
      for (const auto& c : tj.at("class_counts")) {
        t.class_counts.push_back({c.at(0).get<std::int64_t>(), c.at(1).get<std::int64_t>()});
      }
      trees.push_back(std::move(t));
    }
    return TrainedModel(std::move(trees), params,
                        j.at("feature_names").get<std::vector<std::string>>(),
                        j.at("labels").get<std::array<double, 2>>(),
                        metrics_from_json(j.at("metrics")));
  } catch (const Json::exception& e) {
    throw Error(ErrorCode::kInvalidModel, "malformed forest snapshot", e.what());
  }
}

}  // namespace exmos
