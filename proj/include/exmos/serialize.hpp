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

// JSON forms of the public types. Field names are snake_case and objects
// keep a fixed key order, so output is byte-stable for a given input.

#ifndef EXMOS_SERIALIZE_HPP_
#define EXMOS_SERIALIZE_HPP_

#include <string>

#include "exmos/analytics.hpp"
#include "exmos/dataset.hpp"
#include "exmos/error.hpp"
#include "exmos/explain.hpp"
#include "exmos/model.hpp"
#include "exmos/quality.hpp"
#include "exmos/steering.hpp"
#include "json.hpp"

namespace exmos {

using Json = nlohmann::ordered_json;

Json to_json(const Error& error);

Json to_json(const FeatureMeta& meta);
Json to_json(const Schema& schema);
Json to_json(const ColumnStats& stats);

Json to_json(const ModelMetrics& metrics);
ModelMetrics metrics_from_json(const Json& j);

Json to_json(const IssueReport& issue);
Json to_json(const QualityReport& report);
/// Counts and parents only; the corrected table is not included.
Json to_json(const CorrectionOutcome& outcome);

Json to_json(const KeyInsight& insight);
Json to_json(const InsightList& insights);
Json to_json(const DensityProfile& profile);
Json to_json(const FeatureImportance& importance);
Json to_json(const DecisionRule& rule);
/// Only the tiles present in the bundle appear as keys.
Json to_json(const ExplanationBundle& bundle);

Json to_json(const ManualConfig& config);
ManualConfig manual_config_from_json(const Json& j);
Json to_json(const AutoConfig& config);
AutoConfig auto_config_from_json(const Json& j);
/// {"kind": "default" | "manual" | "auto", ...}.
Json to_json(const Config& config);
Config config_from_json(const Json& j);
Json to_json(const SampleWarning& warning);
Json to_json(const ConfigVersion& version, bool with_bundle = true);

Json to_json(const InteractionEvent& event);
InteractionEvent event_from_json(const Json& j);
Json to_json(const AttemptRecord& attempt);
AttemptRecord attempt_from_json(const Json& j);
Json to_json(const UsageSummary& summary);

// ---------------------------------------------------------------------------
// Model snapshots

inline constexpr int kModelFormatVersion = 1;

/// Versioned, self-contained forest snapshot. Reloading reproduces every
/// prediction bit for bit.
Json model_to_json(const TrainedModel& model);
/// Throws UnknownVersion for a newer format, InvalidModel for bad content.
TrainedModel model_from_json(const Json& j);

}  // namespace exmos

#endif  // EXMOS_SERIALIZE_HPP_
