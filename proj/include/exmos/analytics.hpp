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

// Usage and steering-outcome metrics computed from interaction logs.

#ifndef EXMOS_ANALYTICS_HPP_
#define EXMOS_ANALYTICS_HPP_

#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace exmos {

enum class EventKind { kClick, kHover };

std::string_view to_string(EventKind kind);
EventKind event_kind_from_string(std::string_view s);

/// A click or hover on a tile ("KI", "DQ", ...) or control ("manual.age").
struct InteractionEvent {
  EventKind kind = EventKind::kClick;
  std::string target;
  // Hover only; seconds, > 0.
  std::optional<double> duration_s;
  // Seconds since the epoch.
  double timestamp = 0;
  std::optional<std::int64_t> attempt_id;
  std::string session_id;

  bool operator==(const InteractionEvent&) const = default;
};

/// Throws InvalidEvent.
void validate(const InteractionEvent& event);

enum class Mechanism { kManual, kAutomated };

std::string_view to_string(Mechanism mechanism);
Mechanism mechanism_from_string(std::string_view s);

/// Screen prefix of a mechanism: "manual" or "auto". Events whose target
/// starts with it count toward that mechanism's hover time.
std::string_view screen_prefix(Mechanism mechanism);

/// One retrain under a manual or automated configuration.
struct AttemptRecord {
  std::int64_t attempt_id = 0;
  std::string session_id;
  Mechanism mechanism = Mechanism::kManual;
  double resulting_test_accuracy = 0;
  // The session's version-0 test accuracy.
  double default_test_accuracy = 0;
  bool success = false;

  bool operator==(const AttemptRecord&) const = default;
};

/// Sets success from the two accuracies.
AttemptRecord make_attempt(std::int64_t attempt_id, std::string session_id, Mechanism mechanism,
                           double resulting_test_accuracy, double default_test_accuracy);

/// Throws EmptyCohort when users is empty.
double clicks_per_user(const std::vector<InteractionEvent>& events, std::size_t users);
double hover_time_per_user(const std::vector<InteractionEvent>& events, std::size_t users);
std::map<std::string, double> clicks_per_user_by_target(const std::vector<InteractionEvent>& events,
                                                        std::size_t users);
std::map<std::string, double> hover_time_per_user_by_target(
    const std::vector<InteractionEvent>& events, std::size_t users);

/// successes / attempts. Throws NoAttempts.
double effectiveness(const std::vector<AttemptRecord>& attempts);

/// Total hover seconds / successes. Throws NoSuccesses.
double efficiency(const std::vector<AttemptRecord>& attempts,
                  const std::vector<InteractionEvent>& events);
/// Restricted to one mechanism's attempts and its screens' hover time.
double efficiency(const std::vector<AttemptRecord>& attempts,
                  const std::vector<InteractionEvent>& events, Mechanism mechanism);

struct MechanismStats {
  std::int64_t attempts = 0;
  std::int64_t successes = 0;
  double hover_seconds = 0;
  std::optional<double> effectiveness;
  std::optional<double> efficiency;
};

struct UsageSummary {
  std::size_t users = 0;
  double avg_cpu = 0;
  double avg_htpu = 0;
  std::map<std::string, double> cpu_by_target;
  std::map<std::string, double> htpu_by_target;
  std::map<Mechanism, MechanismStats> mechanisms;
};

/// Users are the distinct session ids seen in events and attempts, plus
/// any listed in `cohort` (users with no activity). Throws EmptyCohort
/// when there are none.
UsageSummary summarize(const std::vector<InteractionEvent>& events,
                       const std::vector<AttemptRecord>& attempts,
                       const std::vector<std::string>& cohort = {});

/// Plain-text usage and outcome tables.
std::string format_usage_table(const UsageSummary& summary);

// ---------------------------------------------------------------------------
// Journal

struct UsageLog {
  std::vector<InteractionEvent> events;
  std::vector<AttemptRecord> attempts;
};

/// JSON lines; each record has "type": "event" or "attempt". Blank lines are
/// skipped. Throws IoError, InvalidEvent.
UsageLog load_usage_journal(const std::filesystem::path& path);
UsageLog parse_usage_journal(std::istream& in);

void append_usage(const std::filesystem::path& path, const InteractionEvent& event);
void append_usage(const std::filesystem::path& path, const AttemptRecord& attempt);

}  // namespace exmos

#endif  // EXMOS_ANALYTICS_HPP_
