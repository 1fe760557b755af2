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

#include "exmos/analytics.hpp"

#include <cmath>
#include <cstdio>
#include <fstream>
#include <set>
#include <sstream>

#include "exmos/error.hpp"
#include "exmos/serialize.hpp"

namespace exmos {

std::string_view to_string(EventKind kind) { return kind == EventKind::kClick ? "click" : "hover"; }

EventKind event_kind_from_string(std::string_view s) {
  if (s == "click") return EventKind::kClick;
  if (s == "hover") return EventKind::kHover;
  throw Error(ErrorCode::kInvalidEvent, "event kind must be click or hover", std::string(s));
}

void validate(const InteractionEvent& e) {
  if (e.target.empty()) throw Error(ErrorCode::kInvalidEvent, "event has no target");
  if (!std::isfinite(e.timestamp)) {
    throw Error(ErrorCode::kInvalidEvent, "timestamp must be finite", e.target);
  }
  if (e.kind == EventKind::kClick && e.duration_s) {
    throw Error(ErrorCode::kInvalidEvent, "click events carry no duration", e.target);
  }
  if (e.kind == EventKind::kHover &&
      !(e.duration_s && std::isfinite(*e.duration_s) && *e.duration_s > 0)) {
    throw Error(ErrorCode::kInvalidEvent, "hover duration must be > 0", e.target);
  }
}

std::string_view to_string(Mechanism m) { return m == Mechanism::kManual ? "manual" : "automated"; }

Mechanism mechanism_from_string(std::string_view s) {
  if (s == "manual") return Mechanism::kManual;
  if (s == "automated" || s == "auto") return Mechanism::kAutomated;
  throw Error(ErrorCode::kInvalidEvent, "mechanism must be manual or automated", std::string(s));
}

std::string_view screen_prefix(Mechanism m) { return m == Mechanism::kManual ? "manual" : "auto"; }

AttemptRecord make_attempt(std::int64_t attempt_id, std::string session_id, Mechanism mechanism,
                           double resulting_test_accuracy, double default_test_accuracy) {
  return {attempt_id,
          std::move(session_id),
          mechanism,
          resulting_test_accuracy,
          default_test_accuracy,
          resulting_test_accuracy > default_test_accuracy};
}

namespace {

void require_users(std::size_t users) {
  if (users == 0) throw Error(ErrorCode::kEmptyCohort, "no users in the cohort");
}

double hover_seconds(const std::vector<InteractionEvent>& events, std::string_view prefix = {}) {
  double total = 0;
  for (const auto& e : events) {
    if (e.kind == EventKind::kHover && e.target.starts_with(prefix)) total += e.duration_s.value_or(0);
  }
  return total;
}

std::int64_t successes(const std::vector<AttemptRecord>& attempts) {
  std::int64_t n = 0;
  for (const auto& a : attempts) n += a.success ? 1 : 0;
  return n;
}

}  // namespace

double clicks_per_user(const std::vector<InteractionEvent>& events, std::size_t users) {
  require_users(users);
  double clicks = 0;
  for (const auto& e : events) clicks += e.kind == EventKind::kClick ? 1 : 0;
  return clicks / static_cast<double>(users);
}

double hover_time_per_user(const std::vector<InteractionEvent>& events, std::size_t users) {
  require_users(users);
  return hover_seconds(events) / static_cast<double>(users);
}

std::map<std::string, double> clicks_per_user_by_target(const std::vector<InteractionEvent>& events,
                                                        std::size_t users) {
  require_users(users);
  std::map<std::string, double> out;
  for (const auto& e : events) {
    if (e.kind == EventKind::kClick) out[e.target] += 1;
  }
  for (auto& [_, v] : out) v /= static_cast<double>(users);
  return out;
}

std::map<std::string, double> hover_time_per_user_by_target(
    const std::vector<InteractionEvent>& events, std::size_t users) {
  require_users(users);
  std::map<std::string, double> out;
  for (const auto& e : events) {
    if (e.kind == EventKind::kHover) out[e.target] += e.duration_s.value_or(0);
  }
  for (auto& [_, v] : out) v /= static_cast<double>(users);
  return out;
}

double effectiveness(const std::vector<AttemptRecord>& attempts) {
  if (attempts.empty()) throw Error(ErrorCode::kNoAttempts, "no steering attempts");
  return static_cast<double>(successes(attempts)) / static_cast<double>(attempts.size());
}

double efficiency(const std::vector<AttemptRecord>& attempts,
                  const std::vector<InteractionEvent>& events) {
  if (attempts.empty()) throw Error(ErrorCode::kNoAttempts, "no steering attempts");
  const auto n = successes(attempts);
  if (n == 0) throw Error(ErrorCode::kNoSuccesses, "no successful attempts");
  return hover_seconds(events) / static_cast<double>(n);
}

double efficiency(const std::vector<AttemptRecord>& attempts,
                  const std::vector<InteractionEvent>& events, Mechanism mechanism) {
  std::vector<AttemptRecord> mine;
  for (const auto& a : attempts) {
    if (a.mechanism == mechanism) mine.push_back(a);
  }
  if (mine.empty()) {
    throw Error(ErrorCode::kNoAttempts, "no attempts for mechanism", std::string(to_string(mechanism)));
  }
  const auto n = successes(mine);
  if (n == 0) {
    throw Error(ErrorCode::kNoSuccesses, "no successful attempts for mechanism",
                std::string(to_string(mechanism)));
  }
  return hover_seconds(events, screen_prefix(mechanism)) / static_cast<double>(n);
}

UsageSummary summarize(const std::vector<InteractionEvent>& events,
                       const std::vector<AttemptRecord>& attempts,
                       const std::vector<std::string>& cohort) {
  std::set<std::string> users(cohort.begin(), cohort.end());
  for (const auto& e : events) users.insert(e.session_id);
  for (const auto& a : attempts) users.insert(a.session_id);
  UsageSummary s;
  s.users = users.size();
  s.avg_cpu = clicks_per_user(events, s.users);
  s.avg_htpu = hover_time_per_user(events, s.users);
  s.cpu_by_target = clicks_per_user_by_target(events, s.users);
  s.htpu_by_target = hover_time_per_user_by_target(events, s.users);
  for (Mechanism m : {Mechanism::kManual, Mechanism::kAutomated}) {
    MechanismStats st;
    for (const auto& a : attempts) {
      if (a.mechanism != m) continue;
      ++st.attempts;
      st.successes += a.success ? 1 : 0;
    }
    st.hover_seconds = hover_seconds(events, screen_prefix(m));
    if (st.attempts > 0) {
      st.effectiveness = static_cast<double>(st.successes) / static_cast<double>(st.attempts);
    }
    if (st.successes > 0) st.efficiency = st.hover_seconds / static_cast<double>(st.successes);
    s.mechanisms[m] = st;
  }
  return s;
}

std::string format_usage_table(const UsageSummary& s) {
  std::ostringstream out;
  char buf[160];
  auto opt = [](const std::optional<double>& v, const char* fmt) {
    if (!v) return std::string("-");
    char b[32];
    std::snprintf(b, sizeof b, fmt, *v);
    return std::string(b);
  };
  std::snprintf(buf, sizeof buf, "Usage (%zu users)\n", s.users);
  out << buf;
  std::snprintf(buf, sizeof buf, "  %-24s %10s %12s\n", "Target", "CPU", "HTPU (s)");
  out << buf;
  std::set<std::string> targets;
  for (const auto& [t, _] : s.cpu_by_target) targets.insert(t);
  for (const auto& [t, _] : s.htpu_by_target) targets.insert(t);
  for (const auto& t : targets) {
    const auto c = s.cpu_by_target.find(t);
    const auto h = s.htpu_by_target.find(t);
    std::snprintf(buf, sizeof buf, "  %-24s %10.2f %12.2f\n", t.c_str(),
                  c == s.cpu_by_target.end() ? 0.0 : c->second,
                  h == s.htpu_by_target.end() ? 0.0 : h->second);
    out << buf;
  }
  std::snprintf(buf, sizeof buf, "  %-24s %10.2f %12.2f\n", "Total", s.avg_cpu, s.avg_htpu);
  out << buf << "\nSteering outcomes\n";
  std::snprintf(buf, sizeof buf, "  %-10s %9s %10s %14s %20s\n", "Mechanism", "Attempts",
                "Successes", "Effectiveness", "Efficiency (s/succ)");
  out << buf;
  for (const auto& [m, st] : s.mechanisms) {
    std::snprintf(buf, sizeof buf, "  %-10s %9lld %10lld %14s %20s\n",
                  std::string(to_string(m)).c_str(), static_cast<long long>(st.attempts),
                  static_cast<long long>(st.successes), opt(st.effectiveness, "%.2f").c_str(),
                  opt(st.efficiency, "%.2f").c_str());
    out << buf;
  }
  return out.str();
}

// ---------------------------------------------------------------------------
// Journal

UsageLog parse_usage_journal(std::istream& in) {
  UsageLog log;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    Json j;
    try {
      j = Json::parse(line);
    } catch (const Json::exception& e) {
      throw Error(ErrorCode::kInvalidEvent, "unreadable journal line",
                  "line " + std::to_string(line_no) + ": " + e.what());
    }
    const std::string type = j.value("type", std::string("event"));
    try {
      if (type == "event") {
        log.events.push_back(event_from_json(j));
      } else if (type == "attempt") {
        log.attempts.push_back(attempt_from_json(j));
      } else {
        throw Error(ErrorCode::kInvalidEvent, "unknown record type", type);
      }
    } catch (const Error& e) {
      throw Error(ErrorCode::kInvalidEvent, e.message(),
                  "line " + std::to_string(line_no) + ": " + e.detail());
    }
  }
  return log;
}

UsageLog load_usage_journal(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorCode::kIoError, "cannot open journal", path.string());
  return parse_usage_journal(in);
}

namespace {

void append_line(const std::filesystem::path& path, std::string_view type, const Json& body) {
  Json j{{"type", type}};
  j.update(body);
  std::ofstream out(path, std::ios::app);
  out << j.dump() << '\n';
  out.flush();
  if (!out) throw Error(ErrorCode::kIoError, "cannot append to journal", path.string());
}

}  // namespace

void append_usage(const std::filesystem::path& path, const InteractionEvent& event) {
  validate(event);
  append_line(path, "event", to_json(event));
}

void append_usage(const std::filesystem::path& path, const AttemptRecord& attempt) {
  append_line(path, "attempt", to_json(attempt));
}

}  // namespace exmos
