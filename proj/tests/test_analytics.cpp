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

#include <filesystem>
#include <fstream>
#include <sstream>

#include "doctest.h"
#include "exmos/analytics.hpp"
#include "exmos/error.hpp"

using namespace exmos;

namespace {

ErrorCode code_of(auto&& fn) {
  try {
    fn();
  } catch (const Error& e) {
    return e.code();
  }
  FAIL("expected an exmos::Error");
  return ErrorCode::kNotFound;
}

InteractionEvent click(std::string target, std::string session = "u1") {
  return {EventKind::kClick, std::move(target), std::nullopt, 0, std::nullopt, std::move(session)};
}

InteractionEvent hover(std::string target, double s, std::string session = "u1") {
  return {EventKind::kHover, std::move(target), s, 0, std::nullopt, std::move(session)};
}

AttemptRecord attempt(std::int64_t id, Mechanism m, bool success) {
  return make_attempt(id, "u1", m, success ? 0.8 : 0.7, 0.75);
}

}  // namespace

TEST_CASE("clicks per user") {
  CHECK(clicks_per_user({click("KI"), click("DQ"), click("KI")}, 1) == 3.0);
  std::vector<InteractionEvent> two;
  for (int i = 0; i < 3; ++i) two.push_back(click("KI", "a"));
  for (int i = 0; i < 5; ++i) two.push_back(click("DQ", "b"));
  CHECK(clicks_per_user(two, 2) == 4.0);
  CHECK(code_of([] { clicks_per_user({}, 0); }) == ErrorCode::kEmptyCohort);
}

TEST_CASE("hover time per user") {
  const std::vector events{hover("KI", 2.0), hover("DQ", 3.0), click("KI")};
  CHECK(hover_time_per_user(events, 1) == 5.0);
  CHECK(hover_time_per_user({click("KI")}, 1) == 0.0);
  const auto by = hover_time_per_user_by_target(events, 1);
  double sum = 0;
  for (const auto& [_, v] : by) sum += v;
  CHECK(sum == 5.0);
  CHECK(by.at("DQ") == 3.0);
}

TEST_CASE("effectiveness") {
  CHECK(effectiveness({attempt(1, Mechanism::kManual, true), attempt(2, Mechanism::kManual, true),
                       attempt(3, Mechanism::kManual, true), attempt(4, Mechanism::kManual, false)}) ==
        0.75);
  std::vector<AttemptRecord> none;
  for (int i = 0; i < 5; ++i) none.push_back(attempt(i, Mechanism::kManual, false));
  CHECK(effectiveness(none) == 0.0);
  CHECK(code_of([] { effectiveness({}); }) == ErrorCode::kNoAttempts);
  // Equal accuracy is not a success.
  CHECK(!make_attempt(1, "u", Mechanism::kManual, 0.75, 0.75).success);
}

TEST_CASE("efficiency") {
  std::vector<AttemptRecord> four;
  for (int i = 0; i < 4; ++i) four.push_back(attempt(i, Mechanism::kManual, true));
  const std::vector events{hover("manual.age", 25.0), hover("manual.bmi", 35.0)};
  CHECK(efficiency(four, events) == 15.0);
  CHECK(efficiency({attempt(1, Mechanism::kManual, true)}, events) == 60.0);
  CHECK(code_of([&] { efficiency({attempt(1, Mechanism::kManual, false)}, events); }) ==
        ErrorCode::kNoSuccesses);

  SUBCASE("per mechanism counts only its own screens") {
    auto mixed = four;
    mixed.push_back(attempt(9, Mechanism::kAutomated, true));
    auto ev = events;
    ev.push_back(hover("auto.outliers", 10.0));
    ev.push_back(hover("KI", 100.0));
    CHECK(efficiency(mixed, ev, Mechanism::kManual) == 15.0);
    CHECK(efficiency(mixed, ev, Mechanism::kAutomated) == 10.0);
  }
}

TEST_CASE("event validation") {
  CHECK_NOTHROW(validate(hover("KI", 0.3)));
  CHECK(code_of([] { validate(hover("KI", 0)); }) == ErrorCode::kInvalidEvent);
  CHECK(code_of([] {
          auto c = click("KI");
          c.duration_s = 1.0;
          validate(c);
        }) == ErrorCode::kInvalidEvent);
  CHECK(code_of([] { validate(click("")); }) == ErrorCode::kInvalidEvent);
}

TEST_CASE("summary and journal replay") {
  const std::string journal =
      R"({"type":"event","kind":"click","target":"KI","session_id":"a"})" "\n"
      R"({"type":"event","kind":"hover","target":"manual.age","duration_s":30,"session_id":"a"})" "\n"
      "\n"
      R"({"type":"event","kind":"hover","target":"manual.bmi","duration_s":30,"session_id":"b"})" "\n"
      R"({"type":"attempt","attempt_id":1,"session_id":"a","mechanism":"manual","resulting_test_accuracy":0.8,"default_test_accuracy":0.75})" "\n"
      R"({"type":"attempt","attempt_id":2,"session_id":"a","mechanism":"manual","resulting_test_accuracy":0.79,"default_test_accuracy":0.75})" "\n"
      R"({"type":"attempt","attempt_id":3,"session_id":"b","mechanism":"manual","resulting_test_accuracy":0.76,"default_test_accuracy":0.75})" "\n"
      R"({"type":"attempt","attempt_id":4,"session_id":"b","mechanism":"manual","resulting_test_accuracy":0.70,"default_test_accuracy":0.75})" "\n";
  std::istringstream in(journal);
  const auto log = parse_usage_journal(in);
  CHECK(log.events.size() == 3);
  CHECK(log.attempts.size() == 4);
  const auto s = summarize(log.events, log.attempts);
  CHECK(s.users == 2);
  CHECK(s.avg_cpu == 0.5);
  CHECK(s.avg_htpu == 30.0);
  const auto& manual = s.mechanisms.at(Mechanism::kManual);
  CHECK(manual.effectiveness == 0.75);
  CHECK(manual.efficiency == 20.0);
  CHECK(!s.mechanisms.at(Mechanism::kAutomated).effectiveness);
  const auto text = format_usage_table(s);
  CHECK(text.find("0.75") != std::string::npos);
  CHECK(text.find("20.00") != std::string::npos);

  // Pure function of the log.
  std::istringstream again(journal);
  const auto log2 = parse_usage_journal(again);
  CHECK(format_usage_table(summarize(log2.events, log2.attempts)) == text);

  CHECK(code_of([] { summarize({}, {}); }) == ErrorCode::kEmptyCohort);
  std::istringstream bad(R"({"type":"event","kind":"hover","target":"KI"})");
  CHECK(code_of([&] { parse_usage_journal(bad); }) == ErrorCode::kInvalidEvent);
}

TEST_CASE("append and load") {
  const auto path = std::filesystem::temp_directory_path() / "exmos_test_usage.jsonl";
  std::filesystem::remove(path);
  append_usage(path, hover("DQ", 3.5, "s"));
  append_usage(path, make_attempt(1, "s", Mechanism::kAutomated, 0.8, 0.7));
  const auto log = load_usage_journal(path);
  REQUIRE(log.events.size() == 1);
  CHECK(log.events[0] == hover("DQ", 3.5, "s"));
  REQUIRE(log.attempts.size() == 1);
  CHECK(log.attempts[0].success);
  CHECK(code_of([] { load_usage_journal("/nonexistent/x.jsonl"); }) == ErrorCode::kIoError);
}
