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

#include <algorithm>
#include <filesystem>
#include <fstream>
#include <set>
#include <sstream>

#include "doctest.h"
#include "exmos/error.hpp"
#include "exmos/random.hpp"
#include "exmos/steering.hpp"
#include "test_util.hpp"

using namespace exmos;
using exmos::testing::column_table;
using exmos::testing::data_dir;
using exmos::testing::load_pima;
using exmos::testing::make_table;

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

SessionSettings fixed_clock() {
  SessionSettings s;
  s.clock = [] { return std::string("2026-01-01T00:00:00Z"); };
  return s;
}

std::vector<std::string> all_but(const DataTable& t, std::string_view drop) {
  std::vector<std::string> out;
  for (const auto& n : t.predictor_names()) {
    if (n != drop) out.push_back(n);
  }
  return out;
}

std::filesystem::path temp_path(const std::string& name) {
  return std::filesystem::temp_directory_path() / ("exmos_test_" + name);
}

bool mentions(const ExplanationBundle& b, const std::string& f) {
  const auto& p = b.parts;
  for (const auto& s : p.importances->scores) {
    if (s.feature == f) return true;
  }
  for (const auto& r : *p.rules) {
    for (const auto& c : r.conditions) {
      if (c.feature == f) return true;
    }
  }
  for (const auto* list : {&p.key_insights->top, &p.key_insights->rest}) {
    for (const auto& k : *list) {
      if (k.feature == f) return true;
    }
  }
  for (const auto& d : *p.density) {
    if (d.feature == f) return true;
  }
  return false;
}

}  // namespace

TEST_CASE("apply_manual") {
  const auto pima = load_pima();
  SUBCASE("excluding a feature drops only that column") {
    const auto r = apply_manual(pima, {all_but(pima, "DiastolicBP"), {}});
    CHECK(!r.table.find("DiastolicBP"));
    CHECK(r.table.rows() == pima.rows());
    CHECK(r.table.cols() == pima.cols() - 1);
    CHECK(!r.warning);
  }
  SUBCASE("age range matches a count taken straight from the file") {
    std::ifstream in(data_dir() / "pima.csv");
    std::string line;
    std::getline(in, line);
    int kept = 0;
    while (std::getline(in, line)) {
      const auto comma = line.find_last_of(',');
      const auto age_start = line.find_last_of(',', comma - 1) + 1;
      const double age = std::stod(line.substr(age_start, comma - age_start));
      kept += age >= 21 && age <= 80;
    }
    const auto r = apply_manual(pima, {pima.predictor_names(), {{"Age", {21, 80}}}});
    CHECK(r.table.rows() == kept);
    CHECK(r.table.rows() == pima.rows() - 1);
    CHECK(r.table.column("Age").maxCoeff() <= 80);
  }
  SUBCASE("sample warning is strictly above one half") {
    const auto t = column_table({0, 1, 2, 3, 4, 5, 6, 7, 8, 9});
    const auto sixty = apply_manual(t, {{"x"}, {{"x", {0, 3}}}});
    REQUIRE(sixty.warning.has_value());
    CHECK(sixty.warning->before_rows == 10);
    CHECK(sixty.warning->after_rows == 4);
    CHECK(sixty.warning->reduction_fraction == doctest::Approx(0.6));
    CHECK(!apply_manual(t, {{"x"}, {{"x", {0, 4}}}}).warning);
    // Bounds are inclusive.
    CHECK(apply_manual(t, {{"x"}, {{"x", {2, 2}}}}).table.rows() == 1);
  }
  SUBCASE("errors") {
    CHECK(code_of([&] { apply_manual(pima, {{"Age"}, {{"Age", {50, 30}}}}); }) ==
          ErrorCode::kInvertedRange);
    CHECK(code_of([&] { apply_manual(pima, {{"Nope"}, {}}); }) == ErrorCode::kUnknownFeature);
    CHECK(code_of([&] { apply_manual(pima, {{"Age"}, {{"Nope", {0, 1}}}}); }) ==
          ErrorCode::kUnknownFeature);
    CHECK(code_of([&] { apply_manual(pima, {{"Age"}, {{"BMI", {0, 1}}}}); }) ==
          ErrorCode::kInvalidArgument);
    CHECK(code_of([&] { apply_manual(pima, {{"Age"}, {{"Age", {200, 300}}}}); }) ==
          ErrorCode::kAllRowsFiltered);
    CHECK(code_of([&] { apply_manual(pima, {{}, {}}); }) == ErrorCode::kInvalidArgument);
    CHECK(code_of([&] { apply_manual(pima, {{"Outcome"}, {}}); }) == ErrorCode::kInvalidArgument);
  }
  SUBCASE("idempotent on random configs") {
    Rng rng(7);
    const auto names = pima.predictor_names();
    for (int trial = 0; trial < 200; ++trial) {
      ManualConfig c;
      for (const auto& n : names) {
        if (rng.unit() < 0.6) c.included_features.push_back(n);
      }
      if (c.included_features.empty()) c.included_features.push_back(names[rng.index(names.size())]);
      for (const auto& n : c.included_features) {
        if (rng.unit() < 0.4) {
          const auto col = pima.column(n);
          const double lo = col.minCoeff(), hi = col.maxCoeff();
          double a = lo + rng.unit() * (hi - lo), b = lo + rng.unit() * (hi - lo);
          if (a > b) std::swap(a, b);
          c.ranges[n] = {a, b};
        }
      }
      try {
        const auto once = apply_manual(pima, c);
        const auto twice = apply_manual(once.table, c);
        CHECK(twice.table == once.table);
        CHECK(!twice.warning);
        CHECK(once.table.cols() == static_cast<Eigen::Index>(c.included_features.size() + 1));
      } catch (const Error& e) {
        CHECK(e.code() == ErrorCode::kAllRowsFiltered);
      }
    }
  }
}

TEST_CASE("apply_auto") {
  SUBCASE("one duplicate removed") {
    const auto t = make_table({"a", "b"}, {{1, 2, 0}, {1, 2, 0}, {3, 1, 1}, {5, 7, 1}, {2, 9, 0}});
    const auto r = apply_auto(t, {{IssueKind::kRedundantRows}}, t);
    CHECK(r.outcomes.size() == 1);
    CHECK(r.table.rows() == 4);
  }
  SUBCASE("imbalance on Pima equalizes classes") {
    const auto pima = load_pima();
    const auto r = apply_auto(pima, {{IssueKind::kClassImbalance}}, pima);
    const auto counts = class_counts(r.table);
    CHECK(counts.counts[0] == counts.counts[1]);
    CHECK(counts.counts[0] == 500);
  }
  SUBCASE("contract errors") {
    const auto t = column_table({1, 2, 3, 4, 5, 6});
    CHECK(code_of([&] { apply_auto(t, {{}}, t); }) == ErrorCode::kInvalidArgument);
    CHECK(code_of([&] { apply_auto(t, {{IssueKind::kDataDrift}}, t); }) ==
          ErrorCode::kNotCorrectable);
    CHECK(code_of([&] { apply_auto(t, {{IssueKind::kRedundantRows, IssueKind::kOutliers}}, t); }) ==
          ErrorCode::kNothingToCorrect);
  }
  SUBCASE("corrections follow the fixed order") {
    const auto pima = load_pima();
    AutoConfig all;
    for (auto it = kCorrectionOrder.rbegin(); it != kCorrectionOrder.rend(); ++it) {
      all.selected_issues.push_back(*it);
    }
    const auto r = apply_auto(pima, all, pima);
    for (std::size_t i = 1; i < r.outcomes.size(); ++i) {
      const auto pos = [](IssueKind k) {
        return std::find(kCorrectionOrder.begin(), kCorrectionOrder.end(), k) - kCorrectionOrder.begin();
      };
      CHECK(pos(r.outcomes[i - 1].kind) < pos(r.outcomes[i].kind));
    }
  }
}

TEST_CASE("steering session") {
  const auto pima = load_pima();
  SteeringSession s(pima, fixed_clock());
  const ConfigVersion v0 = s.head();
  CHECK(v0.version_id == 0);
  CHECK(v0.saved);
  CHECK(!v0.parent_id);
  CHECK(std::holds_alternative<DefaultConfig>(v0.config));
  CHECK(v0.table_digest == table_digest(pima));

  SUBCASE("retrain without changes is bit-identical") {
    const auto& v1 = s.retrain();
    CHECK(v1.version_id == 1);
    CHECK(v1.parent_id == 0);
    CHECK(!v1.saved);
    CHECK(v1.metrics == v0.metrics);
    CHECK(v1.table_digest == v0.table_digest);
    REQUIRE(v1.bundle.header.accuracy_delta.has_value());
    CHECK(*v1.bundle.header.accuracy_delta == 0.0);
  }
  SUBCASE("excluded feature disappears from every explanation") {
    CHECK(mentions(v0.bundle, "Insulin"));
    s.stage_manual({all_but(pima, "Insulin"), {}});
    const auto& v1 = s.retrain();
    CHECK(!mentions(v1.bundle, "Insulin"));
    CHECK(v1.metrics.n_features == 7);
  }
  SUBCASE("auto-correcting everything raises the quality score") {
    AutoConfig all{{kCorrectionOrder.begin(), kCorrectionOrder.end()}, 42};
    s.stage_auto(all);
    const auto& v1 = s.retrain();
    CHECK(v1.quality.score > v0.quality.score);
  }
  SUBCASE("save and discard") {
    s.retrain();
    s.save();
    CHECK(code_of([&] { s.discard(); }) == ErrorCode::kNothingUnsaved);
    CHECK(code_of([&] { s.save(); }) == ErrorCode::kNothingUnsaved);
    s.stage_manual({all_but(pima, "Age"), {}});
    s.retrain();
    s.stage_manual({all_but(s.head_table(), "BMI"), {}});
    s.retrain();
    CHECK(s.head().version_id == 3);
    const auto& back = s.discard();
    CHECK(back.version_id == 1);
    CHECK(s.head_table().find("Age").has_value());
    CHECK(table_digest(s.head_table()) == back.table_digest);
  }
  SUBCASE("revert") {
    s.stage_manual({all_but(pima, "Glucose"), {}});
    s.retrain();
    const auto& back = s.revert_to(0);
    CHECK(back.metrics == v0.metrics);
    CHECK(table_digest(s.head_table()) == v0.table_digest);
    CHECK(s.retrain().metrics == v0.metrics);
    CHECK(code_of([&] { s.revert_to(7); }) == ErrorCode::kUnknownVersion);
    CHECK(code_of([&] { s.revert_to(1); }) == ErrorCode::kUnknownVersion);
  }
  SUBCASE("failed retrain leaves the state untouched") {
    // Only rows with Outcome 0 survive this range, so training cannot proceed.
    s.stage_manual({{"Glucose"}, {{"Glucose", {0, 60}}}});
    CHECK_THROWS_AS(s.retrain(), Error);
    CHECK(s.history().size() == 1);
    CHECK(s.head().version_id == 0);
    CHECK(s.head_table() == pima);
  }
  SUBCASE("history is a tree with increasing ids") {
    s.retrain();
    s.save();
    s.stage_manual({all_but(pima, "Age"), {}});
    s.retrain();
    s.discard();
    s.stage_auto({{IssueKind::kRedundantRows, IssueKind::kOutliers}, 1});
    s.retrain();
    for (const auto& v : s.history()) {
      if (v.parent_id) CHECK(*v.parent_id < v.version_id);
    }
    CHECK(s.history().back().parent_id == 1);
    CHECK(s.verify_replay().empty());
  }
}

TEST_CASE("journal round trip") {
  const auto pima = load_pima();
  const auto path = temp_path("steering.jsonl");
  {
    SteeringSession s(pima, fixed_clock(), path);
    s.stage_manual({pima.predictor_names(), {{"Age", {21, 60}}}});
    s.retrain();
    s.save();
    s.stage_auto({{IssueKind::kClassImbalance}, 3});
    s.retrain();
    s.revert_to(1);
  }
  const auto restored = SteeringSession::restore(pima, path, fixed_clock());
  REQUIRE(restored.history().size() == 3);
  CHECK(restored.head().version_id == 1);
  CHECK(restored.version(1).saved);
  CHECK(!restored.version(2).saved);
  CHECK(table_digest(restored.head_table()) == restored.head().table_digest);
  CHECK(restored.verify_replay().empty());

  SUBCASE("tampered digest is detected") {
    std::ifstream in(path);
    std::stringstream all;
    all << in.rdbuf();
    std::string text = all.str();
    const auto digest = restored.version(2).table_digest;
    text.replace(text.find(digest), 4, "0000");
    const auto bad = temp_path("steering_bad.jsonl");
    std::ofstream(bad) << text;
    CHECK(code_of([&] { SteeringSession::restore(pima, bad, fixed_clock()); }) ==
          ErrorCode::kJournalCorrupt);
  }
  SUBCASE("garbage line") {
    const auto bad = temp_path("steering_garbage.jsonl");
    std::ofstream(bad) << "{not json\n";
    CHECK(code_of([&] { SteeringSession::restore(pima, bad, fixed_clock()); }) ==
          ErrorCode::kJournalCorrupt);
  }
}
