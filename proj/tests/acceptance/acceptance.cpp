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

// Acceptance suite: one PASS/FAIL line per primary criterion.

#include <sys/wait.h>

#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <functional>
#include <map>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include "detector_corpus.hpp"
#include "exmos/error.hpp"
#include "exmos/random.hpp"
#include "exmos/serialize.hpp"
#include "exmos/service.hpp"
#include "exmos/steering.hpp"

using namespace exmos;
namespace fs = std::filesystem;

namespace {

struct Outcome {
  bool pass = false;
  std::string detail;
};

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point start) {
  return std::chrono::duration<double>(Clock::now() - start).count();
}

std::string fmt(const char* f, auto... args) {
  char buf[256];
  std::snprintf(buf, sizeof buf, f, args...);
  return buf;
}

struct Run {
  int exit_code = -1;
  std::string out;
};

Run cli(const std::string& args) {
  const std::string cmd = std::string(EXMOS_CLI) + " " + args + " 2>/dev/null";
  Run r;
  FILE* pipe = popen(cmd.c_str(), "r");
  if (pipe == nullptr) return r;
  char buf[4096];
  std::size_t n;
  while ((n = fread(buf, 1, sizeof buf, pipe)) > 0) r.out.append(buf, n);
  const int status = pclose(pipe);
  r.exit_code = WIFEXITED(status) ? WEXITSTATUS(status) : -1;
  return r;
}

fs::path data_dir() { return EXMOS_DATA_DIR; }

DataTable pima() {
  return load_csv(data_dir() / "pima.csv", load_meta(data_dir() / "pima.meta.json"));
}

fs::path scratch(const std::string& name) {
  const auto dir = fs::temp_directory_path() / "exmos_acceptance";
  fs::create_directories(dir);
  return dir / name;
}

Response call(Service& svc, const std::string& method, const std::string& path,
              const Json& body = Json::object()) {
  return svc.handle({method, path, body.dump(), {}});
}

// ---------------------------------------------------------------------------

Outcome baseline_reproduction() {
  const auto start = Clock::now();
  const Run r = cli("train");
  const double elapsed = seconds_since(start);
  if (r.exit_code != 0) return {false, fmt("exmos train exited with %d", r.exit_code)};
  const Json j = Json::parse(r.out);
  const double test = j["metrics"]["test_accuracy"];
  const double train = j["metrics"]["train_accuracy"];
  const bool ok = test >= 0.74 && test <= 0.84 && train >= test && elapsed < 10.0;
  return {ok, fmt("test %.4f in [0.74, 0.84], train %.4f >= test, %.2f s < 10 s", test, train,
                  elapsed)};
}

Outcome quality_thresholds() {
  auto reports = [](const std::vector<double>& subscores) {
    std::vector<IssueReport> out;
    for (std::size_t i = 0; i < kAllIssueKinds.size(); ++i) {
      IssueReport r;
      r.kind = kAllIssueKinds[i];
      r.subscore = subscores[i];
      r.impact = 100 - r.subscore;
      out.push_back(r);
    }
    return out;
  };
  struct Boundary {
    std::vector<double> subscores;
    QualityLevel want;
  };
  const std::vector<Boundary> boundaries = {
      {{80, 80, 80, 80, 80, 80}, QualityLevel::kModerate},
      {{100, 100, 100, 60, 60, 60}, QualityLevel::kModerate},
      {{80.01, 80.01, 80.01, 80.01, 80.01, 80.01}, QualityLevel::kGood},
      {{50, 50, 50, 50, 50, 50}, QualityLevel::kModerate},
      {{100, 0, 100, 0, 100, 0}, QualityLevel::kModerate},
      {{49.99, 49.99, 49.99, 49.99, 49.99, 49.99}, QualityLevel::kPoor},
  };
  for (const auto& b : boundaries) {
    const auto q = quality_score(reports(b.subscores));
    if (q.level != b.want) {
      return {false, fmt("score %.6f mapped to %s", q.score, std::string(to_string(q.level)).c_str())};
    }
  }
  Rng rng(2024);
  const int n = 20000;
  double worst = 0;
  for (int i = 0; i < n; ++i) {
    std::vector<double> s(6);
    for (auto& v : s) {
      // Mix of grid values (hits boundaries) and continuous ones.
      v = rng.index(3) == 0 ? static_cast<double>(rng.index(21)) * 5 : rng.unit() * 100;
    }
    long double mean = 0;
    for (double v : s) mean += v;
    mean /= 6;
    const auto q = quality_score(reports(s));
    worst = std::max(worst, static_cast<double>(std::fabs(q.score - mean)));
    if (std::fabs(q.score - mean) > 1e-9) return {false, fmt("score differs from mean by %g", worst)};
    const double m = static_cast<double>(mean);
    const QualityLevel want = m > 80   ? QualityLevel::kGood
                              : m >= 50 ? QualityLevel::kModerate
                                        : QualityLevel::kPoor;
    const bool near_edge = std::fabs(m - 80) < 1e-9 || std::fabs(m - 50) < 1e-9;
    if (!near_edge && q.level != want) return {false, fmt("level mismatch at score %.12f", m)};
  }
  return {true, fmt("6 boundary vectors exact; %d random vectors, max |score - mean| = %.1e", n, worst)};
}

Outcome detector_oracle() {
  const auto start = Clock::now();
  Rng rng(20240601);
  const int n = 2000;
  for (int i = 0; i < n; ++i) {
    const auto c = testing::random_case(rng);
    if (auto why = testing::compare_detectors(c)) return {false, fmt("case %d: %s", i, why->c_str())};
  }
  const double elapsed = seconds_since(start);
  return {elapsed < 60.0, fmt("%d random tables (<= 8 rows, <= 3 predictors), 6 detectors, %.2f s", n, elapsed)};
}

Outcome smote_properties() {
  Rng rng(99);
  int cases = 0;
  std::int64_t synthetic = 0;
  for (int trial = 0; trial < 300; ++trial) {
    const std::size_t n = 8 + rng.index(50);
    const std::size_t p = 1 + rng.index(4);
    const bool with_binary = rng.index(3) == 0;
    Schema schema;
    for (std::size_t c = 0; c < p; ++c) {
      FeatureMeta f;
      f.name = "f" + std::to_string(c);
      if (with_binary && c == 0) f.kind = FeatureKind::kBinaryCategorical;
      schema.push_back(f);
    }
    FeatureMeta y;
    y.name = "y";
    y.kind = FeatureKind::kBinaryCategorical;
    y.target = true;
    schema.push_back(y);
    Eigen::MatrixXd cells(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(p + 1));
    const double minority_share = 0.1 + 0.3 * rng.unit();
    std::vector<RowId> ids;
    for (std::size_t r = 0; r < n; ++r) {
      for (std::size_t c = 0; c < p; ++c) {
        double v = (with_binary && c == 0) ? static_cast<double>(rng.index(2))
                                          : std::round(rng.unit() * 40) / 4 - 5;
        cells(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(c)) = v;
      }
      // Rows 0-1 are minority and row 2 majority, so both classes exist.
      const bool minority = r < 2 || (r > 2 && rng.unit() < minority_share);
      cells(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(p)) = minority ? 1 : 0;
      ids.push_back(static_cast<RowId>(r * 3 + 1));
    }
    const DataTable table(schema, cells, ids);
    const auto counts = class_counts(table);
    if (counts.counts[0] == counts.counts[1]) continue;
    ++cases;
    const std::uint64_t seed = rng.next();
    const auto out = correct_issue(table, IssueKind::kClassImbalance, table, seed);
    const auto after = class_counts(out.table_after);
    if (after.counts[0] != after.counts[1]) return {false, fmt("trial %d: classes unequal", trial)};
    std::map<RowId, Eigen::Index> pos;
    for (Eigen::Index r = 0; r < out.table_after.rows(); ++r) pos[out.table_after.row_ids()[r]] = r;
    const auto& x = out.table_after.cells();
    for (std::size_t s = 0; s < out.synthetic_parents.size(); ++s) {
      const Eigen::Index row = table.rows() + static_cast<Eigen::Index>(s);
      const auto [a, b] = out.synthetic_parents[s];
      for (std::size_t c = 0; c < p; ++c) {
        const auto col = static_cast<Eigen::Index>(c);
        const double lo = std::min(x(pos.at(a), col), x(pos.at(b), col));
        const double hi = std::max(x(pos.at(a), col), x(pos.at(b), col));
        if (x(row, col) < lo || x(row, col) > hi) {
          return {false, fmt("trial %d: synthetic row outside its parents' box", trial)};
        }
      }
      ++synthetic;
    }
    const auto again = correct_issue(table, IssueKind::kClassImbalance, table, seed);
    if (!(again.table_after == out.table_after)) return {false, fmt("trial %d: not reproducible", trial)};
  }
  const auto p = pima();
  const auto a = correct_issue(p, IssueKind::kClassImbalance, p, 42);
  const auto b = correct_issue(p, IssueKind::kClassImbalance, p, 42);
  const auto pc = class_counts(a.table_after);
  const bool ok = pc.counts[0] == pc.counts[1] && a.table_after == b.table_after &&
                  table_digest(a.table_after) == table_digest(b.table_after);
  return {ok, fmt("%d imbalanced tables, %lld synthetic rows inside parent boxes; Pima %lld/%lld",
                  cases, static_cast<long long>(synthetic), static_cast<long long>(pc.counts[0]),
                  static_cast<long long>(pc.counts[1]))};
}

Outcome recalibration() {
  const DataTable data = pima();
  Service svc(data, {});
  const auto created = call(svc, "POST", "/sessions", {{"variant", "HYB"}});
  const std::string base = "/sessions/" + created.body["session_id"].get<std::string>();
  const auto names = data.predictor_names();
  for (const auto& f : names) {
    std::vector<std::string> keep;
    for (const auto& n : names) {
      if (n != f) keep.push_back(n);
    }
    if (call(svc, "POST", base + "/config/manual", {{"included_features", keep}}).status != 200) {
      return {false, "manual config rejected for " + f};
    }
    const auto v = call(svc, "POST", base + "/retrain");
    if (v.status != 200) return {false, "retrain failed after excluding " + f};
    const Json& b = v.body["bundle"];
    std::set<std::string> seen;
    for (const auto& s : b["importances"]["scores"]) seen.insert(s["feature"]);
    for (const auto& r : b["rules"]) {
      for (const auto& c : r["conditions"]) seen.insert(c["feature"]);
    }
    for (const char* part : {"top", "rest"}) {
      for (const auto& k : b["key_insights"][part]) seen.insert(k["feature"]);
    }
    for (const auto& d : b["density"]) seen.insert(d["feature"]);
    if (seen.count(f)) return {false, f + " still appears in the bundle"};
    if (b["importances"]["scores"].size() != keep.size()) return {false, "importance count mismatch"};
    if (call(svc, "POST", base + "/revert/0").status != 200) return {false, "revert failed"};
  }
  return {true, fmt("each of %zu features excluded in turn; absent from importances, rules, "
                    "insights and density", names.size())};
}

Outcome rollback_fidelity() {
  const DataTable data = pima();
  const auto dir = scratch("rollback");
  fs::remove_all(dir);
  Json history;
  std::string sid;
  {
    Service svc(data, {}, dir);
    const auto created = call(svc, "POST", "/sessions", {{"variant", "HYB"}});
    sid = created.body["session_id"];
    const std::string base = "/sessions/" + sid;
    const Json v0 = call(svc, "GET", base + "/history").body["versions"][0];
    auto names = data.predictor_names();
    names.erase(std::find(names.begin(), names.end(), "SkinThickness"));
    const std::vector<std::pair<std::string, Json>> script = {
        {"/config/manual", {{"included_features", names}, {"ranges", {{"Age", {21, 70}}}}}},
        {"/retrain", Json::object()},
        {"/config/auto", {{"selected_issues", {"Outliers", "Skewness", "ClassImbalance"}}, {"seed", 5}}},
        {"/retrain", Json::object()},
        {"/revert/0", Json::object()},
    };
    for (const auto& [path, body] : script) {
      const auto r = call(svc, "POST", base + path, body);
      if (r.status != 200) return {false, path + " failed: " + r.body.dump()};
    }
    const Json head = call(svc, "GET", base + "/history").body;
    if (head["head"] != 0) return {false, "head is not version 0 after revert"};
    const auto again = call(svc, "POST", base + "/retrain");
    if (again.body["version"]["metrics"] != v0["metrics"] ||
        again.body["version"]["table_digest"] != v0["table_digest"]) {
      return {false, "retrain after revert differs from version 0"};
    }
    history = call(svc, "GET", base + "/history").body;
  }
  // Rebuild from the journal alone.
  const auto restored = SteeringSession::restore(data, dir / (sid + ".steering.jsonl"));
  const auto bad = restored.verify_replay();
  if (!bad.empty()) return {false, fmt("replay mismatch at version %lld", static_cast<long long>(bad[0]))};
  for (const auto& v : history["versions"]) {
    const auto& r = restored.version(v["version_id"].get<VersionId>());
    if (r.table_digest != v["table_digest"] || to_json(r.metrics) != v["metrics"]) {
      return {false, "restored version differs from the live one"};
    }
  }
  Service recovered(data, {}, dir);
  const bool same = call(recovered, "GET", "/sessions/" + sid + "/history").body == history;
  return {same, fmt("manual -> retrain -> auto -> retrain -> revert(0) restores v0 bit-exactly; "
                    "journal replay reproduces all %zu digests and metrics",
                    history["versions"].size())};
}

Outcome steerability() {
  const DataTable data = pima();
  Service svc(data, {});
  const auto created = call(svc, "POST", "/sessions", {{"variant", "HYB"}});
  const std::string base = "/sessions/" + created.body["session_id"].get<std::string>();
  const double v0 = created.body["dashboard"]["bundle"]["header"]["metrics"]["test_accuracy"];

  auto names = data.predictor_names();
  std::vector<std::string> no_preg;
  for (const auto& n : names) {
    if (n != "Pregnancies") no_preg.push_back(n);
  }
  const std::vector<std::tuple<std::string, std::string, Json>> configs = {
      {"auto-correct all correctable issues", "/config/auto",
       {{"selected_issues", {"Outliers", "RedundantRows", "CorrelatedFeatures", "ClassImbalance", "Skewness"}}}},
      {"exclude Pregnancies", "/config/manual", {{"included_features", no_preg}}},
  };
  std::string detail = fmt("v0 test %.4f", v0);
  bool any = false;
  for (const auto& [label, path, body] : configs) {
    call(svc, "POST", base + "/revert/0");
    const auto staged = call(svc, "POST", base + path, body);
    if (staged.status != 200) {
      detail += "; " + label + ": " + staged.body["error"]["code"].get<std::string>();
      continue;
    }
    const auto v = call(svc, "POST", base + "/retrain");
    const double acc = v.body["version"]["metrics"]["test_accuracy"];
    any = any || acc > v0;
    detail += fmt("; %s -> %.4f", label.c_str(), acc);
  }
  const auto summary = call(svc, "GET", "/analytics").body["summary"];
  const auto successes = summary["mechanisms"]["manual"]["successes"].get<int>() +
                         summary["mechanisms"]["automated"]["successes"].get<int>();
  return {any && successes > 0, detail};
}

Outcome analytics_formulas() {
  const auto effectiveness_log = scratch("effectiveness.jsonl");
  const auto efficiency_log = scratch("efficiency.jsonl");
  {
    std::ofstream out(effectiveness_log);
    const double results[] = {0.80, 0.79, 0.77, 0.70};
    for (int i = 0; i < 4; ++i) {
      out << R"({"type":"attempt","attempt_id":)" << i
          << R"(,"session_id":"p1","mechanism":"manual","resulting_test_accuracy":)" << results[i]
          << R"(,"default_test_accuracy":0.766})" << '\n';
    }
  }
  {
    std::ofstream out(efficiency_log);
    const double hovers[] = {12.5, 20.0, 7.5, 20.0};
    for (double h : hovers) {
      out << R"({"type":"event","kind":"hover","target":"manual.range","duration_s":)" << h
          << R"(,"session_id":"p1"})" << '\n';
    }
    out << R"({"type":"event","kind":"hover","target":"KI","duration_s":30,"session_id":"p1"})" << '\n';
    for (int i = 0; i < 4; ++i) {
      out << R"({"type":"attempt","attempt_id":)" << i
          << R"(,"session_id":"p1","mechanism":"manual","resulting_test_accuracy":0.8,"default_test_accuracy":0.766})"
          << '\n';
    }
  }
  const Run a = cli("replay " + effectiveness_log.string());
  const Run b = cli("replay " + efficiency_log.string());
  if (a.exit_code != 0 || b.exit_code != 0) return {false, "exmos replay failed"};
  const double eff = Json::parse(a.out)["mechanisms"]["manual"]["effectiveness"];
  const double efc = Json::parse(b.out)["mechanisms"]["manual"]["efficiency"];
  const bool empty_fails = cli("replay " + scratch("none.jsonl").string()).exit_code != 0;
  return {eff == 0.75 && efc == 15.0 && empty_fails,
          fmt("effectiveness 3/4 = %.2f; efficiency 60 s / 4 = %.1f; empty journal rejected", eff, efc)};
}

Outcome rule_validity() {
  // Rules reported by the CLI, re-scored against the same training split.
  const Run r = cli("explain --variant MCE");
  if (r.exit_code != 0) return {false, "exmos explain failed"};
  const Json bundle = Json::parse(r.out);
  const Split split = split_train_test(pima(), {});
  const DataTable& train = split.train;
  std::size_t checked = 0;
  for (const auto& rule : bundle["rules"]) {
    const double cls = rule["predicted_class"];
    double covered = 0, hits = 0, positives = 0;
    for (Eigen::Index row = 0; row < train.rows(); ++row) {
      const bool is_class = train.target()(row) == cls;
      positives += is_class;
      bool all = true;
      for (const auto& c : rule["conditions"]) {
        const double v = train.column(c["feature"].get<std::string>())(row);
        const double t = c["threshold"];
        all = all && (c["op"] == ">" ? v > t : v <= t);
      }
      covered += all;
      hits += all && is_class;
    }
    if (covered == 0 || covered != rule["support"].get<double>() ||
        std::fabs(hits / covered - rule["precision"].get<double>()) > 1e-12 ||
        std::fabs(hits / positives - rule["recall"].get<double>()) > 1e-12) {
      return {false, "rule mismatch: " + rule["text"].get<std::string>()};
    }
    ++checked;
  }
  if (checked == 0) return {false, "no rules emitted on Pima"};

  Schema schema(2);
  schema[0].name = "x";
  schema[1].name = "y";
  schema[1].kind = FeatureKind::kBinaryCategorical;
  schema[1].target = true;
  Eigen::MatrixXd cells(11, 2);
  std::vector<RowId> ids;
  for (int i = 0; i <= 10; ++i) {
    cells(i, 0) = i;
    cells(i, 1) = i > 5 ? 1 : 0;
    ids.push_back(i);
  }
  const auto rules = top_decision_rules(DataTable(schema, cells, ids));
  for (const auto& rule : rules) {
    if (rule.predicted_class != 1) continue;
    const auto& c = rule.conditions.front();
    const bool ok = rule.conditions.size() == 1 && c.op == Condition::Op::kGreater &&
                    c.threshold >= 4.5 && c.threshold <= 5.5 && rule.precision == 1.0;
    return {ok, fmt("%zu Pima rules match brute-force re-evaluation; 1-D top rule '%s' precision %.2f",
                    checked, to_string(rule).c_str(), rule.precision)};
  }
  return {false, "no class-1 rule on the 1-D set"};
}

}  // namespace

int main() {
  const std::vector<std::pair<const char*, std::function<Outcome()>>> criteria = {
      {"baseline-reproduction", baseline_reproduction},
      {"quality-thresholds", quality_thresholds},
      {"detector-oracle", detector_oracle},
      {"smote-properties", smote_properties},
      {"recalibration", recalibration},
      {"rollback-fidelity", rollback_fidelity},
      {"steerability", steerability},
      {"analytics-formulas", analytics_formulas},
      {"rule-validity", rule_validity},
  };
  int failed = 0;
  for (const auto& [name, check] : criteria) {
    Outcome o;
    try {
      o = check();
    } catch (const std::exception& e) {
      o = {false, std::string("exception: ") + e.what()};
    }
    failed += o.pass ? 0 : 1;
    std::printf("%s  %-22s %s\n", o.pass ? "PASS" : "FAIL", name, o.detail.c_str());
    std::fflush(stdout);
  }
  std::printf("%zu/%zu criteria passed\n", criteria.size() - failed, criteria.size());
  return failed == 0 ? 0 : 1;
}
