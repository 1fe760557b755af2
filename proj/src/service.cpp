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

#include "exmos/service.hpp"

#include <chrono>
#include <cmath>
#include <cstdlib>
#include <fstream>
#include <iostream>
#include <limits>
#include <random>

#include "exmos/analytics.hpp"
#include "exmos/error.hpp"
#include "httplib.h"

namespace exmos {

namespace {

std::optional<std::string> env(const char* name) {
  const char* v = std::getenv(name);
  if (v == nullptr || *v == '\0') return std::nullopt;
  return std::string(v);
}

template <typename T>
T parse_number(const std::string& s, const char* what) {
  try {
    std::size_t used = 0;
    const auto v = std::stoull(s, &used);
    if (used != s.size() || v > std::numeric_limits<T>::max()) throw std::invalid_argument(s);
    return static_cast<T>(v);
  } catch (const std::exception&) {
    throw Error(ErrorCode::kInvalidArgument, std::string(what) + " must be a non-negative integer", s);
  }
}

std::vector<std::string> split_path(std::string_view path) {
  std::vector<std::string> parts;
  std::size_t i = 0;
  while (i < path.size()) {
    const auto j = path.find('/', i);
    const auto end = j == std::string_view::npos ? path.size() : j;
    if (end > i) parts.emplace_back(path.substr(i, end - i));
    i = end + 1;
  }
  return parts;
}

Json parse_body(const std::string& body) {
  if (body.find_first_not_of(" \t\r\n") == std::string::npos) return Json::object();
  try {
    return Json::parse(body);
  } catch (const Json::exception& e) {
    throw Error(ErrorCode::kBadRequest, "request body is not valid JSON", e.what());
  }
}

double now_seconds() {
  return std::chrono::duration<double>(std::chrono::system_clock::now().time_since_epoch()).count();
}

std::string new_session_id() {
  std::random_device rd;
  Rng rng((static_cast<std::uint64_t>(rd()) << 32) ^ rd());
  static constexpr char kHex[] = "0123456789abcdef";
  std::string id;
  for (int i = 0; i < 16; ++i) id += kHex[rng.index(16)];
  return id;
}

Json version_summary(const ConfigVersion& v) {
  return Json{{"version_id", v.version_id},
              {"parent_id", v.parent_id ? Json(*v.parent_id) : Json(nullptr)},
              {"config", to_json(v.config)},
              {"saved", v.saved},
              {"metrics", to_json(v.metrics)},
              {"quality_score", v.quality.score},
              {"table_digest", v.table_digest},
              {"created_at", v.created_at}};
}

}  // namespace

ServiceConfig service_config_from_env(ServiceConfig c) {
  if (auto v = env("EXMOS_DATA")) c.data = *v;
  if (auto v = env("EXMOS_META")) c.meta = *v;
  if (auto v = env("EXMOS_PORT")) c.port = parse_number<std::uint16_t>(*v, "EXMOS_PORT");
  if (auto v = env("EXMOS_SEED")) c.seed = parse_number<std::uint64_t>(*v, "EXMOS_SEED");
  if (auto v = env("EXMOS_STATE")) c.state_dir = *v;
  return c;
}

int http_status(ErrorCode code) {
  switch (code) {
    case ErrorCode::kBadRequest:
    case ErrorCode::kInvalidVariant:
    case ErrorCode::kInvalidArgument:
    case ErrorCode::kInvalidEvent:
    case ErrorCode::kInvertedRange:
    case ErrorCode::kUnknownFeature:
    case ErrorCode::kNotNumeric:
      return 400;
    case ErrorCode::kUnknownSession:
    case ErrorCode::kUnknownVersion:
    case ErrorCode::kNotFound:
      return 404;
    case ErrorCode::kNothingUnsaved:
    case ErrorCode::kNothingToCorrect:
      return 409;
    case ErrorCode::kAllRowsFiltered:
    case ErrorCode::kDegenerateClass:
    case ErrorCode::kEmptyTable:
    case ErrorCode::kNotCorrectable:
    case ErrorCode::kTooFewRows:
    case ErrorCode::kTooFewFeatures:
    case ErrorCode::kEmptyCohort:
    case ErrorCode::kNoAttempts:
    case ErrorCode::kNoSuccesses:
    case ErrorCode::kMissingFeature:
    case ErrorCode::kSchemaMismatch:
    case ErrorCode::kZeroBaseline:
      return 422;
    default:
      return 500;
  }
}

// ---------------------------------------------------------------------------

struct Service::Snapshot {
  VersionId version_id = 0;
  Json dashboard;
  Json history;
};

struct Service::Session {
  Session(std::string id_, Variant variant_, SteeringSession steering_)
      : id(std::move(id_)), variant(variant_), steering(std::move(steering_)) {}

  const std::string id;
  const Variant variant;

  // Serializes mutations.
  std::mutex mu;
  SteeringSession steering;
  // Last committed state; read with std::atomic_load.
  std::shared_ptr<const Snapshot> snapshot;

  // Telemetry, independent of mu.
  std::mutex events_mu;
  std::vector<InteractionEvent> events;
  std::vector<AttemptRecord> attempts;
  double last_timestamp = -std::numeric_limits<double>::infinity();
  std::optional<std::filesystem::path> usage_path;

  std::shared_ptr<const Snapshot> current() const { return std::atomic_load(&snapshot); }

  Json bundle_json(const ConfigVersion& v) const {
    std::optional<ModelMetrics> previous;
    if (v.parent_id) previous = steering.version(*v.parent_id).metrics;
    return to_json(build_bundle(variant, v.metrics, previous, v.bundle.parts));
  }
};

Service::Service(DataTable data, SessionSettings settings,
                 std::optional<std::filesystem::path> state_dir)
    : data_(std::move(data)),
      settings_(std::move(settings)),
      state_dir_(std::move(state_dir)),
      server_(std::make_unique<httplib::Server>()) {
  if (state_dir_) {
    std::filesystem::create_directories(*state_dir_);
    recover();
  }
}

Service::~Service() = default;

std::size_t Service::session_count() const {
  std::lock_guard lock(sessions_mu_);
  return sessions_.size();
}

void Service::commit(Session& s) const {
  auto snap = std::make_shared<Snapshot>();
  const auto& head = s.steering.head();
  snap->version_id = head.version_id;
  snap->dashboard = Json{{"version_id", head.version_id},
                         {"variant", to_string(s.variant)},
                         {"unsaved", s.steering.has_unsaved()},
                         {"pending", s.steering.pending() ? Json(config_kind(*s.steering.pending()))
                                                          : Json(nullptr)},
                         {"bundle", s.bundle_json(head)}};
  Json versions = Json::array();
  for (const auto& v : s.steering.history()) versions.push_back(version_summary(v));
  snap->history = Json{{"version_id", head.version_id},
                       {"head", head.version_id},
                       {"versions", std::move(versions)}};
  std::atomic_store(&s.snapshot, std::shared_ptr<const Snapshot>(std::move(snap)));
}

std::shared_ptr<Service::Session> Service::find_session(const std::string& id) const {
  std::lock_guard lock(sessions_mu_);
  const auto it = sessions_.find(id);
  if (it == sessions_.end()) throw Error(ErrorCode::kUnknownSession, "no such session", id);
  return it->second;
}

std::shared_ptr<Service::Session> Service::create_session(Variant variant,
                                                          std::optional<std::string> id) {
  const std::string sid = id.value_or(new_session_id());
  std::optional<std::filesystem::path> journal;
  std::optional<std::filesystem::path> usage;
  if (state_dir_) {
    journal = *state_dir_ / (sid + ".steering.jsonl");
    usage = *state_dir_ / (sid + ".usage.jsonl");
  }
  auto s = std::make_shared<Session>(sid, variant, SteeringSession(data_, settings_, journal));
  s->usage_path = usage;
  if (state_dir_) {
    std::ofstream(*state_dir_ / (sid + ".session.json"))
        << Json{{"session_id", sid}, {"variant", to_string(variant)}}.dump() << '\n';
  }
  commit(*s);
  std::lock_guard lock(sessions_mu_);
  sessions_[sid] = s;
  return s;
}

void Service::recover() {
  for (const auto& entry : std::filesystem::directory_iterator(*state_dir_)) {
    const auto name = entry.path().filename().string();
    const std::string suffix = ".session.json";
    if (name.size() <= suffix.size() || !name.ends_with(suffix)) continue;
    const std::string sid = name.substr(0, name.size() - suffix.size());
    std::ifstream in(entry.path());
    const auto meta = Json::parse(in, nullptr, false);
    if (meta.is_discarded() || !meta.contains("variant")) {
      throw Error(ErrorCode::kJournalCorrupt, "unreadable session file", entry.path().string());
    }
    const Variant variant = variant_from_string(meta["variant"].get<std::string>());
    auto steering = SteeringSession::restore(data_, *state_dir_ / (sid + ".steering.jsonl"), settings_);
    auto s = std::make_shared<Session>(sid, variant, std::move(steering));
    s->usage_path = *state_dir_ / (sid + ".usage.jsonl");
    if (std::filesystem::exists(*s->usage_path)) {
      auto log = load_usage_journal(*s->usage_path);
      s->events = std::move(log.events);
      s->attempts = std::move(log.attempts);
      for (const auto& e : s->events) s->last_timestamp = std::max(s->last_timestamp, e.timestamp);
    }
    commit(*s);
    sessions_[sid] = std::move(s);
  }
}

Response Service::handle(const Request& request) {
  // Version to echo on errors: the session's committed head, if any.
  Json version = nullptr;
  const auto parts = split_path(request.path);
  if (parts.size() >= 2 && parts[0] == "sessions") {
    std::lock_guard lock(sessions_mu_);
    const auto it = sessions_.find(parts[1]);
    if (it != sessions_.end()) version = it->second->current()->version_id;
  }
  auto failure = [&](int status, Json payload) {
    Json body{{"version_id", version}};
    body["error"] = std::move(payload);
    return Response{status, std::move(body)};
  };
  try {
    return route(request);
  } catch (const Error& e) {
    return failure(http_status(e.code()), to_json(e));
  } catch (const std::exception& e) {
    return failure(500, Json{{"code", "Internal"}, {"message", "internal error"}, {"detail", e.what()}});
  }
}

Response Service::route(const Request& req) {
  const auto p = split_path(req.path);
  const bool get = req.method == "GET";
  const bool post = req.method == "POST";
  auto not_found = [&] {
    return Error(ErrorCode::kNotFound, "no such endpoint", req.method + " " + req.path);
  };

  if (p.size() == 1 && p[0] == "health" && get) {
    return {200, Json{{"version_id", nullptr}, {"status", "ok"}, {"sessions", session_count()}}};
  }

  if (p.size() == 1 && p[0] == "analytics" && get) {
    std::vector<std::shared_ptr<Session>> chosen;
    Json version = nullptr;
    const auto q = req.query.find("session");
    if (q != req.query.end()) {
      chosen.push_back(find_session(q->second));
      version = chosen.back()->current()->version_id;
    } else {
      std::lock_guard lock(sessions_mu_);
      for (const auto& [_, s] : sessions_) chosen.push_back(s);
    }
    std::vector<InteractionEvent> events;
    std::vector<AttemptRecord> attempts;
    for (const auto& s : chosen) {
      std::lock_guard lock(s->events_mu);
      events.insert(events.end(), s->events.begin(), s->events.end());
      attempts.insert(attempts.end(), s->attempts.begin(), s->attempts.end());
    }
    std::vector<std::string> cohort;
    for (const auto& s : chosen) cohort.push_back(s->id);
    const UsageSummary summary = summarize(events, attempts, cohort);
    return {200, Json{{"version_id", version},
                      {"summary", to_json(summary)},
                      {"table", format_usage_table(summary)}}};
  }

  if (p.size() == 1 && p[0] == "sessions" && post) {
    const Json body = parse_body(req.body);
    const Variant variant =
        variant_from_string(body.is_object() ? body.value("variant", std::string("HYB")) : "");
    auto s = create_session(variant);
    const auto snap = s->current();
    return {201, Json{{"version_id", snap->version_id},
                      {"session_id", s->id},
                      {"variant", to_string(variant)},
                      {"dashboard", snap->dashboard}}};
  }

  if (p.size() < 3 || p[0] != "sessions") throw not_found();
  const auto s = find_session(p[1]);
  const std::string& op = p[2];

  if (get && p.size() == 3 && op == "dashboard") return {200, s->current()->dashboard};
  if (get && p.size() == 3 && op == "history") return {200, s->current()->history};

  if (post && p.size() == 3 && op == "events") {
    const Json body = parse_body(req.body);
    std::vector<InteractionEvent> batch;
    if (body.is_array()) {
      for (const auto& e : body) batch.push_back(event_from_json(e));
    } else {
      batch.push_back(event_from_json(body));
    }
    std::lock_guard lock(s->events_mu);
    double last = s->last_timestamp;
    for (auto& e : batch) {
      e.session_id = s->id;
      if (e.timestamp == 0) e.timestamp = std::max(now_seconds(), last);
      if (e.timestamp < last) {
        throw Error(ErrorCode::kInvalidEvent, "event timestamps must not decrease", e.target);
      }
      last = e.timestamp;
    }
    for (const auto& e : batch) {
      if (s->usage_path) append_usage(*s->usage_path, e);
      s->events.push_back(e);
    }
    s->last_timestamp = last;
    return {200, Json{{"version_id", s->current()->version_id}, {"accepted", batch.size()}}};
  }

  if (!post) throw not_found();
  std::lock_guard lock(s->mu);
  auto& st = s->steering;
  Json out;

  if (p.size() == 4 && op == "config" && p[3] == "manual") {
    const auto result = st.stage_manual(manual_config_from_json(parse_body(req.body)));
    commit(*s);
    out = Json{{"version_id", st.head().version_id},
               {"preview",
                {{"rows", result.table.rows()},
                 {"features", result.table.predictor_names()},
                 {"table_digest", table_digest(result.table)}}},
               {"warning", result.warning ? to_json(*result.warning) : Json(nullptr)}};
  } else if (p.size() == 4 && op == "config" && p[3] == "auto") {
    const auto result = st.stage_auto(auto_config_from_json(parse_body(req.body)));
    commit(*s);
    Json outcomes = Json::array();
    for (const auto& o : result.outcomes) outcomes.push_back(to_json(o));
    out = Json{{"version_id", st.head().version_id},
               {"outcomes", std::move(outcomes)},
               {"preview", {{"rows", result.table.rows()}, {"table_digest", table_digest(result.table)}}}};
  } else if (p.size() == 3 && op == "retrain") {
    const std::optional<Config> pending = st.pending();
    const auto& v = st.retrain();
    if (pending && !std::holds_alternative<DefaultConfig>(*pending)) {
      const auto mech = std::holds_alternative<ManualConfig>(*pending) ? Mechanism::kManual
                                                                       : Mechanism::kAutomated;
      const auto a = make_attempt(v.version_id, s->id, mech, v.metrics.test_accuracy,
                                  st.version(0).metrics.test_accuracy);
      std::lock_guard elock(s->events_mu);
      s->attempts.push_back(a);
      if (s->usage_path) {
        try {
          append_usage(*s->usage_path, a);
        } catch (const Error& e) {
          std::cerr << "exmos: " << e.what() << '\n';
        }
      }
    }
    commit(*s);
    out = Json{{"version_id", v.version_id}, {"version", version_summary(v)}, {"bundle", s->bundle_json(v)}};
  } else if (p.size() == 3 && (op == "save" || op == "discard")) {
    const auto& v = op == "save" ? st.save() : st.discard();
    commit(*s);
    out = Json{{"version_id", v.version_id}, {"version", version_summary(v)}};
  } else if (p.size() == 4 && op == "revert") {
    VersionId id = 0;
    try {
      std::size_t used = 0;
      id = std::stoll(p[3], &used);
      if (used != p[3].size()) throw std::invalid_argument(p[3]);
    } catch (const std::exception&) {
      throw Error(ErrorCode::kBadRequest, "version must be an integer", p[3]);
    }
    const auto& v = st.revert_to(id);
    commit(*s);
    out = Json{{"version_id", v.version_id}, {"version", version_summary(v)}, {"bundle", s->bundle_json(v)}};
  } else {
    throw not_found();
  }
  return {200, std::move(out)};
}

void Service::listen(const std::string& host, int port, const std::function<void(int)>& on_ready) {
  auto handler = [this](const httplib::Request& req, httplib::Response& res) {
    Request r{req.method, req.path, req.body, {req.params.begin(), req.params.end()}};
    const Response out = handle(r);
    res.status = out.status;
    res.set_content(out.body.dump(), "application/json");
  };
  server_->Get(".*", handler);
  server_->Post(".*", handler);
  int bound = port;
  if (port == 0) {
    bound = server_->bind_to_any_port(host);
  } else if (!server_->bind_to_port(host, port)) {
    bound = -1;
  }
  if (bound < 0) {
    throw Error(ErrorCode::kIoError, "cannot bind", host + ":" + std::to_string(port));
  }
  if (on_ready) on_ready(bound);
  server_->listen_after_bind();
}

void Service::stop() { server_->stop(); }

}  // namespace exmos
