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

// HTTP facade over steering sessions and usage analytics.

#ifndef EXMOS_SERVICE_HPP_
#define EXMOS_SERVICE_HPP_

#include <cstdint>
#include <filesystem>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <string>

#include "exmos/serialize.hpp"
#include "exmos/steering.hpp"

namespace httplib {
class Server;
}

namespace exmos {

struct ServiceConfig {
  std::filesystem::path data;
  std::filesystem::path meta;
  std::uint64_t seed = 42;
  int port = 8080;
  std::string host = "127.0.0.1";
  // Journals live here when set; sessions are recovered from it at startup.
  std::optional<std::filesystem::path> state_dir;
};

/// Reads EXMOS_DATA, EXMOS_META, EXMOS_PORT, EXMOS_SEED and EXMOS_STATE over
/// the given defaults. Throws InvalidArgument for unparsable numbers.
ServiceConfig service_config_from_env(ServiceConfig defaults = {});

/// HTTP status for an error code (400, 404, 409, 422 or 500).
int http_status(ErrorCode code);

struct Request {
  std::string method;
  std::string path;
  std::string body;
  std::multimap<std::string, std::string> query;
};

struct Response {
  int status = 200;
  Json body;
};

/// Routes requests to sessions. Safe to call from many threads: each
/// session runs one mutation at a time, dashboard and history reads use the
/// last committed snapshot, and telemetry has its own lock.
class Service {
 public:
  Service(DataTable data, SessionSettings settings,
          std::optional<std::filesystem::path> state_dir = std::nullopt);
  ~Service();

  Service(const Service&) = delete;
  Service& operator=(const Service&) = delete;

  /// Dispatches one request without any network involvement.
  Response handle(const Request& request);

  /// Binds and serves until stop(). Port 0 picks a free port; the chosen
  /// port is passed to on_ready before requests are accepted.
  void listen(const std::string& host, int port,
              const std::function<void(int)>& on_ready = {});
  void stop();

  std::size_t session_count() const;

 private:
  struct Session;
  struct Snapshot;

  std::shared_ptr<Session> find_session(const std::string& id) const;
  std::shared_ptr<Session> create_session(Variant variant, std::optional<std::string> id = {});
  void commit(Session& s) const;
  void recover();

  Response route(const Request& request);

  DataTable data_;
  SessionSettings settings_;
  std::optional<std::filesystem::path> state_dir_;
  mutable std::mutex sessions_mu_;
  std::map<std::string, std::shared_ptr<Session>> sessions_;
  std::unique_ptr<httplib::Server> server_;
};

}  // namespace exmos

#endif  // EXMOS_SERVICE_HPP_
