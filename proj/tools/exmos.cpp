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

// exmos command-line tool: scan, train, explain, serve, replay.

#include <csignal>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>

#include "CLI11.hpp"
#include "exmos/analytics.hpp"
#include "exmos/error.hpp"
#include "exmos/serialize.hpp"
#include "exmos/service.hpp"
#include "exmos/steering.hpp"

namespace {

using namespace exmos;

constexpr int kExitIo = 2;
constexpr int kExitUsage = 64;
constexpr int kExitData = 65;
constexpr int kExitInternal = 70;

struct Options {
  std::string data = EXMOS_DEFAULT_DATA;
  std::string meta;
  std::uint64_t seed = 42;
  std::string variant = "HYB";
  int port = 8080;
  std::string format = "json";
  std::string journal;
  std::string baseline;
  std::string model_out;
  std::string state_dir;
};

int exit_code(ErrorCode code) {
  switch (code) {
    case ErrorCode::kIoError:
    case ErrorCode::kEmptyFile:
    case ErrorCode::kHeaderMismatch:
    case ErrorCode::kNonNumericCell:
    case ErrorCode::kInvalidMeta:
      return kExitIo;
    case ErrorCode::kInvalidVariant:
    case ErrorCode::kInvalidArgument:
    case ErrorCode::kBadRequest:
      return kExitUsage;
    case ErrorCode::kInvalidModel:
    case ErrorCode::kMissingPart:
      return kExitInternal;
    default:
      return kExitData;
  }
}

std::filesystem::path meta_path(const Options& o) {
  if (!o.meta.empty()) return o.meta;
  std::filesystem::path p = o.data;
  return p.replace_extension(".meta.json");
}

DataTable load(const Options& o, const std::string& data) {
  return load_csv(data, load_meta(meta_path(o)));
}

SessionSettings settings_for(const Options& o) {
  SessionSettings s;
  s.split.seed = o.seed;
  s.forest.seed = o.seed;
  s.rules.seed = o.seed;
  return s;
}

void emit(const Json& j) { std::cout << j.dump(2) << '\n'; }

std::string fixed(double v, int decimals) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.*f", decimals, v);
  return buf;
}

int cmd_scan(const Options& o) {
  const DataTable table = load(o, o.data);
  const DataTable baseline = o.baseline.empty() ? table : load(o, o.baseline);
  const QualityReport report = assess_quality(table, baseline);
  if (o.format == "text") {
    std::cout << "Data quality: " << fixed(report.score, 1) << " (" << to_string(report.level)
              << ")\n";
    for (const auto& issue : report.issues) {
      std::printf("  %-20s %6.1f  %s\n", std::string(to_string(issue.kind)).c_str(), issue.subscore,
                  issue.description.c_str());
    }
    return 0;
  }
  emit(to_json(report));
  return 0;
}

int cmd_train(const Options& o) {
  const DataTable table = load(o, o.data);
  const SessionSettings s = settings_for(o);
  const Split split = split_train_test(table, s.split);
  const TrainedModel model = train_forest(split.train, split.test, s.forest);
  if (!o.model_out.empty()) {
    std::ofstream out(o.model_out);
    out << model_to_json(model).dump() << '\n';
    if (!out) throw Error(ErrorCode::kIoError, "cannot write model", o.model_out);
  }
  const auto& m = model.metrics();
  if (o.format == "text") {
    std::cout << "train accuracy  " << fixed(m.train_accuracy, 4) << '\n'
              << "test accuracy   " << fixed(m.test_accuracy, 4) << '\n'
              << "train samples   " << m.n_train_samples << '\n'
              << "features        " << m.n_features << '\n';
    return 0;
  }
  emit(Json{{"metrics", to_json(m)},
            {"seed", o.seed},
            {"n_trees", s.forest.n_trees},
            {"n_test_samples", split.test.rows()},
            {"table_digest", table_digest(table)}});
  return 0;
}

int cmd_explain(const Options& o) {
  const Variant variant = variant_from_string(o.variant);
  const DataTable table = load(o, o.data);
  const SteeringSession session(table, settings_for(o));
  const ConfigVersion& v0 = session.head();
  const ExplanationBundle bundle = build_bundle(variant, v0.metrics, std::nullopt, v0.bundle.parts);
  if (o.format == "text") {
    std::cout << "Variant " << to_string(variant) << ": test accuracy "
              << fixed(bundle.header.metrics.test_accuracy, 4) << ", "
              << bundle.header.metrics.n_train_samples << " samples, "
              << bundle.header.metrics.n_features << " features\n";
    const auto& p = bundle.parts;
    if (p.key_insights) {
      std::cout << "\n[KI] Key insights\n";
      for (const auto& k : p.key_insights->top) std::cout << "  " << k.text << '\n';
    }
    if (p.quality) {
      std::cout << "\n[DQ] Data quality " << fixed(p.quality->score, 1) << " ("
                << to_string(p.quality->level) << ")\n";
    }
    if (p.density) std::cout << "\n[DDD] " << p.density->size() << " density profiles\n";
    if (p.rules) {
      std::cout << "\n[TDR] Top decision rules\n";
      for (const auto& r : *p.rules) {
        std::cout << "  " << to_string(r) << "  (precision " << fixed(r.precision, 2)
                  << ", recall " << fixed(r.recall, 2) << ")\n";
      }
    }
    if (p.importances) {
      std::cout << "\n[IRF] Important risk factors\n";
      for (const auto& s : p.importances->scores) {
        std::printf("  %-20s %5.1f%%\n", s.feature.c_str(), s.percent);
      }
    }
    return 0;
  }
  emit(to_json(bundle));
  return 0;
}

int cmd_replay(const Options& o) {
  const UsageLog log = load_usage_journal(o.journal);
  const UsageSummary summary = summarize(log.events, log.attempts);
  if (o.format == "text") {
    std::cout << format_usage_table(summary);
    return 0;
  }
  emit(to_json(summary));
  return 0;
}

Service* g_service = nullptr;

void on_signal(int) {
  if (g_service != nullptr) g_service->stop();
}

int cmd_serve(const Options& o, bool port_given, bool seed_given) {
  ServiceConfig defaults;
  defaults.data = o.data;
  defaults.meta = meta_path(o);
  defaults.seed = o.seed;
  defaults.port = o.port;
  if (!o.state_dir.empty()) defaults.state_dir = o.state_dir;
  ServiceConfig c = service_config_from_env(defaults);
  // Explicit flags win over the environment.
  if (port_given) c.port = o.port;
  if (seed_given) c.seed = o.seed;

  Options effective = o;
  effective.seed = c.seed;
  Service service(load_csv(c.data, load_meta(c.meta)), settings_for(effective), c.state_dir);
  g_service = &service;
  std::signal(SIGINT, on_signal);
  std::signal(SIGTERM, on_signal);
  service.listen(c.host, c.port, [&](int port) {
    std::cerr << "exmos: listening on http://" << c.host << ":" << port << std::endl;
  });
  g_service = nullptr;
  return 0;
}

void report(const Error& e) {
  std::cerr << to_json(e).dump() << '\n';
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Explanatory model steering for tabular classifiers"};
  app.require_subcommand(1);
  Options o;

  auto data_opts = [&](CLI::App* cmd) {
    cmd->add_option("--data", o.data, "CSV file")->envname("EXMOS_DATA");
    cmd->add_option("--meta", o.meta, "Feature sidecar (default: <data>.meta.json)")
        ->envname("EXMOS_META");
    cmd->add_option("--format", o.format, "Output format")->check(CLI::IsMember({"json", "text"}));
  };
  auto seed_opt = [&](CLI::App* cmd) {
    return cmd->add_option("--seed", o.seed, "Split and forest seed");
  };

  auto* scan = app.add_subcommand("scan", "Assess training-data quality");
  data_opts(scan);
  scan->add_option("--baseline", o.baseline, "Reference CSV for drift (default: the data itself)");

  auto* train = app.add_subcommand("train", "Train the baseline forest and report metrics");
  data_opts(train);
  seed_opt(train);
  train->add_option("--model-out", o.model_out, "Write the model snapshot here");

  auto* explain = app.add_subcommand("explain", "Print the explanation bundle for a variant");
  data_opts(explain);
  seed_opt(explain);
  explain->add_option("--variant", o.variant, "DCE, MCE or HYB");

  auto* serve = app.add_subcommand("serve", "Run the HTTP service");
  data_opts(serve);
  auto* seed_flag = seed_opt(serve);
  auto* port_flag = serve->add_option("--port", o.port, "Port (0 picks one)");
  serve->add_option("--state", o.state_dir, "Journal directory")->envname("EXMOS_STATE");

  auto* replay = app.add_subcommand("replay", "Summarize a usage journal");
  replay->alias("analytics");
  replay->add_option("journal", o.journal, "JSON-lines usage journal")->required();
  replay->add_option("--format", o.format, "Output format")->check(CLI::IsMember({"json", "text"}));

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return kExitUsage;
  }

  try {
    if (*scan) return cmd_scan(o);
    if (*train) return cmd_train(o);
    if (*explain) return cmd_explain(o);
    if (*serve) return cmd_serve(o, port_flag->count() > 0, seed_flag->count() > 0);
    if (*replay) return cmd_replay(o);
  } catch (const Error& e) {
    report(e);
    return exit_code(e.code());
  } catch (const std::exception& e) {
    std::cerr << Json{{"code", "Internal"}, {"message", e.what()}, {"detail", ""}}.dump() << '\n';
    return kExitInternal;
  }
  return kExitUsage;
}
