// framelog: command-line front end for the capture store and local service.

#include <csignal>
#include <cstdio>
#include <iostream>
#include <optional>
#include <string>

#include <CLI11.hpp>
#include <fmt/format.h>
#include <httplib.h>
#include <nlohmann/json.hpp>
#include <spdlog/spdlog.h>

#include "framelog/capture.hpp"
#include "framelog/error.hpp"
#include "framelog/registry.hpp"
#include "framelog/retrieval.hpp"
#include "framelog/service.hpp"
#include "framelog/store.hpp"

namespace {

using framelog::Error;
using framelog::ErrorCode;
using ordered_json = nlohmann::ordered_json;

constexpr int kExitOk = 0;
constexpr int kExitFailure = 1;
constexpr int kExitUsage = 2;

struct Options {
  std::string root;
  int port = framelog::kDefaultPort;

  std::string record_action;

  double hours = 0;
  std::optional<int> interval_s;
  std::optional<double> scale;
  std::optional<double> quality;
  int width = framelog::kDefaultNativeWidth;
  int height = framelog::kDefaultNativeHeight;
  bool json = false;

  std::optional<std::string> today;
  std::optional<int> retention_days;

  std::string bind = "127.0.0.1";
  bool read_only = false;
  std::string categories;

  std::string date;
  std::string out;
};

std::filesystem::path storage_root(const Options& o) {
  return o.root.empty() ? framelog::default_storage_root() : std::filesystem::path(o.root);
}

framelog::Date parse_date(const std::string& text) {
  auto d = framelog::Date::parse(text);
  if (!d) throw CLI::ValidationError("date", fmt::format("'{}' is not YYYY-MM-DD", text));
  return *d;
}

int cmd_record(const Options& o) {
  httplib::Client client("127.0.0.1", o.port);
  client.set_connection_timeout(2);
  httplib::Result res = o.record_action == "status"
                            ? client.Get("/record/status")
                            : client.Post("/record/" + o.record_action, "", "application/json");
  if (!res) {
    std::cerr << fmt::format("framelog: no service on 127.0.0.1:{} ({})\n", o.port,
                             httplib::to_string(res.error()));
    return kExitFailure;
  }
  std::cout << res->body << '\n';
  return res->status == 200 ? kExitOk : kExitFailure;
}

int cmd_estimate(const Options& o) {
  auto cfg = framelog::load_config_file(storage_root(o));
  if (o.interval_s) cfg.interval_s = *o.interval_s;
  if (o.scale) cfg.scale = *o.scale;
  if (o.quality) cfg.quality = *o.quality;
  framelog::require_valid_config(cfg, o.width, o.height);
  auto e = framelog::estimate_disk(cfg, o.width, o.height, o.hours);
  if (o.json) {
    ordered_json j{{"hours", o.hours},           {"interval_s", cfg.interval_s},
                   {"scale", cfg.scale},         {"quality", cfg.quality},
                   {"native_w", o.width},        {"native_h", o.height},
                   {"frames", e.frames},         {"bytes_per_frame", e.bytes_per_frame},
                   {"bytes", e.bytes}};
    std::cout << j.dump(2) << '\n';
  } else {
    std::cout << fmt::format("{:.0f} bytes ({:.2f} GB) for {} h: {} frames x {:.1f} bytes/frame\n",
                             e.bytes, e.bytes / 1e9, o.hours, e.frames, e.bytes_per_frame);
  }
  return kExitOk;
}

int cmd_gc(const Options& o) {
  auto root = storage_root(o);
  auto cfg = framelog::load_config_file(root);
  framelog::FrameStore store(root);
  framelog::RetentionPolicy policy{o.retention_days.value_or(cfg.retention_days)};
  auto today = o.today ? parse_date(*o.today) : framelog::default_clock()->today();
  auto report = store.run_gc(policy, today);
  std::cout << framelog::to_json(report).dump(2) << '\n';
  return report.partial() ? kExitFailure : kExitOk;
}

int cmd_stats(const Options& o) {
  framelog::FrameStore store(storage_root(o));
  std::cout << framelog::to_json(store.stats()).dump(2) << '\n';
  return kExitOk;
}

int cmd_export(const Options& o) {
  framelog::FrameStore store(storage_root(o));
  auto report = store.export_day(parse_date(o.date), o.out);
  ordered_json j{{"date", o.date},
                 {"out", o.out},
                 {"records", report.records},
                 {"blobs", report.blobs},
                 {"bytes", report.bytes}};
  std::cout << j.dump(2) << '\n';
  return kExitOk;
}

int cmd_serve(const Options& o) {
  // Block termination signals before any thread starts so only the waiter
  // below receives them.
  sigset_t signals;
  sigemptyset(&signals);
  sigaddset(&signals, SIGINT);
  sigaddset(&signals, SIGTERM);
  pthread_sigmask(SIG_BLOCK, &signals, nullptr);

  auto root = storage_root(o);
  framelog::FrameStore store(root);
  framelog::CategoryRegistry registry;
  if (!o.categories.empty()) {
    for (const auto& w : registry.reload_from(o.categories)) spdlog::warn("{}", w);
  }
  framelog::SystemLauncher launcher;
  // No OS capture adapter ships in-tree; the synthetic source stands in.
  auto source = std::make_shared<framelog::SyntheticFrameSource>(
      o.width, o.height, framelog::SyntheticFrameSource::Script{0u});
  framelog::Recorder recorder(source, std::make_shared<framelog::NullMetadataProvider>(), store,
                              registry);

  framelog::ServiceConfig cfg;
  cfg.bind_address = o.bind;
  cfg.port = o.port;
  cfg.storage_root = root;
  cfg.read_only = o.read_only;
  framelog::Service service(cfg, framelog::ServiceDeps{store, registry, launcher, &recorder,
                                                       framelog::default_clock(), o.categories});
  service.start();
  spdlog::info("serving {} on {}:{}", root.string(), o.bind, service.port());

  int sig = 0;
  sigwait(&signals, &sig);
  spdlog::info("signal {} received, shutting down", sig);
  recorder.stop();
  service.stop();
  return kExitOk;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"framelog: local screen history capture, storage and retrieval"};
  app.require_subcommand(1);
  Options o;
  app.add_option("--root", o.root, "Storage root (default: $FRAMELOG_ROOT or ~/.local/share/framelog)");

  auto* record = app.add_subcommand("record", "Control capture on a running service");
  record->add_option("action", o.record_action, "start | stop | status")
      ->required()
      ->check(CLI::IsMember({"start", "stop", "status"}));
  record->add_option("--port", o.port, "Service port");

  auto* estimate = app.add_subcommand("estimate", "Conservative disk-space estimate");
  estimate->add_option("--hours", o.hours, "Hours of history to keep")
      ->required()
      ->check(CLI::NonNegativeNumber);
  estimate->add_option("--interval", o.interval_s, "Capture interval in seconds");
  estimate->add_option("--scale", o.scale, "Scale factor in (0, 1]");
  estimate->add_option("--quality", o.quality, "Compression quality in (0, 1]");
  estimate->add_option("--width", o.width, "Native screen width")->check(CLI::PositiveNumber);
  estimate->add_option("--height", o.height, "Native screen height")->check(CLI::PositiveNumber);
  estimate->add_flag("--json", o.json, "Print JSON");

  auto* gc = app.add_subcommand("gc", "Delete days beyond retention and orphaned images");
  gc->add_option("--today", o.today, "Override today's date (YYYY-MM-DD)");
  gc->add_option("--retention", o.retention_days, "Override retention days")
      ->check(CLI::PositiveNumber);

  app.add_subcommand("stats", "Store statistics");

  auto* serve = app.add_subcommand("serve", "Run the loopback HTTP service");
  serve->add_option("--bind", o.bind, "Loopback address to bind");
  serve->add_option("--port", o.port, "Port (0 = any free port)");
  serve->add_flag("--read-only", o.read_only, "Refuse mutating requests");
  serve->add_option("--categories", o.categories, "Category map file")->check(CLI::ExistingFile);
  serve->add_option("--width", o.width, "Synthetic source width")->check(CLI::PositiveNumber);
  serve->add_option("--height", o.height, "Synthetic source height")->check(CLI::PositiveNumber);

  auto* exp = app.add_subcommand("export", "Copy one day's journal and images elsewhere");
  exp->add_option("--date", o.date, "Day to export (YYYY-MM-DD)")->required();
  exp->add_option("--out", o.out, "Destination directory")->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return kExitUsage;
  }

  try {
    if (record->parsed()) return cmd_record(o);
    if (estimate->parsed()) return cmd_estimate(o);
    if (gc->parsed()) return cmd_gc(o);
    if (app.got_subcommand("stats")) return cmd_stats(o);
    if (serve->parsed()) return cmd_serve(o);
    if (exp->parsed()) return cmd_export(o);
  } catch (const CLI::ValidationError& e) {
    std::cerr << "framelog: " << e.what() << '\n';
    return kExitUsage;
  } catch (const Error& e) {
    std::cerr << fmt::format("framelog: {} ({})\n", e.what(), framelog::to_string(e.code()));
    return kExitFailure;
  } catch (const std::exception& e) {
    std::cerr << "framelog: " << e.what() << '\n';
    return kExitFailure;
  }
  return kExitUsage;
}
