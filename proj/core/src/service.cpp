#include "framelog/service.hpp"

#include <arpa/inet.h>

#include <cstdlib>
#include <fstream>
#include <iterator>

#include <fmt/format.h>
#include <httplib.h>
#include <spdlog/spdlog.h>

#include "framelog/error.hpp"
#include "framelog/timeline.hpp"

namespace fs = std::filesystem;

namespace framelog {

using ordered_json = nlohmann::ordered_json;

namespace {

constexpr const char* kJsonType = "application/json";
constexpr const char* kConfigFile = "config.json";

int http_status(ErrorCode code) {
  switch (code) {
    case ErrorCode::kNotFound:
    case ErrorCode::kIndexOutOfRange:
      return 404;
    case ErrorCode::kIntervalTooLong:
    case ErrorCode::kFrameTooSmall:
    case ErrorCode::kBadRange:
    case ErrorCode::kInvalidArgument:
    case ErrorCode::kMalformedMap:
    case ErrorCode::kEmptyTimeline:
      return 400;
    case ErrorCode::kReadOnly:
      return 403;
    case ErrorCode::kNotApplicable:
      return 409;
    case ErrorCode::kOpenTargetMissing:
      return 410;
    case ErrorCode::kLaunchError:
    case ErrorCode::kSourceUnavailable:
      return 502;
    case ErrorCode::kStorageFull:
      return 507;
    default:
      return 500;
  }
}

ordered_json envelope() { return ordered_json{{"schema", kSchemaVersion}}; }

void send_json(httplib::Response& res, ordered_json body, int status = 200) {
  res.status = status;
  res.set_content(body.dump(-1, ' ', false, ordered_json::error_handler_t::replace), kJsonType);
}

void send_error(httplib::Response& res, ErrorCode code, std::string_view message) {
  auto body = envelope();
  body["error"] = to_string(code);
  body["message"] = message;
  send_json(res, std::move(body), http_status(code));
}

// Wraps a handler so library errors become JSON error responses.
template <typename Fn>
httplib::Server::Handler guarded(Fn fn) {
  return [fn = std::move(fn)](const httplib::Request& req, httplib::Response& res) {
    try {
      fn(req, res);
    } catch (const Error& e) {
      send_error(res, e.code(), e.what());
    } catch (const std::exception& e) {
      send_error(res, ErrorCode::kIo, e.what());
    }
  };
}

Date parse_date_or_throw(std::string_view text) {
  auto d = Date::parse(text);
  if (!d) throw Error(ErrorCode::kInvalidArgument, fmt::format("bad date '{}'", text));
  return *d;
}

struct FrameId {
  Date date;
  std::size_t index = 0;
};

std::optional<FrameId> parse_frame_id(std::string_view id) {
  auto slash = id.find('/');
  if (slash == std::string_view::npos) return std::nullopt;
  auto date = Date::parse(id.substr(0, slash));
  auto index_text = id.substr(slash + 1);
  if (!date || index_text.empty() || index_text.size() > 9) return std::nullopt;
  std::size_t index = 0;
  for (char c : index_text) {
    if (c < '0' || c > '9') return std::nullopt;
    index = index * 10 + static_cast<std::size_t>(c - '0');
  }
  return FrameId{*date, index};
}

FrameRecord lookup_frame(const FrameStore& store, const FrameId& id) {
  auto segment = store.read_day(id.date);
  if (id.index >= segment.records.size()) {
    throw Error(ErrorCode::kNotFound,
                fmt::format("no frame {}/{}", id.date.to_string(), id.index));
  }
  return segment.records[id.index];
}

ordered_json loop_report_json(const LoopReport& r) {
  ordered_json j;
  j["interval_records"] = r.interval_records;
  j["app_switch_records"] = r.app_switch_records;
  j["debounced_ticks"] = r.debounced_ticks;
  j["debounced_switches"] = r.debounced_switches;
  j["missed_ticks"] = r.missed_ticks;
  j["source_unavailable"] = r.source_unavailable;
  j["encode_failures"] = r.encode_failures;
  j["metadata_missing"] = r.metadata_missing;
  j["fatal"] = r.fatal_code ? ordered_json(to_string(*r.fatal_code)) : ordered_json(nullptr);
  j["fatal_message"] = r.fatal_message;
  return j;
}

}  // namespace

bool is_loopback_address(std::string_view host) {
  if (host == "localhost") return true;
  std::string h(host);
  if (h.size() > 2 && h.front() == '[' && h.back() == ']') h = h.substr(1, h.size() - 2);
  in_addr v4{};
  if (::inet_pton(AF_INET, h.c_str(), &v4) == 1) {
    return (ntohl(v4.s_addr) >> 24) == 127;
  }
  in6_addr v6{};
  if (::inet_pton(AF_INET6, h.c_str(), &v6) == 1) {
    if (IN6_IS_ADDR_LOOPBACK(&v6)) return true;
    if (IN6_IS_ADDR_V4MAPPED(&v6)) return v6.s6_addr[12] == 127;
  }
  return false;
}

fs::path default_storage_root() {
  if (const char* env = std::getenv(kStorageRootEnv); env != nullptr && *env != '\0') {
    return env;
  }
  if (const char* home = std::getenv("HOME"); home != nullptr && *home != '\0') {
    return fs::path(home) / ".local" / "share" / "framelog";
  }
  return fs::current_path() / "framelog-data";
}

CaptureConfig load_config_file(const fs::path& storage_root) {
  CaptureConfig base;
  base.storage_root = storage_root;
  auto path = storage_root / kConfigFile;
  std::ifstream in(path);
  if (!in) return base;
  auto j = ordered_json::parse(in, nullptr, false);
  if (j.is_discarded()) {
    throw Error(ErrorCode::kInvalidArgument, fmt::format("{} is not valid JSON", path.string()));
  }
  auto cfg = config_from_json(j, base);
  cfg.storage_root = storage_root;
  return cfg;
}

void save_config_file(const CaptureConfig& cfg) {
  auto path = cfg.storage_root / kConfigFile;
  auto tmp = cfg.storage_root / (std::string(kConfigFile) + ".tmp");
  {
    std::ofstream out(tmp, std::ios::trunc);
    out << config_to_json(cfg).dump(2) << '\n';
    if (!out) throw Error(ErrorCode::kIo, fmt::format("cannot write {}", tmp.string()));
  }
  std::error_code ec;
  fs::rename(tmp, path, ec);
  if (ec) throw Error(ErrorCode::kIo, fmt::format("cannot replace {}: {}", path.string(), ec.message()));
}

Service::Service(ServiceConfig cfg, ServiceDeps deps)
    : cfg_(std::move(cfg)), deps_(std::move(deps)), dispatcher_(deps_.launcher) {
  if (!is_loopback_address(cfg_.bind_address)) {
    throw Error(ErrorCode::kBindRefusedNonLoopback,
                fmt::format("refusing to bind {}: only loopback addresses are allowed",
                            cfg_.bind_address));
  }
  if (cfg_.storage_root.empty()) cfg_.storage_root = deps_.store.root();
  capture_cfg_ = load_config_file(cfg_.storage_root);
  server_ = std::make_unique<httplib::Server>();
  // The library default adds SO_REUSEPORT, which would let a second instance
  // share the port instead of failing.
  server_->set_socket_options([](socket_t sock) {
    int yes = 1;
    ::setsockopt(sock, SOL_SOCKET, SO_REUSEADDR, &yes, sizeof(yes));
  });
  install_routes();
}

Service::~Service() { stop(); }

CaptureConfig Service::capture_config() const {
  std::lock_guard lock(config_mu_);
  return capture_cfg_;
}

GcReport Service::collect_garbage() {
  auto cfg = capture_config();
  auto report = deps_.store.run_gc(RetentionPolicy{cfg.retention_days}, deps_.clock->today());
  spdlog::info("gc: {} segments, {} blobs, {} bytes freed", report.segments_deleted,
               report.blobs_deleted, report.bytes_freed);
  return report;
}

void Service::maintenance(std::stop_token stop) {
  Date last_run = deps_.clock->today();
  std::mutex mu;
  std::condition_variable_any cv;
  while (!stop.stop_requested()) {
    {
      std::unique_lock lock(mu);
      cv.wait_for(lock, stop, cfg_.maintenance_poll, [] { return false; });
    }
    if (stop.stop_requested()) break;
    auto today = deps_.clock->today();
    if (today == last_run) continue;
    last_run = today;
    try {
      std::lock_guard lock(command_mu_);
      collect_garbage();
    } catch (const std::exception& e) {
      spdlog::error("scheduled gc failed: {}", e.what());
    }
  }
}

void Service::install_routes() {
  auto& srv = *server_;
  auto require_writable = [this] {
    if (cfg_.read_only) throw Error(ErrorCode::kReadOnly, "service is read-only");
  };

  srv.Get("/dates", guarded([this](const httplib::Request&, httplib::Response& res) {
    auto body = envelope();
    body["dates"] = ordered_json::array();
    for (const auto& d : deps_.store.list_dates()) body["dates"].push_back(d.to_string());
    send_json(res, std::move(body));
  }));

  srv.Get(R"(/timeline/([0-9]{4}-[0-9]{2}-[0-9]{2}))",
          guarded([this](const httplib::Request& req, httplib::Response& res) {
            auto date = parse_date_or_throw(req.matches[1].str());
            auto segment = deps_.store.read_day(date);
            auto sealed = segment.sealed;
            auto skipped = segment.skipped_count;
            auto [timeline, cursor] = open_timeline(Timeline{date, std::move(segment.records)});
            auto body = envelope();
            body["date"] = date.to_string();
            body["length"] = timeline.length();
            body["sealed"] = sealed;
            body["skipped_count"] = skipped;
            body["cursor"] = cursor ? to_json(*cursor) : ordered_json(nullptr);
            body["frames"] = ordered_json::array();
            for (const auto& r : timeline.frames) body["frames"].push_back(record_to_json(r));
            send_json(res, std::move(body));
          }));

  srv.Get(R"(/frame/([0-9]{4}-[0-9]{2}-[0-9]{2})/([0-9]+)/image)",
          guarded([this](const httplib::Request& req, httplib::Response& res) {
            auto id = parse_frame_id(req.matches[1].str() + "/" + req.matches[2].str());
            if (!id) throw Error(ErrorCode::kNotFound, "bad frame id");
            auto record = lookup_frame(deps_.store, *id);
            auto bytes = deps_.store.read_blob(record.blob);
            res.set_header("X-Framelog-Schema", std::to_string(kSchemaVersion));
            res.set_content(std::string(bytes.begin(), bytes.end()), "image/jpeg");
          }));

  srv.Get(R"(/frame/([0-9]{4}-[0-9]{2}-[0-9]{2})/([0-9]+)/meta)",
          guarded([this](const httplib::Request& req, httplib::Response& res) {
            auto id_text = req.matches[1].str() + "/" + req.matches[2].str();
            auto id = parse_frame_id(id_text);
            if (!id) throw Error(ErrorCode::kNotFound, "bad frame id");
            auto record = lookup_frame(deps_.store, *id);
            auto body = envelope();
            body["id"] = id_text;
            body["record"] = record_to_json(record);
            body["view"] = to_json(view_of(record));
            body["folder_available"] = record.category == AppCategory::kDocumentEditor &&
                                       !locator_empty(record.locator);
            send_json(res, std::move(body));
          }));

  srv.Post("/open", guarded([this](const httplib::Request& req, httplib::Response& res) {
    auto j = ordered_json::parse(req.body, nullptr, false);
    if (j.is_discarded() || !j.is_object() || !j.contains("frame_id") ||
        !j["frame_id"].is_string()) {
      throw Error(ErrorCode::kInvalidArgument, "body must be {frame_id, variant}");
    }
    std::string variant = "default";
    if (j.contains("variant")) {
      if (!j["variant"].is_string()) throw Error(ErrorCode::kInvalidArgument, "bad variant");
      variant = j["variant"].get<std::string>();
    }
    if (variant != "default" && variant != "folder") {
      throw Error(ErrorCode::kInvalidArgument, fmt::format("unknown variant '{}'", variant));
    }
    auto frame_id = j["frame_id"].get<std::string>();
    auto id = parse_frame_id(frame_id);
    if (!id) throw Error(ErrorCode::kNotFound, fmt::format("unknown frame id '{}'", frame_id));

    std::lock_guard lock(command_mu_);
    auto record = lookup_frame(deps_.store, *id);
    auto action = variant == "folder" ? derive_folder_action(record) : derive_action(record);
    auto body = envelope();
    body["frame_id"] = frame_id;
    body["action"] = to_json(action);
    try {
      dispatcher_.execute(action);
    } catch (const Error& e) {
      body["error"] = to_string(e.code());
      body["message"] = e.what();
      body["locator"] = locator_target(record.locator);
      send_json(res, std::move(body), http_status(e.code()));
      return;
    }
    body["result"] = "ok";
    send_json(res, std::move(body));
  }));

  srv.Get("/config", guarded([this](const httplib::Request&, httplib::Response& res) {
    auto body = envelope();
    body["config"] = config_to_json(capture_config());
    send_json(res, std::move(body));
  }));

  srv.Put("/config", guarded([this, require_writable](const httplib::Request& req,
                                                      httplib::Response& res) {
    require_writable();
    auto j = ordered_json::parse(req.body, nullptr, false);
    if (j.is_discarded()) throw Error(ErrorCode::kInvalidArgument, "body is not JSON");
    if (j.contains("config")) j = j["config"];

    std::lock_guard lock(command_mu_);
    auto next = config_from_json(j, capture_config());
    next.storage_root = cfg_.storage_root;  // not relocatable at runtime
    auto [w, h] = deps_.recorder ? deps_.recorder->native_size()
                                 : std::pair{kDefaultNativeWidth, kDefaultNativeHeight};
    require_valid_config(next, w, h);
    save_config_file(next);
    {
      std::lock_guard cfg_lock(config_mu_);
      capture_cfg_ = next;
    }
    auto body = envelope();
    body["config"] = config_to_json(next);
    send_json(res, std::move(body));
  }));

  srv.Get("/estimate", guarded([this](const httplib::Request& req, httplib::Response& res) {
    auto number = [&](const char* key, double fallback) {
      if (!req.has_param(key)) return fallback;
      try {
        std::size_t used = 0;
        auto text = req.get_param_value(key);
        double v = std::stod(text, &used);
        if (used != text.size()) throw std::invalid_argument(key);
        return v;
      } catch (const std::exception&) {
        throw Error(ErrorCode::kInvalidArgument, fmt::format("'{}' must be a number", key));
      }
    };
    if (!req.has_param("hours")) throw Error(ErrorCode::kInvalidArgument, "hours is required");
    double hours = number("hours", 0);
    if (!(hours >= 0)) throw Error(ErrorCode::kInvalidArgument, "hours must be non-negative");
    auto [dw, dh] = deps_.recorder ? deps_.recorder->native_size()
                                   : std::pair{kDefaultNativeWidth, kDefaultNativeHeight};
    int w = static_cast<int>(number("width", dw));
    int h = static_cast<int>(number("height", dh));
    auto cfg = capture_config();
    require_valid_config(cfg, w, h);
    auto e = estimate_disk(cfg, w, h, hours);
    auto body = envelope();
    body["hours"] = hours;
    body["native_w"] = w;
    body["native_h"] = h;
    body["frames"] = e.frames;
    body["bytes_per_frame"] = e.bytes_per_frame;
    body["bytes"] = e.bytes;
    send_json(res, std::move(body));
  }));

  srv.Post("/gc", guarded([this, require_writable](const httplib::Request&,
                                                    httplib::Response& res) {
    require_writable();
    std::lock_guard lock(command_mu_);
    auto body = envelope();
    body["report"] = to_json(collect_garbage());
    send_json(res, std::move(body));
  }));

  srv.Get("/stats", guarded([this](const httplib::Request&, httplib::Response& res) {
    auto body = envelope();
    body["stats"] = to_json(deps_.store.stats());
    send_json(res, std::move(body));
  }));

  srv.Post(R"(/record/(start|stop))", guarded([this, require_writable](
                                                   const httplib::Request& req,
                                                   httplib::Response& res) {
    require_writable();
    if (deps_.recorder == nullptr) {
      throw Error(ErrorCode::kSourceUnavailable, "no frame source configured");
    }
    std::lock_guard lock(command_mu_);
    bool changed = req.matches[1].str() == "start" ? deps_.recorder->start(capture_config())
                                                   : deps_.recorder->stop();
    auto body = envelope();
    body["changed"] = changed;
    body["running"] = deps_.recorder->status().running;
    send_json(res, std::move(body));
  }));

  srv.Get("/record/status", guarded([this](const httplib::Request&, httplib::Response& res) {
    auto body = envelope();
    if (deps_.recorder == nullptr) {
      body["available"] = false;
      body["running"] = false;
    } else {
      auto status = deps_.recorder->status();
      body["available"] = true;
      body["running"] = status.running;
      body["last_run"] =
          status.last_report ? loop_report_json(*status.last_report) : ordered_json(nullptr);
    }
    send_json(res, std::move(body));
  }));

  srv.Post("/categories/reload", guarded([this, require_writable](const httplib::Request&,
                                                                  httplib::Response& res) {
    require_writable();
    if (deps_.category_map_path.empty()) {
      throw Error(ErrorCode::kNotFound, "no category map file configured");
    }
    std::lock_guard lock(command_mu_);
    auto warnings = deps_.registry.reload_from(deps_.category_map_path);
    auto body = envelope();
    body["version"] = deps_.registry.current()->version;
    body["rules"] = deps_.registry.current()->rules.size();
    body["warnings"] = warnings;
    send_json(res, std::move(body));
  }));

  srv.set_error_handler([](const httplib::Request&, httplib::Response& res) {
    if (res.body.empty()) {
      auto body = envelope();
      body["error"] = res.status == 404 ? "not_found" : "http_error";
      body["status"] = res.status;
      res.set_content(body.dump(), kJsonType);
    }
  });
}

void Service::start() {
  if (listener_.joinable()) return;
  if (cfg_.port == 0) {
    bound_port_ = server_->bind_to_any_port(cfg_.bind_address);
    if (bound_port_ <= 0) {
      throw Error(ErrorCode::kPortInUse, fmt::format("cannot bind {}", cfg_.bind_address));
    }
  } else {
    if (!server_->bind_to_port(cfg_.bind_address, cfg_.port)) {
      throw Error(ErrorCode::kPortInUse,
                  fmt::format("cannot bind {}:{}", cfg_.bind_address, cfg_.port));
    }
    bound_port_ = cfg_.port;
  }
  if (!cfg_.read_only) {
    try {
      std::lock_guard lock(command_mu_);
      collect_garbage();
    } catch (const std::exception& e) {
      spdlog::error("startup gc failed: {}", e.what());
    }
    maintenance_ = std::jthread([this](std::stop_token stop) { maintenance(stop); });
  }
  listener_ = std::thread([this] { server_->listen_after_bind(); });
  server_->wait_until_ready();
}

void Service::wait() {
  if (listener_.joinable()) listener_.join();
}

void Service::stop() {
  if (maintenance_.joinable()) {
    maintenance_.request_stop();
    maintenance_.join();
  }
  if (server_) server_->stop();
  if (listener_.joinable()) listener_.join();
}

}  // namespace framelog
