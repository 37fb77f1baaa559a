#pragma once

#include <chrono>
#include <filesystem>
#include <memory>
#include <mutex>
#include <optional>
#include <string>
#include <string_view>
#include <thread>

#include "framelog/capture.hpp"
#include "framelog/registry.hpp"
#include "framelog/retrieval.hpp"
#include "framelog/store.hpp"
#include "framelog/time.hpp"

namespace httplib {
class Server;
}

namespace framelog {

inline constexpr int kSchemaVersion = 1;
inline constexpr const char* kStorageRootEnv = "FRAMELOG_ROOT";
inline constexpr int kDefaultPort = 7878;
inline constexpr int kDefaultNativeWidth = 1440;
inline constexpr int kDefaultNativeHeight = 1080;

// True for 127.0.0.0/8, ::1, IPv4-mapped loopback and "localhost".
bool is_loopback_address(std::string_view host);

// storage_root/config.json. A missing file yields defaults rooted at
// storage_root.
CaptureConfig load_config_file(const std::filesystem::path& storage_root);
void save_config_file(const CaptureConfig& cfg);

// Storage root from $FRAMELOG_ROOT, else ~/.local/share/framelog.
std::filesystem::path default_storage_root();

struct ServiceConfig {
  std::string bind_address = "127.0.0.1";
  int port = kDefaultPort;  // 0 picks a free port
  std::filesystem::path storage_root;
  bool read_only = false;
  // How often the maintenance thread checks for a new local day.
  std::chrono::milliseconds maintenance_poll{60'000};
};

struct ServiceDeps {
  FrameStore& store;
  CategoryRegistry& registry;
  Launcher& launcher;
  Recorder* recorder = nullptr;  // capture control is unavailable without one
  std::shared_ptr<const Clock> clock = default_clock();
  std::filesystem::path category_map_path;  // for POST /categories/reload
};

// Loopback-only HTTP API. Endpoints:
//   GET  /dates                      GET  /timeline/{date}
//   GET  /frame/{date}/{i}/image     GET  /frame/{date}/{i}/meta
//   POST /open                       GET|PUT /config
//   GET  /estimate?hours=H           POST /gc
//   GET  /stats                      POST /record/start, /record/stop
//   GET  /record/status              POST /categories/reload
// Every JSON body carries "schema"; images carry X-Framelog-Schema.
class Service {
 public:
  // Throws Error(kBindRefusedNonLoopback) before touching the network.
  Service(ServiceConfig cfg, ServiceDeps deps);
  ~Service();

  Service(const Service&) = delete;
  Service& operator=(const Service&) = delete;

  // Binds and starts serving on a background thread. Throws
  // Error(kPortInUse) when the address cannot be bound.
  void start();
  // Blocks until stop() is called from elsewhere.
  void wait();
  void stop();

  int port() const { return bound_port_; }
  CaptureConfig capture_config() const;

 private:
  void install_routes();
  GcReport collect_garbage();
  void maintenance(std::stop_token stop);

  ServiceConfig cfg_;
  ServiceDeps deps_;
  std::unique_ptr<httplib::Server> server_;
  int bound_port_ = 0;
  std::thread listener_;
  std::jthread maintenance_;

  // Mutating requests are applied one at a time.
  std::mutex command_mu_;
  mutable std::mutex config_mu_;
  CaptureConfig capture_cfg_;
  RetrievalDispatcher dispatcher_;
};

}  // namespace framelog
