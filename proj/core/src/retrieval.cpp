#include "framelog/retrieval.hpp"

#include <filesystem>
#include <system_error>

#include <spawn.h>
#include <sys/wait.h>

#include <fmt/format.h>

#include "framelog/error.hpp"

extern char** environ;

namespace framelog {

namespace fs = std::filesystem;

std::string_view to_string(ActionKind kind) noexcept {
  switch (kind) {
    case ActionKind::kOpenUrl: return "open_url";
    case ActionKind::kOpenFile: return "open_file";
    case ActionKind::kOpenEnclosingFolder: return "open_enclosing_folder";
    case ActionKind::kOpenProject: return "open_project";
    case ActionKind::kLaunchApp: return "launch_app";
  }
  return "launch_app";
}

std::optional<ActionKind> parse_action_kind(std::string_view text) noexcept {
  if (text == "open_url") return ActionKind::kOpenUrl;
  if (text == "open_file") return ActionKind::kOpenFile;
  if (text == "open_enclosing_folder") return ActionKind::kOpenEnclosingFolder;
  if (text == "open_project") return ActionKind::kOpenProject;
  if (text == "launch_app") return ActionKind::kLaunchApp;
  return std::nullopt;
}

std::optional<std::string> check_action(const RetrievalAction& action) {
  switch (action.kind) {
    case ActionKind::kOpenUrl:
      if (action.target.empty()) return "open_url needs a URL";
      break;
    case ActionKind::kOpenFile:
    case ActionKind::kOpenEnclosingFolder:
    case ActionKind::kOpenProject:
      if (action.target.empty()) {
        return fmt::format("{} needs a path", to_string(action.kind));
      }
      break;
    case ActionKind::kLaunchApp:
      if (!action.target.empty()) return "launch_app takes no target";
      break;
  }
  return std::nullopt;
}

nlohmann::ordered_json to_json(const RetrievalAction& action) {
  return nlohmann::ordered_json{{"kind", to_string(action.kind)},
                                {"target", action.target},
                                {"app_hint", action.app_hint}};
}

RetrievalAction action_from_json(const nlohmann::ordered_json& j) {
  auto field = [&](const char* key) -> std::string {
    auto it = j.find(key);
    if (it == j.end() || !it->is_string()) {
      throw Error(ErrorCode::kInvalidArgument, fmt::format("action field '{}' missing", key));
    }
    return it->get<std::string>();
  };
  if (!j.is_object()) throw Error(ErrorCode::kInvalidArgument, "action must be an object");
  auto kind = parse_action_kind(field("kind"));
  if (!kind) throw Error(ErrorCode::kInvalidArgument, "unknown action kind");
  return RetrievalAction{*kind, field("target"), field("app_hint")};
}

RetrievalAction derive_action(const FrameRecord& record) {
  RetrievalAction action;
  action.app_hint = record.app_id;
  const auto target = locator_target(record.locator);
  if (target.empty()) return action;

  switch (record.category) {
    case AppCategory::kWebBrowser:
      if (std::holds_alternative<WebLocator>(record.locator)) action.kind = ActionKind::kOpenUrl;
      break;
    case AppCategory::kDocumentEditor:
      if (std::holds_alternative<FileLocator>(record.locator)) action.kind = ActionKind::kOpenFile;
      break;
    case AppCategory::kProjectBased:
      if (std::holds_alternative<ProjectLocator>(record.locator)) {
        action.kind = ActionKind::kOpenProject;
      }
      break;
    case AppCategory::kNoMetadata:
      break;
  }
  if (action.kind != ActionKind::kLaunchApp) action.target = target;
  return action;
}

RetrievalAction derive_folder_action(const FrameRecord& record) {
  const auto* file = std::get_if<FileLocator>(&record.locator);
  if (record.category != AppCategory::kDocumentEditor || file == nullptr ||
      file->file_path.empty()) {
    throw Error(ErrorCode::kNotApplicable,
                fmt::format("no enclosing folder for a {} frame", to_string(record.category)));
  }
  fs::path path(file->file_path);
  auto parent = path.parent_path();
  if (parent.empty()) parent = path.has_root_directory() ? path.root_path() : fs::path(".");
  return RetrievalAction{ActionKind::kOpenEnclosingFolder, parent.string(), record.app_id};
}

void RecordingLauncher::launch(const RetrievalAction& action) {
  std::lock_guard lock(mu_);
  log_.push_back(action);
  if (failures_pending_ > 0) {
    --failures_pending_;
    throw Error(ErrorCode::kLaunchError, "scripted launch failure");
  }
}

std::vector<RetrievalAction> RecordingLauncher::log() const {
  std::lock_guard lock(mu_);
  return log_;
}

void RecordingLauncher::fail_next(std::size_t count) {
  std::lock_guard lock(mu_);
  failures_pending_ = count;
}

void RecordingLauncher::clear() {
  std::lock_guard lock(mu_);
  log_.clear();
}

void SystemLauncher::launch(const RetrievalAction& action) {
  std::vector<std::string> argv;
#ifdef __APPLE__
  if (action.kind == ActionKind::kLaunchApp) {
    argv = {"open", "-b", action.app_hint};
  } else {
    argv = {"open", action.target};
  }
#else
  if (action.kind == ActionKind::kLaunchApp) {
    argv = {"gtk-launch", action.app_hint};
  } else {
    argv = {"xdg-open", action.target};
  }
#endif
  if (argv.back().empty()) throw Error(ErrorCode::kLaunchError, "nothing to launch");

  std::vector<char*> args;
  for (auto& a : argv) args.push_back(a.data());
  args.push_back(nullptr);
  pid_t pid = 0;
  int rc = ::posix_spawnp(&pid, args[0], nullptr, nullptr, args.data(), environ);
  if (rc != 0) {
    throw Error(ErrorCode::kLaunchError,
                fmt::format("{}: {}", argv[0], std::generic_category().message(rc)));
  }
  int status = 0;
  if (::waitpid(pid, &status, 0) < 0 || !WIFEXITED(status) || WEXITSTATUS(status) != 0) {
    throw Error(ErrorCode::kLaunchError, fmt::format("{} failed for '{}'", argv[0], argv.back()));
  }
}

void execute(const RetrievalAction& action, Launcher& launcher) {
  if (auto why = check_action(action)) throw Error(ErrorCode::kInvalidArgument, *why);

  switch (action.kind) {
    case ActionKind::kOpenFile:
    case ActionKind::kOpenEnclosingFolder:
    case ActionKind::kOpenProject: {
      std::error_code ec;
      if (!fs::exists(action.target, ec)) {
        throw Error(ErrorCode::kOpenTargetMissing,
                    fmt::format("file no longer at recorded path: {}", action.target));
      }
      break;
    }
    default:
      break;
  }

  try {
    launcher.launch(action);
  } catch (const Error&) {
    throw;
  } catch (const std::exception& e) {
    throw Error(ErrorCode::kLaunchError, e.what());
  }
}

void RetrievalDispatcher::execute(const RetrievalAction& action) {
  std::lock_guard lock(mu_);
  framelog::execute(action, launcher_);
}

}  // namespace framelog
