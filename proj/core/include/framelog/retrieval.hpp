#pragma once

#include <mutex>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include <nlohmann/json.hpp>

#include "framelog/record.hpp"

namespace framelog {

enum class ActionKind { kOpenUrl, kOpenFile, kOpenEnclosingFolder, kOpenProject, kLaunchApp };

std::string_view to_string(ActionKind kind) noexcept;
std::optional<ActionKind> parse_action_kind(std::string_view text) noexcept;

struct RetrievalAction {
  ActionKind kind = ActionKind::kLaunchApp;
  std::string target;
  std::string app_hint;

  friend bool operator==(const RetrievalAction&, const RetrievalAction&) = default;
};

// Empty when the action is well formed, otherwise why not.
std::optional<std::string> check_action(const RetrievalAction& action);

nlohmann::ordered_json to_json(const RetrievalAction& action);
// Throws Error(kInvalidArgument).
RetrievalAction action_from_json(const nlohmann::ordered_json& j);

// Default one-click reopen for a frame. Never fails: anything without a
// usable locator degrades to launching the application.
RetrievalAction derive_action(const FrameRecord& record);

// Enclosing folder of a document. Throws Error(kNotApplicable) for other
// categories or an unsaved document.
RetrievalAction derive_folder_action(const FrameRecord& record);

class Launcher {
 public:
  virtual ~Launcher() = default;
  // Throws on failure; non-framelog exceptions are reported as kLaunchError.
  virtual void launch(const RetrievalAction& action) = 0;
};

// Test launcher: records every action in call order and can be told to
// fail the next launches.
class RecordingLauncher final : public Launcher {
 public:
  void launch(const RetrievalAction& action) override;

  std::vector<RetrievalAction> log() const;
  void fail_next(std::size_t count = 1);
  void clear();

 private:
  mutable std::mutex mu_;
  std::vector<RetrievalAction> log_;
  std::size_t failures_pending_ = 0;
};

// Hands actions to the desktop's opener (`open` on macOS, `xdg-open` and
// `gtk-launch` elsewhere) without waiting for the opened program.
class SystemLauncher final : public Launcher {
 public:
  void launch(const RetrievalAction& action) override;
};

// Validates the action, refuses local-path targets that no longer exist
// (Error kOpenTargetMissing, launcher untouched), then delegates.
void execute(const RetrievalAction& action, Launcher& launcher);

// Serialises execute() so launches happen one at a time and in order.
class RetrievalDispatcher {
 public:
  explicit RetrievalDispatcher(Launcher& launcher) : launcher_(launcher) {}
  void execute(const RetrievalAction& action);

 private:
  std::mutex mu_;
  Launcher& launcher_;
};

}  // namespace framelog
