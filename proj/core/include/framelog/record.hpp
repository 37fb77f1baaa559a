#pragma once

#include <optional>
#include <string>
#include <string_view>

#include <nlohmann/json.hpp>

#include "framelog/registry.hpp"
#include "framelog/time.hpp"

namespace framelog {

enum class CaptureTrigger { kInterval, kAppSwitch };

std::string_view to_string(CaptureTrigger trigger) noexcept;
std::optional<CaptureTrigger> parse_trigger(std::string_view text) noexcept;

// Classified metadata for one frame, as attached by the capture loop.
struct FrameMeta {
  std::string app_id;
  std::string app_name;
  AppCategory category = AppCategory::kNoMetadata;
  std::string label{kLabelNoMetadata};
  Locator locator;
  CaptureTrigger trigger = CaptureTrigger::kInterval;

  friend bool operator==(const FrameMeta&, const FrameMeta&) = default;
};

// One journal line.
struct FrameRecord {
  Timestamp ts;
  std::string blob;  // 64 lowercase hex chars
  int w = 0;
  int h = 0;
  std::string app_id;
  std::string app_name;
  AppCategory category = AppCategory::kNoMetadata;
  std::string label{kLabelNoMetadata};
  Locator locator;
  CaptureTrigger trigger = CaptureTrigger::kInterval;

  friend bool operator==(const FrameRecord&, const FrameRecord&) = default;
};

using ordered_json = nlohmann::ordered_json;

ordered_json locator_to_json(const Locator& locator);
// The category decides the expected shape; missing members read as empty.
Locator locator_from_json(AppCategory category, const ordered_json& j);

// Fields in journal order: ts, blob, w, h, app_id, app_name, category,
// label, locator, trigger.
ordered_json record_to_json(const FrameRecord& record);
// nullopt when the object is missing fields or has ill-typed ones.
std::optional<FrameRecord> record_from_json(const ordered_json& j);

// Single journal line without the terminating LF.
std::string serialize_record(const FrameRecord& record);
std::optional<FrameRecord> parse_record(std::string_view line);

bool is_blob_hash(std::string_view text) noexcept;

}  // namespace framelog
