#include "framelog/record.hpp"

namespace framelog {

namespace {

bool get_string(const ordered_json& j, const char* key, std::string& out) {
  auto it = j.find(key);
  if (it == j.end() || !it->is_string()) return false;
  out = it->get<std::string>();
  return true;
}

std::string optional_string(const ordered_json& j, const char* key) {
  auto it = j.find(key);
  if (it == j.end() || !it->is_string()) return {};
  return it->get<std::string>();
}

bool get_dim(const ordered_json& j, const char* key, int& out) {
  auto it = j.find(key);
  if (it == j.end() || !it->is_number_integer()) return false;
  auto v = it->get<long long>();
  if (v <= 0 || v > 1'000'000) return false;
  out = static_cast<int>(v);
  return true;
}

}  // namespace

std::string_view to_string(CaptureTrigger trigger) noexcept {
  return trigger == CaptureTrigger::kAppSwitch ? "app_switch" : "interval";
}

std::optional<CaptureTrigger> parse_trigger(std::string_view text) noexcept {
  if (text == "interval") return CaptureTrigger::kInterval;
  if (text == "app_switch") return CaptureTrigger::kAppSwitch;
  return std::nullopt;
}

bool is_blob_hash(std::string_view text) noexcept {
  if (text.size() != 64) return false;
  for (char c : text) {
    if (!((c >= '0' && c <= '9') || (c >= 'a' && c <= 'f'))) return false;
  }
  return true;
}

ordered_json locator_to_json(const Locator& locator) {
  struct Visitor {
    ordered_json operator()(std::monostate) const { return ordered_json::object(); }
    ordered_json operator()(const WebLocator& l) const {
      return ordered_json{{"url", l.url}, {"title", l.title}};
    }
    ordered_json operator()(const FileLocator& l) const {
      return ordered_json{{"file_path", l.file_path}, {"file_name", l.file_name}};
    }
    ordered_json operator()(const ProjectLocator& l) const {
      return ordered_json{{"project_root", l.project_root}};
    }
  };
  return std::visit(Visitor{}, locator);
}

Locator locator_from_json(AppCategory category, const ordered_json& j) {
  switch (category) {
    case AppCategory::kWebBrowser:
      return WebLocator{optional_string(j, "url"), optional_string(j, "title")};
    case AppCategory::kDocumentEditor:
      return FileLocator{optional_string(j, "file_path"), optional_string(j, "file_name")};
    case AppCategory::kProjectBased:
      return ProjectLocator{optional_string(j, "project_root")};
    case AppCategory::kNoMetadata:
      break;
  }
  return std::monostate{};
}

ordered_json record_to_json(const FrameRecord& r) {
  ordered_json j;
  j["ts"] = r.ts.to_rfc3339();
  j["blob"] = r.blob;
  j["w"] = r.w;
  j["h"] = r.h;
  j["app_id"] = r.app_id;
  j["app_name"] = r.app_name;
  j["category"] = to_string(r.category);
  j["label"] = r.label;
  j["locator"] = locator_to_json(r.locator);
  j["trigger"] = to_string(r.trigger);
  return j;
}

std::optional<FrameRecord> record_from_json(const ordered_json& j) {
  if (!j.is_object()) return std::nullopt;
  FrameRecord r;
  std::string ts, category, trigger;
  if (!get_string(j, "ts", ts) || !get_string(j, "blob", r.blob) || !get_dim(j, "w", r.w) ||
      !get_dim(j, "h", r.h) || !get_string(j, "app_id", r.app_id) ||
      !get_string(j, "app_name", r.app_name) || !get_string(j, "category", category) ||
      !get_string(j, "label", r.label) || !get_string(j, "trigger", trigger)) {
    return std::nullopt;
  }
  auto parsed_ts = Timestamp::parse_rfc3339(ts);
  auto parsed_category = parse_category(category);
  auto parsed_trigger = parse_trigger(trigger);
  if (!parsed_ts || !parsed_category || !parsed_trigger || !is_blob_hash(r.blob)) {
    return std::nullopt;
  }
  auto loc = j.find("locator");
  if (loc == j.end() || !loc->is_object()) return std::nullopt;
  r.ts = *parsed_ts;
  r.category = *parsed_category;
  r.trigger = *parsed_trigger;
  r.locator = locator_from_json(r.category, *loc);
  return r;
}

std::string serialize_record(const FrameRecord& record) {
  // Invalid UTF-8 from a metadata provider is replaced rather than thrown on.
  return record_to_json(record).dump(-1, ' ', false, ordered_json::error_handler_t::replace);
}

std::optional<FrameRecord> parse_record(std::string_view line) {
  auto j = ordered_json::parse(line.begin(), line.end(), nullptr, false);
  if (j.is_discarded()) return std::nullopt;
  return record_from_json(j);
}

}  // namespace framelog
