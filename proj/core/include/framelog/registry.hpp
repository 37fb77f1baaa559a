#pragma once

#include <filesystem>
#include <istream>
#include <memory>
#include <mutex>
#include <optional>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

namespace framelog {

enum class AppCategory { kWebBrowser, kDocumentEditor, kProjectBased, kNoMetadata };

std::string_view to_string(AppCategory category) noexcept;
std::optional<AppCategory> parse_category(std::string_view text) noexcept;

inline constexpr std::string_view kLabelWebBrowser = "Page URL";
inline constexpr std::string_view kLabelDocumentEditor = "File Directory";
inline constexpr std::string_view kLabelProjectBased = "Project";
inline constexpr std::string_view kLabelNoMetadata = "Application";

// The label a category must carry; rules for these two categories are
// rejected if they disagree.
std::optional<std::string_view> required_label(AppCategory category) noexcept;

struct WebLocator {
  std::string url;
  std::string title;
  friend bool operator==(const WebLocator&, const WebLocator&) = default;
};

struct FileLocator {
  std::string file_path;
  std::string file_name;
  friend bool operator==(const FileLocator&, const FileLocator&) = default;
};

struct ProjectLocator {
  std::string project_root;
  friend bool operator==(const ProjectLocator&, const ProjectLocator&) = default;
};

// Category-shaped handle for reopening a resource. monostate is the empty
// locator of a no-metadata application.
using Locator = std::variant<std::monostate, WebLocator, FileLocator, ProjectLocator>;

// Primary reopen target: url, file path or project root; empty otherwise.
std::string locator_target(const Locator& locator);
bool locator_empty(const Locator& locator);

// What a metadata provider reports for the frontmost application.
struct AppSnapshot {
  bool available = false;  // false is the explicit "no metadata" marker
  std::string app_id;
  std::string app_name;
  std::string window_title;
  std::string url;
  std::string file_path;
  std::string project_root;

  static AppSnapshot none() { return {}; }
  friend bool operator==(const AppSnapshot&, const AppSnapshot&) = default;
};

struct CategoryRule {
  std::string app_id_pattern;  // case-insensitive glob: '*' and '?'
  AppCategory category = AppCategory::kNoMetadata;
  std::string label;
};

struct CategoryMap {
  int version = 0;
  std::vector<CategoryRule> rules;
};

struct Classification {
  AppCategory category = AppCategory::kNoMetadata;
  std::string label{kLabelNoMetadata};
  friend bool operator==(const Classification&, const Classification&) = default;
};

bool glob_match_icase(std::string_view pattern, std::string_view text) noexcept;

// First matching rule wins; nothing matching is (no_metadata, "Application").
Classification classify(const CategoryMap& map, std::string_view app_id);

Locator extract_locator(AppCategory category, const AppSnapshot& snapshot);

struct LoadedCategoryMap {
  CategoryMap map;
  std::vector<std::string> warnings;  // duplicate patterns, first kept
};

// Format: '#' comments and blank lines ignored; first content line is
// `version <int>`; every other line is `pattern<TAB>category<TAB>label`.
// An entirely empty document yields an empty map at version 0.
// Throws Error(kMalformedMap) naming the 1-based line.
LoadedCategoryMap load_category_map(std::istream& in);
LoadedCategoryMap load_category_map_file(const std::filesystem::path& path);
std::string serialize_category_map(const CategoryMap& map);

// Built-in map used when no file is configured.
const CategoryMap& default_category_map();

// Holds the active map; reload swaps it atomically for concurrent readers.
class CategoryRegistry {
 public:
  CategoryRegistry();
  explicit CategoryRegistry(CategoryMap map);

  std::shared_ptr<const CategoryMap> current() const;
  void replace(CategoryMap map);
  // Returns warnings from parsing; on error the active map is untouched.
  std::vector<std::string> reload_from(const std::filesystem::path& path);

  Classification classify(std::string_view app_id) const;

 private:
  mutable std::mutex mu_;
  std::shared_ptr<const CategoryMap> map_;
};

}  // namespace framelog
