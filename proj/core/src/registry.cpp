#include "framelog/registry.hpp"

#include <cctype>
#include <charconv>
#include <fstream>
#include <sstream>
#include <unordered_set>

#include <fmt/format.h>

#include "framelog/error.hpp"

namespace framelog {

namespace {

constexpr std::string_view kDefaultMap =
    "# application id -> metadata category\n"
    "version 1\n"
    "com.google.chrome*\tweb_browser\tPage URL\n"
    "com.apple.safari*\tweb_browser\tPage URL\n"
    "org.mozilla.firefox*\tweb_browser\tPage URL\n"
    "com.microsoft.edgemac*\tweb_browser\tPage URL\n"
    "firefox*\tweb_browser\tPage URL\n"
    "chromium*\tweb_browser\tPage URL\n"
    "com.microsoft.word\tdocument_editor\tFile Directory\n"
    "com.microsoft.excel\tdocument_editor\tFile Directory\n"
    "com.microsoft.powerpoint\tdocument_editor\tFile Directory\n"
    "com.apple.iwork.*\tdocument_editor\tFile Directory\n"
    "com.apple.preview\tdocument_editor\tFile Directory\n"
    "com.adobe.acrobat*\tdocument_editor\tFile Directory\n"
    "libreoffice*\tdocument_editor\tFile Directory\n"
    "com.apple.dt.xcode\tproject_based\tProject\n"
    "com.jetbrains.*\tproject_based\tProject\n"
    "com.microsoft.vscode*\tproject_based\tProject\n"
    "code\tproject_based\tProject\n"
    "org.zotero.zotero\tproject_based\tProject\n";

std::string_view trim(std::string_view s) {
  while (!s.empty() && (s.front() == ' ' || s.front() == '\t' || s.front() == '\r')) {
    s.remove_prefix(1);
  }
  while (!s.empty() && (s.back() == ' ' || s.back() == '\t' || s.back() == '\r')) {
    s.remove_suffix(1);
  }
  return s;
}

std::string lowercase(std::string_view s) {
  std::string out(s);
  for (auto& c : out) c = static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
  return out;
}

[[noreturn]] void malformed(int line, std::string_view why) {
  throw Error(ErrorCode::kMalformedMap, fmt::format("category map line {}: {}", line, why));
}

}  // namespace

std::string_view to_string(AppCategory category) noexcept {
  switch (category) {
    case AppCategory::kWebBrowser: return "web_browser";
    case AppCategory::kDocumentEditor: return "document_editor";
    case AppCategory::kProjectBased: return "project_based";
    case AppCategory::kNoMetadata: return "no_metadata";
  }
  return "no_metadata";
}

std::optional<AppCategory> parse_category(std::string_view text) noexcept {
  if (text == "web_browser") return AppCategory::kWebBrowser;
  if (text == "document_editor") return AppCategory::kDocumentEditor;
  if (text == "project_based") return AppCategory::kProjectBased;
  if (text == "no_metadata") return AppCategory::kNoMetadata;
  return std::nullopt;
}

std::optional<std::string_view> required_label(AppCategory category) noexcept {
  switch (category) {
    case AppCategory::kWebBrowser: return kLabelWebBrowser;
    case AppCategory::kDocumentEditor: return kLabelDocumentEditor;
    default: return std::nullopt;
  }
}

std::string locator_target(const Locator& locator) {
  struct Visitor {
    std::string operator()(std::monostate) const { return {}; }
    std::string operator()(const WebLocator& l) const { return l.url; }
    std::string operator()(const FileLocator& l) const { return l.file_path; }
    std::string operator()(const ProjectLocator& l) const { return l.project_root; }
  };
  return std::visit(Visitor{}, locator);
}

bool locator_empty(const Locator& locator) { return locator_target(locator).empty(); }

bool glob_match_icase(std::string_view pattern, std::string_view text) noexcept {
  auto lower = [](char c) {
    return static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
  };
  std::size_t p = 0, t = 0;
  std::size_t star = std::string_view::npos, resume = 0;
  while (t < text.size()) {
    if (p < pattern.size() && (pattern[p] == '?' || lower(pattern[p]) == lower(text[t]))) {
      ++p;
      ++t;
    } else if (p < pattern.size() && pattern[p] == '*') {
      star = p++;
      resume = t;
    } else if (star != std::string_view::npos) {
      p = star + 1;
      t = ++resume;
    } else {
      return false;
    }
  }
  while (p < pattern.size() && pattern[p] == '*') ++p;
  return p == pattern.size();
}

Classification classify(const CategoryMap& map, std::string_view app_id) {
  for (const auto& rule : map.rules) {
    if (glob_match_icase(rule.app_id_pattern, app_id)) {
      return Classification{rule.category, rule.label};
    }
  }
  return Classification{};
}

Locator extract_locator(AppCategory category, const AppSnapshot& snapshot) {
  switch (category) {
    case AppCategory::kWebBrowser:
      if (snapshot.url.empty()) return WebLocator{};
      return WebLocator{snapshot.url, snapshot.window_title};
    case AppCategory::kDocumentEditor: {
      if (snapshot.file_path.empty()) return FileLocator{};
      auto name = std::filesystem::path(snapshot.file_path).filename().string();
      return FileLocator{snapshot.file_path, name};
    }
    case AppCategory::kProjectBased:
      return ProjectLocator{snapshot.project_root};
    case AppCategory::kNoMetadata:
      break;
  }
  return std::monostate{};
}

LoadedCategoryMap load_category_map(std::istream& in) {
  LoadedCategoryMap out;
  std::unordered_set<std::string> seen;
  bool have_version = false;
  std::string raw;
  int line_no = 0;
  while (std::getline(in, raw)) {
    ++line_no;
    std::string_view line = raw;
    if (!line.empty() && line.back() == '\r') line.remove_suffix(1);
    auto content = trim(line);
    if (content.empty() || content.front() == '#') continue;

    if (!have_version) {
      constexpr std::string_view kPrefix = "version";
      if (content.substr(0, kPrefix.size()) != kPrefix) {
        malformed(line_no, "expected 'version <int>' header");
      }
      auto num = trim(content.substr(kPrefix.size()));
      int version = 0;
      auto res = std::from_chars(num.data(), num.data() + num.size(), version);
      if (num.empty() || res.ec != std::errc{} || res.ptr != num.data() + num.size() ||
          version < 0) {
        malformed(line_no, "version must be a non-negative integer");
      }
      out.map.version = version;
      have_version = true;
      continue;
    }

    auto tab1 = line.find('\t');
    auto tab2 = tab1 == std::string_view::npos ? tab1 : line.find('\t', tab1 + 1);
    if (tab2 == std::string_view::npos || line.find('\t', tab2 + 1) != std::string_view::npos) {
      malformed(line_no, "expected pattern<TAB>category<TAB>label");
    }
    auto pattern = trim(line.substr(0, tab1));
    auto category_text = trim(line.substr(tab1 + 1, tab2 - tab1 - 1));
    auto label = trim(line.substr(tab2 + 1));
    if (pattern.empty()) malformed(line_no, "empty pattern");
    if (label.empty()) malformed(line_no, "empty label");
    auto category = parse_category(category_text);
    if (!category) malformed(line_no, fmt::format("unknown category '{}'", category_text));
    if (auto required = required_label(*category); required && label != *required) {
      malformed(line_no, fmt::format("category {} requires label '{}', got '{}'",
                                     category_text, *required, label));
    }

    auto key = lowercase(pattern);
    if (!seen.insert(key).second) {
      out.warnings.push_back(fmt::format(
          "line {}: duplicate pattern '{}' ignored; first occurrence wins", line_no, pattern));
      continue;
    }
    out.map.rules.push_back(CategoryRule{std::string(pattern), *category, std::string(label)});
  }
  if (in.bad()) throw Error(ErrorCode::kIo, "category map: read failed");
  return out;
}

LoadedCategoryMap load_category_map_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) {
    throw Error(ErrorCode::kNotFound, fmt::format("cannot open category map {}", path.string()));
  }
  return load_category_map(in);
}

std::string serialize_category_map(const CategoryMap& map) {
  std::string out = fmt::format("version {}\n", map.version);
  for (const auto& rule : map.rules) {
    out += fmt::format("{}\t{}\t{}\n", rule.app_id_pattern, to_string(rule.category), rule.label);
  }
  return out;
}

const CategoryMap& default_category_map() {
  static const CategoryMap map = [] {
    std::istringstream in{std::string(kDefaultMap)};
    return load_category_map(in).map;
  }();
  return map;
}

CategoryRegistry::CategoryRegistry()
    : map_(std::make_shared<const CategoryMap>(default_category_map())) {}

CategoryRegistry::CategoryRegistry(CategoryMap map)
    : map_(std::make_shared<const CategoryMap>(std::move(map))) {}

std::shared_ptr<const CategoryMap> CategoryRegistry::current() const {
  std::lock_guard lock(mu_);
  return map_;
}

void CategoryRegistry::replace(CategoryMap map) {
  auto next = std::make_shared<const CategoryMap>(std::move(map));
  std::lock_guard lock(mu_);
  map_ = std::move(next);
}

std::vector<std::string> CategoryRegistry::reload_from(const std::filesystem::path& path) {
  auto loaded = load_category_map_file(path);
  replace(std::move(loaded.map));
  return std::move(loaded.warnings);
}

Classification CategoryRegistry::classify(std::string_view app_id) const {
  return framelog::classify(*current(), app_id);
}

}  // namespace framelog
