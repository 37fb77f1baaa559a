#pragma once

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iterator>
#include <map>
#include <memory>
#include <string>
#include <vector>

#include "framelog/capture.hpp"
#include "framelog/record.hpp"
#include "framelog/store.hpp"
#include "framelog/time.hpp"

namespace framelog::testing {

// Fresh directory under $TMPDIR, removed on destruction.
class TempDir {
 public:
  TempDir() {
    auto base = std::filesystem::temp_directory_path() / "framelog-test-XXXXXX";
    std::string tmpl = base.string();
    if (::mkdtemp(tmpl.data()) == nullptr) throw std::runtime_error("mkdtemp failed");
    path_ = tmpl;
  }
  ~TempDir() {
    std::error_code ec;
    std::filesystem::remove_all(path_, ec);
  }
  TempDir(const TempDir&) = delete;
  TempDir& operator=(const TempDir&) = delete;

  const std::filesystem::path& path() const { return path_; }
  std::filesystem::path operator/(const std::string& leaf) const { return path_ / leaf; }

 private:
  std::filesystem::path path_;
};

inline constexpr int kTestW = 480;
inline constexpr int kTestH = 360;

inline RawFrame make_frame(Timestamp ts, std::uint32_t key, int w = kTestW, int h = kTestH) {
  RawFrame f;
  f.captured_at = ts;
  f.image = synthetic_image(w, h, 7, key);
  f.native_w = w;
  f.native_h = h;
  return f;
}

inline FrameMeta web_meta(std::string url = "https://example.org/a") {
  FrameMeta m;
  m.app_id = "com.google.Chrome";
  m.app_name = "Chrome";
  m.category = AppCategory::kWebBrowser;
  m.label = std::string(kLabelWebBrowser);
  m.locator = WebLocator{std::move(url), "Example"};
  return m;
}

inline FrameMeta doc_meta(std::string path) {
  FrameMeta m;
  m.app_id = "com.microsoft.Word";
  m.app_name = "Word";
  m.category = AppCategory::kDocumentEditor;
  m.label = std::string(kLabelDocumentEditor);
  auto name = std::filesystem::path(path).filename().string();
  m.locator = FileLocator{std::move(path), std::move(name)};
  return m;
}

inline FrameMeta project_meta(std::string root) {
  FrameMeta m;
  m.app_id = "com.apple.dt.Xcode";
  m.app_name = "Xcode";
  m.category = AppCategory::kProjectBased;
  m.label = std::string(kLabelProjectBased);
  m.locator = ProjectLocator{std::move(root)};
  return m;
}

inline FrameMeta plain_meta() {
  FrameMeta m;
  m.app_id = "org.example.Terminal";
  m.app_name = "Terminal";
  return m;
}

inline std::shared_ptr<FixedClock> fixed_clock(Date today) {
  return std::make_shared<FixedClock>(Timestamp::from_local(today, 12, 0, 0));
}

inline std::string slurp(const std::filesystem::path& p) {
  std::ifstream in(p, std::ios::binary);
  return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

// Every regular file under root with its bytes; equal snapshots mean the
// tree was not modified.
inline std::map<std::string, std::string> snapshot_tree(const std::filesystem::path& root) {
  std::map<std::string, std::string> out;
  for (const auto& e : std::filesystem::recursive_directory_iterator(root)) {
    if (e.is_regular_file()) {
      out[std::filesystem::relative(e.path(), root).string()] = slurp(e.path());
    }
  }
  return out;
}

// Writes `n` records on `date`, one second apart from 09:00, cycling the
// frame keys.
inline std::vector<FrameRecord> fill_day(FrameStore& store, Date date, int n,
                                         const std::vector<std::uint32_t>& keys,
                                         const FrameMeta& meta = plain_meta()) {
  std::vector<FrameRecord> out;
  CaptureConfig cfg;
  cfg.quality = 0.5;
  for (int i = 0; i < n; ++i) {
    auto ts = Timestamp::from_local(date, 9, 0, 0);
    ts.utc += std::chrono::seconds(i);
    out.push_back(store.append(make_frame(ts, keys[static_cast<std::size_t>(i) % keys.size()]),
                               meta, cfg));
  }
  return out;
}

}  // namespace framelog::testing
