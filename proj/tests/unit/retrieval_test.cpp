#include <filesystem>
#include <fstream>

#include <gtest/gtest.h>

#include "framelog/error.hpp"
#include "framelog/retrieval.hpp"
#include "test_support.hpp"

using namespace framelog;
using namespace framelog::testing;

namespace {

FrameRecord record_of(const FrameMeta& m) {
  FrameRecord r;
  r.app_id = m.app_id;
  r.app_name = m.app_name;
  r.category = m.category;
  r.label = m.label;
  r.locator = m.locator;
  return r;
}

ErrorCode code_of(const std::function<void()>& fn) {
  try {
    fn();
  } catch (const Error& e) {
    return e.code();
  }
  ADD_FAILURE() << "no error thrown";
  return ErrorCode::kIo;
}

class ThrowingLauncher final : public Launcher {
 public:
  void launch(const RetrievalAction&) override { throw std::runtime_error("boom"); }
};

}  // namespace

TEST(DeriveActionTest, PerCategory) {
  EXPECT_EQ(derive_action(record_of(web_meta("https://x.example/"))),
            (RetrievalAction{ActionKind::kOpenUrl, "https://x.example/", "com.google.Chrome"}));
  EXPECT_EQ(derive_action(record_of(doc_meta("/home/u/a.docx"))),
            (RetrievalAction{ActionKind::kOpenFile, "/home/u/a.docx", "com.microsoft.Word"}));
  EXPECT_EQ(derive_action(record_of(project_meta("/src/app"))),
            (RetrievalAction{ActionKind::kOpenProject, "/src/app", "com.apple.dt.Xcode"}));
  EXPECT_EQ(derive_action(record_of(plain_meta())),
            (RetrievalAction{ActionKind::kLaunchApp, "", "org.example.Terminal"}));
}

TEST(DeriveActionTest, DegradesToLaunch) {
  auto web = record_of(web_meta(""));
  EXPECT_EQ(derive_action(web).kind, ActionKind::kLaunchApp);
  auto unsaved = record_of(doc_meta(""));
  EXPECT_EQ(derive_action(unsaved).kind, ActionKind::kLaunchApp);
  auto mismatch = record_of(web_meta("https://x/"));
  mismatch.category = AppCategory::kProjectBased;
  EXPECT_EQ(derive_action(mismatch).kind, ActionKind::kLaunchApp);
}

TEST(FolderActionTest, OnlyForDocuments) {
  EXPECT_EQ(derive_folder_action(record_of(doc_meta("/home/u/a.docx"))),
            (RetrievalAction{ActionKind::kOpenEnclosingFolder, "/home/u", "com.microsoft.Word"}));
  EXPECT_EQ(derive_folder_action(record_of(doc_meta("/a.txt"))).target, "/");
  for (const auto& m : {web_meta("u"), project_meta("/p"), plain_meta(), doc_meta("")}) {
    EXPECT_EQ(code_of([&] { derive_folder_action(record_of(m)); }), ErrorCode::kNotApplicable);
  }
}

TEST(ActionJsonTest, RoundTripAndValidation) {
  RetrievalAction a{ActionKind::kOpenFile, "/x", "hint"};
  EXPECT_EQ(action_from_json(to_json(a)), a);
  EXPECT_EQ(to_json(a).dump(), R"({"kind":"open_file","target":"/x","app_hint":"hint"})");
  EXPECT_THROW(action_from_json(nlohmann::ordered_json{{"kind", "open_mind"}}), Error);
  EXPECT_TRUE(check_action(RetrievalAction{ActionKind::kOpenUrl, "", ""}));
  EXPECT_TRUE(check_action(RetrievalAction{ActionKind::kLaunchApp, "/x", ""}));
  EXPECT_FALSE(check_action(RetrievalAction{ActionKind::kLaunchApp, "", "a"}));
  for (auto k : {ActionKind::kOpenUrl, ActionKind::kOpenFile, ActionKind::kOpenEnclosingFolder,
                 ActionKind::kOpenProject, ActionKind::kLaunchApp}) {
    EXPECT_EQ(parse_action_kind(to_string(k)), k);
  }
}

TEST(ExecuteTest, DelegatesInOrder) {
  TempDir dir;
  auto file = dir / "notes.txt";
  std::ofstream(file) << "x";
  RecordingLauncher launcher;
  RetrievalAction url{ActionKind::kOpenUrl, "https://x/", "b"};
  RetrievalAction doc{ActionKind::kOpenFile, file.string(), "w"};
  RetrievalAction app{ActionKind::kLaunchApp, "", "t"};
  execute(url, launcher);
  execute(doc, launcher);
  execute(app, launcher);
  EXPECT_EQ(launcher.log(), (std::vector<RetrievalAction>{url, doc, app}));
}

TEST(ExecuteTest, MissingFileNeverLaunches) {
  TempDir dir;
  auto file = dir / "gone.txt";
  std::ofstream(file) << "x";
  auto rec = record_of(doc_meta(file.string()));
  std::filesystem::remove(file);
  RecordingLauncher launcher;
  EXPECT_EQ(code_of([&] { execute(derive_action(rec), launcher); }),
            ErrorCode::kOpenTargetMissing);
  EXPECT_TRUE(launcher.log().empty());
  // The folder still exists, so the folder variant works.
  execute(derive_folder_action(rec), launcher);
  ASSERT_EQ(launcher.log().size(), 1u);
  EXPECT_EQ(launcher.log()[0].target, dir.path().string());
}

TEST(ExecuteTest, InvalidActionNeverLaunches) {
  RecordingLauncher launcher;
  EXPECT_EQ(code_of([&] { execute(RetrievalAction{ActionKind::kOpenUrl, "", ""}, launcher); }),
            ErrorCode::kInvalidArgument);
  EXPECT_TRUE(launcher.log().empty());
}

TEST(ExecuteTest, LaunchFailuresSurface) {
  RecordingLauncher launcher;
  launcher.fail_next();
  RetrievalAction url{ActionKind::kOpenUrl, "https://x/", ""};
  EXPECT_EQ(code_of([&] { execute(url, launcher); }), ErrorCode::kLaunchError);
  EXPECT_NO_THROW(execute(url, launcher));
  EXPECT_EQ(launcher.log().size(), 2u);
  launcher.clear();
  EXPECT_TRUE(launcher.log().empty());

  ThrowingLauncher bad;
  EXPECT_EQ(code_of([&] { execute(url, bad); }), ErrorCode::kLaunchError);
}

TEST(DispatcherTest, Serialises) {
  RecordingLauncher launcher;
  RetrievalDispatcher d(launcher);
  std::vector<std::thread> threads;
  for (int i = 0; i < 8; ++i) {
    threads.emplace_back([&, i] {
      d.execute(RetrievalAction{ActionKind::kOpenUrl, "https://x/" + std::to_string(i), ""});
    });
  }
  for (auto& t : threads) t.join();
  EXPECT_EQ(launcher.log().size(), 8u);
}
