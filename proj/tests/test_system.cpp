#include <gtest/gtest.h>

#include <filesystem>
#include <fstream>
#include <sstream>
#include <thread>

#include "edgewatch/daemon.hpp"
#include "edgewatch/errors.hpp"
#include "edgewatch/scenario.hpp"
#include "edgewatch/system.hpp"

using namespace edgewatch;
namespace fs = std::filesystem;

namespace {

RunConfig base_config(const std::string &name) {
  RunConfig c;
  c.channel.kind = ChannelKind::kMock;
  c.channel.channel_id = "C1";
  c.reporting.llm = LlmKind::kMock;
  c.vision.snapshot_dir = fs::path("system-test-out") / name;
  c.vision.frame_rate = 20;
  c.vision.tracker.dwell_seconds = 0.2;
  c.vision.tracker.cooldown_seconds = 0.5;
  SyntheticScript script;
  script.trajectories.push_back(Trajectory{"person", 0, 1'000'000, BBox{10, 10, 60, 120}, 0, 0, 0.9});
  c.backend.script = script;
  return c;
}

std::set<std::pair<std::string, std::string>> table(const Router &router) {
  std::set<std::pair<std::string, std::string>> out;
  for (const auto &s : router.subscriptions()) out.emplace(s.agent.name, s.event_type);
  return out;
}

MockAdapter &mock_of(System &system) { return dynamic_cast<MockAdapter &>(system.adapter()); }

}  // namespace

TEST(Bootstrap, SubscriptionTable) {
  SimulatedClock clock(kScenarioEpoch);
  auto system = bootstrap(base_config("table"), clock);
  auto &router = system->router();
  auto subs = table(router);
  for (auto agent : {"vision", "reporting", "communication"}) {
    EXPECT_TRUE(subs.contains({agent, "command"})) << agent;
  }
  EXPECT_TRUE(subs.contains({"reporting", "snapshot"}));
  EXPECT_TRUE(subs.contains({"communication", "report"}));
  EXPECT_FALSE(subs.contains({"communication", "snapshot"}));
  for (const auto &s : router.subscriptions()) {
    const bool background = s.agent.name == "reporting" && s.event_type == "snapshot";
    EXPECT_EQ(s.mode, background ? DeliveryMode::kBackground : DeliveryMode::kInline)
        << s.agent.name << " " << s.event_type;
  }
  EXPECT_FALSE(system->vision().running());
}

TEST(Bootstrap, ReportingDisabledLeavesSnapshotsUnconsumed) {
  SimulatedClock clock(kScenarioEpoch);
  auto config = base_config("no-reporting");
  config.reporting.enabled = false;
  auto system = bootstrap(config, clock);
  EXPECT_EQ(system->reporting(), nullptr);
  for (const auto &s : system->router().subscriptions()) EXPECT_NE(s.event_type, "snapshot") << s.agent.name;
}

TEST(Bootstrap, DirectPostBridgesSnapshotsToChannel) {
  SimulatedClock clock(kScenarioEpoch);
  auto config = base_config("direct");
  config.reporting.enabled = false;
  config.direct_post = true;
  config.autostart = true;
  auto system = bootstrap(config, clock);
  for (int i = 0; i < 10; ++i) {
    clock.advance_to(kScenarioEpoch + Millis{i * 50});
    system->vision().tick(system->vision().make_frame(i, clock.now()));
    system->router().dispatch_pending();
  }
  auto posted = mock_of(*system).collect();
  ASSERT_EQ(posted.size(), 1u);
  EXPECT_EQ(posted[0].text, "ALERT: person x1 (max conf 0.90)");
  EXPECT_TRUE(posted[0].attachment);
}

TEST(Bootstrap, FailuresSurfaceAsTypedErrors) {
  SimulatedClock clock(kScenarioEpoch);
  auto config = base_config("slack");
  config.channel.kind = ChannelKind::kSlack;
  ::unsetenv("CHANNEL_BOT_TOKEN");
  ::unsetenv("CHANNEL_APP_TOKEN");
  EXPECT_THROW(bootstrap(config, clock), AdapterInitError);

  config = base_config("external");
  config.backend.kind = BackendKind::kExternal;
  config.backend.descriptor = "yolo-grpc";
  EXPECT_THROW(bootstrap(config, clock), AdapterInitError);

  fs::create_directories("system-test-out");
  std::ofstream("system-test-out/plain-file") << "x";
  config = base_config("x");
  config.vision.snapshot_dir = "system-test-out/plain-file/snaps";
  EXPECT_THROW(bootstrap(config, clock), SnapshotDirError);
}

TEST(System, StepwiseEndToEnd) {
  SimulatedClock clock(kScenarioEpoch);
  auto config = base_config("stepwise");
  config.metrics_out = "system-test-out/stepwise.metrics";
  auto system = bootstrap(config, clock);
  auto &adapter = mock_of(*system);
  adapter.inject_text("start", clock.now());
  system->router().dispatch_pending();
  EXPECT_TRUE(system->vision().running());
  for (int i = 0; i < 10; ++i) {
    clock.advance_to(kScenarioEpoch + Millis{i * 50});
    system->vision().tick(system->vision().make_frame(i, clock.now()));
    system->router().dispatch_pending();
    while (auto job = system->reporting()->try_begin()) {
      system->reporting()->complete(*job, system->reporting()->execute(*job));
      system->router().dispatch_pending();
    }
  }
  system->shutdown();
  system->finalize_metrics();
  system->flush_metrics();

  auto posted = adapter.collect();
  ASSERT_EQ(posted.size(), 2u);
  EXPECT_EQ(posted[0].text, "vision agent started");
  EXPECT_EQ(posted[1].text.rfind("ALERT: person x1", 0), 0u);
  ASSERT_TRUE(posted[1].attachment);
  EXPECT_TRUE(fs::exists(*posted[1].attachment));

  auto &m = system->metrics();
  EXPECT_EQ(m.counter("events.shutdown.published"), 1);
  EXPECT_EQ(m.counter("reports.delivered"), 1);
  EXPECT_EQ(m.counter("frames_processed"), 10);
  std::ifstream in(config.metrics_out);
  std::stringstream text;
  text << in.rdbuf();
  EXPECT_NE(text.str().find("[summary]\n"), std::string::npos);
  EXPECT_NE(text.str().find("reports.delivered=1\n"), std::string::npos);
}

TEST(System, StatusLineReflectsState) {
  SimulatedClock clock(kScenarioEpoch);
  auto system = bootstrap(base_config("status"), clock);
  EXPECT_EQ(system->status_line(),
            "status: vision=stopped frames=0 achieved_fps=0.00 triggers=0 reporting=enabled "
            "model=tinyllama:latest pending_reports=0 in_flight=0 delivered=0 timeouts=0 dropped=0 channel=mock");
}

TEST(System, ThreadedRunWithRealClock) {
  SystemClock clock;
  auto config = base_config("threaded");
  config.autostart = true;
  auto system = bootstrap(config, clock);
  auto &adapter = mock_of(*system);
  system->start_threads();
  std::this_thread::sleep_for(std::chrono::milliseconds(600));
  // Control traffic is answered while vision and reporting run.
  auto before = adapter.collect().size();
  adapter.inject_text("status");
  auto after = adapter.collect();
  ASSERT_EQ(after.size(), before + 1);
  EXPECT_EQ(after.back().text.rfind("status: vision=running", 0), 0u);
  system->shutdown();
  system->finalize_metrics();
  auto &m = system->metrics();
  EXPECT_GT(m.counter("frames_processed"), 3);
  EXPECT_GE(m.counter("reports.delivered"), 1);
  EXPECT_EQ(m.counter("reports.dispatch_context_violations"), 0);
  EXPECT_EQ(m.counter("reports.consumed"),
            m.counter("reports.delivered") + m.counter("reports.timeout") + m.counter("reports.dropped") +
                m.counter("reports.llm_error"));
  EXPECT_EQ(m.counter("events.report.published"), m.counter("reports.delivered"));
}

TEST(Daemon, RunsUntilInterruptedAndFlushesMetrics) {
  auto config = base_config("daemon");
  config.autostart = true;
  config.status_interval_s = 0.2;
  config.metrics_out = "system-test-out/daemon.metrics";
  fs::remove(config.metrics_out);
  std::atomic<bool> interrupted{false};
  std::ostringstream log;
  std::jthread stopper([&] {
    std::this_thread::sleep_for(std::chrono::milliseconds(700));
    interrupted = true;
  });
  EXPECT_EQ(run_daemon(config, interrupted, log), 0);
  EXPECT_NE(log.str().find("status: vision=running"), std::string::npos);
  EXPECT_NE(log.str().find("shutting down"), std::string::npos);
  EXPECT_TRUE(fs::exists(config.metrics_out));
}

TEST(Daemon, BootstrapFailureExitsWithRuntimeCode) {
  auto config = base_config("daemon-fail");
  config.backend.kind = BackendKind::kExternal;
  std::atomic<bool> interrupted{true};
  std::ostringstream log;
  EXPECT_EQ(run_daemon(config, interrupted, log), 3);
  EXPECT_NE(log.str().find("bootstrap failed"), std::string::npos);
}

TEST(ScenarioRun, ShippedScenariosPass) {
  for (const auto &entry : fs::directory_iterator(EDGEWATCH_SCENARIO_DIR)) {
    if (entry.path().extension() != ".conf") continue;
    auto scenario = load_scenario(entry.path());
    scenario.config.vision.snapshot_dir = fs::path("system-test-out/scenarios") / scenario.name;
    auto result = run_scenario(scenario);
    for (const auto &a : result.assertions) EXPECT_TRUE(a.passed) << scenario.name << ": " << a.text << " " << a.error;
  }
}
