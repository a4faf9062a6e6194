#include <gtest/gtest.h>

#include <random>
#include <thread>

#include "edgewatch/errors.hpp"
#include "edgewatch/prompt.hpp"
#include "edgewatch/reporting_agent.hpp"

using namespace edgewatch;

namespace {

TimePoint at_ms(std::int64_t ms) { return TimePoint{Millis{ms}}; }

const std::string kSnapshot{event_type::kSnapshot};
const std::string kReport{event_type::kReport};

// Scripted client: replies in order, then repeats the last one.
class ScriptedClient : public LlmClient {
 public:
  explicit ScriptedClient(std::vector<LlmReply> replies) : replies_(std::move(replies)) {}

  LlmReply generate(const LlmRequest &request, Millis deadline) override {
    requests.push_back(request);
    deadlines.push_back(deadline);
    auto reply = replies_[std::min(calls_++, replies_.size() - 1)];
    if (reply.elapsed > deadline) return LlmReply{LlmStatus::kTimeout, "", deadline, "deadline"};
    return reply;
  }
  std::string descriptor() const override { return "scripted"; }

  std::vector<LlmRequest> requests;
  std::vector<Millis> deadlines;

 private:
  std::vector<LlmReply> replies_;
  std::size_t calls_ = 0;
};

LlmReply ok(std::string text, std::int64_t ms = 100) { return {LlmStatus::kOk, std::move(text), Millis{ms}, ""}; }

struct Harness {
  SimulatedClock clock{at_ms(1'000'000)};
  MetricsSink metrics;
  Router router{clock};
  MockLlmClient llm;
  std::unique_ptr<ReportingAgent> reporting;
  std::vector<Event> reports;
  AgentId vision{"vision"};

  explicit Harness(ReportingOptions options, MockLlmOptions mock = {}) : llm(clock, mock) {
    reporting = std::make_unique<ReportingAgent>(router, llm, options, metrics);
    reporting->attach();
    router.register_agent("vision", nullptr);
    auto sink = router.register_agent("sink", [this](const Event &e) { reports.push_back(e); });
    router.subscribe(sink, kReport, DeliveryMode::kInline);
  }

  std::uint64_t publish_snapshot(const std::string &path = "snap_1_1.png") {
    Payload payload{{"path", FilePath{path}},
                    {"detections", Detections{Detection{BBox{0, 0, 5, 5}, "person", 0.9}}},
                    {"timestamp", static_cast<std::int64_t>(clock.now().time_since_epoch().count())},
                    {"args", ConfigArgs{{{"theta", "0.3"}}}}};
    return router.send_to_agent(vision, "router", router.make_event(kSnapshot, std::move(payload)));
  }

  // Runs every startable job to completion, advancing the clock by each job's elapsed time.
  void run_jobs() {
    while (auto job = reporting->try_begin()) {
      auto result = reporting->execute(*job);
      clock.advance_to(clock.now() + result.elapsed);
      reporting->complete(*job, result);
      router.dispatch_pending();
    }
  }
};

ReportingOptions small_queue() {
  ReportingOptions o;
  o.queue_cap = 2;
  o.deadline = Millis{60'000};
  return o;
}

}  // namespace

TEST(GenerateCaption, TrimsAndDetectsEmptyCaption) {
  SimulatedClock clock(at_ms(0));
  ReportingOptions options;
  ScriptedClient client({ok("  ALERT: person  \n")});
  auto r = generate_caption("a.png", {}, at_ms(0), "", client, options, clock);
  EXPECT_EQ(r.status, LlmStatus::kOk);
  EXPECT_EQ(r.caption, "ALERT: person");
  EXPECT_EQ(client.requests[0].model, options.model);
  EXPECT_FALSE(client.requests[0].stream);

  ScriptedClient blank({ok(" \n\t")});
  EXPECT_EQ(generate_caption("a.png", {}, at_ms(0), "", blank, options, clock).status, LlmStatus::kEmptyCaption);
}

TEST(GenerateCaption, RetriesOnceWhenUnavailable) {
  SimulatedClock clock(at_ms(0));
  ReportingOptions options;
  ScriptedClient client({LlmReply{LlmStatus::kUnavailable, "", Millis{10}, "refused"}, ok("x")});
  auto r = generate_caption("a.png", {}, at_ms(0), "", client, options, clock);
  EXPECT_EQ(r.status, LlmStatus::kOk);
  EXPECT_EQ(r.attempts, 2);
  EXPECT_EQ(r.elapsed, Millis{10 + 1000 + 100});
  // The retry only gets what is left of the deadline.
  EXPECT_EQ(client.deadlines[1], Millis{60'000 - 10 - 1000});

  ScriptedClient down({LlmReply{LlmStatus::kUnavailable, "", Millis{10}, "refused"}});
  auto r2 = generate_caption("a.png", {}, at_ms(0), "", down, options, clock);
  EXPECT_EQ(r2.status, LlmStatus::kUnavailable);
  EXPECT_EQ(r2.attempts, 2);
}

TEST(GenerateCaption, NoRetryOnTimeoutOrError) {
  SimulatedClock clock(at_ms(0));
  ReportingOptions options;
  options.deadline = Millis{500};
  ScriptedClient slow({ok("late", 900)});
  auto r = generate_caption("a.png", {}, at_ms(0), "", slow, options, clock);
  EXPECT_EQ(r.status, LlmStatus::kTimeout);
  EXPECT_EQ(r.attempts, 1);
  EXPECT_LE(r.elapsed, options.deadline);

  ScriptedClient broken({LlmReply{LlmStatus::kError, "", Millis{5}, "http 500"}});
  EXPECT_EQ(generate_caption("a.png", {}, at_ms(0), "", broken, options, clock).attempts, 1);
}

TEST(Prompt, TemplateIsTextOnlyAndCapped) {
  Detections dets{Detection{BBox{0, 0, 1, 1}, "person", 0.91}, Detection{BBox{0, 0, 1, 1}, "car", 0.8},
                  Detection{BBox{0, 0, 1, 1}, "person", 0.5}};
  EXPECT_EQ(summarize_detections(dets), "car x1 (max conf 0.80), person x2 (max conf 0.91)");
  EXPECT_EQ(summarize_detections({}), "no objects");
  auto prompt = build_prompt("snapshots/snap_1_1.png", dets, at_ms(0), "theta=0.3");
  EXPECT_EQ(prompt.find("snap_1_1"), std::string::npos);
  EXPECT_NE(prompt.find("person x2"), std::string::npos);
  std::string huge(10'000, 'a');
  EXPECT_LE(build_prompt("p", dets, at_ms(0), huge, 300).size(), 300u);
  EXPECT_EQ(format_args(ConfigArgs{{{"b", "2"}, {"a", "1"}}}), "a=1; b=2");
}

TEST(ReportingAgent, DeliversReportWithPathAndCaption) {
  Harness h(small_queue(), MockLlmOptions{.delay = Millis{400}});
  h.publish_snapshot("snap_9_3.png");
  h.router.dispatch_pending();
  h.run_jobs();
  ASSERT_EQ(h.reports.size(), 1u);
  const auto &report = h.reports[0];
  EXPECT_EQ(report.payload.size(), 2u);
  EXPECT_EQ(report.get<FilePath>("path")->value, "snap_9_3.png");
  EXPECT_EQ(report.get<std::string>("caption")->rfind("ALERT: person x1", 0), 0u);
  auto outcomes = h.reporting->outcomes();
  ASSERT_EQ(outcomes.size(), 1u);
  EXPECT_EQ(outcomes[0].latency_ms, 400);
  EXPECT_EQ(h.metrics.latency("report_latency_ms").max, 400);
}

TEST(ReportingAgent, OverflowDropsOldestAndAccountsForIt) {
  Harness h(small_queue());
  for (int i = 0; i < 5; ++i) h.publish_snapshot();
  h.router.dispatch_pending();
  EXPECT_EQ(h.reporting->pending(), 2u);
  h.run_jobs();
  auto outcomes = h.reporting->outcomes();
  ASSERT_EQ(outcomes.size(), 5u);
  std::vector<std::pair<std::uint64_t, ReportOutcomeKind>> got;
  for (const auto &o : outcomes) got.emplace_back(o.snapshot_seq, o.outcome);
  using K = ReportOutcomeKind;
  EXPECT_EQ(got, (std::vector<std::pair<std::uint64_t, K>>{
                     {1, K::kDropped}, {2, K::kDropped}, {3, K::kDropped}, {4, K::kDelivered}, {5, K::kDelivered}}));
  EXPECT_EQ(h.metrics.counter("reports.dropped"), 3);
  EXPECT_EQ(h.metrics.counter("reports.consumed"), 5);
}

TEST(ReportingAgent, SlowModelTimesOutEveryJob) {
  auto options = small_queue();
  Harness h(options, MockLlmOptions{.delay = Millis{70'000}});
  h.publish_snapshot();
  h.publish_snapshot();
  h.router.dispatch_pending();
  h.run_jobs();
  EXPECT_TRUE(h.reports.empty());
  EXPECT_EQ(h.metrics.counter("reports.timeout"), 2);
  // Elapsed per job is the deadline, not the model delay.
  EXPECT_EQ(h.clock.now(), at_ms(1'000'000 + 2 * 60'000));
}

TEST(ReportingAgent, MaxInFlightBoundsConcurrentJobs) {
  auto options = small_queue();
  options.queue_cap = 4;
  options.max_in_flight = 2;
  Harness h(options);
  for (int i = 0; i < 3; ++i) h.publish_snapshot();
  h.router.dispatch_pending();
  auto a = h.reporting->try_begin();
  auto b = h.reporting->try_begin();
  ASSERT_TRUE(a && b);
  EXPECT_FALSE(h.reporting->try_begin());
  EXPECT_EQ(h.reporting->in_flight(), 2u);
  h.reporting->complete(*a, h.reporting->execute(*a));
  EXPECT_TRUE(h.reporting->try_begin());
}

TEST(ReportingAgent, ErrorsAndEmptyCaptionsAreLlmErrors) {
  Harness h(small_queue(), MockLlmOptions{.empty = true});
  h.publish_snapshot();
  h.router.dispatch_pending();
  h.run_jobs();
  EXPECT_EQ(h.metrics.counter("reports.llm_error"), 1);
  EXPECT_EQ(h.metrics.counter("errors.llm.empty_caption"), 1);
  EXPECT_TRUE(h.reports.empty());
}

TEST(ReportingAgent, ConfigureCommandChangesModel) {
  Harness h(small_queue());
  h.router.send_to_agent(h.vision, "router",
                         h.router.make_event(std::string(event_type::kCommand),
                                             {{"action", std::string("configure")}, {"model", std::string("phi3")}}));
  h.router.dispatch_pending();
  EXPECT_EQ(h.reporting->model(), "phi3");
  h.publish_snapshot();
  h.router.dispatch_pending();
  h.run_jobs();
  EXPECT_EQ(h.llm.last_request().model, "phi3");
}

TEST(ReportingAgent, ShutdownDropsWhatIsQueued) {
  Harness h(small_queue());
  h.publish_snapshot();
  h.publish_snapshot();
  h.router.dispatch_pending();
  h.reporting->drop_pending();
  EXPECT_EQ(h.metrics.counter("reports.dropped"), 2);
  EXPECT_EQ(h.reporting->pending(), 0u);
}

TEST(ReportingAgent, RejectsInvalidOptions) {
  SimulatedClock clock(at_ms(0));
  Router router(clock);
  MockLlmClient llm(clock);
  MetricsSink metrics;
  ReportingOptions o;
  o.max_in_flight = 0;
  EXPECT_THROW(ReportingAgent(router, llm, o, metrics), ValidationError);
}

// Random interleavings of publishes, dispatches and job steps: every consumed
// snapshot ends with exactly one outcome and reports keep snapshot order.
TEST(ReportingProperties, ConservationAndOrderUnderRandomSchedules) {
  for (std::uint64_t seed = 1; seed <= 200; ++seed) {
    std::mt19937_64 rng(seed);
    auto options = small_queue();
    options.queue_cap = 1 + rng() % 4;
    Harness h(options, MockLlmOptions{.delay = Millis{static_cast<std::int64_t>(rng() % 90'000)}});
    std::uint64_t published = 0;
    for (int step = 0; step < 40; ++step) {
      switch (rng() % 3) {
        case 0:
          h.publish_snapshot();
          ++published;
          break;
        case 1:
          h.router.dispatch_pending();
          break;
        default:
          h.run_jobs();
      }
    }
    h.router.dispatch_pending();
    h.run_jobs();
    auto outcomes = h.reporting->outcomes();
    ASSERT_EQ(outcomes.size(), published) << "seed " << seed;
    std::set<std::uint64_t> seqs;
    for (const auto &o : outcomes) seqs.insert(o.snapshot_seq);
    EXPECT_EQ(seqs.size(), published) << "seed " << seed;
    std::uint64_t last = 0;
    for (const auto &o : outcomes) {
      if (o.outcome == ReportOutcomeKind::kDropped) continue;
      EXPECT_GT(o.snapshot_seq, last) << "seed " << seed;
      last = o.snapshot_seq;
    }
    EXPECT_EQ(h.metrics.counter("reports.delivered"), static_cast<std::int64_t>(h.reports.size()));
    EXPECT_EQ(h.reporting->dispatch_context_violations(), 0u);
  }
}

TEST(ReportingThreaded, WorkersRunOffTheDispatchThread) {
  SystemClock clock;
  MetricsSink metrics;
  Router router(clock);
  MockLlmClient llm(clock, MockLlmOptions{.delay = Millis{5}});
  ReportingOptions options;
  options.queue_cap = 64;
  options.max_in_flight = 2;
  ReportingAgent reporting(router, llm, options, metrics);
  reporting.attach();
  std::atomic<int> reports{0};
  auto sink = router.register_agent("sink", [&](const Event &) { ++reports; });
  router.subscribe(sink, kReport, DeliveryMode::kInline);
  router.register_agent("vision", nullptr);
  std::jthread dispatcher([&](std::stop_token stop) { router.run_dispatch(stop); });
  reporting.start_workers();
  for (int i = 0; i < 20; ++i) {
    router.send_to_agent(AgentId{"vision"}, "router",
                         router.make_event(kSnapshot, {{"path", FilePath{"s.png"}}, {"detections", Detections{}}}));
  }
  for (int i = 0; i < 500 && reports.load() < 20; ++i) std::this_thread::sleep_for(std::chrono::milliseconds(10));
  reporting.stop_workers();
  dispatcher.request_stop();
  dispatcher.join();
  EXPECT_EQ(reports.load(), 20);
  EXPECT_EQ(reporting.consumed(), 20u);
  EXPECT_EQ(reporting.dispatch_context_violations(), 0u);
}
