// edgewatch command-line entry point: daemon, scenario runner, config check.

#include <CLI11.hpp>

#include <atomic>
#include <csignal>
#include <iostream>

#include "edgewatch/config.hpp"
#include "edgewatch/daemon.hpp"
#include "edgewatch/errors.hpp"
#include "edgewatch/scenario.hpp"

namespace {

constexpr int kExitOk = 0;
constexpr int kExitAssertion = 1;
constexpr int kExitConfig = 2;
constexpr int kExitRuntime = 3;

std::atomic<bool> g_interrupted{false};

extern "C" void on_signal(int) { g_interrupted = true; }

int cmd_validate(const std::string &path) {
  auto config = edgewatch::load_config(path);
  std::cout << edgewatch::describe_config(config);
  return kExitOk;
}

int cmd_run(const std::string &path, const std::string &metrics_out) {
  auto config = edgewatch::load_config(path);
  if (!metrics_out.empty()) config.metrics_out = metrics_out;
  std::signal(SIGINT, on_signal);
  std::signal(SIGTERM, on_signal);
  return edgewatch::run_daemon(config, g_interrupted, std::cerr);
}

int cmd_scenario(const std::string &path, const std::string &metrics_out, bool print_metrics) {
  auto scenario = edgewatch::load_scenario(path);
  if (!metrics_out.empty()) scenario.config.metrics_out = metrics_out;
  edgewatch::ScenarioResult result;
  try {
    result = edgewatch::run_scenario(scenario);
  } catch (const edgewatch::Error &e) {
    std::cerr << "scenario '" << scenario.name << "' aborted: " << e.what() << '\n';
    return kExitRuntime;
  }
  if (print_metrics) std::cout << result.metrics;
  for (const auto &a : result.assertions) {
    std::cout << (a.passed ? "PASS " : "FAIL ") << a.text;
    if (!a.error.empty()) {
      std::cout << " (" << a.error << ')';
    } else if (!a.passed) {
      std::cout << " (lhs=" << a.lhs << " rhs=" << a.rhs << ')';
    }
    std::cout << '\n';
  }
  std::cout << "scenario " << result.name << ": " << (result.passed() ? "passed" : "FAILED") << '\n';
  return result.passed() ? kExitOk : kExitAssertion;
}

}  // namespace

int main(int argc, char **argv) {
  // The console channel polls fd 0 and relies on the stream's own buffer.
  std::ios::sync_with_stdio(false);

  CLI::App app{"edgewatch: multi-agent object detection and reporting"};
  app.require_subcommand(1);

  std::string config_path;
  std::string scenario_path;
  std::string metrics_out;
  bool print_metrics = false;

  auto *run = app.add_subcommand("run", "Run the live daemon");
  run->add_option("--config", config_path, "Run configuration file")->required();
  run->add_option("--metrics-out", metrics_out, "Override run.metrics_out");

  auto *scenario = app.add_subcommand("scenario", "Run a scripted scenario on a simulated clock");
  scenario->add_option("--file", scenario_path, "Scenario file")->required();
  scenario->add_option("--metrics-out", metrics_out, "Override run.metrics_out");
  scenario->add_flag("--print-metrics", print_metrics, "Print the metrics report to stdout");

  auto *validate = app.add_subcommand("validate", "Check a configuration file and print the effective settings");
  validate->add_option("--config", config_path, "Run configuration file")->required();

  app.add_subcommand("version", "Print the version");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError &e) {
    return app.exit(e) == 0 ? kExitOk : kExitConfig;
  }

  try {
    if (run->parsed()) return cmd_run(config_path, metrics_out);
    if (scenario->parsed()) return cmd_scenario(scenario_path, metrics_out, print_metrics);
    if (validate->parsed()) return cmd_validate(config_path);
    std::cout << "edgewatch " << EDGEWATCH_VERSION << '\n';
    return kExitOk;
  } catch (const edgewatch::ParseError &e) {
    std::cerr << "config error: " << e.what() << '\n';
    return kExitConfig;
  } catch (const edgewatch::ValidationError &e) {
    std::cerr << "config error: " << e.what() << '\n';
    return kExitConfig;
  } catch (const edgewatch::ScenarioError &e) {
    std::cerr << "scenario error: " << e.what() << '\n';
    return kExitConfig;
  } catch (const edgewatch::IoError &e) {
    std::cerr << "config error: " << e.what() << '\n';
    return kExitConfig;
  } catch (const edgewatch::InvalidScript &e) {
    std::cerr << "config error: " << e.what() << '\n';
    return kExitConfig;
  } catch (const std::exception &e) {
    std::cerr << "runtime fault: " << e.what() << '\n';
    return kExitRuntime;
  }
}
