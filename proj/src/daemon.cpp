#include "edgewatch/daemon.hpp"

#include <chrono>
#include <thread>

#include "edgewatch/errors.hpp"
#include "edgewatch/system.hpp"

namespace edgewatch {

int run_daemon(const RunConfig &config, const std::atomic<bool> &interrupted, std::ostream &log) {
  SystemClock clock;
  std::unique_ptr<System> system;
  try {
    system = bootstrap(config, clock);
  } catch (const Error &e) {
    log << "bootstrap failed: " << e.what() << std::endl;
    return 3;
  }

  std::atomic<bool> quit{false};
  if (auto *console = dynamic_cast<ConsoleAdapter *>(&system->adapter())) {
    console->on_eof([&quit] { quit = true; });
  }
  system->control().on_shutdown([&quit] { quit = true; });
  system->start_threads();
  log << "edgewatch running; channel=" << system->adapter().descriptor()
      << (system->vision().running() ? " vision=running" : " vision=stopped (send 'start')") << std::endl;

  const auto interval = std::chrono::milliseconds(static_cast<std::int64_t>(config.status_interval_s * 1000.0));
  auto next_status = std::chrono::steady_clock::now() + interval;
  while (!interrupted.load() && !quit.load()) {
    std::this_thread::sleep_for(std::chrono::milliseconds(100));
    if (std::chrono::steady_clock::now() >= next_status) {
      log << system->status_line() << std::endl;
      next_status += interval;
    }
  }

  log << "shutting down" << std::endl;
  try {
    system->shutdown();
    system->finalize_metrics();
    system->flush_metrics();
  } catch (const Error &e) {
    log << "shutdown failed: " << e.what() << std::endl;
    return 3;
  }
  log << system->status_line() << std::endl;
  return 0;
}

}  // namespace edgewatch
