#pragma once

#include <atomic>
#include <ostream>

#include "edgewatch/config.hpp"

namespace edgewatch {

/// Live mode on the system clock. Runs until `interrupted` is set, the
/// console input ends, or a shutdown event arrives; prints a status line to
/// `log` every status_interval_s and flushes metrics on the way out.
/// Returns 0 on a clean exit, 3 when bootstrap or shutdown fails.
int run_daemon(const RunConfig &config, const std::atomic<bool> &interrupted, std::ostream &log);

}  // namespace edgewatch
