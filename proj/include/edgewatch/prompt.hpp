#pragma once

#include <cstddef>
#include <string>

#include "edgewatch/types.hpp"

namespace edgewatch {

/// Sorted `key=value` entries joined by "; ".
std::string format_args(const ConfigArgs &args);

/// Per-label counts with max confidence, labels sorted:
/// "car x1 (max conf 0.80), person x2 (max conf 0.91)", or "no objects".
std::string summarize_detections(const Detections &detections);

inline constexpr std::size_t kDefaultPromptCap = 2000;

/// Fills the reporting template. Text only; the snapshot path is not embedded.
/// Over-long summaries and args are shortened with "..." to respect max_chars.
std::string build_prompt(const std::string &path, const Detections &detections, TimePoint timestamp,
                         const std::string &args_str, std::size_t max_chars = kDefaultPromptCap);

/// Caption the mock LLM derives from a prompt built by build_prompt.
std::string mock_caption(const std::string &prompt);

}  // namespace edgewatch
