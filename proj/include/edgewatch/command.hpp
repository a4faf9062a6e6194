#pragma once

#include <map>
#include <optional>
#include <set>
#include <string>
#include <string_view>

namespace edgewatch {

enum class CommandKind { kStart, kStop, kStatus, kConfigure, kHelp, kUnknown };

struct Command {
  CommandKind kind = CommandKind::kUnknown;
  /// configure only; keys are from configure_keys().
  std::map<std::string, std::string> params;
  /// unknown only; the original message text.
  std::string raw;

  friend bool operator==(const Command &, const Command &) = default;
};

std::string_view command_name(CommandKind kind) noexcept;

const std::set<std::string, std::less<>> &configure_keys();

/// Keyword grammar:
///   [<@mention> | @name] [!|/]verb [key=value ...]
/// verb is one of start, stop, status, configure, help (case-insensitive).
/// Only configure takes arguments, and it needs at least one pair; every pair
/// must use a recognised key. Anything else parses as kUnknown.
Command parse_command(std::string_view text);

/// Canonical text form; parse_command(render_command(c)) == c for well-formed commands.
std::string render_command(const Command &command);

/// Range/format checks for configure values. Returns "key: reason" for the
/// first invalid entry.
std::optional<std::string> validate_configure(const std::map<std::string, std::string> &params);

std::string help_text();

}  // namespace edgewatch
