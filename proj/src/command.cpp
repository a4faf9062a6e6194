#include "edgewatch/command.hpp"

#include <algorithm>
#include <cctype>
#include <vector>

#include "edgewatch/flat_config.hpp"

namespace edgewatch {

namespace {

std::string lower(std::string_view s) {
  std::string out(s);
  std::transform(out.begin(), out.end(), out.begin(),
                 [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
  return out;
}

std::vector<std::string_view> tokens(std::string_view text) {
  std::vector<std::string_view> out;
  std::size_t i = 0;
  while (i < text.size()) {
    while (i < text.size() && std::isspace(static_cast<unsigned char>(text[i]))) ++i;
    std::size_t start = i;
    while (i < text.size() && !std::isspace(static_cast<unsigned char>(text[i]))) ++i;
    if (i > start) out.push_back(text.substr(start, i - start));
  }
  return out;
}

bool is_mention(std::string_view token) {
  return (token.size() > 3 && token.front() == '<' && token[1] == '@' && token.back() == '>') ||
         (token.size() > 1 && token.front() == '@');
}

}  // namespace

std::string_view command_name(CommandKind kind) noexcept {
  switch (kind) {
    case CommandKind::kStart:
      return "start";
    case CommandKind::kStop:
      return "stop";
    case CommandKind::kStatus:
      return "status";
    case CommandKind::kConfigure:
      return "configure";
    case CommandKind::kHelp:
      return "help";
    case CommandKind::kUnknown:
      break;
  }
  return "unknown";
}

const std::set<std::string, std::less<>> &configure_keys() {
  static const std::set<std::string, std::less<>> keys{
      "labels", "resolution", "theta", "conf", "dwell", "cooldown", "preview", "model"};
  return keys;
}

Command parse_command(std::string_view text) {
  Command unknown{CommandKind::kUnknown, {}, std::string(text)};
  auto toks = tokens(text);
  std::size_t i = 0;
  while (i < toks.size() && is_mention(toks[i])) ++i;
  if (i == toks.size()) return unknown;

  auto verb_token = toks[i++];
  if (!verb_token.empty() && (verb_token.front() == '!' || verb_token.front() == '/')) {
    verb_token.remove_prefix(1);
  }
  const auto verb = lower(verb_token);
  const std::size_t args = toks.size() - i;

  static const std::pair<std::string_view, CommandKind> kSimple[] = {
      {"start", CommandKind::kStart},
      {"stop", CommandKind::kStop},
      {"status", CommandKind::kStatus},
      {"help", CommandKind::kHelp}};
  for (const auto &[name, kind] : kSimple) {
    if (verb == name) return args == 0 ? Command{kind, {}, {}} : unknown;
  }
  if (verb != "configure" || args == 0) return unknown;

  Command cmd{CommandKind::kConfigure, {}, {}};
  for (; i < toks.size(); ++i) {
    auto eq = toks[i].find('=');
    if (eq == std::string_view::npos || eq == 0 || eq + 1 == toks[i].size()) return unknown;
    auto key = lower(toks[i].substr(0, eq));
    if (!configure_keys().contains(key)) return unknown;
    if (cmd.params.contains(key)) return unknown;
    cmd.params.emplace(std::move(key), std::string(toks[i].substr(eq + 1)));
  }
  return cmd;
}

std::string render_command(const Command &command) {
  if (command.kind == CommandKind::kUnknown) return command.raw;
  std::string out(command_name(command.kind));
  for (const auto &[key, value] : command.params) out += " " + key + "=" + value;
  return out;
}

std::optional<std::string> validate_configure(const std::map<std::string, std::string> &params) {
  for (const auto &[key, value] : params) {
    if (!configure_keys().contains(key)) return key + ": unrecognised parameter";
    if (key == "theta") {
      auto v = parse_double(value);
      if (!v || !(*v > 0.0 && *v < 1.0)) return "theta: must be a number in (0, 1), got " + value;
    } else if (key == "conf") {
      auto v = parse_double(value);
      if (!v || *v < 0.0 || *v > 1.0) return "conf: must be a number in [0, 1], got " + value;
    } else if (key == "dwell") {
      auto v = parse_double(value);
      if (!v || !(*v > 0.0)) return "dwell: must be > 0 seconds, got " + value;
    } else if (key == "cooldown") {
      auto v = parse_double(value);
      if (!v || *v < 0.0) return "cooldown: must be >= 0 seconds, got " + value;
    } else if (key == "preview") {
      if (!parse_bool(value)) return "preview: expected on/off, got " + value;
    } else if (key == "resolution") {
      auto parts = split(lower(value), 'x');
      auto w = parts.size() == 2 ? parse_int(parts[0]) : std::nullopt;
      auto h = parts.size() == 2 ? parse_int(parts[1]) : std::nullopt;
      if (!w || !h || *w <= 0 || *h <= 0) return "resolution: expected WxH, got " + value;
    } else if (key == "labels") {
      for (const auto &label : split(value, ',')) {
        if (trim(label).empty()) return "labels: empty label in " + value;
      }
    } else if (key == "model") {
      if (value.empty()) return "model: must be non-empty";
    }
  }
  return std::nullopt;
}

std::string help_text() {
  return "commands: start | stop | status | help | configure key=value ... "
         "(keys: labels, resolution, theta, conf, dwell, cooldown, preview, model)";
}

}  // namespace edgewatch
