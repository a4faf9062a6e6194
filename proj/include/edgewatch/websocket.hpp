#pragma once

#include <array>
#include <cstddef>
#include <cstdint>
#include <optional>
#include <string>
#include <string_view>

namespace edgewatch::ws {

enum class Opcode : std::uint8_t {
  kContinuation = 0x0,
  kText = 0x1,
  kBinary = 0x2,
  kClose = 0x8,
  kPing = 0x9,
  kPong = 0xA,
};

struct Frame {
  bool fin = true;
  Opcode opcode = Opcode::kText;
  std::string payload;
};

/// Client frames are always masked; pass nullopt to produce an unmasked (server) frame.
std::string encode_frame(Opcode opcode, std::string_view payload,
                         std::optional<std::array<std::uint8_t, 4>> mask, bool fin = true);

/// Decodes one frame from the front of `buffer`. Returns the frame and the
/// number of bytes consumed, or nullopt if the buffer holds a partial frame.
std::optional<std::pair<Frame, std::size_t>> decode_frame(std::string_view buffer);

/// Sec-WebSocket-Accept for a given Sec-WebSocket-Key.
std::string accept_key(std::string_view client_key);

struct Url {
  bool secure = true;
  std::string host;
  int port = 443;
  std::string target = "/";
};

/// Parses ws:// and wss:// URLs; nullopt for anything else.
std::optional<Url> parse_url(std::string_view url);

}  // namespace edgewatch::ws
