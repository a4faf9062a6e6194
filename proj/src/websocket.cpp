#include "edgewatch/websocket.hpp"

#include <netdb.h>
#include <openssl/err.h>
#include <openssl/evp.h>
#include <openssl/sha.h>
#include <openssl/ssl.h>
#include <poll.h>
#include <sys/socket.h>
#include <unistd.h>

#include <chrono>
#include <cstring>
#include <random>

#include "edgewatch/errors.hpp"
#include "edgewatch/flat_config.hpp"
#include "edgewatch/slack.hpp"

namespace edgewatch {

namespace ws {

std::string encode_frame(Opcode opcode, std::string_view payload,
                         std::optional<std::array<std::uint8_t, 4>> mask, bool fin) {
  std::string out;
  out.reserve(payload.size() + 14);
  out.push_back(static_cast<char>((fin ? 0x80 : 0x00) | static_cast<std::uint8_t>(opcode)));
  const std::uint8_t mask_bit = mask ? 0x80 : 0x00;
  const auto len = payload.size();
  if (len < 126) {
    out.push_back(static_cast<char>(mask_bit | len));
  } else if (len <= 0xFFFF) {
    out.push_back(static_cast<char>(mask_bit | 126));
    out.push_back(static_cast<char>((len >> 8) & 0xFF));
    out.push_back(static_cast<char>(len & 0xFF));
  } else {
    out.push_back(static_cast<char>(mask_bit | 127));
    for (int shift = 56; shift >= 0; shift -= 8) {
      out.push_back(static_cast<char>((static_cast<std::uint64_t>(len) >> shift) & 0xFF));
    }
  }
  if (!mask) {
    out.append(payload);
    return out;
  }
  for (auto b : *mask) out.push_back(static_cast<char>(b));
  for (std::size_t i = 0; i < len; ++i) {
    out.push_back(static_cast<char>(static_cast<std::uint8_t>(payload[i]) ^ (*mask)[i % 4]));
  }
  return out;
}

std::optional<std::pair<Frame, std::size_t>> decode_frame(std::string_view buffer) {
  if (buffer.size() < 2) return std::nullopt;
  const auto b0 = static_cast<std::uint8_t>(buffer[0]);
  const auto b1 = static_cast<std::uint8_t>(buffer[1]);
  std::size_t pos = 2;
  std::uint64_t len = b1 & 0x7F;
  if (len == 126) {
    if (buffer.size() < pos + 2) return std::nullopt;
    len = (static_cast<std::uint64_t>(static_cast<std::uint8_t>(buffer[2])) << 8) |
          static_cast<std::uint8_t>(buffer[3]);
    pos += 2;
  } else if (len == 127) {
    if (buffer.size() < pos + 8) return std::nullopt;
    len = 0;
    for (int i = 0; i < 8; ++i) len = (len << 8) | static_cast<std::uint8_t>(buffer[2 + i]);
    pos += 8;
  }
  const bool masked = (b1 & 0x80) != 0;
  std::array<std::uint8_t, 4> mask{};
  if (masked) {
    if (buffer.size() < pos + 4) return std::nullopt;
    for (int i = 0; i < 4; ++i) mask[i] = static_cast<std::uint8_t>(buffer[pos + i]);
    pos += 4;
  }
  if (buffer.size() < pos + len) return std::nullopt;
  Frame frame;
  frame.fin = (b0 & 0x80) != 0;
  frame.opcode = static_cast<Opcode>(b0 & 0x0F);
  frame.payload.assign(buffer.substr(pos, len));
  if (masked) {
    for (std::size_t i = 0; i < frame.payload.size(); ++i) {
      frame.payload[i] = static_cast<char>(static_cast<std::uint8_t>(frame.payload[i]) ^ mask[i % 4]);
    }
  }
  return std::pair{std::move(frame), pos + static_cast<std::size_t>(len)};
}

namespace {

std::string base64(const unsigned char *data, std::size_t len) {
  std::string out(4 * ((len + 2) / 3), '\0');
  auto written = EVP_EncodeBlock(reinterpret_cast<unsigned char *>(out.data()), data,
                                 static_cast<int>(len));
  out.resize(static_cast<std::size_t>(written));
  return out;
}

}  // namespace

std::string accept_key(std::string_view client_key) {
  std::string material(client_key);
  material += "258EAFA5-E914-47DA-95CA-C5AB0DC85B11";
  unsigned char digest[SHA_DIGEST_LENGTH];
  SHA1(reinterpret_cast<const unsigned char *>(material.data()), material.size(), digest);
  return base64(digest, sizeof(digest));
}

std::optional<Url> parse_url(std::string_view url) {
  Url out;
  if (url.starts_with("wss://")) {
    url.remove_prefix(6);
  } else if (url.starts_with("ws://")) {
    out.secure = false;
    out.port = 80;
    url.remove_prefix(5);
  } else {
    return std::nullopt;
  }
  auto slash = url.find('/');
  auto authority = url.substr(0, slash);
  if (slash != std::string_view::npos) out.target = std::string(url.substr(slash));
  auto colon = authority.rfind(':');
  if (colon != std::string_view::npos) {
    auto port = parse_int(authority.substr(colon + 1));
    if (!port || *port <= 0 || *port > 65535) return std::nullopt;
    out.port = static_cast<int>(*port);
    authority = authority.substr(0, colon);
  }
  if (authority.empty()) return std::nullopt;
  out.host = std::string(authority);
  return out;
}

}  // namespace ws

namespace {

class SocketConnection final : public WebSocketConnection {
 public:
  explicit SocketConnection(const ws::Url &url) : url_(url) {
    connect_tcp();
    if (url_.secure) start_tls();
    handshake();
  }

  ~SocketConnection() override { teardown(); }

  std::optional<std::string> receive(std::chrono::milliseconds timeout) override {
    const auto deadline = std::chrono::steady_clock::now() + timeout;
    while (true) {
      while (auto decoded = ws::decode_frame(buffer_)) {
        auto [frame, used] = std::move(*decoded);
        buffer_.erase(0, used);
        switch (frame.opcode) {
          case ws::Opcode::kPing:
            write_all(ws::encode_frame(ws::Opcode::kPong, frame.payload, random_mask()));
            continue;
          case ws::Opcode::kPong:
            continue;
          case ws::Opcode::kClose:
            closed_ = true;
            throw ChannelUnavailable("websocket closed by peer");
          default:
            break;
        }
        message_ += frame.payload;
        if (frame.fin) return std::exchange(message_, {});
      }
      auto now = std::chrono::steady_clock::now();
      if (now >= deadline) return std::nullopt;
      if (!wait_readable(std::chrono::duration_cast<std::chrono::milliseconds>(deadline - now))) {
        return std::nullopt;
      }
      read_some();
    }
  }

  void send_text(const std::string &text) override {
    write_all(ws::encode_frame(ws::Opcode::kText, text, random_mask()));
  }

  void close() override {
    if (!closed_ && fd_ >= 0) {
      try {
        write_all(ws::encode_frame(ws::Opcode::kClose, {}, random_mask()));
      } catch (const Error &) {
      }
    }
    closed_ = true;
    teardown();
  }

 private:
  void connect_tcp() {
    addrinfo hints{};
    hints.ai_family = AF_UNSPEC;
    hints.ai_socktype = SOCK_STREAM;
    addrinfo *found = nullptr;
    if (getaddrinfo(url_.host.c_str(), std::to_string(url_.port).c_str(), &hints, &found) != 0) {
      throw ChannelUnavailable("cannot resolve " + url_.host);
    }
    for (auto *ai = found; ai != nullptr; ai = ai->ai_next) {
      int fd = ::socket(ai->ai_family, ai->ai_socktype, ai->ai_protocol);
      if (fd < 0) continue;
      if (::connect(fd, ai->ai_addr, ai->ai_addrlen) == 0) {
        fd_ = fd;
        break;
      }
      ::close(fd);
    }
    freeaddrinfo(found);
    if (fd_ < 0) throw ChannelUnavailable("cannot connect to " + url_.host);
  }

  void start_tls() {
    ctx_ = SSL_CTX_new(TLS_client_method());
    if (ctx_ == nullptr) throw ChannelUnavailable("TLS context creation failed");
    SSL_CTX_set_default_verify_paths(ctx_);
    SSL_CTX_set_verify(ctx_, SSL_VERIFY_PEER, nullptr);
    ssl_ = SSL_new(ctx_);
    SSL_set_tlsext_host_name(ssl_, url_.host.c_str());
    SSL_set1_host(ssl_, url_.host.c_str());
    SSL_set_fd(ssl_, fd_);
    if (SSL_connect(ssl_) != 1) throw ChannelUnavailable("TLS handshake with " + url_.host + " failed");
  }

  void handshake() {
    std::array<unsigned char, 16> nonce{};
    std::random_device rd;
    for (auto &b : nonce) b = static_cast<unsigned char>(rd());
    unsigned char encoded[32] = {};
    EVP_EncodeBlock(encoded, nonce.data(), static_cast<int>(nonce.size()));
    const std::string key(reinterpret_cast<char *>(encoded));

    std::string request = "GET " + url_.target + " HTTP/1.1\r\nHost: " + url_.host +
                          "\r\nUpgrade: websocket\r\nConnection: Upgrade\r\nSec-WebSocket-Key: " +
                          key + "\r\nSec-WebSocket-Version: 13\r\n\r\n";
    write_all(request);

    const auto deadline = std::chrono::steady_clock::now() + std::chrono::seconds(10);
    std::size_t end = std::string::npos;
    while ((end = buffer_.find("\r\n\r\n")) == std::string::npos) {
      auto now = std::chrono::steady_clock::now();
      if (now >= deadline ||
          !wait_readable(std::chrono::duration_cast<std::chrono::milliseconds>(deadline - now))) {
        throw ChannelUnavailable("websocket handshake timed out");
      }
      read_some();
    }
    const std::string head = buffer_.substr(0, end);
    buffer_.erase(0, end + 4);
    if (head.find(" 101") == std::string::npos) {
      throw ChannelUnavailable("websocket upgrade refused: " + head.substr(0, head.find("\r\n")));
    }
    std::string lower_head = head;
    for (auto &c : lower_head) c = static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
    auto pos = lower_head.find("sec-websocket-accept:");
    if (pos == std::string::npos) throw ChannelUnavailable("missing Sec-WebSocket-Accept");
    auto line_end = head.find("\r\n", pos);
    auto value = trim(std::string_view(head).substr(pos + 21, line_end - pos - 21));
    if (value != ws::accept_key(key)) throw ChannelUnavailable("bad Sec-WebSocket-Accept");
  }

  bool wait_readable(std::chrono::milliseconds timeout) {
    if (ssl_ != nullptr && SSL_pending(ssl_) > 0) return true;
    pollfd pfd{fd_, POLLIN, 0};
    int ready = ::poll(&pfd, 1, static_cast<int>(timeout.count()));
    if (ready < 0) throw ChannelUnavailable("poll failed");
    return ready > 0;
  }

  void read_some() {
    char chunk[4096];
    long n = ssl_ != nullptr ? SSL_read(ssl_, chunk, sizeof(chunk)) : ::recv(fd_, chunk, sizeof(chunk), 0);
    if (n <= 0) {
      closed_ = true;
      throw ChannelUnavailable("websocket connection lost");
    }
    buffer_.append(chunk, static_cast<std::size_t>(n));
  }

  void write_all(const std::string &data) {
    std::size_t sent = 0;
    while (sent < data.size()) {
      long n = ssl_ != nullptr
                   ? SSL_write(ssl_, data.data() + sent, static_cast<int>(data.size() - sent))
                   : ::send(fd_, data.data() + sent, data.size() - sent, MSG_NOSIGNAL);
      if (n <= 0) throw ChannelUnavailable("websocket write failed");
      sent += static_cast<std::size_t>(n);
    }
  }

  std::array<std::uint8_t, 4> random_mask() {
    std::array<std::uint8_t, 4> mask{};
    for (auto &b : mask) b = static_cast<std::uint8_t>(rng_());
    return mask;
  }

  void teardown() {
    if (ssl_ != nullptr) {
      SSL_shutdown(ssl_);
      SSL_free(ssl_);
      ssl_ = nullptr;
    }
    if (ctx_ != nullptr) {
      SSL_CTX_free(ctx_);
      ctx_ = nullptr;
    }
    if (fd_ >= 0) {
      ::close(fd_);
      fd_ = -1;
    }
  }

  ws::Url url_;
  int fd_ = -1;
  SSL_CTX *ctx_ = nullptr;
  SSL *ssl_ = nullptr;
  std::string buffer_;
  std::string message_;
  bool closed_ = false;
  std::mt19937 rng_{std::random_device{}()};
};

}  // namespace

std::unique_ptr<WebSocketConnection> open_websocket(const std::string &url) {
  auto parsed = ws::parse_url(url);
  if (!parsed) throw ChannelUnavailable("not a websocket url: " + url);
  return std::make_unique<SocketConnection>(*parsed);
}

}  // namespace edgewatch
