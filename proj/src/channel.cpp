#include "edgewatch/channel.hpp"

#include <poll.h>
#include <unistd.h>

#include <istream>
#include <ostream>

#include "edgewatch/errors.hpp"
#include "edgewatch/flat_config.hpp"

namespace edgewatch {

void ChannelAdapter::set_inbound_handler(InboundHandler handler) {
  std::lock_guard lock(handler_mutex_);
  handler_ = std::move(handler);
}

void ChannelAdapter::inject(const ChannelMessage &message) {
  InboundHandler handler;
  {
    std::lock_guard lock(handler_mutex_);
    handler = handler_;
  }
  if (handler) handler(message);
}

void require_postable(const ChannelMessage &message) {
  if (message.text.empty() && !message.attachment) {
    throw ChannelUnavailable("refusing to post an empty message");
  }
}

std::string MockAdapter::post(const ChannelMessage &message) {
  require_postable(message);
  std::lock_guard lock(mutex_);
  ++attempts_;
  if (failures_left_ > 0) {
    --failures_left_;
    throw ChannelUnavailable("mock channel unavailable");
  }
  posted_.push_back(message);
  return "mock-" + std::to_string(posted_.size());
}

void MockAdapter::inject_text(const std::string &text, TimePoint at, const std::string &sender) {
  ChannelMessage msg;
  msg.direction = Direction::kInbound;
  msg.text = text;
  msg.sender = sender;
  msg.timestamp = at;
  inject(msg);
}

std::vector<ChannelMessage> MockAdapter::collect() const {
  std::lock_guard lock(mutex_);
  return posted_;
}

void MockAdapter::fail_next_posts(std::size_t n) {
  std::lock_guard lock(mutex_);
  failures_left_ = n;
}

std::size_t MockAdapter::post_attempts() const {
  std::lock_guard lock(mutex_);
  return attempts_;
}

std::string format_console_line(const ChannelMessage &message) {
  std::string line = "[BOT] " + message.text;
  if (message.attachment) line += " (attachment: " + *message.attachment + ")";
  return line;
}

ConsoleAdapter::ConsoleAdapter(std::istream &in, std::ostream &out, bool poll_stdin)
    : in_(in), out_(out), poll_stdin_(poll_stdin) {}

ConsoleAdapter::~ConsoleAdapter() { stop(); }

std::string ConsoleAdapter::post(const ChannelMessage &message) {
  require_postable(message);
  std::lock_guard lock(out_mutex_);
  out_ << format_console_line(message) << '\n';
  out_.flush();
  if (!out_) throw ChannelUnavailable("console output failed");
  return "console-" + std::to_string(next_id_++);
}

void ConsoleAdapter::on_eof(std::function<void()> callback) {
  std::unique_lock lock(eof_mutex_);
  on_eof_ = std::move(callback);
  if (eof_seen_ && on_eof_) {
    auto cb = on_eof_;
    lock.unlock();
    cb();
  }
}

void ConsoleAdapter::signal_eof() {
  std::unique_lock lock(eof_mutex_);
  eof_seen_ = true;
  auto cb = on_eof_;
  lock.unlock();
  if (cb) cb();
}

void ConsoleAdapter::handle_line(const std::string &line) {
  auto text = trim(line);
  if (text.empty()) return;
  ChannelMessage msg;
  msg.direction = Direction::kInbound;
  msg.text = std::string(text);
  msg.sender = "console";
  inject(msg);
}

void ConsoleAdapter::pump() {
  std::string line;
  while (std::getline(in_, line)) handle_line(line);
  signal_eof();
}

void ConsoleAdapter::start() {
  if (listener_.joinable()) return;
  listener_ = std::jthread([this](std::stop_token stop) { listen(stop); });
}

void ConsoleAdapter::stop() {
  if (!listener_.joinable()) return;
  // Without poll_stdin this waits for the stream to reach EOF.
  listener_.request_stop();
  listener_.join();
}

void ConsoleAdapter::listen(std::stop_token stop) {
  std::string line;
  while (!stop.stop_requested()) {
    // Lines already buffered by the stream would not wake poll().
    if (poll_stdin_ && in_.rdbuf()->in_avail() <= 0) {
      pollfd fd{STDIN_FILENO, POLLIN, 0};
      int ready = ::poll(&fd, 1, 200);
      if (ready == 0) continue;
      if (ready < 0) break;
    }
    if (!std::getline(in_, line)) {
      if (!stop.stop_requested()) signal_eof();
      return;
    }
    handle_line(line);
  }
}

}  // namespace edgewatch
