#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace edgewatch {

class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Router
class DuplicateAgent : public Error {
 public:
  explicit DuplicateAgent(const std::string &name) : Error("duplicate agent: " + name) {}
};

class UnknownAgent : public Error {
 public:
  explicit UnknownAgent(const std::string &name) : Error("unknown agent: " + name) {}
};

class UnknownEventType : public Error {
 public:
  explicit UnknownEventType(const std::string &type) : Error("unknown event type: " + type) {}
};

class DuplicateSubscription : public Error {
 public:
  DuplicateSubscription(const std::string &agent, const std::string &type)
      : Error("duplicate subscription: " + agent + " -> " + type) {}
};

class InvalidPayloadValue : public Error {
 public:
  InvalidPayloadValue(const std::string &key, const std::string &reason)
      : Error("invalid payload value '" + key + "': " + reason), key_(key) {}

  const std::string &key() const noexcept { return key_; }

 private:
  std::string key_;
};

class QueueFull : public Error {
 public:
  explicit QueueFull(std::size_t capacity)
      : Error("router queue full (capacity " + std::to_string(capacity) + ")") {}
};

// Parsing and configuration
class ParseError : public Error {
 public:
  ParseError(std::size_t line, const std::string &what)
      : Error("line " + std::to_string(line) + ": " + what), line_(line) {}

  std::size_t line() const noexcept { return line_; }

 private:
  std::size_t line_;
};

class ValidationError : public Error {
 public:
  ValidationError(const std::string &field, const std::string &reason)
      : Error(field + ": " + reason), field_(field) {}

  const std::string &field() const noexcept { return field_; }

 private:
  std::string field_;
};

class InvalidScript : public Error {
 public:
  using Error::Error;
};

class ScenarioError : public Error {
 public:
  using Error::Error;
};

class IoError : public Error {
 public:
  using Error::Error;
};

class SnapshotDirError : public Error {
 public:
  using Error::Error;
};

// Channels
class ChannelUnavailable : public Error {
 public:
  using Error::Error;
};

class AuthFailure : public Error {
 public:
  using Error::Error;
};

class AdapterInitError : public Error {
 public:
  using Error::Error;
};

}  // namespace edgewatch
