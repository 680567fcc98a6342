#pragma once

#include <functional>
#include <iostream>
#include <stdexcept>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

namespace loadcast {

/// Base class of every exception thrown by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Tensor or layer dimensions do not agree.
class ShapeError : public Error {
 public:
  using Error::Error;
};

/// A computation produced NaN/Inf or hit a singular system.
class NumericError : public Error {
 public:
  using Error::Error;
};

/// Input data is malformed, incomplete or outside the accepted vocabulary.
class DataError : public Error {
 public:
  using Error::Error;
};

/// Invalid configuration or model specification.
class ConfigError : public Error {
 public:
  using Error::Error;
};

/// Serialized artifact is truncated, corrupt or has the wrong version.
class FormatError : public Error {
 public:
  using Error::Error;
};

// Warnings are routed through a replaceable sink so tests can capture them.
using WarningSink = std::function<void(std::string_view)>;

inline WarningSink& warning_sink() {
  static WarningSink sink = [](std::string_view msg) {
    std::cerr << "warning: " << msg << '\n';
  };
  return sink;
}

inline void warn(std::string_view msg) {
  if (warning_sink()) warning_sink()(msg);
}

/// Collects warnings emitted while in scope instead of printing them.
class WarningCapture {
 public:
  WarningCapture() : previous_(std::move(warning_sink())) {
    warning_sink() = [this](std::string_view msg) { messages_.emplace_back(msg); };
  }
  ~WarningCapture() { warning_sink() = std::move(previous_); }
  WarningCapture(const WarningCapture&) = delete;
  WarningCapture& operator=(const WarningCapture&) = delete;

  const std::vector<std::string>& messages() const { return messages_; }
  bool contains(std::string_view needle) const {
    for (const auto& m : messages_) {
      if (m.find(needle) != std::string::npos) return true;
    }
    return false;
  }

 private:
  WarningSink previous_;
  std::vector<std::string> messages_;
};

}  // namespace loadcast
