#pragma once

#include <stdexcept>
#include <string>

namespace ccncheck {

class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// A name string or StructuredName that violates the naming rules.
/// component() names the offending part: "scheme", "app", "receiver",
/// "signal", "sender", "appended", "marker" or "count".
class MalformedName : public Error {
 public:
  MalformedName(std::string component, const std::string& what)
      : Error("malformed name (" + component + "): " + what), component_(std::move(component)) {}
  const std::string& component() const noexcept { return component_; }

 private:
  std::string component_;
};

class NodeDown : public Error {
 public:
  using Error::Error;
};

class PrefixConflict : public Error {
 public:
  using Error::Error;
};

class ProtocolViolation : public Error {
 public:
  using Error::Error;
};

class CheckpointInProgress : public Error {
 public:
  using Error::Error;
};

class NoCheckpoint : public Error {
 public:
  using Error::Error;
};

class ScenarioError : public Error {
 public:
  using Error::Error;
};

}  // namespace ccncheck
