#pragma once

#include <stdexcept>
#include <string>

namespace qpv {

// Consumed or moved-from register handle used again.
class NoCloningViolation : public std::logic_error {
 public:
  using std::logic_error::logic_error;
};

// A handler tried to emit a message into the already-processed past.
class CausalityViolation : public std::logic_error {
 public:
  using std::logic_error::logic_error;
};

// Invalid scenario or experiment configuration. `field` names the culprit.
class ConfigError : public std::runtime_error {
 public:
  ConfigError(std::string field, const std::string& what)
      : std::runtime_error(field + ": " + what), field_(std::move(field)) {}
  const std::string& field() const noexcept { return field_; }

 private:
  std::string field_;
};

}  // namespace qpv
