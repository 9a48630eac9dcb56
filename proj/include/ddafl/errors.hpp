#pragma once

#include <stdexcept>
#include <string>

namespace ddafl {

// Shapes of two parameter sets or of an input and a network disagree.
struct ShapeError : std::invalid_argument {
  using std::invalid_argument::invalid_argument;
};

// Coincident points or a non-positive distance reached a geometric formula.
struct GeometryError : std::domain_error {
  using std::domain_error::domain_error;
};

// A config key is unknown, malformed, or out of range. key() names it.
class ConfigError : public std::runtime_error {
 public:
  ConfigError(std::string key, const std::string& what)
      : std::runtime_error(key.empty() ? what : key + ": " + what), key_(std::move(key)) {}
  const std::string& key() const noexcept { return key_; }

 private:
  std::string key_;
};

}  // namespace ddafl
