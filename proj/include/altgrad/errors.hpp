#pragma once

#include <stdexcept>
#include <string>

namespace altgrad {

struct DimensionError : std::invalid_argument {
  using std::invalid_argument::invalid_argument;
};

struct DomainError : std::domain_error {
  using std::domain_error::domain_error;
};

struct LookupError : std::out_of_range {
  using std::out_of_range::out_of_range;
};

// step after an episode has ended, and similar misuse of stateful objects
struct ProtocolError : std::logic_error {
  using std::logic_error::logic_error;
};

struct UnsupportedError : std::invalid_argument {
  using std::invalid_argument::invalid_argument;
};

struct DivergenceError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct ConfigError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

}  // namespace altgrad
