#pragma once

#include <stdexcept>
#include <string>

namespace mhmp {

/// Invalid scenario, parameter or argument supplied by the caller.
class ConfigError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

/// A link must carry traffic but has zero rate.
class InfeasibleLinkError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Raised by the engine when a block cannot be scheduled at all.
class InfeasibleError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

}  // namespace mhmp
