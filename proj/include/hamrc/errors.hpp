#pragma once

#include <stdexcept>
#include <string>

namespace hamrc {

// Invalid or unreadable configuration. The CLI maps this to exit code 1.
class ConfigError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Divergence, singular solves, degenerate draws. The CLI maps this to exit code 2.
class NumericalError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

}  // namespace hamrc
