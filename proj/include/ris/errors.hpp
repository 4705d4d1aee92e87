#ifndef RIS_ERRORS_HPP_
#define RIS_ERRORS_HPP_

#include <stdexcept>
#include <string>

namespace ris {

// Bad shapes, mismatched parameter sets, invalid configuration values.
class ConfigError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// API misuse: non-scalar loss, zero episodes, source cell inside a wall.
class UsageError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Non-finite losses, gradients or weights. Raised before any state is mutated.
class NumericalError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Unusable maze or disconnected query.
class EnvironmentError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

}  // namespace ris

#endif  // RIS_ERRORS_HPP_
