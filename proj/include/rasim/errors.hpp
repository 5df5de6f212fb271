#ifndef RASIM_ERRORS_HPP
#define RASIM_ERRORS_HPP

#include <stdexcept>
#include <string>

namespace rasim {

/// Bad configuration or command-line usage (exit code 1).
class ConfigError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Malformed or inconsistent input data, I/O failures (exit code 2).
class DataError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Non-finite loss during optimization (exit code 3).
class DivergenceError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Dimension or shape mismatch between vectors/matrices.
class ShapeError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

}  // namespace rasim

#endif  // RASIM_ERRORS_HPP
