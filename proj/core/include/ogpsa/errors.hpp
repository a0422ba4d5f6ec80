#pragma once

#include <cstddef>
#include <optional>
#include <stdexcept>
#include <string>

namespace ogpsa {

/// Base of every error thrown by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Vectors or matrices combined in one operation disagree in shape.
class DimensionError : public Error {
 public:
  using Error::Error;
};

/// Invalid configuration: bad hyperparameter, unknown task name, empty data.
class ConfigError : public Error {
 public:
  using Error::Error;
};

/// A documented precondition of an operation does not hold.
class PreconditionError : public Error {
 public:
  using Error::Error;
};

/// NaN/Inf encountered. Carries the training step and task index when known.
class NumericError : public Error {
 public:
  explicit NumericError(const std::string& what,
                        std::optional<std::size_t> step = std::nullopt,
                        std::optional<std::size_t> task_index = std::nullopt)
      : Error(what), step_(step), task_index_(task_index) {}

  std::optional<std::size_t> step() const noexcept { return step_; }
  std::optional<std::size_t> task_index() const noexcept { return task_index_; }

 private:
  std::optional<std::size_t> step_;
  std::optional<std::size_t> task_index_;
};

}  // namespace ogpsa
