#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace vab {

/// Argument outside an operation's documented domain.
class PreconditionError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

/// Bad or unresolvable experiment configuration. `field()` is the dotted key.
class ConfigError : public std::runtime_error {
 public:
  ConfigError(std::string field, const std::string& what)
      : std::runtime_error(field + ": " + what), field_(std::move(field)) {}
  const std::string& field() const noexcept { return field_; }

 private:
  std::string field_;
};

/// A model or algorithm invariant failed while a run was in progress.
class InvariantViolation : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class IoError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class EmptyContexts : public std::invalid_argument {
 public:
  EmptyContexts() : std::invalid_argument("context set is empty") {}
};

class NoAliveCandidates : public std::logic_error {
 public:
  NoAliveCandidates() : std::logic_error("no alive parameter candidates") {}
};

class EmptyTrace : public std::invalid_argument {
 public:
  EmptyTrace() : std::invalid_argument("trace has no rows") {}
};

class NonPositiveDenominator : public std::logic_error {
 public:
  explicit NonPositiveDenominator(std::size_t index)
      : std::logic_error("non-positive potential denominator at step " +
                         std::to_string(index)),
        index_(index) {}
  std::size_t index() const noexcept { return index_; }

 private:
  std::size_t index_;
};

}  // namespace vab
