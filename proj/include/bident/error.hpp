#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace bident {

class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Invalid configuration or caller-side contract violation.
class ConfigError : public Error {
 public:
  using Error::Error;
};

// Malformed input data. `line` is 1-based, or 0 when not tied to a line.
class DataError : public Error {
 public:
  DataError(const std::string& what, std::size_t line = 0)
      : Error(line ? what + " (line " + std::to_string(line) + ")" : what), line_(line) {}

  std::size_t line() const noexcept { return line_; }

 private:
  std::size_t line_;
};

class IoError : public Error {
 public:
  using Error::Error;
};

// Scoring backend failure. Every pair before `first_unscored_index` was scored.
class ScoringError : public Error {
 public:
  enum class Kind { backend_unavailable, model_load, invalid_distribution, unknown_pair, protocol };

  ScoringError(Kind kind, const std::string& what, std::size_t first_unscored_index = 0)
      : Error(what), kind_(kind), first_unscored_(first_unscored_index) {}

  Kind kind() const noexcept { return kind_; }
  std::size_t first_unscored_index() const noexcept { return first_unscored_; }

  ScoringError with_offset(std::size_t offset) const {
    return ScoringError(kind_, what(), first_unscored_ + offset);
  }

 private:
  Kind kind_;
  std::size_t first_unscored_;
};

}  // namespace bident
