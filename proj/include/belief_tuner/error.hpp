#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace belief_tuner {

// Root of every error the library throws.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Malformed text (network document, constraint string, evidence spec).
// `position` is a byte offset into the input.
class ParseError : public Error {
 public:
  ParseError(const std::string& what, std::size_t position)
      : Error(what + " (at offset " + std::to_string(position) + ")"),
        message_(what),
        position_(position) {}

  std::size_t position() const noexcept { return position_; }
  // The description without the offset suffix.
  const std::string& message() const noexcept { return message_; }

 private:
  std::string message_;
  std::size_t position_;
};

// Well-formed input that violates a model invariant: cycles, bad row sums,
// dangling parents, unknown variables or states.
class ValidationError : public Error {
 public:
  using Error::Error;
};

// Conditioning on evidence with Pr(e) = 0.
class ZeroProbabilityError : public Error {
 public:
  using Error::Error;
};

// A meta parameter whose current value is 0 or 1, or whose variable is not binary.
class NonTunableError : public Error {
 public:
  using Error::Error;
};

// A numeric argument outside the domain an operation is defined on.
class DomainError : public Error {
 public:
  using Error::Error;
};

}  // namespace belief_tuner
