#pragma once

#include <cstdint>
#include <stdexcept>
#include <string>

namespace hqrc {

/// Argument outside an operation's domain (bad index, out-of-range input, shape mismatch).
class DomainError : public std::domain_error {
 public:
  using std::domain_error::domain_error;
};

/// A numerical routine failed (singular system, eigensolver did not converge).
class NumericError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Object used before it was ready (untrained readout, unfitted scaler).
class StateError : public std::logic_error {
 public:
  using std::logic_error::logic_error;
};

/// Malformed file. Carries the byte offset where parsing stopped.
class ParseError : public std::runtime_error {
 public:
  ParseError(const std::string& what, std::uint64_t offset)
      : std::runtime_error(what + " (at byte " + std::to_string(offset) + ")"), offset_(offset) {}

  std::uint64_t offset() const noexcept { return offset_; }

 private:
  std::uint64_t offset_;
};

}  // namespace hqrc
