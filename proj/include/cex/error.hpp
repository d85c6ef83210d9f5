#pragma once

#include <stdexcept>
#include <string>

namespace cex {

/// Base class for all library errors.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Netpbm decode failure; one kind per malformed-input class.
class DecodeError : public Error {
 public:
  enum class Kind { MalformedHeader, TruncatedBody, UnsupportedMaxval };

  DecodeError(Kind kind, const std::string& what) : Error(what), kind_(kind) {}
  Kind kind() const noexcept { return kind_; }

 private:
  Kind kind_;
};

class DimensionMismatch : public Error {
 public:
  using Error::Error;
};

/// Raised where an operation needs at least one member pixel.
class EmptyMaskError : public Error {
 public:
  using Error::Error;
};

class RegionTooSmall : public Error {
 public:
  using Error::Error;
};

class DegenerateQuad : public Error {
 public:
  using Error::Error;
};

/// Classification provider failure (synthetic or subprocess).
class ClassifierError : public Error {
 public:
  enum class Kind {
    SpawnFailure,
    ProviderFailure,
    ProtocolViolation,
    Timeout,
    DimensionRejected,
  };

  ClassifierError(Kind kind, const std::string& what) : Error(what), kind_(kind) {}
  Kind kind() const noexcept { return kind_; }

 private:
  Kind kind_;
};

/// An explanation failed its re-classification check.
class SufficiencyViolation : public Error {
 public:
  using Error::Error;
};

}  // namespace cex
