#pragma once

#include <stdexcept>
#include <string>

namespace ngeo {

class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Point or domain outside the chart / parameter rectangle.
class DomainError : public Error {
 public:
  using Error::Error;
};

/// Family parameter out of its admissible range (e.g. eps >= 1).
class ParameterError : public Error {
 public:
  using Error::Error;
};

/// Degenerate tangent frame or singular matrix.
class ImmersionError : public Error {
 public:
  using Error::Error;
};

/// Winding loop passes too close to a zero of the field it measures.
class UnreliableLoopError : public Error {
 public:
  using Error::Error;
};

/// Induced metric of a flowing disc is no longer definite.
class SignatureLossError : public Error {
 public:
  using Error::Error;
};

/// A flowing boundary point cannot be returned to its target surface.
class ProjectionError : public Error {
 public:
  using Error::Error;
};

class ConfigError : public Error {
 public:
  using Error::Error;
};

class ParseError : public Error {
 public:
  using Error::Error;
};

}  // namespace ngeo
