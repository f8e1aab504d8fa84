#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace therif {

// Base class for every error raised by the library. Callers that only care
// about "did it work" catch this; the service layer maps subclasses onto
// HTTP status codes.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Malformed text input (CSS, JSON records, config files).
class ParseError : public Error {
 public:
  using Error::Error;
};

// A value lies outside its allowed range. `property()` names the offender.
class RangeError : public Error {
 public:
  RangeError(std::string property, const std::string& message)
      : Error(message), property_(std::move(property)) {}
  const std::string& property() const { return property_; }

 private:
  std::string property_;
};

class MissingMetricError : public Error {
 public:
  using Error::Error;
};

// A refinement log whose events do not chain. `index()` is the first bad event.
class LogCorruptionError : public Error {
 public:
  LogCorruptionError(std::size_t index, std::string key, const std::string& message)
      : Error(message), index_(index), key_(std::move(key)) {}
  std::size_t index() const { return index_; }
  const std::string& key() const { return key_; }

 private:
  std::size_t index_;
  std::string key_;
};

class LayoutError : public Error {
 public:
  using Error::Error;
};

class ShapeError : public Error {
 public:
  using Error::Error;
};

class PipelineError : public Error {
 public:
  using Error::Error;
};

class StatsError : public Error {
 public:
  using Error::Error;
};

}  // namespace therif
