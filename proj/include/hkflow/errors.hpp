#pragma once

#include <stdexcept>
#include <string>

namespace hkflow {

/// Base of every exception thrown by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Evaluation of a model or profile outside its domain of validity.
class DomainError : public Error {
 public:
  using Error::Error;
};

class QuadratureError : public Error {
 public:
  QuadratureError(const std::string& what, double lo, double hi)
      : Error(what + " on [" + std::to_string(lo) + ", " + std::to_string(hi) + "]"),
        lo_(lo),
        hi_(hi) {}
  double lo() const { return lo_; }
  double hi() const { return hi_; }

 private:
  double lo_;
  double hi_;
};

/// Root bracketing failed; usually means an assumption on f is violated.
class BracketError : public Error {
 public:
  using Error::Error;
};

class SolverError : public Error {
 public:
  using Error::Error;
};

class InsufficientSamples : public Error {
 public:
  InsufficientSamples() : Error("insufficient samples") {}
  explicit InsufficientSamples(const std::string& what) : Error("insufficient samples: " + what) {}
};

class ConfigError : public Error {
 public:
  ConfigError(const std::string& what, int line = 0)
      : Error(line > 0 ? "line " + std::to_string(line) + ": " + what : what), line_(line) {}
  int line() const { return line_; }

 private:
  int line_;
};

}  // namespace hkflow
