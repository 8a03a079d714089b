#pragma once

#include <stdexcept>
#include <string>

namespace robust_debias {

// Base class for all numerical/contract failures raised by this library.
// CLI maps these to exit code 2; anything else (bad flags, bad CSV) is a
// usage error and exits 1.
class Error : public std::runtime_error {
public:
  explicit Error(const std::string& what) : std::runtime_error(what) {}
};

class NonFiniteInput : public Error {
public:
  using Error::Error;
};

class AssumptionViolated : public Error {
public:
  using Error::Error;
};

class SingularActiveGram : public Error {
public:
  using Error::Error;
};

class DegenerateTrace : public Error {
public:
  using Error::Error;
};

class ZeroPsi : public Error {
public:
  using Error::Error;
};

class BoundViolated : public Error {
public:
  using Error::Error;
};

class NonFiniteEvaluation : public Error {
public:
  using Error::Error;
};

class TooFewSamples : public Error {
public:
  using Error::Error;
};

// CSV / config parse failure; carries a 1-based line number when known.
class ParseError : public std::runtime_error {
public:
  ParseError(const std::string& what, long line)
      : std::runtime_error(line > 0 ? what + " (line " + std::to_string(line) + ")" : what),
        line_(line) {}
  long line() const { return line_; }

private:
  long line_;
};

}  // namespace robust_debias
