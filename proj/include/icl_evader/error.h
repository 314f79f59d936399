#ifndef ICL_EVADER_ERROR_H_
#define ICL_EVADER_ERROR_H_

#include <cstddef>
#include <stdexcept>
#include <string>

namespace icl_evader {

// Base class for every error raised by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// A value violates a documented precondition or type invariant.
class InvalidArgument : public Error {
 public:
  using Error::Error;
};

// Malformed textual input. `position()` is a byte offset for recipe codes and
// a 1-based line number for dataset files.
class ParseError : public Error {
 public:
  ParseError(const std::string& message, std::size_t position)
      : Error(message + " (at " + std::to_string(position) + ")"),
        position_(position) {}

  std::size_t position() const { return position_; }

 private:
  std::size_t position_;
};

// A sampling request that the available pool cannot satisfy.
class PoolExhausted : public Error {
 public:
  using Error::Error;
};

// Transport or protocol failure while talking to a model backend.
class BackendError : public Error {
 public:
  using Error::Error;
};

}  // namespace icl_evader

#endif  // ICL_EVADER_ERROR_H_
