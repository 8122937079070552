#pragma once

#include <stdexcept>
#include <string>

namespace mrm {

// Every error raised by the library derives from Error so callers can map
// families to exit codes without string matching.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class InvalidArgument : public Error {
 public:
  using Error::Error;
};

// The spectrum has no resolvable notch or peak (e.g. a lossless all-pass ring).
class DegenerateResponse : public Error {
 public:
  using Error::Error;
};

// No monotone interval of the transfer curve spans the requested gain window.
class WindowUnreachable : public Error {
 public:
  using Error::Error;
};

class InfeasibleSearch : public Error {
 public:
  using Error::Error;
};

class ParseError : public Error {
 public:
  using Error::Error;
};

class IoError : public Error {
 public:
  using Error::Error;
};

namespace detail {

inline void require(bool ok, const std::string& what) {
  if (!ok) throw InvalidArgument(what);
}

}  // namespace detail
}  // namespace mrm
