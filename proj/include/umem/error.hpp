#pragma once

#include <stdexcept>
#include <string>

namespace umem {

// Base of every exception thrown by the engine.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// A numeric argument violates its documented precondition.
class ParameterError : public Error {
 public:
  using Error::Error;
};

// Input data (geometry, files, indices) is malformed or inconsistent.
class InputError : public Error {
 public:
  using Error::Error;
};

// A density or function was evaluated outside its support.
class DomainError : public Error {
 public:
  using Error::Error;
};

// A normalization collapsed to 0/0 (e.g. a single-zone target area).
class DegenerateError : public Error {
 public:
  using Error::Error;
};

// The travel-energy CDF never reaches the requested quantile.
class UnboundedMarginError : public Error {
 public:
  using Error::Error;
};

namespace detail {

inline void require(bool ok, const std::string& what) {
  if (!ok) throw ParameterError(what);
}

}  // namespace detail
}  // namespace umem
