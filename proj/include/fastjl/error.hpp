#pragma once

#include <stdexcept>
#include <string>

namespace fastjl {

/// Base of every exception thrown by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Vector or matrix shapes that do not fit together (including non power-of-two lengths).
class DimensionError : public Error {
 public:
  using Error::Error;
};

/// A numeric parameter outside its admissible range.
class ParameterError : public Error {
 public:
  using Error::Error;
};

/// The hard instance cannot be built for the requested (delta, d).
class InstanceError : public Error {
 public:
  using Error::Error;
};

/// A lemma's hypotheses are violated where the caller required them to hold.
class DomainError : public Error {
 public:
  using Error::Error;
};

/// An estimate was measured for a different event than the bound describes.
class EventMismatchError : public Error {
 public:
  using Error::Error;
};

/// Command-line or config-file problems.
class ConfigError : public Error {
 public:
  using Error::Error;
};

}  // namespace fastjl
