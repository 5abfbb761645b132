#pragma once

#include <stdexcept>
#include <string>

namespace raes {

// Base class for every error raised by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Malformed or unsupported audio input (WAV parsing, sample-rate mismatch, ...).
class AudioFormatError : public Error {
 public:
  using Error::Error;
};

// Invalid argument or precondition violation on a public operation.
class InvalidArgument : public Error {
 public:
  using Error::Error;
};

}  // namespace raes
