#pragma once

#include <stdexcept>
#include <string>

namespace alref {

class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Region or index outside the raster it refers to.
class BoundsError : public Error {
 public:
  using Error::Error;
};

/// Value outside its admissible domain (class id, reflectance, mask bit).
class DomainError : public Error {
 public:
  using Error::Error;
};

/// Two operands whose shapes must agree do not.
class DimensionError : public Error {
 public:
  using Error::Error;
};

/// Invalid configuration. The message names the offending setting.
class ConfigError : public Error {
 public:
  using Error::Error;
};

class IoError : public Error {
 public:
  using Error::Error;
};

/// Malformed file content (bad magic, truncated payload, bad JSON schema).
class FormatError : public Error {
 public:
  using Error::Error;
};

/// Predictor sidecar violated protocol v1, or reported an error.
class ProtocolError : public Error {
 public:
  using Error::Error;
};

/// Sidecar process could not be reached (spawn failure, EOF, timeout).
class TransportError : public Error {
 public:
  using Error::Error;
};

}  // namespace alref
