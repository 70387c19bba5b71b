#pragma once

#include <stdexcept>
#include <string>

namespace cosod {

/// Base class for every error raised by the library.
class Error : public std::runtime_error {
  public:
    using std::runtime_error::runtime_error;
};

/// Missing weights, invalid options, inconsistent configuration.
class ConfigError : public Error {
  public:
    using Error::Error;
};

/// Tensor or map dimensions that do not agree.
class ShapeError : public Error {
  public:
    using Error::Error;
};

/// On-disk feature cache payload does not match its manifest.
class CorruptionError : public Error {
  public:
    using Error::Error;
};

/// Model inference failed or produced unusable output.
class BackendError : public Error {
  public:
    using Error::Error;
};

/// Dataset layout problems: missing roots, unreadable files, incomplete GT.
class DatasetError : public Error {
  public:
    using Error::Error;
};

/// Failed to write an output file.
class IoError : public Error {
  public:
    using Error::Error;
};

} // namespace cosod
