#pragma once

#include <sstream>
#include <stdexcept>
#include <string>

namespace graspmap {

/// Base class for all library errors.
class Error : public std::runtime_error {
 public:
  explicit Error(const std::string& msg) : std::runtime_error(msg) {}
};

/// Tensor/layer geometry mismatch. Message names the offending dimension.
class ShapeError : public Error {
 public:
  using Error::Error;
};

/// Malformed input text (rectangle files, point clouds, manifests).
class ParseError : public Error {
 public:
  using Error::Error;
};

/// Filesystem and stream failures, bad magic/checksum/version.
class IoError : public Error {
 public:
  using Error::Error;
};

/// Non-finite values where finite ones are required.
class NumericError : public Error {
 public:
  using Error::Error;
};

/// Invalid configuration (kernel/stride plans, parameter ranges).
class ConfigError : public Error {
 public:
  using Error::Error;
};

namespace detail {

inline void msg_append(std::ostringstream&) {}

template <typename T, typename... Rest>
void msg_append(std::ostringstream& os, const T& v, const Rest&... rest) {
  os << v;
  msg_append(os, rest...);
}

}  // namespace detail

/// Builds an error message from a sequence of streamable parts.
template <typename... Parts>
std::string msg(const Parts&... parts) {
  std::ostringstream os;
  detail::msg_append(os, parts...);
  return os.str();
}

}  // namespace graspmap
