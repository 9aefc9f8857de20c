#pragma once

#include <stdexcept>
#include <string>

namespace stodis {

/// Base class for all errors thrown by this library.
class error : public std::runtime_error {
 public:
  explicit error(const std::string& msg) : std::runtime_error(msg) {}
};

/// Bad parameter or argument value (config keys, out-of-domain inputs). CLI exit code 2.
class domain_error : public error {
 public:
  explicit domain_error(const std::string& msg) : error(msg) {}
};

/// Problem instance admits no feasible solution, or a solver failed to converge. CLI exit code 3.
class infeasible_error : public error {
 public:
  explicit infeasible_error(const std::string& msg) : error(msg) {}
};

/// Filesystem-level failure (missing, unreadable, unwritable). CLI exit code 4.
class io_error : public error {
 public:
  explicit io_error(const std::string& msg) : error(msg) {}
};

/// Malformed file content; message carries the 1-based line number. CLI exit code 4.
class parse_error : public io_error {
 public:
  explicit parse_error(const std::string& msg) : io_error(msg) {}
};

}  // namespace stodis
