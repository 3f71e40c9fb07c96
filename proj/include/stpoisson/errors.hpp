#ifndef STPOISSON_ERRORS_HPP
#define STPOISSON_ERRORS_HPP

#include <stdexcept>
#include <string>

namespace stpoisson {

// Invalid user input: malformed files, out-of-domain parameters,
// inconsistent configuration. CLI exit code 2.
class ValidationError : public std::runtime_error {
public:
  explicit ValidationError(const std::string& what) : std::runtime_error(what) {}
};

// A computation that cannot proceed: failed factorization, overflow,
// degenerate target. CLI exit code 3.
class NumericalError : public std::runtime_error {
public:
  explicit NumericalError(const std::string& what) : std::runtime_error(what) {}
};

// Filesystem problems, as opposed to malformed content. CLI exit code 4.
class IoError : public std::runtime_error {
public:
  explicit IoError(const std::string& what) : std::runtime_error(what) {}
};

}  // namespace stpoisson

#endif
