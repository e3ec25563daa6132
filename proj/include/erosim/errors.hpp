#pragma once

#include <stdexcept>
#include <string>

namespace erosim {

/// Invalid model, scenario or configuration input.
class ConfigError : public std::runtime_error {
 public:
  explicit ConfigError(const std::string& what, int line = -1)
      : std::runtime_error(line >= 0 ? "line " + std::to_string(line) + ": " + what : what),
        line_(line) {}
  int line() const noexcept { return line_; }

 private:
  int line_;
};

/// Argument outside the domain of a constitutive function.
class DomainError : public std::domain_error {
 public:
  using std::domain_error::domain_error;
};

/// Level-set geometry could not be built for a ghost node.
class GeometryError : public std::runtime_error {
 public:
  enum class Kind { degenerate_normal, projection_failure, stencil_unavailable };
  GeometryError(Kind kind, const std::string& what) : std::runtime_error(what), kind_(kind) {}
  Kind kind() const noexcept { return kind_; }

 private:
  Kind kind_;
};

/// Finite-difference stencil reached a node that is neither internal nor ghost.
class AssemblyError : public std::logic_error {
 public:
  using std::logic_error::logic_error;
};

/// Nonlinear solve failed even after dt halving.
class SolverError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Reading or writing a file failed.
class IoError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Every internal node has been eroded.
class FullyEroded : public std::runtime_error {
 public:
  FullyEroded() : std::runtime_error("internal set is empty: specimen fully eroded") {}
};

}  // namespace erosim
