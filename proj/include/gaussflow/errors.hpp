#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>
#include <vector>

namespace gaussflow {

/// Base class of every error raised by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Input columns do not span an n-dimensional subspace.
class DegeneratePlane : public Error {
 public:
  using Error::Error;
};

/// Operands live in different ambient or tangent dimensions.
class DimensionError : public Error {
 public:
  using Error::Error;
};

/// An argument is outside its admissible range.
class DomainError : public Error {
 public:
  using Error::Error;
};

/// A finite-difference stencil would leave the grid.
class StencilError : public Error {
 public:
  using Error::Error;
};

/// The eigen-oracle was asked for a form larger than it supports.
class CapError : public Error {
 public:
  using Error::Error;
};

/// A patch fails the soliton residual check that gates the inequalities.
class NotASoliton : public Error {
 public:
  NotASoliton(const std::string& what, double residual)
      : Error(what), residual_(residual) {}
  double residual() const noexcept { return residual_; }

 private:
  double residual_;
};

/// The time stepper produced a non-finite value.
class BlowupError : public Error {
 public:
  BlowupError(const std::string& what, std::size_t node)
      : Error(what), node_(node) {}
  std::size_t node() const noexcept { return node_; }

 private:
  std::size_t node_;
};

/// Malformed configuration text.
class ParseError : public Error {
 public:
  ParseError(const std::string& what, std::size_t position)
      : Error(what), position_(position) {}
  std::size_t position() const noexcept { return position_; }

 private:
  std::size_t position_;
};

/// Well-formed configuration that violates the schema. Carries every
/// violation found, not just the first.
class ValidationError : public Error {
 public:
  explicit ValidationError(std::vector<std::string> violations);
  const std::vector<std::string>& violations() const noexcept {
    return violations_;
  }

 private:
  std::vector<std::string> violations_;
};

}  // namespace gaussflow
