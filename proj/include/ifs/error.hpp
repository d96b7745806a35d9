#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

namespace ifs {

enum class ErrorKind {
  parse,
  unknown_symbol,
  arity,
  domain,
  diverged,
  scenario_invalid,
  zeno_abort,
  degenerate,
  preimage_unavailable,
  ill_posed,
  partial_map,
  precondition,
  schema,
};

inline const char* to_string(ErrorKind kind) {
  switch (kind) {
    case ErrorKind::parse: return "parse";
    case ErrorKind::unknown_symbol: return "unknown-symbol";
    case ErrorKind::arity: return "arity";
    case ErrorKind::domain: return "domain";
    case ErrorKind::diverged: return "diverged";
    case ErrorKind::scenario_invalid: return "scenario-invalid";
    case ErrorKind::zeno_abort: return "zeno-abort";
    case ErrorKind::degenerate: return "degenerate";
    case ErrorKind::preimage_unavailable: return "preimage-unavailable";
    case ErrorKind::ill_posed: return "ill-posed";
    case ErrorKind::partial_map: return "partial-map";
    case ErrorKind::precondition: return "precondition";
    case ErrorKind::schema: return "schema";
  }
  return "unknown";
}

/// Base of every error raised by the library. `kind()` lets callers (the CLI in
/// particular) map failures onto exit codes without string matching.
class Error : public std::runtime_error {
 public:
  Error(ErrorKind kind, const std::string& what)
      : std::runtime_error(std::string(to_string(kind)) + ": " + what), kind_(kind) {}

  ErrorKind kind() const noexcept { return kind_; }

 private:
  ErrorKind kind_;
};

/// Syntax errors carry the byte offset into the source text.
class ParseError : public Error {
 public:
  ParseError(ErrorKind kind, std::size_t offset, const std::string& what)
      : Error(kind, what + " at offset " + std::to_string(offset)), offset_(offset) {}

  std::size_t offset() const noexcept { return offset_; }

 private:
  std::size_t offset_;
};

/// Math-domain failure while evaluating one component of a field.
class DomainError : public Error {
 public:
  DomainError(std::size_t component, const std::string& what)
      : Error(ErrorKind::domain, what + " (component " + std::to_string(component) + ")"),
        component_(component) {}

  std::size_t component() const noexcept { return component_; }

 private:
  std::size_t component_;
};

/// A point map failed on some atoms of a measure.
class PartialMapError : public Error {
 public:
  PartialMapError(std::vector<std::size_t> atoms, const std::string& first_reason)
      : Error(ErrorKind::partial_map,
              std::to_string(atoms.size()) + " atom(s) could not be mapped; first: " + first_reason),
        atoms_(std::move(atoms)) {}

  const std::vector<std::size_t>& atoms() const noexcept { return atoms_; }

 private:
  std::vector<std::size_t> atoms_;
};

}  // namespace ifs
