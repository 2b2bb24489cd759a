#pragma once

#include <stdexcept>

namespace cocl {

// Failure categories surfaced by the library. The CLI maps each one to a
// nonzero exit status that names the failing stage.
struct Error : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// Malformed input text (bad numeric token, truncated row, ...).
struct ParseError : Error {
  using Error::Error;
};

// Header or schema inconsistencies (duplicate names, unknown variables).
struct SchemaError : Error {
  using Error::Error;
};

// Invalid argument values (part count < 1, binomial b > a, ...).
struct ParameterError : Error {
  using Error::Error;
};

// Structural edits that are not valid on the given model or partition.
struct StructuralError : Error {
  using Error::Error;
};

// A value outside a variable's observed domain.
struct DomainError : Error {
  using Error::Error;
};

}  // namespace cocl
