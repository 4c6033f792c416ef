#ifndef NBCAR_ERRORS_HPP
#define NBCAR_ERRORS_HPP

#include <stdexcept>
#include <string>

namespace nbcar {

// Base class for everything this library throws on purpose.
class Error : public std::runtime_error {
public:
  explicit Error(const std::string& msg) : std::runtime_error(msg) {}
};

// Argument outside the mathematical domain of a density (k <= 0, y < 0, ...).
class DomainError : public Error {
public:
  using Error::Error;
};

// Dimension mismatch between vectors/matrices.
class ShapeError : public Error {
public:
  using Error::Error;
};

// A finite computation would overflow (exp of a huge linear predictor).
class NumericRangeError : public Error {
public:
  using Error::Error;
};

// Zone with zero adjacency weight where the CAR conditional is undefined.
class IslandError : public Error {
public:
  using Error::Error;
};

// Bad input data (row-level problems, broken invariants).
class ValidationError : public Error {
public:
  using Error::Error;
};

// Header/column problems in delimited input.
class SchemaError : public Error {
public:
  using Error::Error;
};

// Contradictory duplicate records.
class ConflictError : public Error {
public:
  using Error::Error;
};

// Reference to an id that does not resolve.
class ReferenceError : public Error {
public:
  using Error::Error;
};

// Invalid run configuration.
class ConfigError : public Error {
public:
  using Error::Error;
};

// Diagnostic undefined on the given draws (zero variance, too few draws).
class DiagnosticError : public Error {
public:
  using Error::Error;
};

// Too few draws to summarize.
class SummaryError : public Error {
public:
  using Error::Error;
};

// Quadrature grid does not bracket enough posterior mass.
class GridError : public Error {
public:
  using Error::Error;
};

// The chain hit a persistently non-finite target and stopped.
class SamplerAbort : public Error {
public:
  using Error::Error;
};

}  // namespace nbcar

#endif  // NBCAR_ERRORS_HPP
