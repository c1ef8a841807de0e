#pragma once

#include <stdexcept>
#include <string>

namespace archgraph {

// Base for every library error so callers can catch one type at the boundary.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// A directed graph handed to an order-dependent routine contains a cycle.
class CyclicInput : public Error {
 public:
  using Error::Error;
};

// An iterative numeric routine hit its iteration cap before reaching tolerance.
class NonConvergence : public Error {
 public:
  using Error::Error;
};

// Exhaustive enumeration was requested beyond its hard size cap.
class TooLarge : public Error {
 public:
  using Error::Error;
};

// Not enough points to build or filter a reference set.
class InsufficientData : public Error {
 public:
  using Error::Error;
};

// Vector/matrix dimensions disagree with what the callee was built for.
class DimensionMismatch : public Error {
 public:
  using Error::Error;
};

// An edge exists in the relation graph but carries no scoring data.
class MissingEdgeData : public Error {
 public:
  using Error::Error;
};

// Parameter tensor shapes disagree with the model configuration.
class ShapeMismatch : public Error {
 public:
  using Error::Error;
};

// Every training label compares equal; no ordered pair has a winner.
class DegenerateLabels : public Error {
 public:
  using Error::Error;
};

// A rank-correlation input has zero variance (or is empty).
class DegenerateInput : public Error {
 public:
  using Error::Error;
};

// Text input could not be parsed; carries a 1-based line number.
class ParseError : public Error {
 public:
  ParseError(const std::string& what, std::size_t line)
      : Error(what + " (line " + std::to_string(line) + ")"), line_(line) {}
  std::size_t line() const { return line_; }

 private:
  std::size_t line_;
};

// A benchmark cell is absent or not a finite number.
class MissingMetric : public Error {
 public:
  using Error::Error;
};

// A ground-truth evaluation would exceed a ledger cap or repeat an entry.
class BudgetExceeded : public Error {
 public:
  using Error::Error;
};

// No acyclic candidate could be produced at any probed budget.
class NoFeasibleSubgraph : public Error {
 public:
  using Error::Error;
};

}  // namespace archgraph
