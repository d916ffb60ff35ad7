#pragma once

#include <stdexcept>
#include <string>

namespace driftlab {

// Invalid value for a domain type (degenerate box, bad matrix shape, ...).
class ValidationError : public std::runtime_error {
 public:
  explicit ValidationError(const std::string& msg) : std::runtime_error(msg) {}
};

// Caller broke an operation's precondition (length mismatch, empty input
// where the contract forbids it, ...).
class ContractError : public std::runtime_error {
 public:
  explicit ContractError(const std::string& msg) : std::runtime_error(msg) {}
};

// A scene-level operation received zero targets.
class EmptySceneError : public ContractError {
 public:
  explicit EmptySceneError(const std::string& msg) : ContractError(msg) {}
};

// Arithmetic would overflow or leave the representable range.
class NumericRangeError : public std::runtime_error {
 public:
  explicit NumericRangeError(const std::string& msg) : std::runtime_error(msg) {}
};

// Input outside a function's mathematical domain (e.g. logit of a value
// outside (0,1)).
class DomainError : public std::runtime_error {
 public:
  explicit DomainError(const std::string& msg) : std::runtime_error(msg) {}
};

// A requested matching/placement cannot exist (fewer anchors than targets,
// crowding target unreachable, ...).
class InfeasibilityError : public std::runtime_error {
 public:
  explicit InfeasibilityError(const std::string& msg) : std::runtime_error(msg) {}
};

// A metric has no defined value on this input (e.g. zero ground truth).
class UndefinedMetricError : public std::runtime_error {
 public:
  explicit UndefinedMetricError(const std::string& msg) : std::runtime_error(msg) {}
};

// Bad user-supplied configuration.
class ConfigError : public std::runtime_error {
 public:
  explicit ConfigError(const std::string& msg) : std::runtime_error(msg) {}
};

// Malformed input file.
class ParseError : public std::runtime_error {
 public:
  explicit ParseError(const std::string& msg) : std::runtime_error(msg) {}
};

// Scene generation failed to satisfy its calibration contract.
class GenerationError : public std::runtime_error {
 public:
  explicit GenerationError(const std::string& msg) : std::runtime_error(msg) {}
};

}  // namespace driftlab
