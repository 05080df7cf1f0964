#pragma once
// Error taxonomy shared by all hyperlam modules. Everything derives from
// std::runtime_error so callers can catch coarsely; the distinct types exist
// because the CLI maps "bad configuration" and "numerical failure" to
// different exit codes.

#include <stdexcept>
#include <string>

namespace hyperlam {

struct DomainError : std::runtime_error {
  explicit DomainError(const std::string& what) : std::runtime_error(what) {}
};

struct DegenerateError : std::runtime_error {
  explicit DegenerateError(const std::string& what) : std::runtime_error(what) {}
};

struct IterationCapExceeded : std::runtime_error {
  explicit IterationCapExceeded(const std::string& what) : std::runtime_error(what) {}
};

struct StepError : std::runtime_error {
  explicit StepError(const std::string& what) : std::runtime_error(what) {}
};

struct QuadratureError : std::runtime_error {
  explicit QuadratureError(const std::string& what) : std::runtime_error(what) {}
};

struct GridError : std::runtime_error {
  explicit GridError(const std::string& what) : std::runtime_error(what) {}
};

struct StabilityError : std::runtime_error {
  explicit StabilityError(const std::string& what) : std::runtime_error(what) {}
};

struct MassError : std::runtime_error {
  explicit MassError(const std::string& what) : std::runtime_error(what) {}
};

struct IllConditionedError : std::runtime_error {
  explicit IllConditionedError(const std::string& what) : std::runtime_error(what) {}
};

struct SupportError : std::runtime_error {
  explicit SupportError(const std::string& what) : std::runtime_error(what) {}
};

struct ConfigError : std::runtime_error {
  explicit ConfigError(const std::string& what) : std::runtime_error(what) {}
};

}  // namespace hyperlam
