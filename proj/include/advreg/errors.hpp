#pragma once

#include <stdexcept>
#include <string>

namespace advreg {

// Base of every error raised by the library. `kind()` is a short stable tag
// that the command-line front end prints in its machine-parsable reason line.
class Error : public std::runtime_error {
 public:
  Error(std::string kind, const std::string& what)
      : std::runtime_error(what), kind_(std::move(kind)) {}
  const std::string& kind() const noexcept { return kind_; }

 private:
  std::string kind_;
};

struct InvalidInputError : Error {
  explicit InvalidInputError(const std::string& w) : Error("invalid_input", w) {}
};
struct DimensionError : Error {
  explicit DimensionError(const std::string& w) : Error("dimension", w) {}
};
struct FormatError : Error {
  explicit FormatError(const std::string& w) : Error("format", w) {}
};
struct ConsistencyError : Error {
  explicit ConsistencyError(const std::string& w) : Error("consistency", w) {}
};
struct ConfigError : Error {
  explicit ConfigError(const std::string& w) : Error("config", w) {}
};
struct DomainError : Error {
  explicit DomainError(const std::string& w) : Error("domain", w) {}
};
struct BoundsError : Error {
  explicit BoundsError(const std::string& w) : Error("bounds", w) {}
};
struct ParameterError : Error {
  explicit ParameterError(const std::string& w) : Error("parameter", w) {}
};
struct ValidityError : Error {
  explicit ValidityError(const std::string& w) : Error("validity", w) {}
};
struct EstimationError : Error {
  explicit EstimationError(const std::string& w) : Error("estimation", w) {}
};
struct DivergenceError : Error {
  explicit DivergenceError(const std::string& w) : Error("divergence", w) {}
};
struct IoError : Error {
  explicit IoError(const std::string& w) : Error("io", w) {}
};

}  // namespace advreg
