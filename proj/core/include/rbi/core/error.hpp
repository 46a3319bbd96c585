#pragma once

#include <stdexcept>
#include <string>

namespace rbi {

// Error classes map onto distinct process exit codes in the CLI.
enum class ErrorKind {
  kConfig,     // bad configuration key/value, bad hyperparameter
  kData,       // unreadable/invalid inputs, manifests, annotations
  kNumeric,    // NaN/Inf during optimisation, undefined metrics
  kSynthesis,  // reconstructor/adapter failures
  kShape,      // tensor/raster shape contract violations
  kParameter,  // out-of-range operation parameters
};

class Error : public std::runtime_error {
 public:
  Error(ErrorKind kind, const std::string& what)
      : std::runtime_error(what), kind_(kind) {}

  ErrorKind kind() const noexcept { return kind_; }

 private:
  ErrorKind kind_;
};

class ConfigError : public Error {
 public:
  explicit ConfigError(const std::string& what) : Error(ErrorKind::kConfig, what) {}
};

class DataError : public Error {
 public:
  explicit DataError(const std::string& what) : Error(ErrorKind::kData, what) {}
};

class NumericError : public Error {
 public:
  explicit NumericError(const std::string& what) : Error(ErrorKind::kNumeric, what) {}
};

class SynthesisError : public Error {
 public:
  explicit SynthesisError(const std::string& what) : Error(ErrorKind::kSynthesis, what) {}
};

class ShapeError : public Error {
 public:
  explicit ShapeError(const std::string& what) : Error(ErrorKind::kShape, what) {}
};

class ParameterError : public Error {
 public:
  explicit ParameterError(const std::string& what) : Error(ErrorKind::kParameter, what) {}
};

}  // namespace rbi
