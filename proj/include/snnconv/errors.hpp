#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace snnconv {

class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Malformed graph: cycles, dangling references, inconsistent shapes.
class StructuralError : public Error {
 public:
  using Error::Error;
};

class ShapeError : public Error {
 public:
  using Error::Error;
};

// The graph is well formed but breaks a convertibility rule (bias, max-pool, ...).
class ConstraintError : public Error {
 public:
  using Error::Error;
};

class ArgumentError : public Error {
 public:
  using Error::Error;
};

class ConfigError : public Error {
 public:
  using Error::Error;
};

// Spiking simulation requested before every spiking layer has a threshold.
class ConversionIncompleteError : public Error {
 public:
  using Error::Error;
};

// A spiking layer never received positive input while balancing.
class DegenerateLayerError : public Error {
 public:
  DegenerateLayerError(std::string layer, const std::string& what)
      : Error(what), layer_(std::move(layer)) {}
  const std::string& layer() const noexcept { return layer_; }

 private:
  std::string layer_;
};

class TrainingDivergedError : public Error {
 public:
  TrainingDivergedError(int epoch, const std::string& what) : Error(what), epoch_(epoch) {}
  int epoch() const noexcept { return epoch_; }

 private:
  int epoch_;
};

class IoError : public Error {
 public:
  using Error::Error;
};

// Model file parse failures.
class ParseError : public Error {
 public:
  using Error::Error;
};

class VersionMismatchError : public ParseError {
 public:
  using ParseError::ParseError;
};

class TruncatedBlobError : public ParseError {
 public:
  TruncatedBlobError(std::size_t expected, std::size_t actual)
      : ParseError("weight blob truncated: expected " + std::to_string(expected) +
                   " bytes, found " + std::to_string(actual)),
        expected_(expected),
        actual_(actual) {}
  std::size_t expected() const noexcept { return expected_; }
  std::size_t actual() const noexcept { return actual_; }

 private:
  std::size_t expected_;
  std::size_t actual_;
};

class ManifestMismatchError : public ParseError {
 public:
  using ParseError::ParseError;
};

}  // namespace snnconv
