#pragma once

#include <stdexcept>
#include <string>

namespace sfr {

// Error categories map onto CLI exit codes: config 2, data 3, numerical 4.
struct ConfigError : std::runtime_error {
  using std::runtime_error::runtime_error;
};
struct DataError : std::runtime_error {
  using std::runtime_error::runtime_error;
};
struct NumericalError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct DimensionMismatch : ConfigError {
  using ConfigError::ConfigError;
};
struct InvalidM : ConfigError {
  using ConfigError::ConfigError;
};
struct UnsupportedMethod : ConfigError {
  using ConfigError::ConfigError;
};
struct LengthMismatch : ConfigError {
  using ConfigError::ConfigError;
};

struct InvalidLabel : DataError {
  using DataError::DataError;
};
struct ParseError : DataError {
  using DataError::DataError;
};
struct MissingLabelColumn : DataError {
  using DataError::DataError;
};
struct EmptySplit : DataError {
  using DataError::DataError;
};

struct NotPositiveDefinite : NumericalError {
  using NumericalError::NumericalError;
};
struct NonFiniteLoss : NumericalError {
  using NumericalError::NumericalError;
};

}  // namespace sfr
