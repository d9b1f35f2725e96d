#pragma once

#include <stdexcept>
#include <string>

namespace strata {

// Error hierarchy mapped onto CLI exit codes: config=2, data=3, solver=4.
struct Error : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct ConfigError : Error {
  using Error::Error;
};

struct DataError : Error {
  using Error::Error;
};

struct SolverError : Error {
  using Error::Error;
};

}  // namespace strata
