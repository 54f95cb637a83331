#pragma once

#include <Eigen/Dense>

#include <stdexcept>
#include <string>

namespace rplo {

using Mat = Eigen::MatrixXd;
using Vec = Eigen::VectorXd;
using Index = Eigen::Index;

/// Thrown when a numerical routine cannot produce a valid result
/// (factorization breakdown, non-finite values, iteration cap).
struct NumericalError : std::runtime_error {
  explicit NumericalError(const std::string& what) : std::runtime_error(what) {}
};

/// Thrown on invalid experiment configuration (maps to CLI exit code 2).
struct ConfigError : std::runtime_error {
  explicit ConfigError(const std::string& what) : std::runtime_error(what) {}
};

/// Thrown on file-system failures (maps to CLI exit code 3).
struct IoError : std::runtime_error {
  explicit IoError(const std::string& what) : std::runtime_error(what) {}
};

inline void require_shape(bool ok, const std::string& what) {
  if (!ok) throw ConfigError("shape mismatch: " + what);
}

}  // namespace rplo
