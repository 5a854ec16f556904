#pragma once

#include <Eigen/Dense>

#include <stdexcept>
#include <string>

namespace reflectopt {

template <typename Scalar> using VectorX = Eigen::Matrix<Scalar, Eigen::Dynamic, 1>;
template <typename Scalar> using MatrixX = Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic>;

using Vector = VectorX<double>;
using Matrix = MatrixX<double>;
using Index = Eigen::Index;

// Error taxonomy. The CLI maps these onto exit codes.
struct Error : std::runtime_error
{
  using std::runtime_error::runtime_error;
};

struct ArgumentError : Error
{
  using Error::Error;
};

struct GeometryError : Error
{
  using Error::Error;
};

struct NumericError : Error
{
  using Error::Error;
};

struct CapabilityError : Error
{
  using Error::Error;
};

struct ConfigError : Error
{
  using Error::Error;
};

struct SimulationError : Error
{
  SimulationError(std::string const &what, long long step)
    : Error(what + " (step " + std::to_string(step) + ")"), step(step)
  {
  }
  long long step;
};

struct TimeoutError : Error
{
  using Error::Error;
};

inline void require_dimension(Index expected, Index got, char const *what)
{
  if (expected != got) {
    throw ArgumentError(std::string(what) + ": dimension mismatch (expected " + std::to_string(expected) +
                        ", got " + std::to_string(got) + ")");
  }
}

} // namespace reflectopt
