#pragma once

#include <Eigen/Dense>

#include <cstdint>
#include <random>
#include <span>
#include <stdexcept>
#include <string>

namespace epifeed {

using Vec = Eigen::VectorXd;
using Mat = Eigen::MatrixXd;
using Rng = std::mt19937_64;

class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Shape or index mismatch between objects that must agree.
class StructuralError : public Error {
 public:
  using Error::Error;
};

class DomainError : public Error {
 public:
  using Error::Error;
};

// A configured enumeration cap or memory budget would be exceeded.
class SizeError : public Error {
 public:
  using Error::Error;
};

class ConvergenceError : public Error {
 public:
  ConvergenceError(const std::string& what, double grad_norm)
      : Error(what), grad_norm_(grad_norm) {}
  double grad_norm() const { return grad_norm_; }

 private:
  double grad_norm_;
};

class TerminationError : public Error {
 public:
  TerminationError(const std::string& what, double lambda_min)
      : Error(what), lambda_min_(lambda_min) {}
  double lambda_min() const { return lambda_min_; }

 private:
  double lambda_min_;
};

class ConfigError : public Error {
 public:
  using Error::Error;
};

/// Uniform double in [0, 1) built from the top 53 bits of one draw, so that
/// sequences are identical across standard library implementations.
double uniform01(Rng& rng);

/// Draws an index from an unnormalized-safe probability vector (assumed to sum
/// to one). Falls back to the last positive entry on rounding overshoot.
int sample_index(std::span<const double> probs, Rng& rng);

bool bernoulli(double p, Rng& rng);

/// splitmix64 finalizer; used to derive independent per-episode / per-worker
/// seeds from a master seed.
std::uint64_t mix_seed(std::uint64_t a, std::uint64_t b);

}  // namespace epifeed
