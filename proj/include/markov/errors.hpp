#pragma once

#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

namespace markov {

/// Base class for all library errors.
struct Error : std::runtime_error {
  using std::runtime_error::runtime_error;
};

/// Input failed structural validation (negative mass, bad row sums, shape).
struct ValidationError : Error {
  using Error::Error;
};

/// Two objects were built over different state spaces.
struct SpaceMismatch : Error {
  using Error::Error;
};

/// The invariant distribution is not unique; carries one stationary
/// distribution per closed communicating class (extreme points of the
/// invariant simplex), stored as raw probability vectors.
struct NotUnique : Error {
  NotUnique(std::string msg, std::vector<std::vector<double>> basis_)
      : Error(std::move(msg)), basis(std::move(basis_)) {}
  std::vector<std::vector<double>> basis;
};

/// A distribution claimed to be invariant is not.
struct NotInvariant : Error {
  using Error::Error;
};

/// Support digraph is not strongly connected where the operation needs it.
struct Reducible : Error {
  using Error::Error;
};

/// The function class admits an unbounded objective.
struct UnboundedClass : Error {
  using Error::Error;
};

/// Distance function violates the triangle inequality.
struct NonMetricDistance : Error {
  using Error::Error;
};

/// Primal and dual optima disagree beyond tolerance (solver defect).
struct DualityGap : Error {
  using Error::Error;
};

/// Curvature lower bound is nonpositive, the contraction bound is vacuous.
struct NoContraction : Error {
  using Error::Error;
};

/// The candidate small set has no common overlap at the requested lag.
struct NoOverlap : Error {
  using Error::Error;
};

/// Drift inequality cannot be certified with lambda < 1, or the minimum of
/// the drift function lies outside the small set.
struct DriftFailure : Error {
  using Error::Error;
};

/// Splitting residual kernel has negative mass.
struct InvalidCertificate : Error {
  using Error::Error;
};

/// Distance curve hit zero or has too few usable points for a fit.
struct DegenerateCurve : Error {
  using Error::Error;
};

/// Function is constant along the trace, autocorrelations are undefined.
struct DegenerateVariance : Error {
  using Error::Error;
};

}  // namespace markov
