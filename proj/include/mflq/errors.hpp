#pragma once

#include <complex>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

namespace mflq {

enum class ErrorKind {
  kInvalidArgument,
  kSingularMatrix,
  kNonConvergence,
  kOverflow,
  kImaginaryAxisEigenvalue,
  kDichotomySplitFailure,
  kGraphSubspaceFailure,
  kStabilizabilityFailure,
  kStabilityCheckFailure,
  kNonPositiveR,
  kUnstableGenerator,
};

inline const char* to_string(ErrorKind kind) {
  switch (kind) {
    case ErrorKind::kInvalidArgument: return "InvalidArgument";
    case ErrorKind::kSingularMatrix: return "SingularMatrix";
    case ErrorKind::kNonConvergence: return "NonConvergence";
    case ErrorKind::kOverflow: return "Overflow";
    case ErrorKind::kImaginaryAxisEigenvalue: return "ImaginaryAxisEigenvalue";
    case ErrorKind::kDichotomySplitFailure: return "DichotomySplitFailure";
    case ErrorKind::kGraphSubspaceFailure: return "GraphSubspaceFailure";
    case ErrorKind::kStabilizabilityFailure: return "StabilizabilityFailure";
    case ErrorKind::kStabilityCheckFailure: return "StabilityCheckFailure";
    case ErrorKind::kNonPositiveR: return "NonPositiveR";
    case ErrorKind::kUnstableGenerator: return "UnstableGenerator";
  }
  return "Unknown";
}

/// Base of every failure raised by the solvers. The kind is stable and is
/// what callers (the CLI in particular) dispatch on.
class Error : public std::runtime_error {
 public:
  Error(ErrorKind kind, const std::string& what)
      : std::runtime_error(std::string(to_string(kind)) + ": " + what),
        kind_(kind) {}
  ErrorKind kind() const noexcept { return kind_; }

 private:
  ErrorKind kind_;
};

template <ErrorKind K>
class TypedError : public Error {
 public:
  explicit TypedError(const std::string& what) : Error(K, what) {}
};

using InvalidArgument = TypedError<ErrorKind::kInvalidArgument>;
using SingularMatrix = TypedError<ErrorKind::kSingularMatrix>;
using NonConvergence = TypedError<ErrorKind::kNonConvergence>;
using Overflow = TypedError<ErrorKind::kOverflow>;
using StabilizabilityFailure = TypedError<ErrorKind::kStabilizabilityFailure>;
using StabilityCheckFailure = TypedError<ErrorKind::kStabilityCheckFailure>;
using NonPositiveR = TypedError<ErrorKind::kNonPositiveR>;
using UnstableGenerator = TypedError<ErrorKind::kUnstableGenerator>;

/// Some eigenvalue lies within the axis tolerance of the imaginary axis, so
/// no exponential dichotomy exists.
class ImaginaryAxisEigenvalue : public Error {
 public:
  ImaginaryAxisEigenvalue(std::vector<std::complex<double>> offending,
                          double axis_tol)
      : Error(ErrorKind::kImaginaryAxisEigenvalue,
              describe(offending, axis_tol)),
        offending_(std::move(offending)),
        axis_tol_(axis_tol) {}

  const std::vector<std::complex<double>>& eigenvalues() const {
    return offending_;
  }
  double axis_tol() const { return axis_tol_; }

 private:
  static std::string describe(const std::vector<std::complex<double>>& ev,
                              double tol) {
    std::ostringstream os;
    os.precision(12);
    os << "eigenvalue(s) on the imaginary axis (|Re| <= " << tol << "):";
    for (const auto& z : ev) os << " (" << z.real() << (z.imag() < 0 ? "" : "+")
                                << z.imag() << "i)";
    return os.str();
  }

  std::vector<std::complex<double>> offending_;
  double axis_tol_;
};

/// The stable/antistable split is not n/n.
class DichotomySplitFailure : public Error {
 public:
  DichotomySplitFailure(long k_stable, long n)
      : Error(ErrorKind::kDichotomySplitFailure,
              std::to_string(k_stable) + " stable eigenvalues, expected " +
                  std::to_string(n)),
        k_stable_(k_stable) {}
  long k_stable() const { return k_stable_; }

 private:
  long k_stable_;
};

/// The stable invariant subspace is not a graph subspace: the leading block
/// of its basis is numerically singular.
class GraphSubspaceFailure : public Error {
 public:
  explicit GraphSubspaceFailure(double condition)
      : Error(ErrorKind::kGraphSubspaceFailure,
              "leading block of the stable basis has condition estimate " +
                  fmt(condition)),
        condition_(condition) {}
  double condition() const { return condition_; }

 private:
  static std::string fmt(double v) {
    std::ostringstream os;
    os.precision(6);
    os << v;
    return os.str();
  }
  double condition_;
};

}  // namespace mflq
