#pragma once

// Shared aliases, error taxonomy and small numeric helpers used across the
// library.  Everything downstream assumes dense double-precision matrices.

#include <Eigen/Dense>

#include <cstdint>
#include <cstdlib>
#include <iostream>
#include <sstream>
#include <stdexcept>
#include <string>
#include <string_view>

namespace delaylqr {

using Matrix = Eigen::MatrixXd;
using Vector = Eigen::VectorXd;

// ---------------------------------------------------------------------------
// Errors.  Every failure the library can raise derives from Error so callers
// can distinguish "bad input / bad state" from genuine std::logic_error bugs.
// ---------------------------------------------------------------------------

class Error : public std::runtime_error {
 public:
  explicit Error(const std::string& msg) : std::runtime_error(msg) {}
};

// Riccati iteration hit its cap, or the closed loop it produced is unstable.
class NonConvergent : public Error {
 public:
  using Error::Error;
};

// A matrix that must be (semi)definite failed its eigenvalue check.
class IndefiniteInput : public Error {
 public:
  using Error::Error;
};

// NaN/Inf showed up where finite data is required.
class NonFinite : public Error {
 public:
  using Error::Error;
};

// R + B'PB (or a stage analogue) was not invertible; impossible for valid
// inputs, so it signals corrupted data rather than a modelling choice.
class SingularInnerMatrix : public Error {
 public:
  using Error::Error;
};

class DimensionMismatch : public Error {
 public:
  using Error::Error;
};

class UnknownKind : public Error {
 public:
  using Error::Error;
};

// The prediction-quality schedule is shorter than the horizon the pattern
// actually needs.
class EpsTooShort : public Error {
 public:
  using Error::Error;
};

// A controller produced a non-finite action.
class ControllerFailure : public Error {
 public:
  using Error::Error;
};

// A controller asked its view for a prediction slot that does not exist.
class MissingPrediction : public Error {
 public:
  using Error::Error;
};

class LengthMismatch : public Error {
 public:
  using Error::Error;
};

// A scalar-only routine was handed a multivariable system.
class NotScalar : public Error {
 public:
  using Error::Error;
};

// The stacked offline solve would exceed its size ceiling.
class TooLarge : public Error {
 public:
  using Error::Error;
};

// The quadratic-gap denominator is numerically zero or negative, so no
// finite competitive bound exists for this system.
class DegenerateDenominator : public Error {
 public:
  using Error::Error;
};

// ---------------------------------------------------------------------------
// Numeric helpers.
// ---------------------------------------------------------------------------

inline bool all_finite(const Matrix& m) { return m.allFinite(); }

inline void check_finite(const Matrix& m, const char* name) {
  if (!m.allFinite()) {
    throw NonFinite(std::string(name) + " contains NaN or Inf");
  }
}

inline void check_square(const Matrix& m, const char* name) {
  if (m.rows() != m.cols()) {
    std::ostringstream os;
    os << name << " must be square, got " << m.rows() << "x" << m.cols();
    throw DimensionMismatch(os.str());
  }
}

// Largest singular value.  Small dense matrices only, so SVD cost is noise.
inline double operator_norm(const Matrix& m) {
  if (m.size() == 0) return 0.0;
  return Eigen::JacobiSVD<Matrix>(m).singularValues()(0);
}

// Eigenvalues of the symmetrised matrix; input is expected to be symmetric
// up to roundoff.
inline Vector symmetric_eigenvalues(const Matrix& m) {
  check_square(m, "matrix");
  Matrix sym = 0.5 * (m + m.transpose());
  Eigen::SelfAdjointEigenSolver<Matrix> es(sym, Eigen::EigenvaluesOnly);
  if (es.info() != Eigen::Success) {
    throw NonConvergent("symmetric eigenvalue solve failed");
  }
  return es.eigenvalues();
}

inline double min_symmetric_eigenvalue(const Matrix& m) {
  return symmetric_eigenvalues(m).minCoeff();
}

// Definiteness checks with a relative tolerance: a matrix passes the PSD test
// when its smallest eigenvalue exceeds -tol * scale, and the PD test when it
// exceeds +tol * scale, where scale = max(1, largest |eigenvalue|).
inline constexpr double kDefinitenessTol = 1e-10;

inline bool is_psd(const Matrix& m, double tol = kDefinitenessTol) {
  Vector ev = symmetric_eigenvalues(m);
  double scale = std::max(1.0, ev.cwiseAbs().maxCoeff());
  return ev.minCoeff() >= -tol * scale;
}

inline bool is_pd(const Matrix& m, double tol = kDefinitenessTol) {
  Vector ev = symmetric_eigenvalues(m);
  double scale = std::max(1.0, ev.cwiseAbs().maxCoeff());
  return ev.minCoeff() > tol * scale;
}

// ---------------------------------------------------------------------------
// FNV-1a, used to fingerprint canonicalised configs in output metadata.
// ---------------------------------------------------------------------------

inline std::uint64_t fnv1a64(std::string_view bytes) {
  std::uint64_t h = 1469598103934665603ULL;
  for (unsigned char c : bytes) {
    h ^= static_cast<std::uint64_t>(c);
    h *= 1099511628211ULL;
  }
  return h;
}

// ---------------------------------------------------------------------------
// Logging.  DELAYLQR_LOG=info|debug enables progress chatter on stderr;
// anything else (or unset) keeps the library silent.
// ---------------------------------------------------------------------------

enum class LogLevel { kOff = 0, kInfo = 1, kDebug = 2 };

inline LogLevel log_level() {
  static const LogLevel level = [] {
    const char* env = std::getenv("DELAYLQR_LOG");
    if (env == nullptr) return LogLevel::kOff;
    std::string_view v(env);
    if (v == "info") return LogLevel::kInfo;
    if (v == "debug") return LogLevel::kDebug;
    return LogLevel::kOff;
  }();
  return level;
}

inline void log_info(const std::string& msg) {
  if (log_level() >= LogLevel::kInfo) std::cerr << "[delaylqr] " << msg << "\n";
}

inline void log_debug(const std::string& msg) {
  if (log_level() >= LogLevel::kDebug) {
    std::cerr << "[delaylqr:debug] " << msg << "\n";
  }
}

}  // namespace delaylqr
