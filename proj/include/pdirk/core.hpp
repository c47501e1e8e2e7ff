#pragma once

// Shared aliases, enums and error types for the pdirk headers.

#include <Eigen/Dense>

#include <stdexcept>
#include <string>
#include <string_view>

namespace pdirk {

using Matrix = Eigen::MatrixXd;
using Vector = Eigen::VectorXd;

/// Weakest assumption on the perturbation error tau = f_eps - f under which a
/// condition (or an order claim) holds. Ordered: None < TauZero < TauAndDerivZero.
enum class ConsistencyClass { None = 0, TauZero = 1, TauAndDerivZero = 2 };

inline std::string_view to_string(ConsistencyClass c) {
  switch (c) {
    case ConsistencyClass::None: return "None";
    case ConsistencyClass::TauZero: return "TauZero";
    case ConsistencyClass::TauAndDerivZero: return "TauAndDerivZero";
  }
  return "None";
}

class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Thrown when a trajectory leaves the finite/bounded regime.
class BlowUpError : public Error {
 public:
  BlowUpError(const std::string& what, double time_reached)
      : Error(what), time_reached_(time_reached) {}
  double time_reached() const noexcept { return time_reached_; }

 private:
  double time_reached_;
};

class SingularStageError : public Error {
 public:
  SingularStageError(const std::string& what, int stage) : Error(what), stage_(stage) {}
  int stage() const noexcept { return stage_; }

 private:
  int stage_;
};

class NewtonFailure : public Error {
 public:
  using Error::Error;
};

inline ConsistencyClass parse_consistency_class(std::string_view s) {
  if (s == "None" || s == "none") return ConsistencyClass::None;
  if (s == "TauZero" || s == "tauzero" || s == "tau0") return ConsistencyClass::TauZero;
  if (s == "TauAndDerivZero" || s == "tauandderivzero" || s == "tau1")
    return ConsistencyClass::TauAndDerivZero;
  throw Error("unknown consistency class '" + std::string(s) +
              "' (expected None, TauZero, TauAndDerivZero)");
}

inline double max_norm(const Vector& v) { return v.size() == 0 ? 0.0 : v.lpNorm<Eigen::Infinity>(); }

/// Largest absolute entry.
inline double max_abs_entry(const Matrix& m) { return m.size() == 0 ? 0.0 : m.cwiseAbs().maxCoeff(); }

}  // namespace pdirk
