#pragma once

// Semi-discrete test problems u' = f(u) with exact Jacobians and named affine
// linearization strategies f_eps(ybar, u) = M(ybar) u + g(ybar).

#include "pdirk/core.hpp"
#include "pdirk/spectral.hpp"

#include <cmath>
#include <functional>
#include <map>
#include <memory>
#include <numbers>
#include <optional>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

namespace pdirk {

/// Strategy name reserved for f_eps := f (no linearization).
inline constexpr std::string_view kExactStrategy = "exact";

/// f_eps(ybar, .) frozen at an anchor state.
struct AffineOperator {
  Matrix M;
  Vector g;
  Vector anchor;
  std::string strategy_name;

  Vector apply(const Vector& u) const { return M * u + g; }
};

using RhsFunction = std::function<Vector(const Vector&)>;
using JacobianFunction = std::function<Matrix(const Vector&)>;
using StrategyFactory = std::function<AffineOperator(const Vector& anchor)>;

struct ProblemInstance {
  std::string name;
  std::optional<PeriodicGrid> grid;
  int dimension = 0;
  RhsFunction rhs;
  JacobianFunction jacobian;
  std::map<std::string, StrategyFactory, std::less<>> strategies;
  Vector initial_condition;
  double default_tf = 1.0;
  /// Names of the stacked state blocks ("u", or "eta" and "mu").
  std::vector<std::string> components;

  /// Affine strategies plus "exact".
  bool has_strategy(std::string_view s) const { return s == kExactStrategy || strategies.count(s) > 0; }

  std::vector<std::string> strategy_names() const {
    std::vector<std::string> out;
    for (const auto& [k, v] : strategies) out.push_back(k);
    out.emplace_back(kExactStrategy);
    return out;
  }

  /// Builds f_eps at the anchor. "exact" is not affine and is rejected here.
  AffineOperator linearize(std::string_view strategy, const Vector& anchor) const {
    const auto it = strategies.find(strategy);
    if (it == strategies.end()) {
      std::string msg = "problem '" + name + "' has no affine strategy '" + std::string(strategy) + "'; available:";
      for (const auto& s : strategy_names()) msg += " " + s;
      throw Error(msg);
    }
    return it->second(anchor);
  }
};

namespace detail {

inline AffineOperator linear_operator(Matrix M, const Vector& anchor, std::string name) {
  const auto m = M.rows();
  return AffineOperator{std::move(M), Vector::Zero(m), anchor, std::move(name)};
}

/// Attaches the Taylor strategy f(ybar) + f'(ybar)(u - ybar) using the
/// problem's own rhs and Jacobian.
inline void add_taylor(ProblemInstance& p) {
  auto rhs = p.rhs;
  auto jac = p.jacobian;
  p.strategies["taylor"] = [rhs, jac](const Vector& anchor) {
    Matrix J = jac(anchor);
    Vector g = rhs(anchor) - J * anchor;
    return AffineOperator{std::move(J), std::move(g), anchor, "taylor"};
  };
}

inline void check_size(const Vector& v, int m, const char* who) {
  if (v.size() != m)
    throw Error(std::string(who) + ": state has length " + std::to_string(v.size()) + ", expected " +
                std::to_string(m));
}

}  // namespace detail

/// Inviscid Burgers, f(u) = -1/2 Dx (u*u) on [0, 2pi), u0 = 1/2 + sin(x)/4.
inline ProblemInstance burgers_problem(int n) {
  auto ops = std::make_shared<const DiffMatrices>(build_diff_matrices(PeriodicGrid(n, 0.0, 2.0 * std::numbers::pi)));
  ProblemInstance p;
  p.name = "burgers";
  p.grid = ops->grid;
  p.dimension = n;
  p.components = {"u"};
  p.default_tf = 3.5;
  p.initial_condition = (0.5 + 0.25 * ops->grid.points().array().sin()).matrix();
  p.rhs = [ops, n](const Vector& u) -> Vector {
    detail::check_size(u, n, "burgers");
    return -0.5 * (ops->Dx * u.cwiseProduct(u));
  };
  p.jacobian = [ops](const Vector& u) -> Matrix { return -(ops->Dx * u.asDiagonal()); };
  p.strategies["lin1"] = [ops](const Vector& y) {
    return detail::linear_operator(-0.5 * (ops->Dx * y.asDiagonal()), y, "lin1");
  };
  p.strategies["lin2"] = [ops](const Vector& y) {
    return detail::linear_operator(-(y.asDiagonal() * ops->Dx), y, "lin2");
  };
  detail::add_taylor(p);
  return p;
}

/// Shallow water in conservative variables y = (eta, mu = eta u), stacked
/// into a 2n vector: eta' = -Dx mu, mu' = -Dx (mu^2/eta + eta^2/2).
inline ProblemInstance shallow_water_problem(int n, double tf = 1.0) {
  auto ops = std::make_shared<const DiffMatrices>(build_diff_matrices(PeriodicGrid(n, 0.0, 2.0 * std::numbers::pi)));
  ProblemInstance p;
  p.name = "shallow-water";
  p.grid = ops->grid;
  p.dimension = 2 * n;
  p.components = {"eta", "mu"};
  p.default_tf = tf;
  p.initial_condition = Vector::Zero(2 * n);
  p.initial_condition.head(n) = (ops->grid.points().array().sin() / 10.0 + 1.0).matrix();

  // diag(ybar_eta) and diag(ybar_mu / ybar_eta) entries, with the vacuum guard.
  auto split = [n](const Vector& y) {
    detail::check_size(y, 2 * n, "shallow-water");
    Vector eta = y.head(n);
    if ((eta.array().abs() < 1e-13).any()) throw Error("vacuum state in linearization");
    Vector vel = y.tail(n).cwiseQuotient(eta);
    return std::make_pair(std::move(eta), std::move(vel));
  };

  p.rhs = [ops, n](const Vector& y) -> Vector {
    detail::check_size(y, 2 * n, "shallow-water");
    const Vector eta = y.head(n);
    const Vector mu = y.tail(n);
    Vector out(2 * n);
    out.head(n) = -(ops->Dx * mu);
    out.tail(n) = -(ops->Dx * (mu.cwiseProduct(mu).cwiseQuotient(eta) + 0.5 * eta.cwiseProduct(eta)));
    return out;
  };
  p.jacobian = [ops, n, split](const Vector& y) -> Matrix {
    const auto [eta, vel] = split(y);
    Matrix J = Matrix::Zero(2 * n, 2 * n);
    J.topRightCorner(n, n) = -ops->Dx;
    J.bottomLeftCorner(n, n) = ops->Dx * (vel.cwiseProduct(vel) - eta).asDiagonal();
    J.bottomRightCorner(n, n) = -2.0 * (ops->Dx * vel.asDiagonal());
    return J;
  };
  p.strategies["lin1"] = [ops, n, split](const Vector& y) {
    const auto [eta, vel] = split(y);
    Matrix M = Matrix::Zero(2 * n, 2 * n);
    M.topRightCorner(n, n) = -ops->Dx;
    M.bottomLeftCorner(n, n) = -0.5 * (ops->Dx * eta.asDiagonal());
    M.bottomRightCorner(n, n) = -(ops->Dx * vel.asDiagonal());
    return detail::linear_operator(std::move(M), y, "lin1");
  };
  p.strategies["lin2"] = [ops, n, split](const Vector& y) {
    const auto [eta, vel] = split(y);
    Matrix M = Matrix::Zero(2 * n, 2 * n);
    M.topRightCorner(n, n) = -ops->Dx;
    M.bottomLeftCorner(n, n) = -((eta - vel.cwiseProduct(vel)).asDiagonal() * ops->Dx);
    M.bottomRightCorner(n, n) = -2.0 * (vel.asDiagonal() * ops->Dx);
    return detail::linear_operator(std::move(M), y, "lin2");
  };
  detail::add_taylor(p);
  return p;
}

/// Porous medium u_t = (u^3)_xx on [-pi, pi), u0 = cos(x)/2 + 1/2.
inline ProblemInstance porous_medium_problem(int n) {
  auto ops = std::make_shared<const DiffMatrices>(
      build_diff_matrices(PeriodicGrid(n, -std::numbers::pi, std::numbers::pi)));
  ProblemInstance p;
  p.name = "porous-medium";
  p.grid = ops->grid;
  p.dimension = n;
  p.components = {"u"};
  p.default_tf = 0.5;
  p.initial_condition = (0.5 * ops->grid.points().array().cos() + 0.5).matrix();
  p.rhs = [ops, n](const Vector& u) -> Vector {
    detail::check_size(u, n, "porous-medium");
    return ops->Dxx * u.array().cube().matrix();
  };
  p.jacobian = [ops](const Vector& u) -> Matrix { return 3.0 * (ops->Dxx * u.cwiseProduct(u).asDiagonal()); };
  p.strategies["lin1"] = [ops](const Vector& y) {
    return detail::linear_operator(ops->Dxx * y.cwiseProduct(y).asDiagonal(), y, "lin1");
  };
  p.strategies["lin2a"] = [ops](const Vector& y) {
    return detail::linear_operator(3.0 * (ops->Dx * y.cwiseProduct(y).asDiagonal() * ops->Dx), y, "lin2a");
  };
  p.strategies["lin2b"] = [ops](const Vector& y) {
    const Vector slope = y.cwiseProduct(ops->Dx * y);
    Matrix M = 6.0 * (slope.asDiagonal() * ops->Dx) + 3.0 * (y.cwiseProduct(y).asDiagonal() * ops->Dxx);
    return detail::linear_operator(std::move(M), y, "lin2b");
  };
  detail::add_taylor(p);
  return p;
}

/// Scalar contractive ODE u' = -u^3, u(0) = 1.
inline ProblemInstance scalar_contractive_problem() {
  ProblemInstance p;
  p.name = "scalar";
  p.dimension = 1;
  p.components = {"u"};
  p.default_tf = 2.0;
  p.initial_condition = Vector::Ones(1);
  p.rhs = [](const Vector& u) -> Vector {
    detail::check_size(u, 1, "scalar");
    return -u.array().cube().matrix();
  };
  p.jacobian = [](const Vector& u) -> Matrix { return Matrix::Constant(1, 1, -3.0 * u(0) * u(0)); };
  p.strategies["lin1"] = [](const Vector& y) {
    return detail::linear_operator(Matrix::Constant(1, 1, -y(0) * y(0)), y, "lin1");
  };
  detail::add_taylor(p);
  return p;
}

inline const std::vector<std::string>& problem_names() {
  static const std::vector<std::string> names{"burgers", "shallow-water", "porous-medium", "scalar"};
  return names;
}

/// Selection by name; n is ignored for "scalar".
inline ProblemInstance make_problem(std::string_view name, int n) {
  if (name == "burgers") return burgers_problem(n);
  if (name == "shallow-water") return shallow_water_problem(n);
  if (name == "porous-medium") return porous_medium_problem(n);
  if (name == "scalar") return scalar_contractive_problem();
  throw Error("unknown problem '" + std::string(name) + "'; available: burgers shallow-water porous-medium scalar");
}

struct TauProbe {
  double tau_norm = 0.0;
  double tau_u_norm = 0.0;
  ConsistencyClass classification = ConsistencyClass::None;
};

/// tau = |M u + g - f(u)|_inf and tau_u = max|M - J(u)| for f_eps anchored at
/// u itself, classified against tol = rel_tol * max|J(u)|.
inline TauProbe tau_consistency_probe(const ProblemInstance& p, std::string_view strategy, const Vector& u,
                                      double rel_tol = 1e-9) {
  TauProbe out;
  if (strategy == kExactStrategy) {
    out.classification = ConsistencyClass::TauAndDerivZero;
    return out;
  }
  const AffineOperator op = p.linearize(strategy, u);
  const Matrix J = p.jacobian(u);
  out.tau_norm = max_norm(op.apply(u) - p.rhs(u));
  out.tau_u_norm = max_abs_entry(op.M - J);
  const double j_norm = max_abs_entry(J);
  const double tol = rel_tol * (j_norm > 0.0 ? j_norm : 1.0);
  if (out.tau_norm < tol)
    out.classification = out.tau_u_norm < tol ? ConsistencyClass::TauAndDerivZero : ConsistencyClass::TauZero;
  return out;
}

}  // namespace pdirk
