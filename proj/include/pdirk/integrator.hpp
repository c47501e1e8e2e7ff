#pragma once

// Perturbed DIRK time stepping
//
//   u(i)   = u_n + dt sum_j [ atilde_ij f(u(j)) + aeps_ij f_eps,j(u(j)) ]
//   u_n+1  = u_n + dt sum_i b_i f(u(i))
//
// where f_eps,j is the affine operator built for stage j from its anchor.
// Also provides the unperturbed references: explicit RK4 and a DIRK whose
// stages are solved by full Newton on f.

#include "pdirk/core.hpp"
#include "pdirk/problems.hpp"
#include "pdirk/tableau.hpp"

#include <algorithm>
#include <cmath>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace pdirk {

/// Anchor ybar used to build f_eps for stage i.
enum class AnchorPolicy {
  PreviousStep,   ///< ybar = u_n for every stage
  PreviousStage,  ///< ybar = u(i-1); u_n for the first stage
};

inline std::string_view to_string(AnchorPolicy a) { return a == AnchorPolicy::PreviousStep ? "un" : "prev"; }

inline AnchorPolicy parse_anchor(std::string_view s) {
  if (s == "un" || s == "PreviousStep") return AnchorPolicy::PreviousStep;
  if (s == "prev" || s == "PreviousStage") return AnchorPolicy::PreviousStage;
  throw Error("unknown anchor '" + std::string(s) + "' (expected un or prev)");
}

struct SolverStats {
  long steps = 0;
  long linear_solves = 0;
  long factorizations = 0;
  long newton_iters = 0;
  /// Largest stage-equation residual relative to (1 + |u(i)|_inf).
  double max_residual = 0.0;

  void merge(const SolverStats& o) {
    steps += o.steps;
    linear_solves += o.linear_solves;
    factorizations += o.factorizations;
    newton_iters += o.newton_iters;
    max_residual = std::max(max_residual, o.max_residual);
  }
};

struct StepRecord {
  double time = 0.0;
  Vector state;
  std::vector<Vector> stage_states;
  SolverStats solver_stats;
};

struct IntegratorOptions {
  double newton_rel_tol = 1e-12;
  int newton_max_iter = 50;
  double blowup_threshold = 1e8;
  /// Smallest reciprocal condition estimate accepted for a stage matrix.
  double min_rcond = 1e-15;
  bool retain_stages = false;
};

struct IntegrationResult {
  Vector final_state;
  double dt = 0.0;
  long steps = 0;
  SolverStats stats;
};

/// N = max(1, round(t_final / dt)); the returned step hits t_final exactly.
inline long step_count(double t_final, double dt) {
  if (!(dt > 0.0)) throw Error("dt must be positive");
  return std::max(1L, std::lround(t_final / dt));
}

namespace detail {

inline void check_finite(const Vector& u, double time, const IntegratorOptions& opts, const char* where) {
  if (!u.allFinite() || max_norm(u) > opts.blowup_threshold)
    throw BlowUpError(std::string("solution blew up (") + where + ") after t = " + std::to_string(time), time);
}

inline Eigen::PartialPivLU<Matrix> factor_stage_matrix(const Matrix& S, int stage, const IntegratorOptions& opts) {
  Eigen::PartialPivLU<Matrix> lu(S);
  const double rc = lu.rcond();
  if (!(rc > opts.min_rcond))
    throw SingularStageError("singular stage matrix at stage " + std::to_string(stage + 1), stage);
  return lu;
}

/// Solves u - r - dt*cf*f(u) - dt*cm*(M u + g) = 0 by Newton started at r.
/// M may be empty when cm == 0.
inline Vector newton_stage_solve(const ProblemInstance& p, const Vector& r, double dt, double cf, double cm,
                                 const AffineOperator* op, int stage, const IntegratorOptions& opts,
                                 SolverStats& stats) {
  const auto m = r.size();
  const Matrix I = Matrix::Identity(m, m);
  Vector u = r;
  const double tol = opts.newton_rel_tol * (1.0 + max_norm(r));
  auto residual = [&](const Vector& x) {
    Vector G = x - r - (dt * cf) * p.rhs(x);
    if (cm != 0.0) G -= (dt * cm) * op->apply(x);
    return G;
  };
  Vector G = residual(u);
  for (int it = 0; it < opts.newton_max_iter; ++it) {
    if (!G.allFinite()) break;
    if (max_norm(G) <= tol) return u;
    Matrix S = I - (dt * cf) * p.jacobian(u);
    if (cm != 0.0) S -= (dt * cm) * op->M;
    const auto lu = factor_stage_matrix(S, stage, opts);
    ++stats.factorizations;
    ++stats.linear_solves;
    ++stats.newton_iters;
    const Vector delta = lu.solve(-G);
    u += delta;
    G = residual(u);
    if (max_norm(delta) <= tol && G.allFinite()) return u;
  }
  throw NewtonFailure("Newton did not converge at stage " + std::to_string(stage + 1) + " (|G| = " +
                      std::to_string(max_norm(G)) + ")");
}

}  // namespace detail

/// One step of the perturbed DIRK method. With strategy "exact" f_eps := f
/// and each stage is solved by Newton on the full nonlinear equation.
inline StepRecord perturbed_dirk_step(const PerturbedTableau& pt, const ProblemInstance& p, std::string_view strategy,
                                      AnchorPolicy policy, const Vector& u_n, double dt, double t_n = 0.0,
                                      const IntegratorOptions& opts = {}) {
  if (!(dt >= 0.0)) throw Error("dt must be non-negative");
  if (!p.has_strategy(strategy)) p.linearize(strategy, u_n);  // throws with the list of strategies
  const bool exact = strategy == kExactStrategy;
  const int s = pt.stages();
  const Matrix& E = pt.Aeps();
  const Matrix At = pt.Atilde();
  const Vector& b = pt.b();
  const auto m = u_n.size();

  StepRecord rec;
  rec.solver_stats.steps = 1;
  std::vector<Vector> stage(s), f_true(s), f_eps(s);
  std::optional<AffineOperator> op;
  // Factorization of (I - dt*aeps_ii*M) reused while the operator and the
  // diagonal coefficient stay the same.
  std::optional<Eigen::PartialPivLU<Matrix>> lu;
  double lu_coeff = 0.0;

  for (int i = 0; i < s; ++i) {
    Vector r = u_n;
    for (int j = 0; j < i; ++j) {
      if (At(i, j) != 0.0) r += (dt * At(i, j)) * f_true[j];
      if (E(i, j) != 0.0) r += (dt * E(i, j)) * f_eps[j];
    }
    const double ed = E(i, i);
    const double td = At(i, i);

    if (exact) {
      const double cf = ed + td;
      stage[i] = cf == 0.0 ? r : detail::newton_stage_solve(p, r, dt, cf, 0.0, nullptr, i, opts, rec.solver_stats);
      f_true[i] = p.rhs(stage[i]);
      f_eps[i] = f_true[i];
      const double res = max_norm(stage[i] - r - (dt * cf) * f_true[i]);
      rec.solver_stats.max_residual = std::max(rec.solver_stats.max_residual, res / (1.0 + max_norm(stage[i])));
    } else {
      const bool rebuild = !op || policy == AnchorPolicy::PreviousStage;
      if (rebuild) {
        op = p.linearize(strategy, i == 0 ? u_n : stage[i - 1]);
        lu.reset();
      }
      if (td != 0.0) {
        stage[i] = detail::newton_stage_solve(p, r, dt, td, ed, &*op, i, opts, rec.solver_stats);
      } else if (ed == 0.0 || dt == 0.0) {
        stage[i] = r;
      } else {
        if (!lu || lu_coeff != ed) {
          lu = detail::factor_stage_matrix(Matrix::Identity(m, m) - (dt * ed) * op->M, i, opts);
          lu_coeff = ed;
          ++rec.solver_stats.factorizations;
        }
        stage[i] = lu->solve(r + (dt * ed) * op->g);
        ++rec.solver_stats.linear_solves;
      }
      f_eps[i] = op->apply(stage[i]);
      f_true[i] = p.rhs(stage[i]);
      Vector res = stage[i] - r - (dt * ed) * f_eps[i];
      if (td != 0.0) res -= (dt * td) * f_true[i];
      rec.solver_stats.max_residual =
          std::max(rec.solver_stats.max_residual, max_norm(res) / (1.0 + max_norm(stage[i])));
    }
    detail::check_finite(stage[i], t_n, opts, "stage");
  }

  Vector next = u_n;
  for (int i = 0; i < s; ++i)
    if (b(i) != 0.0) next += (dt * b(i)) * f_true[i];
  detail::check_finite(next, t_n, opts, "update");

  rec.time = t_n + dt;
  rec.state = std::move(next);
  if (opts.retain_stages) rec.stage_states = std::move(stage);
  return rec;
}

/// Repeated perturbed steps from u0 (the problem's initial condition when
/// omitted) to t_final with dt adjusted to t_final / N.
inline IntegrationResult integrate(const PerturbedTableau& pt, const ProblemInstance& p, std::string_view strategy,
                                   AnchorPolicy policy, double dt, double t_final,
                                   const IntegratorOptions& opts = {}, std::optional<Vector> u0 = std::nullopt) {
  if (!(t_final > 0.0)) throw Error("t_final must be positive");
  const long n_steps = step_count(t_final, dt);
  IntegrationResult out;
  out.dt = t_final / static_cast<double>(n_steps);
  out.final_state = u0 ? *u0 : p.initial_condition;
  double t = 0.0;
  for (long k = 0; k < n_steps; ++k) {
    auto rec = perturbed_dirk_step(pt, p, strategy, policy, out.final_state, out.dt, t, opts);
    out.stats.merge(rec.solver_stats);
    out.final_state = std::move(rec.state);
    t = static_cast<double>(k + 1) * out.dt;
  }
  out.steps = n_steps;
  return out;
}

/// Classical explicit RK4 on the true f.
inline Vector reference_solution(const ProblemInstance& p, double t_final, double dt_ref,
                                 const IntegratorOptions& opts = {}) {
  Vector u = p.initial_condition;
  if (t_final == 0.0) return u;
  if (!(t_final > 0.0)) throw Error("t_final must be non-negative");
  const long n_steps = step_count(t_final, dt_ref);
  const double h = t_final / static_cast<double>(n_steps);
  for (long k = 0; k < n_steps; ++k) {
    const Vector k1 = p.rhs(u);
    const Vector k2 = p.rhs(u + (0.5 * h) * k1);
    const Vector k3 = p.rhs(u + (0.5 * h) * k2);
    const Vector k4 = p.rhs(u + h * k3);
    u += (h / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
    if ((k & 63) == 63 || k + 1 == n_steps) detail::check_finite(u, k * h, opts, "reference");
  }
  return u;
}

/// Unperturbed DIRK with every implicit stage solved by Newton on f using the
/// exact Jacobian.
inline IntegrationResult resolved_newton_baseline(const Tableau& t, const ProblemInstance& p, double dt,
                                                  double t_final, const IntegratorOptions& opts = {}) {
  if (!(t_final > 0.0)) throw Error("t_final must be positive");
  const long n_steps = step_count(t_final, dt);
  const int s = t.stages();
  const Matrix& A = t.A();
  const Vector& b = t.b();
  IntegrationResult out;
  out.dt = t_final / static_cast<double>(n_steps);
  const double h = out.dt;
  Vector u = p.initial_condition;
  std::vector<Vector> f(s);
  for (long k = 0; k < n_steps; ++k) {
    const double t_n = static_cast<double>(k) * h;
    for (int i = 0; i < s; ++i) {
      Vector r = u;
      for (int j = 0; j < i; ++j)
        if (A(i, j) != 0.0) r += (h * A(i, j)) * f[j];
      Vector y;
      try {
        y = A(i, i) == 0.0 ? r : detail::newton_stage_solve(p, r, h, A(i, i), 0.0, nullptr, i, opts, out.stats);
      } catch (const NewtonFailure& e) {
        throw NewtonFailure(std::string(e.what()) + " in step " + std::to_string(k + 1));
      }
      detail::check_finite(y, t_n, opts, "stage");
      f[i] = p.rhs(y);
      out.stats.max_residual =
          std::max(out.stats.max_residual, max_norm(y - r - (h * A(i, i)) * f[i]) / (1.0 + max_norm(y)));
    }
    for (int i = 0; i < s; ++i)
      if (b(i) != 0.0) u += (h * b(i)) * f[i];
    detail::check_finite(u, t_n, opts, "update");
    ++out.stats.steps;
  }
  out.final_state = std::move(u);
  out.steps = n_steps;
  return out;
}

}  // namespace pdirk
