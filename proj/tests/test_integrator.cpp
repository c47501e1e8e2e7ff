#include "pdirk/integrator.hpp"
#include "pdirk/registry.hpp"

#include <gtest/gtest.h>

#include <cmath>

using namespace pdirk;

namespace {

// u' = lambda u with one strategy "lin" (M = lambda, g = 0), i.e. f_eps = f.
ProblemInstance linear_scalar(double lambda) {
  ProblemInstance p;
  p.name = "linear";
  p.dimension = 1;
  p.components = {"u"};
  p.default_tf = 1.0;
  p.initial_condition = Vector::Ones(1);
  p.rhs = [lambda](const Vector& u) -> Vector { return lambda * u; };
  p.jacobian = [lambda](const Vector&) -> Matrix { return Matrix::Constant(1, 1, lambda); };
  p.strategies["lin"] = [lambda](const Vector& y) {
    return AffineOperator{Matrix::Constant(1, 1, lambda), Vector::Zero(1), y, "lin"};
  };
  return p;
}

double scalar_exact(double t) { return 1.0 / std::sqrt(1.0 + 2.0 * t); }

}  // namespace

TEST(Step, MidpointStabilityFunction) {
  const auto p = linear_scalar(-1.0);
  const auto rec = perturbed_dirk_step(registry_lookup("D1s2p1m"), p, "lin", AnchorPolicy::PreviousStep,
                                       p.initial_condition, 0.1);
  EXPECT_NEAR(rec.state(0), 0.95 / 1.05, 1e-15);
  EXPECT_DOUBLE_EQ(rec.time, 0.1);
}

TEST(Step, ZeroStepIsIdentity) {
  const auto p = burgers_problem(9);
  for (const auto& name : registered_method_names()) {
    const auto rec = perturbed_dirk_step(registry_lookup(name), p, "taylor", AnchorPolicy::PreviousStage,
                                         p.initial_condition, 0.0);
    EXPECT_EQ(rec.state, p.initial_condition) << name;
  }
}

TEST(Step, LocalDefectIsFourthOrder) {
  const auto p = burgers_problem(9);
  const auto pt = registry_lookup("A2s3p3m");
  auto defect = [&](double dt) {
    const auto rec = perturbed_dirk_step(pt, p, "taylor", AnchorPolicy::PreviousStep, p.initial_condition, dt);
    return max_norm(rec.state - reference_solution(p, dt, 1e-6));
  };
  const double ratio = defect(1e-3) / defect(5e-4);
  EXPECT_GE(ratio, 14.0);
  EXPECT_LE(ratio, 18.0);
}

TEST(Step, StageResidualsAndRetainedStages) {
  const auto p = burgers_problem(33);
  IntegratorOptions opts;
  opts.retain_stages = true;
  for (const auto& name : registered_method_names()) {
    const auto pt = registry_lookup(name);
    for (const char* s : {"lin1", "lin2", "taylor", "exact"}) {
      const auto rec =
          perturbed_dirk_step(pt, p, s, AnchorPolicy::PreviousStage, p.initial_condition, 0.05, 0.0, opts);
      SCOPED_TRACE(name + "/" + s);
      EXPECT_LT(rec.solver_stats.max_residual, 1e-10);
      EXPECT_EQ(static_cast<int>(rec.stage_states.size()), pt.stages());
    }
  }
}

TEST(Step, NewtonFallbackForImplicitTildeDiagonal) {
  const auto p = scalar_contractive_problem();
  // a_11 = 1 split evenly: the stage equation mixes f and f_eps
  const PerturbedTableau pt(Tableau("split", Matrix::Ones(1, 1), Vector::Ones(1)), Matrix::Constant(1, 1, 0.5), 1,
                            1, ConsistencyClass::None);
  const auto rec = perturbed_dirk_step(pt, p, "lin1", AnchorPolicy::PreviousStep, p.initial_condition, 0.1);
  EXPECT_GT(rec.solver_stats.newton_iters, 0);
  EXPECT_LT(rec.solver_stats.max_residual, 1e-12);
  EXPECT_LT(rec.state(0), 1.0);
}

TEST(Step, SingularStageMatrixReportsStage) {
  const auto p = linear_scalar(1.0);
  const PerturbedTableau pt(Tableau("ie", Matrix::Constant(1, 1, 0.5), Vector::Ones(1)),
                            Matrix::Constant(1, 1, 0.5), 1, 1, ConsistencyClass::None);
  try {
    perturbed_dirk_step(pt, p, "lin", AnchorPolicy::PreviousStep, p.initial_condition, 2.0);
    FAIL();
  } catch (const SingularStageError& e) {
    EXPECT_EQ(e.stage(), 0);
  }
}

TEST(Integrate, StepCountRounding) {
  EXPECT_EQ(step_count(3.5, 0.01), 350);
  EXPECT_EQ(step_count(1.0, 0.3), 3);
  EXPECT_EQ(step_count(1.0, 5.0), 1);
  const auto p = scalar_contractive_problem();
  const auto res = integrate(registry_lookup("A2s3p3m"), p, "taylor", AnchorPolicy::PreviousStep, 0.3, 1.0);
  EXPECT_EQ(res.steps, 3);
  EXPECT_DOUBLE_EQ(res.dt, 1.0 / 3.0);
}

TEST(Integrate, Deterministic) {
  const auto p = burgers_problem(33);
  const auto pt = registry_lookup("B3s4p4m");
  const auto a = integrate(pt, p, "lin2", AnchorPolicy::PreviousStage, 0.05, 1.0);
  const auto b = integrate(pt, p, "lin2", AnchorPolicy::PreviousStage, 0.05, 1.0);
  EXPECT_EQ(a.final_state, b.final_state);
}

TEST(Integrate, BlowUpCarriesTime) {
  const auto p = porous_medium_problem(101);
  try {
    integrate(registry_lookup("B6s5p5m"), p, "lin1", AnchorPolicy::PreviousStep, 0.5 / 16, 0.5);
    FAIL();
  } catch (const BlowUpError& e) {
    EXPECT_GT(e.time_reached(), 0.0);
    EXPECT_LE(e.time_reached(), 0.5);
  }
}

TEST(Integrate, ExactStrategyMatchesNewtonBaseline) {
  const auto p = scalar_contractive_problem();
  for (const auto& name : registered_method_names()) {
    const auto pt = registry_lookup(name);
    const auto a = integrate(pt, p, "exact", AnchorPolicy::PreviousStep, 0.1, 2.0);
    const auto b = resolved_newton_baseline(pt.base(), p, 0.1, 2.0);
    EXPECT_LT(max_norm(a.final_state - b.final_state), 1e-12) << name;
  }
}

TEST(Integrate, NewtonBaselineOnLinearProblemIsAffinePath) {
  const auto p = linear_scalar(-2.0);
  const auto pt = registry_lookup("D2s3p1m");
  const auto affine = integrate(pt, p, "lin", AnchorPolicy::PreviousStep, 0.1, 1.0);
  const auto newton = resolved_newton_baseline(pt.base(), p, 0.1, 1.0);
  EXPECT_NEAR(affine.final_state(0), newton.final_state(0), 1e-14);
}

TEST(Reference, Rk4AgainstClosedForm) {
  const auto p = scalar_contractive_problem();
  EXPECT_LT(std::abs(reference_solution(p, 2.0, 1e-4)(0) - scalar_exact(2.0)), 1e-10);
  const double e1 = std::abs(reference_solution(p, 2.0, 0.0125)(0) - scalar_exact(2.0));
  const double e2 = std::abs(reference_solution(p, 2.0, 0.00625)(0) - scalar_exact(2.0));
  EXPECT_NEAR(e1 / e2, 16.0, 2.0);
  EXPECT_EQ(reference_solution(p, 0.0, 0.1), p.initial_condition);
}

TEST(Reference, NewtonBaselineFourthOrderOnBurgers) {
  const auto p = burgers_problem(33);
  const Vector ref = reference_solution(p, 1.0, 1e-4);
  const auto base = registry_lookup("D3s4p1m").base();
  const double e1 = max_norm(resolved_newton_baseline(base, p, 1.0 / 16, 1.0).final_state - ref);
  const double e2 = max_norm(resolved_newton_baseline(base, p, 1.0 / 32, 1.0).final_state - ref);
  EXPECT_NEAR(std::log2(e1 / e2), 4.0, 0.4);
}
