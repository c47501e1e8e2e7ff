// Acceptance runner. `acceptance` runs every criterion, `acceptance 4 7` a
// subset. One PASS/FAIL line per criterion, indented detail lines below it.
// Exit status is non-zero when any selected criterion fails.

#include "pdirk/pdirk.hpp"

#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <functional>
#include <numbers>
#include <set>
#include <string>
#include <vector>

using namespace pdirk;

namespace {

struct Outcome {
  bool pass = true;
  std::vector<std::string> details;

  void expect(bool ok, const std::string& what) {
    pass = pass && ok;
    details.push_back(std::string(ok ? "ok   " : "MISS ") + what);
  }
  void note(const std::string& what) { details.push_back("info " + what); }
};

std::string fmt(const char* f, double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, f, v);
  return buf;
}

std::string slope_text(const std::optional<double>& s) { return s ? fmt("%.3f", *s) : std::string("undefined"); }

ConvergenceStudy study(const std::string& problem, const std::string& method, const std::string& strategy,
                       AnchorPolicy policy, double tf, std::vector<double> dts = {}) {
  ConvergenceStudy s;
  s.problem = problem;
  s.method = method;
  s.strategy = strategy;
  s.policy = policy;
  s.n = 101;
  s.t_final = tf;
  s.dts = dts.empty() ? default_dt_ladder(problem, tf) : std::move(dts);
  return run_convergence(std::move(s));
}

void expect_slope(Outcome& o, const ConvergenceStudy& s, double target, double band) {
  const auto& m = s.fitted_slope_finest;
  const bool ok = m && std::abs(*m - target) <= band;
  o.expect(ok, s.problem + " " + s.method + " " + s.strategy + "/" + std::string(to_string(s.policy)) +
                   ": slope " + slope_text(m) + ", target " + fmt("%g", target) + " +- " + fmt("%g", band));
}

void expect_runtime(Outcome& o, double seconds, double budget) {
  o.expect(seconds < budget, "runtime " + fmt("%.2f", seconds) + " s, budget " + fmt("%g", budget) + " s");
}

// 1: condition residuals reproduce the name-encoded orders.
Outcome tableau_verification() {
  Outcome o;
  const std::vector<std::tuple<std::string, int, int>> expected{
      {"A2s3p3m", 3, 3}, {"A4s4p4m", 4, 4}, {"B3s4p4m", 4, 4}, {"B6s5p5m", 5, 5},
      {"D1s2p1m", 2, 1}, {"D2s3p1m", 3, 1}, {"D3s4p1m", 4, 1}};
  for (const auto& [name, mo, po] : expected) {
    const auto pt = registry_lookup(name);
    const double tol = name == "B6s5p5m" ? 1e-8 : 1e-10;
    const auto got = classify_orders(pt, pt.consistency_class(), tol);
    o.expect(got.method_order == mo && got.perturbed_order == po,
             name + " under " + std::string(to_string(pt.consistency_class())) + ": (" +
                 std::to_string(got.method_order) + ", " + std::to_string(got.perturbed_order) + "), expected (" +
                 std::to_string(mo) + ", " + std::to_string(po) + ")");
  }
  return o;
}

// 2: M = BA + A^T B - b b^T is positive semidefinite.
Outcome algebraic_stability() {
  Outcome o;
  for (const char* name : {"A2s3p3m", "A4s4p4m", "B3s4p4m", "D1s2p1m", "D2s3p1m", "D3s4p1m"}) {
    const auto r = stability_report(registry_lookup(name));
    o.expect(r.min_eigenvalue_M >= -1e-10, std::string(name) + ": min eigenvalue " + fmt("%.3e", r.min_eigenvalue_M));
  }
  return o;
}

// 3: tau / tau_u classification at the initial condition, n = 101.
Outcome tau_classification() {
  Outcome o;
  using CC = ConsistencyClass;
  const std::vector<std::tuple<std::string, std::string, CC>> expected{
      {"burgers", "lin1", CC::TauZero},         {"burgers", "lin2", CC::None},
      {"burgers", "taylor", CC::TauAndDerivZero}, {"shallow-water", "lin1", CC::TauZero},
      {"shallow-water", "lin2", CC::None},      {"shallow-water", "taylor", CC::TauAndDerivZero},
      {"porous-medium", "lin1", CC::TauZero},   {"porous-medium", "taylor", CC::TauAndDerivZero}};
  for (const auto& [problem, strategy, cls] : expected) {
    const auto p = make_problem(problem, 101);
    const auto probe = tau_consistency_probe(p, strategy, p.initial_condition);
    o.expect(probe.classification == cls, problem + " " + strategy + ": " +
                                              std::string(to_string(probe.classification)) + " (tau " +
                                              fmt("%.2e", probe.tau_norm) + ", tau_u " +
                                              fmt("%.2e", probe.tau_u_norm) + "), expected " +
                                              std::string(to_string(cls)));
  }
  // the initial data are single Fourier modes, so compare with a later state
  for (const char* problem : {"burgers", "shallow-water"}) {
    const auto p = make_problem(problem, 101);
    const Vector later = reference_solution(p, p.default_tf, 1e-4);
    const auto probe = tau_consistency_probe(p, "lin2", later);
    o.note(std::string(problem) + " lin2 at t = " + fmt("%g", p.default_tf) + ": " +
           std::string(to_string(probe.classification)) + " (tau " + fmt("%.2e", probe.tau_norm) + ")");
  }
  return o;
}

// 4: Burgers slopes over the finest four finite points of the default ladder.
Outcome burgers_slopes() {
  Outcome o;
  const auto un = AnchorPolicy::PreviousStep;
  const std::vector<std::tuple<std::string, std::string, double, double>> cases{
      {"A2s3p3m", "lin1", 3, 0.3},   {"A2s3p3m", "taylor", 3, 0.3}, {"A4s4p4m", "lin1", 4, 0.3},
      {"A4s4p4m", "taylor", 4, 0.3}, {"B3s4p4m", "taylor", 4, 0.3}, {"B3s4p4m", "lin1", 2, 0.3},
      {"B6s5p5m", "taylor", 5, 0.4}, {"D1s2p1m", "lin1", 2, 0.3},   {"D1s2p1m", "taylor", 2, 0.3},
      {"D2s3p1m", "lin1", 2, 0.3},   {"D2s3p1m", "taylor", 3, 0.3}, {"D3s4p1m", "taylor", 3, 0.3}};
  for (const auto& [method, strategy, target, band] : cases)
    expect_slope(o, study("burgers", method, strategy, un, 3.5), target, band);
  return o;
}

// 5: anchoring lin1 at the previous stage costs one order; taylor does not care.
Outcome anchor_sensitivity() {
  Outcome o;
  expect_slope(o, study("burgers", "A2s3p3m", "lin1", AnchorPolicy::PreviousStep, 3.5), 3, 0.3);
  expect_slope(o, study("burgers", "A2s3p3m", "lin1", AnchorPolicy::PreviousStage, 3.5), 2, 0.3);
  expect_slope(o, study("burgers", "A2s3p3m", "taylor", AnchorPolicy::PreviousStep, 3.5), 3, 0.3);
  expect_slope(o, study("burgers", "A2s3p3m", "taylor", AnchorPolicy::PreviousStage, 3.5), 3, 0.3);
  return o;
}

// 6: shallow water contrast between perturbed and diagonally perturbed methods.
Outcome shallow_water_slopes() {
  Outcome o;
  const auto un = AnchorPolicy::PreviousStep;
  const double tf = shallow_water_problem(101).default_tf;
  expect_slope(o, study("shallow-water", "A2s3p3m", "lin1", un, tf), 3, 0.3);
  expect_slope(o, study("shallow-water", "D2s3p1m", "lin1", un, tf), 2, 0.3);
  expect_slope(o, study("shallow-water", "B3s4p4m", "taylor", un, tf), 4, 0.3);
  expect_slope(o, study("shallow-water", "D3s4p1m", "taylor", un, tf), 3, 0.3);
  return o;
}

int unstable_count(const ConvergenceStudy& s) {
  int k = 0;
  for (const auto& r : s.records)
    if (r.failure || !(r.error <= 1.0)) ++k;
  return k;
}

// 7: porous medium, T_f = 0.5.
Outcome porous_medium() {
  Outcome o;
  const auto un = AnchorPolicy::PreviousStep;
  const double tf = 0.5;
  expect_slope(o, study("porous-medium", "B3s4p4m", "taylor", un, tf), 4, 0.4);

  // A2s3p3m + lin1 is unstable on the default ladder; T_f / 2^k, k = 9..12
  std::vector<double> small;
  for (int k = 9; k <= 12; ++k) small.push_back(tf / std::ldexp(1.0, k));
  const auto a2 = study("porous-medium", "A2s3p3m", "lin1", un, tf, small);
  expect_slope(o, a2, 3, 0.4);
  o.note("A2s3p3m lin1 default ladder: " + std::to_string(unstable_count(study("porous-medium", "A2s3p3m", "lin1", un, tf))) +
         "/6 unstable");

  for (const char* strategy : {"taylor", "exact"}) {
    const auto b6 = study("porous-medium", "B6s5p5m", strategy, un, tf);
    const int bad = unstable_count(b6);
    const int total = static_cast<int>(b6.records.size());
    std::string errs;
    for (const auto& r : b6.records) errs += " " + (r.failure ? std::string("fail") : fmt("%.1e", r.error));
    o.expect(2 * bad >= total, std::string("B6s5p5m ") + strategy + " unstable on " + std::to_string(bad) + "/" +
                                   std::to_string(total) + " dts (need at least half); errors" + errs);
  }
  const auto lin1 = study("porous-medium", "B6s5p5m", "lin1", un, tf);
  o.note("B6s5p5m lin1 unstable on " + std::to_string(unstable_count(lin1)) + "/" +
         std::to_string(lin1.records.size()) + " dts");
  return o;
}

// 8: gap between perturbed and unperturbed solutions shrinks at the rate of
// the consistency class.
Outcome gap_rates() {
  Outcome o;
  const auto p = scalar_contractive_problem();
  const double tf = p.default_tf;
  auto gap_slope = [&](const PerturbedTableau& pt, const std::string& strategy, const std::vector<double>& dts) {
    std::vector<ConvergenceRecord> recs;
    std::string gaps;
    for (double dt : dts) {
      const auto pert = integrate(pt, p, strategy, AnchorPolicy::PreviousStep, dt, tf);
      const auto base = resolved_newton_baseline(pt.base(), p, dt, tf);
      const double signed_gap = pert.final_state(0) - base.final_state(0);
      gaps += " " + fmt("%.2e", signed_gap);
      recs.push_back({dt, std::abs(signed_gap), {}, {}});
    }
    return std::make_pair(fitted_slope(recs), gaps);
  };
  const std::vector<double> dts{0.2, 0.1, 0.05, 0.025};
  const std::vector<double> fine{0.025, 0.0125, 0.00625, 0.003125};
  for (const char* method : {"A2s3p3m", "B3s4p4m"}) {
    const auto pt = registry_lookup(method);
    for (const auto& [strategy, need] : {std::pair{"lin1", 1.8}, std::pair{"taylor", 2.8}}) {
      const auto [slope, gaps] = gap_slope(pt, strategy, dts);
      o.expect(slope && *slope >= need, std::string(method) + " " + strategy + ": slope " + slope_text(slope) +
                                            ", need >= " + fmt("%g", need) + "; signed gaps" + gaps);
      const auto [fine_slope, fine_gaps] = gap_slope(pt, strategy, fine);
      o.note(std::string(method) + " " + strategy + " on dt 0.025..0.003125: slope " + slope_text(fine_slope));
    }
  }
  return o;
}

// 9: f_eps = f reproduces the unperturbed method.
Outcome exact_degeneration() {
  Outcome o;
  const auto p = burgers_problem(101);
  const double dt = p.default_tf / 64;
  for (const auto& name : registered_method_names()) {
    const auto pt = registry_lookup(name);
    const auto a = integrate(pt, p, "exact", AnchorPolicy::PreviousStep, dt, p.default_tf);
    const auto b = resolved_newton_baseline(pt.base(), p, dt, p.default_tf);
    const double d = max_norm(a.final_state - b.final_state);
    o.expect(d <= 1e-9, name + ": |exact - baseline| = " + fmt("%.2e", d));
  }
  return o;
}

// 10: spectral differentiation of sin(kx).
Outcome spectral_exactness() {
  Outcome o;
  for (int n : {9, 16, 101}) {
    const auto d = build_diff_matrices(PeriodicGrid(n, 0.0, 2.0 * std::numbers::pi));
    const Vector x = d.grid.points();
    double worst = 0.0;
    for (int k = 1; 4 * k <= n; ++k) {
      const Vector u = (k * x.array()).sin().matrix();
      const Vector du = (k * (k * x.array()).cos()).matrix();
      worst = std::max(worst, max_norm(d.Dx * u - du));
    }
    o.expect(worst < 1e-9 * n, "n = " + std::to_string(n) + ": max error " + fmt("%.2e", worst));
  }
  return o;
}

struct Criterion {
  int id;
  const char* title;
  double budget_seconds;
  std::function<Outcome()> run;
};

}  // namespace

int main(int argc, char** argv) {
  const std::vector<Criterion> criteria{
      {1, "tableau order classification", 1.0, tableau_verification},
      {2, "algebraic stability", 1.0, algebraic_stability},
      {3, "tau consistency classes at the initial condition", 5.0, tau_classification},
      {4, "Burgers convergence slopes", 600.0, burgers_slopes},
      {5, "anchor sensitivity", 600.0, anchor_sensitivity},
      {6, "shallow water convergence slopes", 600.0, shallow_water_slopes},
      {7, "porous medium slopes and B6s5p5m instability", 600.0, porous_medium},
      {8, "perturbed-unperturbed gap rates", 10.0, gap_rates},
      {9, "exact strategy against the Newton baseline", 600.0, exact_degeneration},
      {10, "spectral derivative exactness", 60.0, spectral_exactness},
  };

  std::set<int> selected;
  for (int i = 1; i < argc; ++i) selected.insert(std::atoi(argv[i]));

  int failures = 0;
  for (const auto& c : criteria) {
    if (!selected.empty() && !selected.count(c.id)) continue;
    const auto t0 = std::chrono::steady_clock::now();
    Outcome o;
    try {
      o = c.run();
    } catch (const std::exception& e) {
      o.expect(false, std::string("exception: ") + e.what());
    }
    const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    expect_runtime(o, secs, c.budget_seconds);
    std::printf("%s criterion %d: %s\n", o.pass ? "PASS" : "FAIL", c.id, c.title);
    for (const auto& d : o.details) std::printf("    %s\n", d.c_str());
    std::fflush(stdout);
    if (!o.pass) ++failures;
  }
  return failures == 0 ? 0 : 1;
}
