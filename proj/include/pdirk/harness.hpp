#pragma once

// Time-step refinement studies, CFL stability sweeps and result files.

#include "pdirk/integrator.hpp"
#include "pdirk/problems.hpp"
#include "pdirk/registry.hpp"

#include "json.hpp"

#include <cmath>
#include <cstdio>
#include <fstream>
#include <future>
#include <limits>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

namespace pdirk {

enum class ReferenceKind { RK4, ResolvedNewton };

inline std::string_view to_string(ReferenceKind r) { return r == ReferenceKind::RK4 ? "rk4" : "newton"; }

inline ReferenceKind parse_reference(std::string_view s) {
  if (s == "rk4" || s == "RK4") return ReferenceKind::RK4;
  if (s == "newton" || s == "ResolvedNewton") return ReferenceKind::ResolvedNewton;
  throw Error("unknown reference '" + std::string(s) + "' (expected rk4 or newton)");
}

/// Tableau used for resolved-Newton reference solves (B-stable SDIRK4).
inline Tableau reference_tableau() { return registry_lookup("D3s4p1m").base(); }

/// Default reference step. Explicit RK4 on the porous medium problem is limited
/// by the Dxx spectrum, so its step shrinks like 1/n^2.
inline double default_reference_dt(std::string_view problem, int n, ReferenceKind kind) {
  if (kind == ReferenceKind::ResolvedNewton) return problem == "porous-medium" ? 2.5e-4 : 1e-3;
  if (problem == "porous-medium") {
    const double scale = 101.0 / std::max(n, 1);
    return 2e-6 * std::min(1.0, scale * scale);
  }
  return 1e-4;
}

/// Six halvings T_f / 2^k, k = first..first+5: first = 6 for Burgers (the
/// steepening solution at T_f = 3.5 is pre-asymptotic for coarser steps),
/// 4 for the porous medium problem, 3 otherwise.
inline std::vector<double> default_dt_ladder(std::string_view problem, double t_final) {
  const int first = problem == "burgers" ? 6 : problem == "porous-medium" ? 4 : 3;
  std::vector<double> out;
  for (int k = first; k < first + 6; ++k) out.push_back(t_final / std::ldexp(1.0, k));
  return out;
}

struct ConvergenceRecord {
  double dt = 0.0;
  double error = std::numeric_limits<double>::infinity();
  /// Order between this record and the previous (coarser) one.
  std::optional<double> observed_order;
  std::optional<std::string> failure;
};

struct ConvergenceStudy {
  std::string problem;
  std::string method;
  std::string strategy;
  AnchorPolicy policy = AnchorPolicy::PreviousStep;
  int n = 101;
  double t_final = 0.0;
  std::vector<double> dts;
  ReferenceKind reference_kind = ReferenceKind::RK4;
  /// Reference step; the per-problem default is used when unset.
  std::optional<double> dt_ref;
  std::vector<ConvergenceRecord> records;
  /// Least-squares slope of log(error) against log(dt) over finite records.
  std::optional<double> fitted_slope;
  /// Same fit restricted to the kFinestPoints smallest finite dts.
  std::optional<double> fitted_slope_finest;
};

/// Number of finest finite records used for the summary order.
inline constexpr int kFinestPoints = 4;

struct StudyOptions {
  bool parallel = false;
  IntegratorOptions integrator;
};

/// Least-squares slope of log(error) vs log(dt) over the last `finest` finite,
/// positive records (all of them when finest <= 0). Needs two points.
inline std::optional<double> fitted_slope(const std::vector<ConvergenceRecord>& recs, int finest = 0) {
  std::vector<std::pair<double, double>> pts;
  for (const auto& r : recs)
    if (std::isfinite(r.error) && r.error > 0.0) pts.emplace_back(std::log(r.dt), std::log(r.error));
  if (finest > 0 && static_cast<int>(pts.size()) > finest) pts.erase(pts.begin(), pts.end() - finest);
  if (pts.size() < 2) return std::nullopt;
  double mx = 0, my = 0;
  for (const auto& [x, y] : pts) mx += x, my += y;
  mx /= pts.size();
  my /= pts.size();
  double sxy = 0, sxx = 0;
  for (const auto& [x, y] : pts) sxy += (x - mx) * (y - my), sxx += (x - mx) * (x - mx);
  if (sxx == 0.0) return std::nullopt;
  return sxy / sxx;
}

inline void fill_observed_orders(std::vector<ConvergenceRecord>& recs) {
  for (std::size_t i = 0; i < recs.size(); ++i) {
    recs[i].observed_order.reset();
    if (i == 0) continue;
    const auto& a = recs[i - 1];
    const auto& b = recs[i];
    if (std::isfinite(a.error) && std::isfinite(b.error) && a.error > 0 && b.error > 0 && a.dt != b.dt)
      recs[i].observed_order = std::log(a.error / b.error) / std::log(a.dt / b.dt);
  }
}

inline Vector compute_reference(const ProblemInstance& p, double t_final, ReferenceKind kind, double dt_ref,
                                const IntegratorOptions& opts = {}) {
  if (kind == ReferenceKind::RK4) return reference_solution(p, t_final, dt_ref, opts);
  return resolved_newton_baseline(reference_tableau(), p, dt_ref, t_final, opts).final_state;
}

/// Error of one perturbed run against a reference, or the failure message.
inline ConvergenceRecord convergence_point(const PerturbedTableau& pt, const ProblemInstance& p,
                                           const std::string& strategy, AnchorPolicy policy, double dt,
                                           double t_final, const Vector& ref, const IntegratorOptions& opts) {
  ConvergenceRecord rec;
  rec.dt = t_final / static_cast<double>(step_count(t_final, dt));
  try {
    const auto res = integrate(pt, p, strategy, policy, dt, t_final, opts);
    rec.error = max_norm(res.final_state - ref);
  } catch (const Error& e) {
    rec.error = std::numeric_limits<double>::infinity();
    rec.failure = e.what();
  }
  return rec;
}

/// Fills study.records (one per dt, failures kept as infinite errors) and the
/// fitted slope. Throws only when the reference solve itself fails.
inline ConvergenceStudy run_convergence(ConvergenceStudy study, const StudyOptions& options = {}) {
  for (std::size_t i = 1; i < study.dts.size(); ++i)
    if (!(study.dts[i] < study.dts[i - 1])) throw Error("dts must be strictly decreasing");
  if (study.dts.empty()) throw Error("dts must not be empty");

  const ProblemInstance p = make_problem(study.problem, study.n);
  const PerturbedTableau pt = registry_lookup(study.method);
  study.method = pt.name();
  if (!p.has_strategy(study.strategy)) p.linearize(study.strategy, p.initial_condition);
  if (!(study.t_final > 0.0)) study.t_final = p.default_tf;
  if (!study.dt_ref) study.dt_ref = default_reference_dt(study.problem, study.n, study.reference_kind);

  Vector ref;
  try {
    ref = compute_reference(p, study.t_final, study.reference_kind, *study.dt_ref, options.integrator);
  } catch (const Error& e) {
    throw Error("reference solve failed: " + std::string(e.what()));
  }

  study.records.assign(study.dts.size(), {});
  if (options.parallel) {
    std::vector<std::future<ConvergenceRecord>> jobs;
    for (double dt : study.dts)
      jobs.push_back(std::async(std::launch::async, [&, dt] {
        return convergence_point(pt, p, study.strategy, study.policy, dt, study.t_final, ref, options.integrator);
      }));
    for (std::size_t i = 0; i < jobs.size(); ++i) study.records[i] = jobs[i].get();
  } else {
    for (std::size_t i = 0; i < study.dts.size(); ++i)
      study.records[i] = convergence_point(pt, p, study.strategy, study.policy, study.dts[i], study.t_final, ref,
                                           options.integrator);
  }
  fill_observed_orders(study.records);
  study.fitted_slope = fitted_slope(study.records);
  study.fitted_slope_finest = fitted_slope(study.records, kFinestPoints);
  return study;
}

struct SweepRow {
  int n = 0;
  double cfl = 0.0;
  bool stable = false;
  double final_error = std::numeric_limits<double>::infinity();
  std::optional<std::string> failure;
};

/// Smallest grid accepted by a stability sweep.
inline constexpr int kSweepMinPoints = 8;

/// Fixed dt, increasing n. Stable means no blow-up and max-norm error below 1
/// against a reference on the same grid.
inline std::vector<SweepRow> run_stability_sweep(const std::string& problem, const std::string& method,
                                                 const std::string& strategy, AnchorPolicy policy,
                                                 const std::vector<int>& n_list, double dt, double t_final,
                                                 ReferenceKind reference = ReferenceKind::RK4,
                                                 const IntegratorOptions& opts = {}) {
  if (n_list.empty()) throw Error("n list must not be empty");
  for (int n : n_list)
    if (n < kSweepMinPoints)
      throw Error("sweep grids need n >= " + std::to_string(kSweepMinPoints) + ", got " + std::to_string(n));
  const PerturbedTableau pt = registry_lookup(method);
  std::vector<SweepRow> out;
  for (int n : n_list) {
    const ProblemInstance p = make_problem(problem, n);
    const double tf = t_final > 0.0 ? t_final : p.default_tf;
    SweepRow row;
    row.n = n;
    row.cfl = p.grid ? dt / p.grid->spacing() : dt;
    const Vector ref = compute_reference(p, tf, reference, default_reference_dt(problem, n, reference), opts);
    const auto rec = convergence_point(pt, p, strategy, policy, dt, tf, ref, opts);
    row.final_error = rec.error;
    row.failure = rec.failure;
    row.stable = !rec.failure && rec.error < 1.0;
    out.push_back(std::move(row));
  }
  return out;
}

enum class ResultFormat { CSV, JSON };

inline ResultFormat parse_format(std::string_view s) {
  if (s == "csv") return ResultFormat::CSV;
  if (s == "json") return ResultFormat::JSON;
  throw Error("unknown format '" + std::string(s) + "' (expected csv or json)");
}

namespace detail {

inline std::string fmt17(double v) {
  if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
  if (std::isnan(v)) return "nan";
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

inline std::string csv_quote(const std::string& s) {
  std::string out = "\"";
  for (char ch : s) {
    if (ch == '"') out += '"';
    out += (ch == '\n' ? ' ' : ch);
  }
  return out + "\"";
}

inline nlohmann::json number_or_inf(double v) {
  if (std::isfinite(v)) return v;
  return fmt17(v);
}

inline double number_from_json(const nlohmann::json& j) {
  if (j.is_string()) {
    const auto s = j.get<std::string>();
    if (s == "inf") return std::numeric_limits<double>::infinity();
    if (s == "-inf") return -std::numeric_limits<double>::infinity();
    return std::numeric_limits<double>::quiet_NaN();
  }
  return j.get<double>();
}

}  // namespace detail

inline std::string study_to_csv(const ConvergenceStudy& s) {
  std::ostringstream os;
  os << "# problem=" << s.problem << '\n'
     << "# method=" << s.method << '\n'
     << "# strategy=" << s.strategy << '\n'
     << "# anchor=" << to_string(s.policy) << '\n'
     << "# nx=" << s.n << '\n'
     << "# tf=" << detail::fmt17(s.t_final) << '\n'
     << "# reference=" << to_string(s.reference_kind) << '\n'
     << "dt,error,observed_order,failure\n";
  for (const auto& r : s.records) {
    os << detail::fmt17(r.dt) << ',' << detail::fmt17(r.error) << ','
       << (r.observed_order ? detail::fmt17(*r.observed_order) : "") << ','
       << (r.failure ? detail::csv_quote(*r.failure) : "") << '\n';
  }
  return os.str();
}

inline nlohmann::json study_to_json(const ConvergenceStudy& s) {
  nlohmann::json j;
  j["problem"] = s.problem;
  j["method"] = s.method;
  j["strategy"] = s.strategy;
  j["anchor"] = std::string(to_string(s.policy));
  j["nx"] = s.n;
  j["tf"] = s.t_final;
  j["dts"] = s.dts;
  j["reference"] = std::string(to_string(s.reference_kind));
  j["dt_ref"] = s.dt_ref ? nlohmann::json(*s.dt_ref) : nlohmann::json(nullptr);
  j["fitted_slope"] = s.fitted_slope ? nlohmann::json(*s.fitted_slope) : nlohmann::json(nullptr);
  j["fitted_slope_finest"] = s.fitted_slope_finest ? nlohmann::json(*s.fitted_slope_finest) : nlohmann::json(nullptr);
  auto recs = nlohmann::json::array();
  for (const auto& r : s.records) {
    recs.push_back({{"dt", r.dt},
                    {"error", detail::number_or_inf(r.error)},
                    {"observed_order", r.observed_order ? nlohmann::json(*r.observed_order) : nlohmann::json(nullptr)},
                    {"failure", r.failure ? nlohmann::json(*r.failure) : nlohmann::json(nullptr)}});
  }
  j["records"] = std::move(recs);
  return j;
}

inline ConvergenceStudy study_from_json(const nlohmann::json& j) {
  ConvergenceStudy s;
  try {
    s.problem = j.at("problem").get<std::string>();
    s.method = j.at("method").get<std::string>();
    s.strategy = j.at("strategy").get<std::string>();
    s.policy = parse_anchor(j.at("anchor").get<std::string>());
    s.n = j.at("nx").get<int>();
    s.t_final = j.at("tf").get<double>();
    s.dts = j.at("dts").get<std::vector<double>>();
    s.reference_kind = parse_reference(j.at("reference").get<std::string>());
    if (!j.at("dt_ref").is_null()) s.dt_ref = j.at("dt_ref").get<double>();
    if (!j.at("fitted_slope").is_null()) s.fitted_slope = j.at("fitted_slope").get<double>();
    if (j.contains("fitted_slope_finest") && !j.at("fitted_slope_finest").is_null())
      s.fitted_slope_finest = j.at("fitted_slope_finest").get<double>();
    for (const auto& r : j.at("records")) {
      ConvergenceRecord rec;
      rec.dt = r.at("dt").get<double>();
      rec.error = detail::number_from_json(r.at("error"));
      if (!r.at("observed_order").is_null()) rec.observed_order = r.at("observed_order").get<double>();
      if (!r.at("failure").is_null()) rec.failure = r.at("failure").get<std::string>();
      s.records.push_back(std::move(rec));
    }
  } catch (const nlohmann::json::exception& e) {
    throw Error(std::string("study JSON: ") + e.what());
  }
  return s;
}

inline void emit_results(const ConvergenceStudy& s, ResultFormat format, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw Error("cannot open '" + path + "' for writing");
  if (format == ResultFormat::CSV)
    out << study_to_csv(s);
  else
    out << study_to_json(s).dump(2) << '\n';
  if (!out) throw Error("failed writing '" + path + "'");
}

inline std::string sweep_to_csv(const std::vector<SweepRow>& rows) {
  std::ostringstream os;
  os << "n,cfl,stable,error,failure\n";
  for (const auto& r : rows)
    os << r.n << ',' << detail::fmt17(r.cfl) << ',' << (r.stable ? "true" : "false") << ','
       << detail::fmt17(r.final_error) << ',' << (r.failure ? detail::csv_quote(*r.failure) : "") << '\n';
  return os.str();
}

}  // namespace pdirk
