// pdirk: tableau checks, single solves, convergence studies and stability
// sweeps for perturbed DIRK methods.
//
// Exit codes: 0 success, 1 usage or input error, 2 check mismatch, 3 blow-up.

#include "pdirk/pdirk.hpp"

#include "CLI11.hpp"
#include "json.hpp"

#include <algorithm>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

namespace {

using namespace pdirk;

constexpr int kExitOk = 0;
constexpr int kExitUsage = 1;
constexpr int kExitMismatch = 2;
constexpr int kExitBlowUp = 3;

struct UsageError : Error {
  using Error::Error;
};

std::vector<std::string> split_list(const std::string& s) {
  std::vector<std::string> out;
  std::stringstream in(s);
  for (std::string item; std::getline(in, item, ',');) {
    item.erase(0, item.find_first_not_of(" \t"));
    item.erase(item.find_last_not_of(" \t") + 1);
    if (!item.empty()) out.push_back(item);
  }
  return out;
}

double parse_double(const std::string& s, const char* what) {
  std::size_t used = 0;
  double v = 0.0;
  try {
    v = std::stod(s, &used);
  } catch (const std::exception&) {
    used = 0;
  }
  if (used != s.size() || s.empty()) throw UsageError(std::string("bad number '") + s + "' in " + what);
  return v;
}

int parse_int(const std::string& s, const char* what) {
  const double v = parse_double(s, what);
  if (v != static_cast<int>(v)) throw UsageError(std::string("bad integer '") + s + "' in " + what);
  return static_cast<int>(v);
}

struct RunParams {
  std::string problem = "burgers";
  std::string method = "A2s3p3m";
  std::string strategy = "taylor";
  std::string anchor = "un";
  int nx = 101;
  double tf = 0.0;
  std::string dts = "auto";
  double dt = 0.01;
  std::string nx_list;
  std::string reference = "rk4";
  double dt_ref = 0.0;
  std::string out;
  std::string format = "csv";
  bool parallel = false;
  std::string cls;
  double tol = 1e-10;
};

void add_problem_flags(CLI::App* sub, RunParams& rp) {
  sub->add_option("--problem", rp.problem, "burgers | shallow-water | porous-medium | scalar")->capture_default_str();
  sub->add_option("--method", rp.method, "registered method name")->capture_default_str();
  sub->add_option("--strategy", rp.strategy, "lin1 | lin2 | lin2a | lin2b | taylor | exact")->capture_default_str();
  sub->add_option("--anchor", rp.anchor, "un | prev")->capture_default_str();
  sub->add_option("--tf", rp.tf, "final time, 0 for the problem default")->capture_default_str();
}

void add_nx_flag(CLI::App* sub, RunParams& rp) {
  sub->add_option("--nx", rp.nx, "grid points")->capture_default_str();
}

void add_config_flag(CLI::App* sub) {
  sub->add_option("--config", "JSON file with the same keys as the flags; flags win");
}

// Flags given on the command line take precedence over the config file.
std::vector<std::string> merge_config(CLI::App& app, std::vector<std::string> args) {
  if (args.empty()) return args;
  CLI::App* sub = nullptr;
  try {
    sub = app.get_subcommand(args[0]);
  } catch (const CLI::OptionNotFound&) {
    return args;
  }

  std::string path;
  for (std::size_t i = 1; i < args.size(); ++i) {
    if (args[i] == "--config" && i + 1 < args.size()) {
      path = args[i + 1];
      args.erase(args.begin() + static_cast<long>(i), args.begin() + static_cast<long>(i) + 2);
      break;
    }
    if (args[i].rfind("--config=", 0) == 0) {
      path = args[i].substr(9);
      args.erase(args.begin() + static_cast<long>(i));
      break;
    }
  }
  if (path.empty()) return args;

  std::ifstream in(path);
  if (!in) throw UsageError("cannot open config '" + path + "'");
  nlohmann::json cfg;
  try {
    in >> cfg;
  } catch (const nlohmann::json::exception& e) {
    throw UsageError("config '" + path + "': " + e.what());
  }
  if (!cfg.is_object()) throw UsageError("config '" + path + "' must be a JSON object");

  auto given = [&](const std::string& flag) {
    return std::any_of(args.begin() + 1, args.end(),
                       [&](const std::string& a) { return a == flag || a.rfind(flag + "=", 0) == 0; });
  };
  for (const auto& [key, value] : cfg.items()) {
    const std::string flag = "--" + key;
    CLI::Option* opt = key == "config" ? nullptr : sub->get_option_no_throw(flag);
    if (opt == nullptr) throw UsageError("unknown config key '" + key + "' for " + args[0]);
    if (given(flag)) continue;
    if (value.is_boolean()) {
      if (value.get<bool>()) args.push_back(flag);
      continue;
    }
    std::string text;
    if (value.is_string()) {
      text = value.get<std::string>();
    } else if (value.is_array()) {
      for (const auto& v : value) text += (text.empty() ? "" : ",") + (v.is_string() ? v.get<std::string>() : v.dump());
    } else if (value.is_number()) {
      text = value.dump();
    } else {
      throw UsageError("config key '" + key + "' has an unsupported value");
    }
    args.push_back(flag);
    args.push_back(text);
  }
  return args;
}

// Every name is resolved before any computation starts.
struct Resolved {
  ProblemInstance problem;
  PerturbedTableau tableau;
  AnchorPolicy policy;
  double tf;
};

Resolved resolve(const RunParams& rp) {
  try {
    const auto& names = problem_names();
    if (std::find(names.begin(), names.end(), rp.problem) == names.end())
      throw Error("unknown problem '" + rp.problem + "'; available: burgers shallow-water porous-medium scalar");
    if (rp.problem != "scalar" && rp.nx < 4) throw Error("--nx must be at least 4");
    ProblemInstance p = make_problem(rp.problem, std::max(rp.nx, 4));
    PerturbedTableau pt = registry_lookup(rp.method);
    const AnchorPolicy policy = parse_anchor(rp.anchor);
    if (!p.has_strategy(rp.strategy)) p.linearize(rp.strategy, p.initial_condition);
    if (rp.tf < 0.0) throw Error("--tf must be non-negative");
    const double tf = rp.tf > 0.0 ? rp.tf : p.default_tf;
    return Resolved{std::move(p), std::move(pt), policy, tf};
  } catch (const UsageError&) {
    throw;
  } catch (const Error& e) {
    throw UsageError(e.what());
  }
}

PerturbedTableau load_method(const std::string& name) {
  if (std::filesystem::is_regular_file(name)) return load_tableau(name);
  try {
    return registry_lookup(name);
  } catch (const Error& e) {
    throw UsageError(e.what());
  }
}

std::string sci(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.3e", v);
  return buf;
}

std::string vector_text(const Vector& v) {
  std::string out = "(";
  for (Eigen::Index i = 0; i < v.size(); ++i) out += (i ? ", " : "") + sci(v(i));
  return out + ")";
}

int cmd_check(const RunParams& rp) {
  const PerturbedTableau pt = load_method(rp.method);
  ConsistencyClass cls = pt.consistency_class();
  if (!rp.cls.empty()) {
    try {
      cls = parse_consistency_class(rp.cls);
    } catch (const Error& e) {
      throw UsageError(e.what());
    }
  }
  if (!(rp.tol > 0.0)) throw UsageError("--tol must be positive");

  std::cout << "method " << pt.name() << ": " << pt.stages() << " stages, declared (" << pt.design_order() << ", "
            << pt.perturbation_order() << ") under " << to_string(pt.consistency_class()) << "\n";
  std::cout << "method conditions:\n";
  for (const auto& r : method_condition_residuals(pt.base(), 5))
    std::cout << "  [M" << r.order << "] " << r.label << "  residual " << sci(r.residual) << "\n";
  std::cout << "perturbation conditions assuming " << to_string(cls) << ":\n";
  for (const auto& r : perturbation_condition_residuals(pt, 5, cls))
    std::cout << "  [P" << r.order << "] " << r.label << "  residual " << sci(r.residual) << "\n";
  std::cout << "note: order-5 perturbation conditions are not enumerated\n";

  const auto got = classify_orders(pt, cls, rp.tol);
  std::cout << "(method_order, perturbed_order) = (" << got.method_order << ", " << got.perturbed_order << ") under "
            << to_string(cls) << "\n";

  const auto sr = stability_report(pt);
  auto yes = [](bool b) { return b ? "yes" : "no"; };
  std::cout << "stability:\n"
            << "  min eigenvalue of M = " << sci(sr.min_eigenvalue_M) << "\n"
            << "  b > 0: " << yes(sr.b_positive) << "\n"
            << "  a_ii >= 0: " << yes(sr.a_diag_nonneg) << "\n"
            << "  c distinct: " << yes(sr.c_distinct) << "\n"
            << "  algebraically stable: " << yes(sr.algebraically_stable()) << "\n";
  if (sr.C1 && sr.C2)
    std::cout << "  C1 = " << vector_text(*sr.C1) << "\n  C2 = " << vector_text(*sr.C2) << "\n";
  else
    std::cout << "  C1, C2: Undefined (" << sr.lemma_constants_note << ")\n";
  if (sr.coincident_abscissae)
    std::cout << "warning: c not distinct: c" << sr.coincident_abscissae->first + 1 << " = c"
              << sr.coincident_abscissae->second + 1 << "\n";

  const bool match = got.method_order == pt.design_order() && got.perturbed_order == pt.perturbation_order();
  if (!match) std::cout << "mismatch: classification differs from the declared orders\n";
  return match ? kExitOk : kExitMismatch;
}

std::vector<double> resolve_dts(const RunParams& rp, double tf) {
  if (rp.dts == "auto") return default_dt_ladder(rp.problem, tf);
  std::vector<double> out;
  for (const auto& s : split_list(rp.dts)) out.push_back(parse_double(s, "--dts"));
  if (out.empty()) throw UsageError("--dts must be 'auto' or a comma list");
  for (std::size_t i = 0; i < out.size(); ++i) {
    if (!(out[i] > 0.0)) throw UsageError("--dts entries must be positive");
    if (i > 0 && !(out[i] < out[i - 1])) throw UsageError("--dts must be strictly decreasing");
  }
  return out;
}

ResultFormat resolve_format(const RunParams& rp) {
  try {
    return parse_format(rp.format);
  } catch (const Error& e) {
    throw UsageError(e.what());
  }
}

ReferenceKind resolve_reference(const RunParams& rp) {
  try {
    return parse_reference(rp.reference);
  } catch (const Error& e) {
    throw UsageError(e.what());
  }
}

int cmd_convergence(const RunParams& rp) {
  const Resolved r = resolve(rp);
  ConvergenceStudy study;
  study.problem = rp.problem;
  study.method = r.tableau.name();
  study.strategy = rp.strategy;
  study.policy = r.policy;
  study.n = rp.nx;
  study.t_final = r.tf;
  study.dts = resolve_dts(rp, r.tf);
  study.reference_kind = resolve_reference(rp);
  if (rp.dt_ref < 0.0) throw UsageError("--dt-ref must be non-negative");
  if (rp.dt_ref > 0.0) study.dt_ref = rp.dt_ref;
  const ResultFormat format = resolve_format(rp);
  const std::string out = rp.out.empty() ? (format == ResultFormat::CSV ? "convergence.csv" : "convergence.json") : rp.out;

  StudyOptions opts;
  opts.parallel = rp.parallel;
  try {
    study = run_convergence(std::move(study), opts);
  } catch (const Error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitBlowUp;
  }
  emit_results(study, format, out);

  char slope[32] = "nan";
  if (study.fitted_slope_finest) std::snprintf(slope, sizeof slope, "%.2f", *study.fitted_slope_finest);
  std::cout << study.problem << " " << study.method << " " << study.strategy << "/" << to_string(study.policy)
            << " slope=" << slope << "\n";
  return kExitOk;
}

int cmd_solve(const RunParams& rp) {
  const Resolved r = resolve(rp);
  if (!(rp.dt > 0.0)) throw UsageError("--dt must be positive");
  const std::string out = rp.out.empty() ? "solution.csv" : rp.out;

  IntegrationResult res;
  try {
    res = integrate(r.tableau, r.problem, rp.strategy, r.policy, rp.dt, r.tf);
  } catch (const BlowUpError& e) {
    std::cerr << "blow-up: " << e.what() << " (time reached " << e.time_reached() << ")\n";
    return kExitBlowUp;
  } catch (const Error& e) {
    std::cerr << "solver failure: " << e.what() << "\n";
    return kExitBlowUp;
  }

  std::ofstream os(out);
  if (!os) throw Error("cannot open '" + out + "' for writing");
  const auto& p = r.problem;
  const int comps = static_cast<int>(p.components.size());
  const int n = p.dimension / comps;
  const Vector x = p.grid ? p.grid->points() : Vector::Zero(n);
  os << "x";
  for (const auto& c : p.components) os << "," << c;
  os << "\n";
  char buf[40];
  for (int j = 0; j < n; ++j) {
    std::snprintf(buf, sizeof buf, "%.17g", x(j));
    os << buf;
    for (int k = 0; k < comps; ++k) {
      std::snprintf(buf, sizeof buf, "%.17g", res.final_state(k * n + j));
      os << "," << buf;
    }
    os << "\n";
  }
  if (!os) throw Error("failed writing '" + out + "'");

  const auto& st = res.stats;
  std::cout << "t=" << r.tf << " steps=" << res.steps << " dt=" << res.dt << " max=" << res.final_state.maxCoeff()
            << " min=" << res.final_state.minCoeff() << "\n"
            << "linear_solves=" << st.linear_solves << " factorizations=" << st.factorizations
            << " newton_iters=" << st.newton_iters << " max_residual=" << sci(st.max_residual) << "\n";
  return kExitOk;
}

int cmd_sweep(const RunParams& rp) {
  std::vector<int> ns;
  for (const auto& s : split_list(rp.nx_list)) ns.push_back(parse_int(s, "--nx-list"));
  if (ns.empty()) throw UsageError("--nx-list must not be empty");
  for (int n : ns)
    if (n < kSweepMinPoints) throw UsageError("--nx-list entries must be at least " + std::to_string(kSweepMinPoints));
  RunParams first = rp;
  first.nx = ns.front();
  const Resolved r = resolve(first);
  if (!(rp.dt > 0.0)) throw UsageError("--dt must be positive");
  const ReferenceKind ref = resolve_reference(rp);
  const std::string out = rp.out.empty() ? "sweep.csv" : rp.out;

  std::vector<SweepRow> rows;
  try {
    rows = run_stability_sweep(rp.problem, r.tableau.name(), rp.strategy, r.policy, ns, rp.dt, r.tf, ref);
  } catch (const Error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitBlowUp;
  }
  std::ofstream os(out);
  if (!os) throw Error("cannot open '" + out + "' for writing");
  os << sweep_to_csv(rows);
  for (const auto& row : rows)
    std::cout << "n=" << row.n << " cfl=" << row.cfl << " " << (row.stable ? "stable" : "unstable")
              << " error=" << (std::isfinite(row.final_error) ? sci(row.final_error) : "inf") << "\n";
  return kExitOk;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Perturbed DIRK experiments"};
  app.require_subcommand(1);
  RunParams rp;

  auto* check = app.add_subcommand("check", "order conditions and stability report for a tableau");
  check->add_option("method,--method", rp.method, "registered method or JSON tableau file")->required();
  check->add_option("--class", rp.cls, "consistency class to assume (default: declared)");
  check->add_option("--tol", rp.tol, "residual tolerance")->capture_default_str();
  add_config_flag(check);

  auto* conv = app.add_subcommand("convergence", "dt-refinement study against a reference");
  add_problem_flags(conv, rp);
  add_nx_flag(conv, rp);
  conv->add_option("--dts", rp.dts, "'auto' or a decreasing comma list")->capture_default_str();
  conv->add_option("--reference", rp.reference, "rk4 | newton")->capture_default_str();
  conv->add_option("--dt-ref", rp.dt_ref, "reference step, 0 for the default")->capture_default_str();
  conv->add_option("--out", rp.out, "output file (default convergence.csv / .json)");
  conv->add_option("--format", rp.format, "csv | json")->capture_default_str();
  conv->add_flag("--parallel", rp.parallel, "run the dts concurrently");
  add_config_flag(conv);

  auto* solve = app.add_subcommand("solve", "single run, writes the final state");
  add_problem_flags(solve, rp);
  add_nx_flag(solve, rp);
  solve->add_option("--dt", rp.dt, "time step")->capture_default_str();
  solve->add_option("--out", rp.out, "output CSV (default solution.csv)");
  add_config_flag(solve);

  auto* sweep = app.add_subcommand("sweep", "fixed dt, increasing grid size");
  add_problem_flags(sweep, rp);
  sweep->add_option("--nx-list", rp.nx_list, "comma list of grid sizes")->required();
  sweep->add_option("--dt", rp.dt, "time step")->capture_default_str();
  sweep->add_option("--reference", rp.reference, "rk4 | newton")->capture_default_str();
  sweep->add_option("--out", rp.out, "output CSV (default sweep.csv)");
  add_config_flag(sweep);

  try {
    std::vector<std::string> args(argv + 1, argv + argc);
    args = merge_config(app, std::move(args));
    std::reverse(args.begin(), args.end());
    app.parse(args);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? kExitOk : kExitUsage;
  } catch (const Error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitUsage;
  }

  try {
    if (check->parsed()) return cmd_check(rp);
    if (conv->parsed()) return cmd_convergence(rp);
    if (solve->parsed()) return cmd_solve(rp);
    if (sweep->parsed()) return cmd_sweep(rp);
  } catch (const UsageError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitUsage;
  } catch (const Error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitUsage;
  }
  return kExitUsage;
}
