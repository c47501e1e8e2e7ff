#pragma once

// Built-in perturbed DIRK methods.
//
// Naming: D = diagonal Aeps, A = designed for tau(u_n) = 0, B = designed for
// tau(u_n) = tau_u(u_n) = 0; then <stages>s<order>p<perturbation order>m.

#include "pdirk/tableau.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <numbers>
#include <string>
#include <string_view>
#include <vector>

namespace pdirk {

inline const std::vector<std::string>& registered_method_names() {
  static const std::vector<std::string> names{"A2s3p3m", "A4s4p4m", "B3s4p4m", "B6s5p5m",
                                              "D1s2p1m", "D2s3p1m", "D3s4p1m"};
  return names;
}

namespace detail {

inline Matrix rows(std::initializer_list<std::initializer_list<double>> r) {
  const auto n = static_cast<Eigen::Index>(r.size());
  Matrix m = Matrix::Zero(n, n);
  Eigen::Index i = 0;
  for (const auto& row : r) {
    Eigen::Index j = 0;
    for (double v : row) m(i, j++) = v;
    ++i;
  }
  return m;
}

inline Vector vec(std::initializer_list<double> v) {
  Vector out(static_cast<Eigen::Index>(v.size()));
  Eigen::Index i = 0;
  for (double x : v) out(i++) = x;
  return out;
}

inline std::string lower(std::string_view s) {
  std::string out(s);
  std::transform(out.begin(), out.end(), out.begin(), [](unsigned char ch) { return std::tolower(ch); });
  return out;
}

// Two-stage third-order SDIRK parameter.
inline double sdirk3_gamma() { return (std::numbers::sqrt3 + 3.0) / 6.0; }
// Three-stage fourth-order SDIRK parameter, (2/sqrt 3) cos(pi/18).
inline double sdirk4_alpha() { return 2.0 / std::numbers::sqrt3 * std::cos(std::numbers::pi / 18.0); }

inline Matrix diagonal_part(const Matrix& A) { return Matrix(A.diagonal().asDiagonal()); }

inline Tableau sdirk3_base(std::string name) {
  const double g = sdirk3_gamma();
  return Tableau(std::move(name), rows({{g}, {1.0 - 2.0 * g, g}}), vec({0.5, 0.5}));
}

inline Tableau sdirk4_base(std::string name) {
  const double a = sdirk4_alpha();
  const double d = (1.0 + a) / 2.0;
  const Matrix A = rows({{d}, {-a / 2.0, d}, {1.0 + a, -(1.0 + 2.0 * a), d}});
  const double b1 = 1.0 / (6.0 * a * a);
  return Tableau(std::move(name), A, vec({b1, 1.0 - 2.0 * b1, b1}));
}

inline PerturbedTableau make_A2s3p3m() {
  const double g = sdirk3_gamma();
  const Matrix Aeps = rows({{g}, {-1.0, g}});
  const Matrix Atilde = rows({{0.0}, {2.0 * (1.0 - g), 0.0}});
  return PerturbedTableau(Tableau("A2s3p3m", Atilde + Aeps, vec({0.5, 0.5})), Aeps, 3, 3,
                          ConsistencyClass::TauZero);
}

inline PerturbedTableau make_A4s4p4m() {
  constexpr double r3 = std::numbers::sqrt3;
  const Matrix Aeps = rows({{0.5},
                            {-1.0, 0.5},
                            {-2.0, (2.0 * r3 - 1.0) / 2.0, 0.5},
                            {2.0 * r3 / 3.0, -2.0, -r3 / 3.0, 0.5}});
  const Matrix Atilde = rows({{0.0},
                              {0.5, 0.0},
                              {1.5, 1.5 - r3, 0.0},
                              {0.0, 2.0 - r3 / 3.0, 0.0, 0.0}});
  const Vector b = vec({(8.0 - r3) / 12.0, 1.0 / 6.0, 1.0 / 6.0, r3 / 12.0});
  return PerturbedTableau(Tableau("A4s4p4m", Atilde + Aeps, b), Aeps, 4, 4, ConsistencyClass::TauZero);
}

inline PerturbedTableau make_B3s4p4m() {
  const double a = sdirk4_alpha();
  const double beta = 9 * std::pow(a, 5) + 12 * std::pow(a, 4) - 10 * std::pow(a, 3) - 16 * a * a - 3 * a;
  const double d = (1.0 + a) / 2.0;
  Tableau base = sdirk4_base("B3s4p4m");
  const Matrix Aeps = rows({{d}, {1.0 - 1.5 * a, d}, {2.0, beta, d}});
  return PerturbedTableau(std::move(base), Aeps, 4, 4, ConsistencyClass::TauAndDerivZero);
}

inline PerturbedTableau make_B6s5p5m() {
  // First stage is explicit (a_11 = 0). The diagonal of Aeps is set equal to
  // the diagonal of A so that every implicit solve involves only f_eps.
  constexpr double d = 0.27805384113645232493158618493986;
  Matrix A = Matrix::Zero(6, 6);
  A(1, 0) = 0.27805384113645232493158618529853;
  A(2, 0) = 0.02563926406019955725750334911617;
  A(2, 1) = -0.067907140638319686154545423375094;
  A(3, 0) = 0.46288174618101471080052219497850;
  A(3, 1) = 0.15087176590423228508246469950504;
  A(3, 2) = -0.27175112661133156378059421421552;
  A(4, 0) = 0.6654544604241820026463783076237;
  A(4, 1) = 7.0986011802448438993227520426319;
  A(4, 2) = -1.7957575925396292876887601404390;
  A(4, 3) = -5.0184428584790110818489484844777;
  const Vector b = vec({0.10731715308473725999947312385777, 0.87998595709151287098426474073169,
                        0.19747904757470600132499354237387, -0.41841860591874017976596344143339,
                        -0.044417392968668277474354150469769, d});
  A.row(5) = b.transpose();
  for (int i = 1; i < 6; ++i) A(i, i) = d;

  Matrix E = Matrix::Zero(6, 6);
  E(1, 0) = 1.278053841136452;
  E(2, 0) = -0.973638114602592;
  E(2, 1) = -0.072668314073363;
  E(3, 0) = 1.462881746181012;
  E(3, 1) = 0.818779639959430;
  E(3, 2) = -1.271751126611331;
  E(4, 0) = 0.079158039988964;
  E(4, 1) = 8.098601175558391;
  E(4, 2) = -0.795757633006629;
  E(4, 3) = -4.026427771797058;
  E(5, 0) = -0.003644498479103;
  E(5, 1) = 1.823599336039399;
  E(5, 2) = 1.194982506135020;
  E(5, 3) = -1.418418578492855;
  E(5, 4) = 0.011900225406260;
  for (int i = 1; i < 6; ++i) E(i, i) = d;
  return PerturbedTableau(Tableau("B6s5p5m", A, b), E, 5, 5, ConsistencyClass::TauAndDerivZero);
}

inline PerturbedTableau diagonally_perturbed(Tableau base, int design_order) {
  Matrix Aeps = diagonal_part(base.A());
  return PerturbedTableau(std::move(base), std::move(Aeps), design_order, 1, ConsistencyClass::None);
}

}  // namespace detail

/// Case-insensitive lookup; IMR, SDIRK3 and SDIRK4 alias the D-methods.
inline PerturbedTableau registry_lookup(std::string_view name) {
  const std::string key = detail::lower(name);
  if (key == "a2s3p3m") return detail::make_A2s3p3m();
  if (key == "a4s4p4m") return detail::make_A4s4p4m();
  if (key == "b3s4p4m") return detail::make_B3s4p4m();
  if (key == "b6s5p5m") return detail::make_B6s5p5m();
  if (key == "d1s2p1m" || key == "imr" || key == "pimr")
    return detail::diagonally_perturbed(Tableau("D1s2p1m", detail::rows({{0.5}}), detail::vec({1.0})), 2);
  if (key == "d2s3p1m" || key == "sdirk3" || key == "psdirk3")
    return detail::diagonally_perturbed(detail::sdirk3_base("D2s3p1m"), 3);
  if (key == "d3s4p1m" || key == "sdirk4" || key == "psdirk4")
    return detail::diagonally_perturbed(detail::sdirk4_base("D3s4p1m"), 4);

  std::string msg = "unknown method '" + std::string(name) + "'; available:";
  for (const auto& n : registered_method_names()) msg += " " + n;
  msg += " (aliases: IMR, SDIRK3, SDIRK4)";
  throw Error(msg);
}

}  // namespace pdirk
