#pragma once

// Butcher and perturbed Butcher tableaus, order/perturbation condition
// residuals, order classification and algebraic-stability diagnostics.

#include "pdirk/core.hpp"

#include <cmath>
#include <optional>
#include <string>
#include <utility>
#include <vector>

namespace pdirk {

/// Lower-triangular Runge-Kutta coefficients (A, b). Abscissae are always
/// recomputed from A, never stored.
class Tableau {
 public:
  Tableau(std::string name, Matrix A, Vector b) : name_(std::move(name)), A_(std::move(A)), b_(std::move(b)) {
    if (A_.rows() != A_.cols()) throw Error("tableau '" + name_ + "': A must be square");
    if (A_.rows() < 1) throw Error("tableau '" + name_ + "': at least one stage required");
    if (b_.size() != A_.rows()) throw Error("tableau '" + name_ + "': length(b) must equal the stage count");
    for (Eigen::Index i = 0; i < A_.rows(); ++i)
      for (Eigen::Index j = i + 1; j < A_.cols(); ++j)
        if (A_(i, j) != 0.0) throw Error("tableau '" + name_ + "': A must be lower triangular");
  }

  const std::string& name() const noexcept { return name_; }
  const Matrix& A() const noexcept { return A_; }
  const Vector& b() const noexcept { return b_; }
  int stages() const noexcept { return static_cast<int>(b_.size()); }

 private:
  std::string name_;
  Matrix A_;
  Vector b_;
};

/// c_i = sum_j a_ij.
inline Vector abscissae(const Tableau& t) { return t.A().rowwise().sum(); }

/// Splitting A = Atilde + Aeps, where stages use the true f with Atilde and
/// the surrogate f_eps with Aeps. There is no b^eps: the update uses f only.
class PerturbedTableau {
 public:
  PerturbedTableau(Tableau base, Matrix Aeps, int design_order, int perturbation_order,
                   ConsistencyClass consistency_class)
      : base_(std::move(base)),
        Aeps_(std::move(Aeps)),
        design_order_(design_order),
        perturbation_order_(perturbation_order),
        class_(consistency_class) {
    const auto s = base_.stages();
    if (Aeps_.rows() != s || Aeps_.cols() != s)
      throw Error("tableau '" + name() + "': Aeps must have the same shape as A");
    for (Eigen::Index i = 0; i < s; ++i)
      for (Eigen::Index j = i + 1; j < s; ++j)
        if (Aeps_(i, j) != 0.0) throw Error("tableau '" + name() + "': Aeps must be lower triangular");
    if (design_order_ < 1 || perturbation_order_ < 1)
      throw Error("tableau '" + name() + "': orders must be >= 1");
  }

  const Tableau& base() const noexcept { return base_; }
  const std::string& name() const noexcept { return base_.name(); }
  const Matrix& A() const noexcept { return base_.A(); }
  const Matrix& Aeps() const noexcept { return Aeps_; }
  Matrix Atilde() const { return base_.A() - Aeps_; }
  const Vector& b() const noexcept { return base_.b(); }
  int stages() const noexcept { return base_.stages(); }
  int design_order() const noexcept { return design_order_; }
  int perturbation_order() const noexcept { return perturbation_order_; }
  ConsistencyClass consistency_class() const noexcept { return class_; }

  /// c^eps_i = sum_j aeps_ij.
  Vector perturbation_abscissae() const { return Aeps_.rowwise().sum(); }

  bool is_diagonally_perturbed() const { return Aeps_.isDiagonal(0.0); }

 private:
  Tableau base_;
  Matrix Aeps_;
  int design_order_;
  int perturbation_order_;
  ConsistencyClass class_;
};

enum class ConditionKind { Method, Perturbation };

struct ConditionResidual {
  std::string label;
  ConditionKind kind;
  int order;
  /// The condition is needed whenever the assumed consistency class is at most
  /// this class. "b.ceps = 0" (vanishes if tau = 0) carries None, conditions
  /// that vanish if tau_u = 0 carry TauZero, unconditional ones TauAndDerivZero.
  ConsistencyClass required_class;
  double residual;
};

namespace detail {

inline void check_order(int up_to_order) {
  if (up_to_order < 1 || up_to_order > 5)
    throw Error("order must be in [1, 5], got " + std::to_string(up_to_order));
}

}  // namespace detail

/// Residuals |lhs - rhs| of the classical order conditions up to the requested
/// order: the rows of the perturbed-DIRK order table through order 4 and the
/// nine rooted-tree conditions of order 5.
inline std::vector<ConditionResidual> method_condition_residuals(const Tableau& t, int up_to_order) {
  detail::check_order(up_to_order);
  const Matrix& A = t.A();
  const Vector& b = t.b();
  const Vector e = Vector::Ones(t.stages());
  const Vector c = abscissae(t);
  const Vector c2 = c.cwiseProduct(c);
  const Vector c3 = c2.cwiseProduct(c);
  const Vector Ac = A * c;

  std::vector<ConditionResidual> out;
  auto add = [&](int order, std::string label, double lhs, double rhs) {
    if (order <= up_to_order)
      out.push_back({std::move(label), ConditionKind::Method, order, ConsistencyClass::TauAndDerivZero,
                     std::abs(lhs - rhs)});
  };
  add(1, "b.e = 1", b.dot(e), 1.0);
  add(2, "b.c = 1/2", b.dot(c), 1.0 / 2);
  add(3, "b.A.c = 1/6", b.dot(Ac), 1.0 / 6);
  add(3, "b.(c*c) = 1/3", b.dot(c2), 1.0 / 3);
  add(4, "b.A.A.c = 1/24", b.dot(A * Ac), 1.0 / 24);
  add(4, "b.A.(c*c) = 1/12", b.dot(A * c2), 1.0 / 12);
  add(4, "b.(A.c*c) = 1/8", b.dot(Ac.cwiseProduct(c)), 1.0 / 8);
  add(4, "b.(c*c*c) = 1/4", b.dot(c3), 1.0 / 4);
  if (up_to_order >= 5) {
    add(5, "b.(c*c*c*c) = 1/5", b.dot(c3.cwiseProduct(c)), 1.0 / 5);
    add(5, "b.(c*c*A.c) = 1/10", b.dot(c2.cwiseProduct(Ac)), 1.0 / 10);
    add(5, "b.(c*A.(c*c)) = 1/15", b.dot(c.cwiseProduct(A * c2)), 1.0 / 15);
    add(5, "b.(c*A.A.c) = 1/30", b.dot(c.cwiseProduct(A * Ac)), 1.0 / 30);
    add(5, "b.(A.c*A.c) = 1/20", b.dot(Ac.cwiseProduct(Ac)), 1.0 / 20);
    add(5, "b.A.(c*c*c) = 1/20", b.dot(A * c3), 1.0 / 20);
    add(5, "b.A.(c*A.c) = 1/40", b.dot(A * c.cwiseProduct(Ac)), 1.0 / 40);
    add(5, "b.A.A.(c*c) = 1/60", b.dot(A * (A * c2)), 1.0 / 60);
    add(5, "b.A.A.A.c = 1/120", b.dot(A * (A * Ac)), 1.0 / 120);
  }
  return out;
}

/// Residuals of the perturbation conditions through order min(up_to_order, 4)
/// that remain under the assumed consistency class. Order-5 perturbation
/// conditions are not enumerated.
inline std::vector<ConditionResidual> perturbation_condition_residuals(const PerturbedTableau& pt, int up_to_order,
                                                                       ConsistencyClass assumed) {
  detail::check_order(up_to_order);
  const Matrix& A = pt.A();
  const Matrix& E = pt.Aeps();
  const Vector& b = pt.b();
  const Vector c = abscissae(pt.base());
  const Vector ce = pt.perturbation_abscissae();
  const Vector Ec = E * c;

  std::vector<ConditionResidual> out;
  auto add = [&](int order, std::string label, ConsistencyClass required, double lhs) {
    if (order <= up_to_order && assumed <= required)
      out.push_back({std::move(label), ConditionKind::Perturbation, order, required, std::abs(lhs)});
  };
  using CC = ConsistencyClass;
  add(2, "b.ceps = 0", CC::None, b.dot(ce));
  add(3, "b.Aeps.c = 0", CC::TauZero, b.dot(Ec));
  add(4, "b.A.Aeps.c = 0", CC::TauZero, b.dot(A * Ec));
  add(4, "b.Aeps.A.c = 0", CC::TauZero, b.dot(E * (A * c)));
  add(4, "b.Aeps.Aeps.c = 0", CC::TauZero, b.dot(E * Ec));
  add(4, "b.(c*Aeps.c) = 0", CC::TauZero, b.dot(c.cwiseProduct(Ec)));
  add(4, "b.Aeps.(c*c) = 0", CC::TauAndDerivZero, b.dot(E * c.cwiseProduct(c)));
  return out;
}

struct OrderClassification {
  int method_order = 0;
  int perturbed_order = 0;
};

/// method_order: largest p <= 5 with every method condition of order <= p
/// below tol. perturbed_order: largest p <= method_order with every remaining
/// perturbation condition of order <= min(p, 4) below tol.
inline OrderClassification classify_orders(const PerturbedTableau& pt, ConsistencyClass assumed,
                                           double tol = 1e-10) {
  OrderClassification out;
  const auto m = method_condition_residuals(pt.base(), 5);
  const auto p = perturbation_condition_residuals(pt, 5, assumed);
  auto all_below = [tol](const std::vector<ConditionResidual>& rs, int order) {
    for (const auto& r : rs)
      if (r.order == order && !(r.residual < tol)) return false;
    return true;
  };
  for (int k = 1; k <= 5 && all_below(m, k); ++k) out.method_order = k;
  for (int k = 1; k <= out.method_order && all_below(p, k); ++k) out.perturbed_order = k;
  return out;
}

struct StabilityReport {
  Matrix M_matrix;
  double min_eigenvalue_M = 0.0;
  bool b_positive = false;
  bool a_diag_nonneg = false;
  bool c_distinct = false;
  /// First pair (i, j), 0-based, with |c_i - c_j| below the distinctness tolerance.
  std::optional<std::pair<int, int>> coincident_abscissae;
  std::optional<Vector> C1;
  std::optional<Vector> C2;
  std::string lemma_constants_note;

  /// b > 0 and M positive semidefinite within tol.
  bool algebraically_stable(double tol = 1e-10) const { return b_positive && min_eigenvalue_M >= -tol; }
  /// Every coefficient condition required for B-stability of a DIRK method.
  bool all_coefficient_conditions(double tol = 1e-10) const {
    return algebraically_stable(tol) && a_diag_nonneg && c_distinct;
  }
};

inline StabilityReport stability_report(const PerturbedTableau& pt, double c_tol = 1e-10) {
  const Matrix& A = pt.A();
  const Vector& b = pt.b();
  const auto s = pt.stages();
  StabilityReport r;

  const Matrix B = b.asDiagonal();
  const Matrix M = B * A + A.transpose() * B - b * b.transpose();
  r.M_matrix = 0.5 * (M + M.transpose());
  Eigen::SelfAdjointEigenSolver<Matrix> eig(r.M_matrix, Eigen::EigenvaluesOnly);
  r.min_eigenvalue_M = eig.eigenvalues().minCoeff();

  r.b_positive = (b.array() > 0.0).all();
  r.a_diag_nonneg = (A.diagonal().array() >= 0.0).all();

  const Vector c = abscissae(pt.base());
  r.c_distinct = true;
  for (int i = 0; i < s && r.c_distinct; ++i)
    for (int j = i + 1; j < s; ++j)
      if (std::abs(c(i) - c(j)) < c_tol) {
        r.c_distinct = false;
        r.coincident_abscissae = std::make_pair(i, j);
        break;
      }

  // C1 = (I - |I - Ahat A^-1|)^-1 |Ahat A^-1| e,
  // C2 = (I - |I - Ahat A^-1|)^-1 |Ahat A^-1 Aeps| e, with Ahat = diag(A).
  Eigen::FullPivLU<Matrix> lu_a(A);
  if (!lu_a.isInvertible()) {
    r.lemma_constants_note = "A is singular";
    return r;
  }
  const Matrix I = Matrix::Identity(s, s);
  const Matrix AhatAinv = Matrix(A.diagonal().asDiagonal()) * lu_a.inverse();
  const Matrix X = I - (I - AhatAinv).cwiseAbs();
  Eigen::FullPivLU<Matrix> lu_x(X);
  if (!lu_x.isInvertible()) {
    r.lemma_constants_note = "I - |I - Ahat A^-1| is singular";
    return r;
  }
  const Vector e = Vector::Ones(s);
  r.C1 = lu_x.solve(AhatAinv.cwiseAbs() * e);
  r.C2 = lu_x.solve((AhatAinv * pt.Aeps()).cwiseAbs() * e);
  return r;
}

}  // namespace pdirk
