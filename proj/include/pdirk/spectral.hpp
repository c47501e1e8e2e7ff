#pragma once

// Dense Fourier spectral differentiation matrices on uniform periodic grids.

#include "pdirk/core.hpp"

#include <cmath>
#include <numbers>

namespace pdirk {

/// Uniform grid x_j = x_left + j (x_right - x_left) / n, j = 0..n-1, on the
/// periodic interval [x_left, x_right).
class PeriodicGrid {
 public:
  PeriodicGrid(int n, double x_left, double x_right) : n_(n), x_left_(x_left), x_right_(x_right) {
    if (n < 4) throw Error("periodic grid needs n >= 4, got " + std::to_string(n));
    if (!(x_right > x_left)) throw Error("periodic grid needs x_right > x_left");
  }

  int size() const noexcept { return n_; }
  double x_left() const noexcept { return x_left_; }
  double x_right() const noexcept { return x_right_; }
  double length() const noexcept { return x_right_ - x_left_; }
  double spacing() const noexcept { return length() / n_; }

  Vector points() const {
    Vector x(n_);
    for (int j = 0; j < n_; ++j) x(j) = x_left_ + j * spacing();
    return x;
  }

 private:
  int n_;
  double x_left_;
  double x_right_;
};

struct DiffMatrices {
  Matrix Dx;
  Matrix Dxx;
  PeriodicGrid grid;
};

/// Dx from the periodic sinc interpolant: off-diagonal entries
/// (pi/L) (-1)^(j-k) csc(pi (j-k)/n) for odd n, cot(...) for even n. Dxx = Dx^2.
inline DiffMatrices build_diff_matrices(const PeriodicGrid& grid) {
  const int n = grid.size();
  const double scale = std::numbers::pi / grid.length();
  Matrix Dx = Matrix::Zero(n, n);
  for (int j = 0; j < n; ++j) {
    for (int k = 0; k < n; ++k) {
      if (j == k) continue;
      const int d = j - k;
      const double sign = (d % 2 == 0) ? 1.0 : -1.0;
      const double arg = std::numbers::pi * d / n;
      const double trig = (n % 2 == 1) ? 1.0 / std::sin(arg) : 1.0 / std::tan(arg);
      Dx(j, k) = scale * sign * trig;
    }
  }
  Matrix Dxx = Dx * Dx;
  return DiffMatrices{std::move(Dx), std::move(Dxx), grid};
}

}  // namespace pdirk
