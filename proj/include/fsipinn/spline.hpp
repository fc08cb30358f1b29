#pragma once

// B-spline basis evaluation via the Cox-de Boor recursion.

#include <Eigen/Core>

#include <span>
#include <vector>

namespace fsipinn::spline {

using Index = Eigen::Index;

/// Knot rows for a set of inputs. Row j holds the nondecreasing knots used by
/// input j; every row has the same length.
struct SplineGrid {
  int order = 3;
  Index inputs = 0;
  Index knots_per_input = 0;
  std::vector<double> knots;  // inputs x knots_per_input, row-major

  const double* row(Index j) const { return knots.data() + j * knots_per_input; }
  double* row(Index j) { return knots.data() + j * knots_per_input; }
  /// Number of basis functions of the given order on one knot row.
  Index basis_count(int at_order) const { return knots_per_input - at_order - 1; }
  /// Interior span [knot(order), knot(m - order - 1)] of input j.
  double interior_lo(Index j) const { return row(j)[order]; }
  double interior_hi(Index j) const { return row(j)[knots_per_input - order - 1]; }
};

/// Uniform knots: `grid_points` points spanning [lo, hi], extended by `order`
/// knots of the same spacing on each side.
std::vector<double> uniform_knots(double lo, double hi, int grid_points, int order);

/// B_i^d(x) by direct recursion. 0/0 terms are taken as 0; the order-0 case
/// is the indicator of [knot_i, knot_{i+1}).
double basis(std::span<const double> knots, int order, Index i, double x);

/// All order-d basis values at x into out (size knots.size() - order - 1),
/// computed bottom-up in one pass.
void basis_all(std::span<const double> knots, int order, double x, std::span<double> out);

/// Derivative coefficients: d/dx B_r^d = a_r B_r^{d-1} - b_r B_{r+1}^{d-1}.
/// Returns (a_r, b_r) with zero where the knot difference vanishes.
struct SlopeCoefficients {
  double left = 0.0;
  double right = 0.0;
};
SlopeCoefficients slope_coefficients(std::span<const double> knots, int order, Index r);

}  // namespace fsipinn::spline
