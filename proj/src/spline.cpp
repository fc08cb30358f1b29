#include "fsipinn/spline.hpp"

#include <algorithm>
#include <cassert>
#include <stdexcept>

namespace fsipinn::spline {

std::vector<double> uniform_knots(double lo, double hi, int grid_points, int order) {
  if (grid_points < 2) throw std::invalid_argument("uniform_knots: need at least 2 grid points");
  if (!(hi > lo)) throw std::invalid_argument("uniform_knots: hi must exceed lo");
  const double step = (hi - lo) / static_cast<double>(grid_points - 1);
  std::vector<double> knots(static_cast<std::size_t>(grid_points + 2 * order));
  for (std::size_t i = 0; i < knots.size(); ++i) {
    knots[i] = lo + (static_cast<double>(i) - order) * step;
  }
  // Pin the interior endpoints so they are reproduced exactly.
  knots[static_cast<std::size_t>(order)] = lo;
  knots[static_cast<std::size_t>(order + grid_points - 1)] = hi;
  return knots;
}

namespace {
inline double safe_ratio(double num, double den) { return den == 0.0 ? 0.0 : num / den; }
}  // namespace

double basis(std::span<const double> knots, int order, Index i, double x) {
  const auto k = [&](Index idx) { return knots[static_cast<std::size_t>(idx)]; };
  if (order == 0) return (k(i) <= x && x < k(i + 1)) ? 1.0 : 0.0;
  const double left = safe_ratio(x - k(i), k(i + order) - k(i));
  const double right = safe_ratio(k(i + order + 1) - x, k(i + order + 1) - k(i + 1));
  double value = 0.0;
  if (left != 0.0) value += left * basis(knots, order - 1, i, x);
  if (right != 0.0) value += right * basis(knots, order - 1, i + 1, x);
  return value;
}

void basis_all(std::span<const double> knots, int order, double x, std::span<double> out) {
  const Index m = static_cast<Index>(knots.size());
  assert(static_cast<Index>(out.size()) == m - order - 1);
  // Work buffer holds the current level, m-1 entries at order 0.
  double work[64];
  double* level = work;
  std::vector<double> heap;
  if (m > 64) {
    heap.resize(static_cast<std::size_t>(m));
    level = heap.data();
  }
  for (Index i = 0; i + 1 < m; ++i) level[i] = (knots[i] <= x && x < knots[i + 1]) ? 1.0 : 0.0;
  for (int d = 1; d <= order; ++d) {
    for (Index i = 0; i + d + 1 < m; ++i) {
      const double left = safe_ratio(x - knots[i], knots[i + d] - knots[i]);
      const double right = safe_ratio(knots[i + d + 1] - x, knots[i + d + 1] - knots[i + 1]);
      level[i] = left * level[i] + right * level[i + 1];
    }
  }
  std::copy_n(level, out.size(), out.begin());
}

SlopeCoefficients slope_coefficients(std::span<const double> knots, int order, Index r) {
  const auto k = [&](Index idx) { return knots[static_cast<std::size_t>(idx)]; };
  SlopeCoefficients c;
  c.left = safe_ratio(static_cast<double>(order), k(r + order) - k(r));
  c.right = safe_ratio(static_cast<double>(order), k(r + order + 1) - k(r + 1));
  return c;
}

}  // namespace fsipinn::spline
