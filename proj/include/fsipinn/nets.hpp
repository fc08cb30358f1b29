#pragma once

// Network families: tanh MLPs and KAN layers with learnable cubic B-spline
// edge activations.

#include <array>
#include <cstdint>
#include <iosfwd>
#include <memory>
#include <random>
#include <string>
#include <vector>

#include "fsipinn/autodiff.hpp"
#include "fsipinn/spline.hpp"

namespace fsipinn::nets {

using ad::Index;
using ad::Matrix;
using ad::Tape;
using ad::Var;

enum class Activation { Tanh, BSpline };

const char* to_string(Activation a);
Activation activation_from_string(const std::string& s);

struct Bounds {
  double lo = 0.0;
  double hi = 1.0;
};

/// Default (t, x, y) bounds of the cavity problem: t in [0, 10], x, y in [0, 1].
inline constexpr std::array<Bounds, 3> kCavityBounds{{{0.0, 10.0}, {0.0, 1.0}, {0.0, 1.0}}};

struct NetworkSpec {
  std::vector<int> widths;
  Activation activation = Activation::Tanh;
  int spline_order = 3;
  /// Uniform grid points across each input's interior range. An edge then
  /// carries spline_order + grid_size - 1 basis functions (10 for 3 and 8).
  int grid_size = 8;
  std::array<Bounds, 3> input_bounds = kCavityBounds;

  int basis_per_edge() const { return spline_order + grid_size - 1; }
  int knots_per_input() const { return grid_size + 2 * spline_order; }
  /// Throws std::invalid_argument on inconsistent settings.
  void validate() const;
};

/// Normal(0, 2 / (fan_in + fan_out)) entries, fan_out x fan_in.
Matrix xavier_init(int fan_in, int fan_out, std::mt19937_64& rng);

/// Affine map of each coordinate: lo -> -1, hi -> +1. Values outside the
/// bounds extrapolate linearly.
std::array<double, 3> normalize_input(const std::array<double, 3>& x, const std::array<Bounds, 3>& bounds);

/// Learnable parameter count.
///   MLP: sum over layers of (fan_in + 1) * fan_out.
///   KAN: sum over layers of fan_in * fan_out * (basis_per_edge + 1), i.e.
///        spline coefficients plus one base scale per edge. Knots are not
///        learnable and are not counted.
std::int64_t param_count(const NetworkSpec& spec);
std::string param_count_formula(const NetworkSpec& spec);

struct DenseLayer {
  Matrix weight;  // fan_out x fan_in
  Matrix bias;    // 1 x fan_out
};

/// One KAN layer. Column j of the weight is the base scale of edge (i, j);
/// columns fan_in + j * nb + r hold the spline coefficient c_{i j r}. Knots
/// are shared by all edges leaving the same input unit.
struct KanLayer {
  Matrix weight;  // fan_out x fan_in * (1 + nb)
  std::shared_ptr<const spline::SplineGrid> grid;

  Index fan_in() const { return grid->inputs; }
  Index fan_out() const { return weight.rows(); }
  Index basis_count() const { return grid->basis_count(grid->order); }
};

/// One edge activation phi(x) = base_scale * silu(x) + sum_i c_i B_i(x).
struct KanEdge {
  double base_scale = 1.0;
  std::vector<double> coeffs;
  std::vector<double> knots;
  int order = 3;
};

double kan_activation(const KanEdge& edge, double x);
/// On-tape version: x is B x 1, base_scale 1 x 1, coeffs 1 x nb.
Var kan_activation(const Var& x, const Var& base_scale, const Var& coeffs,
                   std::shared_ptr<const spline::SplineGrid> grid);

/// output_i = sum_j phi_ij(z_j); z is B x fan_in, weight in KanLayer layout.
Var kan_layer_forward(const Var& z, const Var& weight, std::shared_ptr<const spline::SplineGrid> grid);
Var dense_forward(const Var& z, const Var& weight, const Var& bias);

/// Refits one KAN layer to a batch of its inputs: for every input unit, new
/// uniform knots between the batch's 1st and 99th percentiles (extended by
/// `order` knots each side) and least-squares spline coefficients that
/// reproduce the old edge functions on the batch and on 4 x basis-count
/// evenly spaced points across the new span. Units whose batch values
/// are (nearly) identical keep their knots.
void update_grid(KanLayer& layer, const Matrix& layer_input, int grid_size);

double percentile(std::vector<double> values, double q);

class Network {
 public:
  Network() = default;
  static Network create(const NetworkSpec& spec, std::uint64_t seed);

  const NetworkSpec& spec() const { return spec_; }
  std::uint64_t seed() const { return seed_; }

  std::vector<DenseLayer>& dense_layers() { return dense_; }
  const std::vector<DenseLayer>& dense_layers() const { return dense_; }
  std::vector<KanLayer>& kan_layers() { return kan_; }
  const std::vector<KanLayer>& kan_layers() const { return kan_; }

  /// Learnable matrices in a fixed order (dense: weight, bias per layer;
  /// KAN: weight per layer).
  std::vector<Matrix*> parameters();
  std::vector<const Matrix*> parameters() const;
  std::int64_t parameter_count() const;

  /// Puts every parameter on the tape as a leaf, in parameters() order.
  std::vector<Var> bind(Tape& tape) const;

  /// input is B x 3 raw (t, x, y); output is B x 3 (u, v, p).
  Var forward(const std::vector<Var>& params, const Var& input) const;
  Var forward(const std::vector<Var>& params, const Var& t, const Var& x, const Var& y) const;

  /// Tape-free evaluation for large batches.
  Matrix evaluate(const Matrix& input) const;

  /// Grid update across all KAN layers on a batch of raw inputs. No-op for MLPs.
  void update_grid(const Matrix& input);

  void write(std::ostream& os) const;
  static Network read(std::istream& is);

  friend bool operator==(const Network& a, const Network& b);

 private:
  Matrix normalize(const Matrix& input) const;
  Var normalize(const Var& input) const;

  NetworkSpec spec_;
  std::uint64_t seed_ = 0;
  std::vector<DenseLayer> dense_;
  std::vector<KanLayer> kan_;
};

}  // namespace fsipinn::nets
