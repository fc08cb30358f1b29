#pragma once

// Reverse-mode automatic differentiation on a dynamic tape.
//
// Every value is a dense row-major matrix (a scalar is 1x1). Backward rules
// are written in terms of the same differentiable ops, so grad() called with
// create_graph = true records the adjoint computation on the tape and its
// results can be differentiated again (grad-of-grad).
//
// Broadcasting is deliberately narrow: elementwise ops accept equal shapes or
// a 1x1 operand paired with any array. Row-vector expansion goes through the
// explicit broadcast_rows().

#include <Eigen/Dense>

#include <cstdint>
#include <deque>
#include <memory>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

namespace fsipinn {
namespace spline {
struct SplineGrid;
}

namespace ad {

using Index = Eigen::Index;
using Matrix = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

struct Shape {
  Index rows = 0;
  Index cols = 0;
  friend bool operator==(const Shape&, const Shape&) = default;
  std::string str() const;
};

/// Raised when operand shapes are incompatible; the message names both shapes.
class ShapeError : public std::invalid_argument {
 public:
  ShapeError(const std::string& op, Shape a, Shape b);
  ShapeError(const std::string& op, Shape a, const std::string& detail);
};

class AutodiffError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

enum class OpTag : std::uint8_t {
  Leaf,
  Constant,
  Add,
  Sub,
  Mul,
  Div,
  Neg,
  Scale,
  AddScalar,
  PowConst,
  Exp,
  Log,
  MatMul,
  MatMulNT,
  MatMulTN,
  Sum,
  Mean,
  Tanh,
  Sigmoid,
  Silu,
  Square,
  ConcatCols,
  ConcatRows,
  SliceCols,
  SliceRows,
  BroadcastScalar,
  BroadcastRows,
  SumRows,
  ScaleCols,
  BSplineBasis,
  SplineSlope,
  SplineSlopeT,
  GroupSum,
  GroupRepeat,
};

const char* op_name(OpTag tag);

class Tape;

/// Handle to a node on a tape. Cheap to copy; valid while the tape holds the node.
class Var {
 public:
  Var() = default;

  const Matrix& value() const;
  Shape shape() const;
  Index rows() const { return shape().rows; }
  Index cols() const { return shape().cols; }
  double item() const;
  bool requires_grad() const;
  OpTag op() const;

  Tape* tape() const { return tape_; }
  int id() const { return id_; }
  bool valid() const { return tape_ != nullptr && id_ >= 0; }

 private:
  friend class Tape;
  Var(Tape* tape, int id) : tape_(tape), id_(id) {}
  Tape* tape_ = nullptr;
  int id_ = -1;
};

struct TapeNode {
  OpTag op = OpTag::Leaf;
  std::int32_t parents[2] = {-1, -1};
  Matrix value;
  bool requires_grad = false;
  // Op-specific replay data.
  double scalar = 0.0;
  Index arg0 = 0;
  Index arg1 = 0;
  int order = 0;
  std::shared_ptr<const spline::SplineGrid> grid;
  std::shared_ptr<const Matrix> aux;
};

/// Single-threaded recording of a computation. Nodes are appended in creation
/// order, so every parent index is smaller than its child's index.
class Tape {
 public:
  Tape() = default;
  Tape(const Tape&) = delete;
  Tape& operator=(const Tape&) = delete;

  Var leaf(Matrix value, bool requires_grad = true);
  Var constant(Matrix value);
  Var scalar(double value);

  std::size_t size() const { return nodes_.size(); }
  const TapeNode& node(int id) const;
  Var handle(int id);

  /// Drops every node created after the first `n`. Vars pointing past `n`
  /// become dangling.
  void truncate(std::size_t n);

  // Internal: used by the op implementations.
  Var push(TapeNode node);

 private:
  std::deque<TapeNode> nodes_;
};

// ---- elementwise ---------------------------------------------------------
Var add(const Var& a, const Var& b);
Var sub(const Var& a, const Var& b);
Var mul(const Var& a, const Var& b);
Var div(const Var& a, const Var& b);
Var neg(const Var& a);
Var scale(const Var& a, double c);
Var add_scalar(const Var& a, double c);
Var pow(const Var& a, double exponent);
Var pow(const Var& a, const Var& exponent);
Var exp(const Var& a);
Var log(const Var& a);
Var tanh(const Var& a);
Var sigmoid(const Var& a);
Var silu(const Var& a);
Var square(const Var& a);

Var operator+(const Var& a, const Var& b);
Var operator-(const Var& a, const Var& b);
Var operator*(const Var& a, const Var& b);
Var operator/(const Var& a, const Var& b);
Var operator-(const Var& a);
Var operator*(double c, const Var& a);
Var operator*(const Var& a, double c);
Var operator+(const Var& a, double c);
Var operator+(double c, const Var& a);
Var operator-(const Var& a, double c);
Var operator-(double c, const Var& a);

// ---- linear algebra and reductions ---------------------------------------
Var matmul(const Var& a, const Var& b);     // a * b
Var matmul_nt(const Var& a, const Var& b);  // a * b^T
Var matmul_tn(const Var& a, const Var& b);  // a^T * b
Var sum(const Var& a);
Var mean(const Var& a);
Var mse(const Var& a, const Var& b);
Var mse(const Var& a, double target);

// ---- structure -----------------------------------------------------------
Var concat_cols(std::span<const Var> parts);
Var concat_rows(std::span<const Var> parts);
Var slice_cols(const Var& a, Index begin, Index end);
Var slice_rows(const Var& a, Index begin, Index end);
Var broadcast_scalar(const Var& a, Shape shape);
Var broadcast_rows(const Var& row, Index rows);
Var sum_rows(const Var& a);
/// Multiplies column j of `a` by factors(j); `factors` is a constant 1 x cols row.
Var scale_cols(const Var& a, const Matrix& factors);

// ---- B-spline machinery (see spline.hpp) ---------------------------------
/// z: B x n. Returns B x n*nb where block j holds the order-`order` basis of
/// input column j on that column's knot row; nb = knots_per_input - order - 1.
Var bspline_basis(const Var& z, std::shared_ptr<const spline::SplineGrid> grid, int order);
/// Maps order-(d-1) basis blocks to the derivative of the order-d basis.
Var spline_slope(const Var& lower, std::shared_ptr<const spline::SplineGrid> grid, int order);
Var spline_slope_t(const Var& g, std::shared_ptr<const spline::SplineGrid> grid, int order);
/// B x n*g -> B x n by summing each group of g adjacent columns.
Var group_sum(const Var& a, Index group);
/// B x n -> B x n*g by repeating each column g times.
Var group_repeat(const Var& a, Index group);

// ---- differentiation -----------------------------------------------------
struct GradOptions {
  bool create_graph = false;
};

/// d(output)/d(wrt[i]) as tape variables. `output` must be 1x1. With
/// create_graph the returned Vars depend differentiably on the tape; without
/// it they are constants. A wrt entry the output does not depend on yields zeros.
std::vector<Var> grad(const Var& output, std::span<const Var> wrt, GradOptions options = {});

/// Value-only gradients. Nodes recorded during the backward sweep are
/// discarded before returning.
std::vector<Matrix> gradient_values(const Var& output, std::span<const Var> wrt);

/// Derivative of a per-row network output with respect to an input column
/// leaf, for order 1 or 2. Rows must be independent samples (row b of the
/// output depends only on row b of the input), which holds for the networks
/// in this project. The result stays differentiable.
Var input_derivative(const Var& net_output, const Var& input_coord, int order);

}  // namespace ad
}  // namespace fsipinn
