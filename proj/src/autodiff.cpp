#include "fsipinn/autodiff.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

#include "fsipinn/spline.hpp"

namespace fsipinn::ad {

std::string Shape::str() const {
  std::ostringstream os;
  os << "(" << rows << " x " << cols << ")";
  return os.str();
}

ShapeError::ShapeError(const std::string& op, Shape a, Shape b)
    : std::invalid_argument(op + ": incompatible operand shapes " + a.str() + " and " + b.str()) {}

ShapeError::ShapeError(const std::string& op, Shape a, const std::string& detail)
    : std::invalid_argument(op + ": operand shape " + a.str() + " " + detail) {}

const char* op_name(OpTag tag) {
  switch (tag) {
    case OpTag::Leaf: return "leaf";
    case OpTag::Constant: return "constant";
    case OpTag::Add: return "add";
    case OpTag::Sub: return "sub";
    case OpTag::Mul: return "mul";
    case OpTag::Div: return "div";
    case OpTag::Neg: return "neg";
    case OpTag::Scale: return "scale";
    case OpTag::AddScalar: return "add_scalar";
    case OpTag::PowConst: return "pow";
    case OpTag::Exp: return "exp";
    case OpTag::Log: return "log";
    case OpTag::MatMul: return "matmul";
    case OpTag::MatMulNT: return "matmul_nt";
    case OpTag::MatMulTN: return "matmul_tn";
    case OpTag::Sum: return "sum";
    case OpTag::Mean: return "mean";
    case OpTag::Tanh: return "tanh";
    case OpTag::Sigmoid: return "sigmoid";
    case OpTag::Silu: return "silu";
    case OpTag::Square: return "square";
    case OpTag::ConcatCols: return "concat_cols";
    case OpTag::ConcatRows: return "concat_rows";
    case OpTag::SliceCols: return "slice_cols";
    case OpTag::SliceRows: return "slice_rows";
    case OpTag::BroadcastScalar: return "broadcast_scalar";
    case OpTag::BroadcastRows: return "broadcast_rows";
    case OpTag::SumRows: return "sum_rows";
    case OpTag::ScaleCols: return "scale_cols";
    case OpTag::BSplineBasis: return "bspline_basis";
    case OpTag::SplineSlope: return "spline_slope";
    case OpTag::SplineSlopeT: return "spline_slope_t";
    case OpTag::GroupSum: return "group_sum";
    case OpTag::GroupRepeat: return "group_repeat";
  }
  return "?";
}

// ---- Var / Tape ----------------------------------------------------------

const Matrix& Var::value() const {
  if (!valid()) throw AutodiffError("use of an empty Var");
  return tape_->node(id_).value;
}

Shape Var::shape() const {
  const Matrix& v = value();
  return {v.rows(), v.cols()};
}

double Var::item() const {
  const Matrix& v = value();
  if (v.size() != 1) throw ShapeError("item", shape(), "is not a scalar");
  return v(0, 0);
}

bool Var::requires_grad() const { return tape_->node(id_).requires_grad; }

OpTag Var::op() const { return tape_->node(id_).op; }

const TapeNode& Tape::node(int id) const {
  if (id < 0 || static_cast<std::size_t>(id) >= nodes_.size()) {
    throw AutodiffError("node id " + std::to_string(id) + " is not on this tape");
  }
  return nodes_[static_cast<std::size_t>(id)];
}

Var Tape::push(TapeNode node) {
  nodes_.push_back(std::move(node));
  return Var(this, static_cast<int>(nodes_.size() - 1));
}

Var Tape::leaf(Matrix value, bool requires_grad) {
  TapeNode n;
  n.op = OpTag::Leaf;
  n.value = std::move(value);
  n.requires_grad = requires_grad;
  return push(std::move(n));
}

Var Tape::constant(Matrix value) {
  TapeNode n;
  n.op = OpTag::Constant;
  n.value = std::move(value);
  return push(std::move(n));
}

Var Tape::scalar(double value) { return constant(Matrix::Constant(1, 1, value)); }

void Tape::truncate(std::size_t n) {
  if (n < nodes_.size()) nodes_.resize(n);
}

// ---- node construction ---------------------------------------------------

namespace {

Tape& same_tape(const char* op, const Var& a, const Var& b) {
  if (!a.valid() || !b.valid()) throw AutodiffError(std::string(op) + ": empty operand");
  if (a.tape() != b.tape()) throw AutodiffError(std::string(op) + ": operands live on different tapes");
  return *a.tape();
}

Var make(OpTag op, std::initializer_list<Var> parents, Matrix value, double scalar = 0.0, Index arg0 = 0,
         Index arg1 = 0) {
  Tape* tape = parents.begin()->tape();
  TapeNode n;
  n.op = op;
  std::size_t k = 0;
  for (const Var& p : parents) {
    n.parents[k++] = p.id();
    n.requires_grad = n.requires_grad || p.requires_grad();
  }
  n.value = std::move(value);
  n.scalar = scalar;
  n.arg0 = arg0;
  n.arg1 = arg1;
  return tape->push(std::move(n));
}

// Equal shapes pass through; a 1x1 operand is expanded explicitly.
std::pair<Var, Var> harmonize(const char* op, const Var& a, const Var& b) {
  same_tape(op, a, b);
  const Shape sa = a.shape();
  const Shape sb = b.shape();
  if (sa == sb) return {a, b};
  if (sa.rows == 1 && sa.cols == 1) return {broadcast_scalar(a, sb), b};
  if (sb.rows == 1 && sb.cols == 1) return {a, broadcast_scalar(b, sa)};
  throw ShapeError(op, sa, sb);
}

Var zeros_like(Tape& tape, Shape s) { return tape.constant(Matrix::Zero(s.rows, s.cols)); }

}  // namespace

// ---- elementwise ---------------------------------------------------------

Var add(const Var& a0, const Var& b0) {
  auto [a, b] = harmonize("add", a0, b0);
  return make(OpTag::Add, {a, b}, a.value() + b.value());
}

Var sub(const Var& a0, const Var& b0) {
  auto [a, b] = harmonize("sub", a0, b0);
  return make(OpTag::Sub, {a, b}, a.value() - b.value());
}

Var mul(const Var& a0, const Var& b0) {
  auto [a, b] = harmonize("mul", a0, b0);
  return make(OpTag::Mul, {a, b}, a.value().cwiseProduct(b.value()));
}

Var div(const Var& a0, const Var& b0) {
  auto [a, b] = harmonize("div", a0, b0);
  return make(OpTag::Div, {a, b}, a.value().cwiseQuotient(b.value()));
}

Var neg(const Var& a) { return make(OpTag::Neg, {a}, -a.value()); }

Var scale(const Var& a, double c) { return make(OpTag::Scale, {a}, c * a.value(), c); }

Var add_scalar(const Var& a, double c) {
  return make(OpTag::AddScalar, {a}, (a.value().array() + c).matrix(), c);
}

Var pow(const Var& a, double exponent) {
  return make(OpTag::PowConst, {a}, a.value().array().pow(exponent).matrix(), exponent);
}

Var pow(const Var& a, const Var& exponent) { return exp(mul(exponent, log(a))); }

Var exp(const Var& a) { return make(OpTag::Exp, {a}, a.value().array().exp().matrix()); }

Var log(const Var& a) { return make(OpTag::Log, {a}, a.value().array().log().matrix()); }

Var tanh(const Var& a) { return make(OpTag::Tanh, {a}, a.value().array().tanh().matrix()); }

Var sigmoid(const Var& a) {
  Matrix v = a.value().unaryExpr([](double x) { return 1.0 / (1.0 + std::exp(-x)); });
  return make(OpTag::Sigmoid, {a}, std::move(v));
}

Var silu(const Var& a) {
  Matrix v = a.value().unaryExpr([](double x) { return x / (1.0 + std::exp(-x)); });
  return make(OpTag::Silu, {a}, std::move(v));
}

Var square(const Var& a) { return make(OpTag::Square, {a}, a.value().array().square().matrix()); }

Var operator+(const Var& a, const Var& b) { return add(a, b); }
Var operator-(const Var& a, const Var& b) { return sub(a, b); }
Var operator*(const Var& a, const Var& b) { return mul(a, b); }
Var operator/(const Var& a, const Var& b) { return div(a, b); }
Var operator-(const Var& a) { return neg(a); }
Var operator*(double c, const Var& a) { return scale(a, c); }
Var operator*(const Var& a, double c) { return scale(a, c); }
Var operator+(const Var& a, double c) { return add_scalar(a, c); }
Var operator+(double c, const Var& a) { return add_scalar(a, c); }
Var operator-(const Var& a, double c) { return add_scalar(a, -c); }
Var operator-(double c, const Var& a) { return add_scalar(neg(a), c); }

// ---- linear algebra and reductions ---------------------------------------

Var matmul(const Var& a, const Var& b) {
  same_tape("matmul", a, b);
  if (a.cols() != b.rows()) throw ShapeError("matmul", a.shape(), b.shape());
  return make(OpTag::MatMul, {a, b}, a.value() * b.value());
}

Var matmul_nt(const Var& a, const Var& b) {
  same_tape("matmul_nt", a, b);
  if (a.cols() != b.cols()) throw ShapeError("matmul_nt", a.shape(), b.shape());
  return make(OpTag::MatMulNT, {a, b}, a.value() * b.value().transpose());
}

Var matmul_tn(const Var& a, const Var& b) {
  same_tape("matmul_tn", a, b);
  if (a.rows() != b.rows()) throw ShapeError("matmul_tn", a.shape(), b.shape());
  return make(OpTag::MatMulTN, {a, b}, a.value().transpose() * b.value());
}

Var sum(const Var& a) { return make(OpTag::Sum, {a}, Matrix::Constant(1, 1, a.value().sum())); }

Var mean(const Var& a) {
  const Matrix& v = a.value();
  if (v.size() == 0) throw ShapeError("mean", a.shape(), "is empty");
  return make(OpTag::Mean, {a}, Matrix::Constant(1, 1, v.mean()));
}

Var mse(const Var& a, const Var& b) { return mean(square(sub(a, b))); }

Var mse(const Var& a, double target) {
  return mean(square(target == 0.0 ? a : add_scalar(a, -target)));
}

// ---- structure -----------------------------------------------------------

namespace {
Var concat_pair(const Var& a, const Var& b, bool cols) {
  same_tape(cols ? "concat_cols" : "concat_rows", a, b);
  if (cols ? a.rows() != b.rows() : a.cols() != b.cols()) {
    throw ShapeError(cols ? "concat_cols" : "concat_rows", a.shape(), b.shape());
  }
  Matrix v(cols ? a.rows() : a.rows() + b.rows(), cols ? a.cols() + b.cols() : a.cols());
  if (cols) {
    v << a.value(), b.value();
  } else {
    v << a.value(), b.value();
  }
  return make(cols ? OpTag::ConcatCols : OpTag::ConcatRows, {a, b}, std::move(v));
}
}  // namespace

Var concat_cols(std::span<const Var> parts) {
  if (parts.empty()) throw AutodiffError("concat_cols: no operands");
  Var acc = parts[0];
  for (std::size_t i = 1; i < parts.size(); ++i) acc = concat_pair(acc, parts[i], true);
  return acc;
}

Var concat_rows(std::span<const Var> parts) {
  if (parts.empty()) throw AutodiffError("concat_rows: no operands");
  Var acc = parts[0];
  for (std::size_t i = 1; i < parts.size(); ++i) acc = concat_pair(acc, parts[i], false);
  return acc;
}

Var slice_cols(const Var& a, Index begin, Index end) {
  if (begin < 0 || end > a.cols() || begin >= end) {
    throw ShapeError("slice_cols", a.shape(), "cannot be sliced to [" + std::to_string(begin) + ", " +
                                                  std::to_string(end) + ")");
  }
  return make(OpTag::SliceCols, {a}, a.value().middleCols(begin, end - begin), 0.0, begin, end);
}

Var slice_rows(const Var& a, Index begin, Index end) {
  if (begin < 0 || end > a.rows() || begin >= end) {
    throw ShapeError("slice_rows", a.shape(), "cannot be sliced to [" + std::to_string(begin) + ", " +
                                                  std::to_string(end) + ")");
  }
  return make(OpTag::SliceRows, {a}, a.value().middleRows(begin, end - begin), 0.0, begin, end);
}

Var broadcast_scalar(const Var& a, Shape shape) {
  if (a.rows() != 1 || a.cols() != 1) throw ShapeError("broadcast_scalar", a.shape(), "is not a scalar");
  return make(OpTag::BroadcastScalar, {a}, Matrix::Constant(shape.rows, shape.cols, a.value()(0, 0)));
}

Var broadcast_rows(const Var& row, Index rows) {
  if (row.rows() != 1) throw ShapeError("broadcast_rows", row.shape(), "is not a row vector");
  return make(OpTag::BroadcastRows, {row}, row.value().replicate(rows, 1), 0.0, rows);
}

Var sum_rows(const Var& a) { return make(OpTag::SumRows, {a}, a.value().colwise().sum()); }

Var scale_cols(const Var& a, const Matrix& factors) {
  if (factors.rows() != 1 || factors.cols() != a.cols()) {
    throw ShapeError("scale_cols", a.shape(), Shape{factors.rows(), factors.cols()});
  }
  Matrix v = a.value() * factors.row(0).asDiagonal();
  Var out = make(OpTag::ScaleCols, {a}, std::move(v));
  // The factor row is replay data, not an operand.
  auto& node = const_cast<TapeNode&>(out.tape()->node(out.id()));
  node.aux = std::make_shared<const Matrix>(factors);
  return out;
}

// ---- spline ops ----------------------------------------------------------

namespace {
Var make_spline(OpTag op, const Var& a, Matrix value, std::shared_ptr<const spline::SplineGrid> grid,
                int order, Index arg0 = 0) {
  Var out = make(op, {a}, std::move(value), 0.0, arg0);
  auto& node = const_cast<TapeNode&>(out.tape()->node(out.id()));
  node.grid = std::move(grid);
  node.order = order;
  return out;
}
}  // namespace

Var bspline_basis(const Var& z, std::shared_ptr<const spline::SplineGrid> grid, int order) {
  if (!grid) throw AutodiffError("bspline_basis: null grid");
  const Index n = z.cols();
  if (grid->inputs != n) {
    throw ShapeError("bspline_basis", z.shape(), "does not match a grid with " + std::to_string(grid->inputs) +
                                                     " inputs");
  }
  const Index nb = grid->basis_count(order);
  if (order < 0 || nb < 1) throw AutodiffError("bspline_basis: invalid order " + std::to_string(order));
  const Matrix& zv = z.value();
  Matrix out(zv.rows(), n * nb);
  const std::size_t m = static_cast<std::size_t>(grid->knots_per_input);
  for (Index b = 0; b < zv.rows(); ++b) {
    for (Index j = 0; j < n; ++j) {
      std::span<const double> knots(grid->row(j), m);
      spline::basis_all(knots, order, zv(b, j), std::span<double>(out.row(b).data() + j * nb, nb));
    }
  }
  return make_spline(OpTag::BSplineBasis, z, std::move(out), std::move(grid), order);
}

namespace {
// Slope coefficient table for the order-d basis: n x nb pairs.
std::vector<spline::SlopeCoefficients> slope_table(const spline::SplineGrid& grid, int order) {
  const Index n = grid.inputs;
  const Index nb = grid.basis_count(order);
  std::vector<spline::SlopeCoefficients> table(static_cast<std::size_t>(n * nb));
  const std::size_t m = static_cast<std::size_t>(grid.knots_per_input);
  for (Index j = 0; j < n; ++j) {
    std::span<const double> knots(grid.row(j), m);
    for (Index r = 0; r < nb; ++r) table[static_cast<std::size_t>(j * nb + r)] = spline::slope_coefficients(knots, order, r);
  }
  return table;
}
}  // namespace

Var spline_slope(const Var& lower, std::shared_ptr<const spline::SplineGrid> grid, int order) {
  const Index n = grid->inputs;
  const Index nb = grid->basis_count(order);
  if (order < 1 || lower.cols() != n * (nb + 1)) {
    throw ShapeError("spline_slope", lower.shape(), "does not hold order-" + std::to_string(order - 1) + " blocks");
  }
  const auto table = slope_table(*grid, order);
  const Matrix& lv = lower.value();
  Matrix out(lv.rows(), n * nb);
  for (Index b = 0; b < lv.rows(); ++b) {
    for (Index j = 0; j < n; ++j) {
      const double* src = lv.row(b).data() + j * (nb + 1);
      double* dst = out.row(b).data() + j * nb;
      for (Index r = 0; r < nb; ++r) {
        const auto& c = table[static_cast<std::size_t>(j * nb + r)];
        dst[r] = c.left * src[r] - c.right * src[r + 1];
      }
    }
  }
  return make_spline(OpTag::SplineSlope, lower, std::move(out), std::move(grid), order);
}

Var spline_slope_t(const Var& g, std::shared_ptr<const spline::SplineGrid> grid, int order) {
  const Index n = grid->inputs;
  const Index nb = grid->basis_count(order);
  if (order < 1 || g.cols() != n * nb) {
    throw ShapeError("spline_slope_t", g.shape(), "does not hold order-" + std::to_string(order) + " blocks");
  }
  const auto table = slope_table(*grid, order);
  const Matrix& gv = g.value();
  Matrix out = Matrix::Zero(gv.rows(), n * (nb + 1));
  for (Index b = 0; b < gv.rows(); ++b) {
    for (Index j = 0; j < n; ++j) {
      const double* src = gv.row(b).data() + j * nb;
      double* dst = out.row(b).data() + j * (nb + 1);
      for (Index r = 0; r < nb; ++r) {
        const auto& c = table[static_cast<std::size_t>(j * nb + r)];
        dst[r] += c.left * src[r];
        dst[r + 1] -= c.right * src[r];
      }
    }
  }
  return make_spline(OpTag::SplineSlopeT, g, std::move(out), std::move(grid), order);
}

Var group_sum(const Var& a, Index group) {
  if (group < 1 || a.cols() % group != 0) throw ShapeError("group_sum", a.shape(), "is not divisible into groups");
  const Matrix& v = a.value();
  const Index n = v.cols() / group;
  Matrix out(v.rows(), n);
  for (Index b = 0; b < v.rows(); ++b) {
    for (Index j = 0; j < n; ++j) out(b, j) = v.row(b).segment(j * group, group).sum();
  }
  return make(OpTag::GroupSum, {a}, std::move(out), 0.0, group);
}

Var group_repeat(const Var& a, Index group) {
  const Matrix& v = a.value();
  Matrix out(v.rows(), v.cols() * group);
  for (Index b = 0; b < v.rows(); ++b) {
    for (Index j = 0; j < v.cols(); ++j) out.row(b).segment(j * group, group).setConstant(v(b, j));
  }
  return make(OpTag::GroupRepeat, {a}, std::move(out), 0.0, group);
}

// ---- backward rules ------------------------------------------------------

Var Tape::handle(int id) {
  node(id);
  return Var(this, id);
}

namespace {

struct Sweep {
  Tape& tape;
  const std::vector<char>& relevant;
  std::vector<Var>& adj;

  bool wants(int parent) const { return parent >= 0 && relevant[static_cast<std::size_t>(parent)]; }

  void accumulate(int parent, const Var& contribution) {
    Var& slot = adj[static_cast<std::size_t>(parent)];
    slot = slot.valid() ? add(slot, contribution) : contribution;
  }
};

// Pushes the adjoint g of node `id` to the node's relevant parents. Every
// contribution is built from differentiable ops on the same tape.
void propagate(Sweep& s, int id, const Var& g) {
  Tape& tape = s.tape;
  // Copy what we need: the deque keeps references stable, but a local copy
  // keeps the rule bodies short.
  const TapeNode& node = tape.node(id);
  const OpTag op = node.op;
  const int pa = node.parents[0];
  const int pb = node.parents[1];
  const double c = node.scalar;
  const Index arg0 = node.arg0;
  const Index arg1 = node.arg1;
  const int order = node.order;
  const auto grid = node.grid;
  const auto aux = node.aux;
  Var self = tape.handle(id);
  Var a = pa >= 0 ? tape.handle(pa) : Var();
  Var b = pb >= 0 ? tape.handle(pb) : Var();
  const bool want_a = s.wants(pa);
  const bool want_b = s.wants(pb);

  switch (op) {
    case OpTag::Leaf:
    case OpTag::Constant:
      return;
    case OpTag::Add:
      if (want_a) s.accumulate(pa, g);
      if (want_b) s.accumulate(pb, g);
      return;
    case OpTag::Sub:
      if (want_a) s.accumulate(pa, g);
      if (want_b) s.accumulate(pb, neg(g));
      return;
    case OpTag::Mul:
      if (want_a) s.accumulate(pa, mul(g, b));
      if (want_b) s.accumulate(pb, mul(g, a));
      return;
    case OpTag::Div:
      if (want_a) s.accumulate(pa, div(g, b));
      if (want_b) s.accumulate(pb, neg(div(mul(g, self), b)));
      return;
    case OpTag::Neg:
      if (want_a) s.accumulate(pa, neg(g));
      return;
    case OpTag::Scale:
      if (want_a) s.accumulate(pa, scale(g, c));
      return;
    case OpTag::AddScalar:
      if (want_a) s.accumulate(pa, g);
      return;
    case OpTag::PowConst:
      if (!want_a) return;
      if (c == 0.0) return;
      if (c == 1.0) {
        s.accumulate(pa, g);
      } else if (c == 2.0) {
        s.accumulate(pa, scale(mul(g, a), 2.0));
      } else {
        s.accumulate(pa, scale(mul(g, pow(a, c - 1.0)), c));
      }
      return;
    case OpTag::Exp:
      if (want_a) s.accumulate(pa, mul(g, self));
      return;
    case OpTag::Log:
      if (want_a) s.accumulate(pa, div(g, a));
      return;
    case OpTag::MatMul:
      if (want_a) s.accumulate(pa, matmul_nt(g, b));
      if (want_b) s.accumulate(pb, matmul_tn(a, g));
      return;
    case OpTag::MatMulNT:
      if (want_a) s.accumulate(pa, matmul(g, b));
      if (want_b) s.accumulate(pb, matmul_tn(g, a));
      return;
    case OpTag::MatMulTN:
      if (want_a) s.accumulate(pa, matmul_nt(b, g));
      if (want_b) s.accumulate(pb, matmul(a, g));
      return;
    case OpTag::Sum:
      if (want_a) s.accumulate(pa, broadcast_scalar(g, a.shape()));
      return;
    case OpTag::Mean:
      if (want_a) {
        const double n = static_cast<double>(a.value().size());
        s.accumulate(pa, broadcast_scalar(scale(g, 1.0 / n), a.shape()));
      }
      return;
    case OpTag::Tanh:
      if (want_a) s.accumulate(pa, mul(g, add_scalar(neg(square(self)), 1.0)));
      return;
    case OpTag::Sigmoid:
      if (want_a) s.accumulate(pa, mul(g, mul(self, add_scalar(neg(self), 1.0))));
      return;
    case OpTag::Silu:
      if (want_a) {
        // silu'(x) = sig(x) * (1 + x * (1 - sig(x)))
        Var sg = sigmoid(a);
        Var slope = mul(sg, add_scalar(mul(a, add_scalar(neg(sg), 1.0)), 1.0));
        s.accumulate(pa, mul(g, slope));
      }
      return;
    case OpTag::Square:
      if (want_a) s.accumulate(pa, scale(mul(g, a), 2.0));
      return;
    case OpTag::ConcatCols:
      if (want_a) s.accumulate(pa, slice_cols(g, 0, a.cols()));
      if (want_b) s.accumulate(pb, slice_cols(g, a.cols(), a.cols() + b.cols()));
      return;
    case OpTag::ConcatRows:
      if (want_a) s.accumulate(pa, slice_rows(g, 0, a.rows()));
      if (want_b) s.accumulate(pb, slice_rows(g, a.rows(), a.rows() + b.rows()));
      return;
    case OpTag::SliceCols:
      if (want_a) {
        std::vector<Var> parts;
        if (arg0 > 0) parts.push_back(zeros_like(tape, {a.rows(), arg0}));
        parts.push_back(g);
        if (arg1 < a.cols()) parts.push_back(zeros_like(tape, {a.rows(), a.cols() - arg1}));
        s.accumulate(pa, concat_cols(parts));
      }
      return;
    case OpTag::SliceRows:
      if (want_a) {
        std::vector<Var> parts;
        if (arg0 > 0) parts.push_back(zeros_like(tape, {arg0, a.cols()}));
        parts.push_back(g);
        if (arg1 < a.rows()) parts.push_back(zeros_like(tape, {a.rows() - arg1, a.cols()}));
        s.accumulate(pa, concat_rows(parts));
      }
      return;
    case OpTag::BroadcastScalar:
      if (want_a) s.accumulate(pa, sum(g));
      return;
    case OpTag::BroadcastRows:
      if (want_a) s.accumulate(pa, sum_rows(g));
      return;
    case OpTag::SumRows:
      if (want_a) s.accumulate(pa, broadcast_rows(g, a.rows()));
      return;
    case OpTag::ScaleCols:
      if (want_a) s.accumulate(pa, scale_cols(g, *aux));
      return;
    case OpTag::BSplineBasis:
      if (want_a && order > 0) {
        Var lower = bspline_basis(a, grid, order - 1);
        Var slope = spline_slope(lower, grid, order);
        s.accumulate(pa, group_sum(mul(g, slope), grid->basis_count(order)));
      }
      return;
    case OpTag::SplineSlope:
      if (want_a) s.accumulate(pa, spline_slope_t(g, grid, order));
      return;
    case OpTag::SplineSlopeT:
      if (want_a) s.accumulate(pa, spline_slope(g, grid, order));
      return;
    case OpTag::GroupSum:
      if (want_a) s.accumulate(pa, group_repeat(g, arg0));
      return;
    case OpTag::GroupRepeat:
      if (want_a) s.accumulate(pa, group_sum(g, arg0));
      return;
  }
}

}  // namespace

// ---- differentiation -----------------------------------------------------

std::vector<Var> grad(const Var& output, std::span<const Var> wrt, GradOptions options) {
  if (!output.valid()) throw AutodiffError("grad: empty output");
  if (output.rows() != 1 || output.cols() != 1) throw ShapeError("grad", output.shape(), "is not a scalar output");
  Tape& tape = *output.tape();
  for (const Var& w : wrt) {
    if (!w.valid() || w.tape() != &tape) throw AutodiffError("grad: a wrt variable is not on the output's tape");
    tape.node(w.id());
  }

  const std::size_t start_size = tape.size();
  const int out_id = output.id();
  const std::size_t n = static_cast<std::size_t>(out_id) + 1;

  // Nodes lying on some path wrt -> output.
  std::vector<char> relevant(n, 0);
  int lowest = out_id + 1;
  for (const Var& w : wrt) {
    if (w.id() <= out_id) {
      relevant[static_cast<std::size_t>(w.id())] = 1;
      lowest = std::min(lowest, w.id());
    }
  }
  for (int i = lowest; i <= out_id; ++i) {
    if (relevant[static_cast<std::size_t>(i)]) continue;
    const TapeNode& node = tape.node(i);
    for (int p : node.parents) {
      if (p >= 0 && relevant[static_cast<std::size_t>(p)]) {
        relevant[static_cast<std::size_t>(i)] = 1;
        break;
      }
    }
  }

  std::vector<Var> adj(n);
  if (relevant[n - 1]) {
    adj[n - 1] = tape.scalar(1.0);
    Sweep sweep{tape, relevant, adj};
    for (int i = out_id; i >= lowest; --i) {
      const std::size_t k = static_cast<std::size_t>(i);
      if (!relevant[k] || !adj[k].valid()) continue;
      const Var g = adj[k];
      propagate(sweep, i, g);
    }
  }

  std::vector<Matrix> values;
  std::vector<Var> result;
  result.reserve(wrt.size());
  if (options.create_graph) {
    for (const Var& w : wrt) {
      const Var& a = adj[static_cast<std::size_t>(w.id())];
      if (w.id() <= out_id && a.valid()) {
        result.push_back(a);
      } else {
        result.push_back(tape.constant(Matrix::Zero(w.rows(), w.cols())));
      }
    }
    return result;
  }
  values.reserve(wrt.size());
  for (const Var& w : wrt) {
    const Var& a = w.id() <= out_id ? adj[static_cast<std::size_t>(w.id())] : Var();
    values.push_back(a.valid() ? a.value() : Matrix::Zero(w.rows(), w.cols()));
  }
  tape.truncate(start_size);
  for (Matrix& v : values) result.push_back(tape.constant(std::move(v)));
  return result;
}

std::vector<Matrix> gradient_values(const Var& output, std::span<const Var> wrt) {
  Tape& tape = *output.tape();
  const std::size_t start_size = tape.size();
  std::vector<Var> g = grad(output, wrt, {.create_graph = false});
  std::vector<Matrix> out;
  out.reserve(g.size());
  for (const Var& v : g) out.push_back(v.value());
  tape.truncate(start_size);
  return out;
}

Var input_derivative(const Var& net_output, const Var& input_coord, int order) {
  if (order < 1 || order > 2) {
    throw AutodiffError("input_derivative: order " + std::to_string(order) + " is unsupported (1 or 2 only)");
  }
  if (net_output.cols() != 1) throw ShapeError("input_derivative", net_output.shape(), "must be a single column");
  if (input_coord.cols() != 1 || input_coord.rows() != net_output.rows()) {
    throw ShapeError("input_derivative", net_output.shape(), input_coord.shape());
  }
  const Var coord[] = {input_coord};
  Var first = grad(sum(net_output), coord, {.create_graph = true})[0];
  if (order == 1) return first;
  return grad(sum(first), coord, {.create_graph = true})[0];
}

}  // namespace fsipinn::ad
