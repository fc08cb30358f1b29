#include "fsipinn/nets.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <istream>
#include <ostream>
#include <sstream>
#include <stdexcept>

#include <Eigen/QR>

namespace fsipinn::nets {

const char* to_string(Activation a) { return a == Activation::Tanh ? "tanh" : "bspline"; }

Activation activation_from_string(const std::string& s) {
  if (s == "tanh") return Activation::Tanh;
  if (s == "bspline" || s == "b-spline" || s == "kan") return Activation::BSpline;
  throw std::invalid_argument("unknown activation '" + s + "' (expected tanh or bspline)");
}

void NetworkSpec::validate() const {
  if (widths.size() < 2) throw std::invalid_argument("network needs at least input and output widths");
  for (int w : widths)
    if (w <= 0) throw std::invalid_argument("layer widths must be positive");
  if (widths.front() != 3) throw std::invalid_argument("network input width must be 3 (t, x, y)");
  if (widths.back() != 3) throw std::invalid_argument("network output width must be 3 (u, v, p)");
  if (activation == Activation::BSpline) {
    if (spline_order < 1 || spline_order > 8) throw std::invalid_argument("spline order must be in [1, 8]");
    if (grid_size < 2) throw std::invalid_argument("grid size must be at least 2");
  }
  for (const auto& b : input_bounds)
    if (!(b.hi > b.lo)) throw std::invalid_argument("input bounds need hi > lo");
}

Matrix xavier_init(int fan_in, int fan_out, std::mt19937_64& rng) {
  std::normal_distribution<double> dist(0.0, std::sqrt(2.0 / static_cast<double>(fan_in + fan_out)));
  Matrix w(fan_out, fan_in);
  for (Index i = 0; i < w.size(); ++i) w.data()[i] = dist(rng);
  return w;
}

std::array<double, 3> normalize_input(const std::array<double, 3>& x, const std::array<Bounds, 3>& bounds) {
  std::array<double, 3> out{};
  for (std::size_t k = 0; k < 3; ++k) {
    out[k] = 2.0 * (x[k] - bounds[k].lo) / (bounds[k].hi - bounds[k].lo) - 1.0;
  }
  return out;
}

std::int64_t param_count(const NetworkSpec& spec) {
  std::int64_t total = 0;
  for (std::size_t l = 1; l < spec.widths.size(); ++l) {
    const std::int64_t in = spec.widths[l - 1];
    const std::int64_t out = spec.widths[l];
    total += spec.activation == Activation::Tanh ? (in + 1) * out : in * out * (spec.basis_per_edge() + 1);
  }
  return total;
}

std::string param_count_formula(const NetworkSpec& spec) {
  return spec.activation == Activation::Tanh
             ? "sum (n_in + 1) * n_out"
             : "sum n_in * n_out * (" + std::to_string(spec.basis_per_edge()) + " + 1)";
}

// ---- KAN pieces ------------------------------------------------------------

namespace {

double silu_value(double x) { return x / (1.0 + std::exp(-x)); }

std::shared_ptr<spline::SplineGrid> make_grid(Index inputs, int order, int grid_size, double lo, double hi) {
  auto g = std::make_shared<spline::SplineGrid>();
  g->order = order;
  g->inputs = inputs;
  const auto row = spline::uniform_knots(lo, hi, grid_size, order);
  g->knots_per_input = static_cast<Index>(row.size());
  g->knots.reserve(row.size() * static_cast<std::size_t>(inputs));
  for (Index j = 0; j < inputs; ++j) g->knots.insert(g->knots.end(), row.begin(), row.end());
  return g;
}

// B x n*nb basis matrix of z on the given grid.
Matrix basis_matrix(const Matrix& z, const spline::SplineGrid& grid) {
  const Index n = grid.inputs;
  const Index nb = grid.basis_count(grid.order);
  const std::size_t m = static_cast<std::size_t>(grid.knots_per_input);
  Matrix out(z.rows(), n * nb);
  for (Index b = 0; b < z.rows(); ++b) {
    for (Index j = 0; j < n; ++j) {
      spline::basis_all({grid.row(j), m}, grid.order, z(b, j),
                        {out.row(b).data() + j * nb, static_cast<std::size_t>(nb)});
    }
  }
  return out;
}

Matrix kan_eval(const KanLayer& layer, const Matrix& z) {
  const Index n = layer.fan_in();
  const Index nb = layer.basis_count();
  Matrix phi(z.rows(), n * (1 + nb));
  phi.leftCols(n) = z.unaryExpr([](double v) { return silu_value(v); });
  phi.rightCols(n * nb) = basis_matrix(z, *layer.grid);
  return phi * layer.weight.transpose();
}

}  // namespace

double kan_activation(const KanEdge& edge, double x) {
  const std::size_t nb = edge.knots.size() - static_cast<std::size_t>(edge.order) - 1;
  if (edge.coeffs.size() != nb) throw std::invalid_argument("kan_activation: coefficient count does not match knots");
  std::vector<double> b(nb);
  spline::basis_all(edge.knots, edge.order, x, b);
  double s = edge.base_scale * silu_value(x);
  for (std::size_t i = 0; i < nb; ++i) s += edge.coeffs[i] * b[i];
  return s;
}

Var kan_activation(const Var& x, const Var& base_scale, const Var& coeffs,
                   std::shared_ptr<const spline::SplineGrid> grid) {
  const Var basis = ad::bspline_basis(x, grid, grid->order);
  return ad::add(ad::mul(base_scale, ad::silu(x)), ad::matmul_nt(basis, coeffs));
}

Var kan_layer_forward(const Var& z, const Var& weight, std::shared_ptr<const spline::SplineGrid> grid) {
  const int order = grid->order;
  const Var parts[2] = {ad::silu(z), ad::bspline_basis(z, std::move(grid), order)};
  return ad::matmul_nt(ad::concat_cols(parts), weight);
}

Var dense_forward(const Var& z, const Var& weight, const Var& bias) {
  return ad::add(ad::matmul_nt(z, weight), ad::broadcast_rows(bias, z.rows()));
}

double percentile(std::vector<double> values, double q) {
  if (values.empty()) throw std::invalid_argument("percentile of empty sample");
  std::sort(values.begin(), values.end());
  const double pos = q / 100.0 * static_cast<double>(values.size() - 1);
  const auto lo = static_cast<std::size_t>(std::floor(pos));
  const auto hi = std::min(lo + 1, values.size() - 1);
  return values[lo] + (pos - static_cast<double>(lo)) * (values[hi] - values[lo]);
}

void update_grid(KanLayer& layer, const Matrix& z, int grid_size) {
  const Index n = layer.fan_in();
  const Index nb = layer.basis_count();
  const Index out = layer.fan_out();
  if (z.cols() != n) throw ad::ShapeError("update_grid", ad::Shape{z.rows(), z.cols()}, "input width differs from layer fan-in");
  if (z.rows() == 0) return;
  const int order = layer.grid->order;
  const std::size_t m = static_cast<std::size_t>(layer.grid->knots_per_input);
  auto next = std::make_shared<spline::SplineGrid>(*layer.grid);

  for (Index j = 0; j < n; ++j) {
    std::vector<double> col(static_cast<std::size_t>(z.rows()));
    for (Index b = 0; b < z.rows(); ++b) col[static_cast<std::size_t>(b)] = z(b, j);
    const double lo = percentile(col, 1.0);
    const double hi = percentile(col, 99.0);
    if (!(hi - lo > 1e-9 * std::max(1.0, std::max(std::abs(lo), std::abs(hi))))) continue;

    // Fit rows: the batch, plus evenly spaced points across the new span so a
    // clustered batch cannot leave the new spline free to oscillate between
    // its points.
    const Index extra = 4 * nb;
    const Index rows = z.rows() + extra;
    Matrix old_basis(rows, nb), new_basis(rows, nb);
    const auto knots = spline::uniform_knots(lo, hi, grid_size, order);
    for (Index b = 0; b < rows; ++b) {
      const double x = b < z.rows() ? z(b, j) : lo + (hi - lo) * static_cast<double>(b - z.rows()) / static_cast<double>(extra - 1);
      spline::basis_all({layer.grid->row(j), m}, order, x, {old_basis.row(b).data(), static_cast<std::size_t>(nb)});
      spline::basis_all(knots, order, x, {new_basis.row(b).data(), static_cast<std::size_t>(nb)});
    }
    auto block = layer.weight.block(0, n + j * nb, out, nb);
    const Matrix targets = old_basis * block.transpose();  // B x out
    const Eigen::CompleteOrthogonalDecomposition<Eigen::MatrixXd> solver(new_basis);
    const Eigen::MatrixXd fit = solver.solve(Eigen::MatrixXd(targets));  // nb x out
    block = fit.transpose();
    std::copy(knots.begin(), knots.end(), next->row(j));
  }
  layer.grid = std::move(next);
}

// ---- Network ----------------------------------------------------------------

Network Network::create(const NetworkSpec& spec, std::uint64_t seed) {
  spec.validate();
  Network net;
  net.spec_ = spec;
  net.seed_ = seed;
  std::mt19937_64 rng(seed);
  for (std::size_t l = 1; l < spec.widths.size(); ++l) {
    const int in = spec.widths[l - 1];
    const int out = spec.widths[l];
    if (spec.activation == Activation::Tanh) {
      net.dense_.push_back({xavier_init(in, out, rng), Matrix::Zero(1, out)});
    } else {
      // Random base scales break the symmetry between units; spline
      // coefficients start at zero so every edge begins as a scaled silu.
      KanLayer layer;
      const Index nb = spec.basis_per_edge();
      layer.weight = Matrix::Zero(out, in * (1 + nb));
      layer.weight.leftCols(in) = xavier_init(in, out, rng);
      layer.grid = make_grid(in, spec.spline_order, spec.grid_size, -1.0, 1.0);
      net.kan_.push_back(std::move(layer));
    }
  }
  return net;
}

std::vector<Matrix*> Network::parameters() {
  std::vector<Matrix*> p;
  for (auto& d : dense_) {
    p.push_back(&d.weight);
    p.push_back(&d.bias);
  }
  for (auto& k : kan_) p.push_back(&k.weight);
  return p;
}

std::vector<const Matrix*> Network::parameters() const {
  std::vector<const Matrix*> p;
  for (const auto& d : dense_) {
    p.push_back(&d.weight);
    p.push_back(&d.bias);
  }
  for (const auto& k : kan_) p.push_back(&k.weight);
  return p;
}

std::int64_t Network::parameter_count() const {
  std::int64_t n = 0;
  for (const Matrix* m : parameters()) n += m->size();
  return n;
}

std::vector<Var> Network::bind(Tape& tape) const {
  std::vector<Var> out;
  for (const Matrix* m : parameters()) out.push_back(tape.leaf(*m, true));
  return out;
}

Matrix Network::normalize(const Matrix& input) const {
  Matrix z(input.rows(), 3);
  for (Index k = 0; k < 3; ++k) {
    const auto& b = spec_.input_bounds[static_cast<std::size_t>(k)];
    z.col(k) = (2.0 / (b.hi - b.lo)) * input.col(k).array() - (2.0 * b.lo / (b.hi - b.lo) + 1.0);
  }
  return z;
}

Var Network::normalize(const Var& input) const {
  Matrix factors(1, 3), shift(1, 3);
  for (Index k = 0; k < 3; ++k) {
    const auto& b = spec_.input_bounds[static_cast<std::size_t>(k)];
    factors(0, k) = 2.0 / (b.hi - b.lo);
    shift(0, k) = -(2.0 * b.lo / (b.hi - b.lo) + 1.0);
  }
  Tape& tape = *input.tape();
  return ad::add(ad::scale_cols(input, factors), ad::broadcast_rows(tape.constant(shift), input.rows()));
}

Var Network::forward(const std::vector<Var>& params, const Var& input) const {
  if (input.cols() != 3) throw ad::ShapeError("Network::forward", input.shape(), "expected 3 input columns (t, x, y)");
  if (params.size() != parameters().size()) throw std::invalid_argument("Network::forward: parameter count mismatch");
  Var z = normalize(input);
  if (spec_.activation == Activation::Tanh) {
    for (std::size_t l = 0; l < dense_.size(); ++l) {
      z = dense_forward(z, params[2 * l], params[2 * l + 1]);
      if (l + 1 < dense_.size()) z = ad::tanh(z);
    }
  } else {
    for (std::size_t l = 0; l < kan_.size(); ++l) z = kan_layer_forward(z, params[l], kan_[l].grid);
  }
  return z;
}

Var Network::forward(const std::vector<Var>& params, const Var& t, const Var& x, const Var& y) const {
  const Var cols[3] = {t, x, y};
  return forward(params, ad::concat_cols(cols));
}

Matrix Network::evaluate(const Matrix& input) const {
  if (input.cols() != 3) throw ad::ShapeError("Network::evaluate", ad::Shape{input.rows(), input.cols()}, "expected 3 input columns");
  Matrix out(input.rows(), 3);
  constexpr Index kChunk = 4096;
  for (Index start = 0; start < input.rows(); start += kChunk) {
    const Index len = std::min(kChunk, input.rows() - start);
    Matrix z = normalize(input.middleRows(start, len));
    if (spec_.activation == Activation::Tanh) {
      for (std::size_t l = 0; l < dense_.size(); ++l) {
        Matrix a = z * dense_[l].weight.transpose();
        a.rowwise() += dense_[l].bias.row(0);
        z = l + 1 < dense_.size() ? Matrix(a.array().tanh()) : a;
      }
    } else {
      for (const auto& layer : kan_) z = kan_eval(layer, z);
    }
    out.middleRows(start, len) = z;
  }
  return out;
}

void Network::update_grid(const Matrix& input) {
  if (spec_.activation != Activation::BSpline) return;
  Matrix z = normalize(input);
  for (auto& layer : kan_) {
    nets::update_grid(layer, z, spec_.grid_size);
    z = kan_eval(layer, z);
  }
}

// ---- checkpoint text format -------------------------------------------------

namespace {

void put_double(std::ostream& os, double v) {
  char buf[32];
  const auto res = std::to_chars(buf, buf + sizeof buf, v);
  os.write(buf, res.ptr - buf);
}

double get_double(std::istream& is) {
  std::string tok;
  if (!(is >> tok)) throw std::runtime_error("checkpoint: unexpected end of input");
  double v = 0.0;
  const auto res = std::from_chars(tok.data(), tok.data() + tok.size(), v);
  if (res.ec != std::errc() || res.ptr != tok.data() + tok.size())
    throw std::runtime_error("checkpoint: bad number '" + tok + "'");
  return v;
}

void expect(std::istream& is, const std::string& word) {
  std::string tok;
  if (!(is >> tok) || tok != word) throw std::runtime_error("checkpoint: expected '" + word + "', got '" + tok + "'");
}

void write_matrix(std::ostream& os, const std::string& name, const Matrix& m) {
  os << "matrix " << name << ' ' << m.rows() << ' ' << m.cols() << '\n';
  for (Index r = 0; r < m.rows(); ++r) {
    for (Index c = 0; c < m.cols(); ++c) {
      if (c) os << ' ';
      put_double(os, m(r, c));
    }
    os << '\n';
  }
}

Matrix read_matrix(std::istream& is, const std::string& name) {
  expect(is, "matrix");
  expect(is, name);
  Index rows = 0, cols = 0;
  if (!(is >> rows >> cols) || rows < 0 || cols < 0) throw std::runtime_error("checkpoint: bad matrix shape for " + name);
  Matrix m(rows, cols);
  for (Index i = 0; i < m.size(); ++i) m.data()[i] = get_double(is);
  return m;
}

}  // namespace

void Network::write(std::ostream& os) const {
  os << "network 1\n";
  os << "seed " << seed_ << '\n';
  os << "activation " << to_string(spec_.activation) << '\n';
  os << "widths " << spec_.widths.size();
  for (int w : spec_.widths) os << ' ' << w;
  os << '\n';
  os << "spline_order " << spec_.spline_order << '\n';
  os << "grid_size " << spec_.grid_size << '\n';
  os << "input_bounds";
  for (const auto& b : spec_.input_bounds) {
    os << ' ';
    put_double(os, b.lo);
    os << ' ';
    put_double(os, b.hi);
  }
  os << '\n';
  for (const auto& d : dense_) {
    write_matrix(os, "weight", d.weight);
    write_matrix(os, "bias", d.bias);
  }
  for (const auto& k : kan_) {
    Matrix knots(k.grid->inputs, k.grid->knots_per_input);
    std::copy(k.grid->knots.begin(), k.grid->knots.end(), knots.data());
    write_matrix(os, "knots", knots);
    write_matrix(os, "weight", k.weight);
  }
  os << "end_network\n";
}

Network Network::read(std::istream& is) {
  expect(is, "network");
  int version = 0;
  if (!(is >> version) || version != 1) throw std::runtime_error("checkpoint: unsupported network version");
  Network net;
  expect(is, "seed");
  is >> net.seed_;
  expect(is, "activation");
  std::string act;
  is >> act;
  net.spec_.activation = activation_from_string(act);
  expect(is, "widths");
  std::size_t nw = 0;
  is >> nw;
  net.spec_.widths.resize(nw);
  for (auto& w : net.spec_.widths) is >> w;
  expect(is, "spline_order");
  is >> net.spec_.spline_order;
  expect(is, "grid_size");
  is >> net.spec_.grid_size;
  expect(is, "input_bounds");
  for (auto& b : net.spec_.input_bounds) {
    b.lo = get_double(is);
    b.hi = get_double(is);
  }
  if (!is) throw std::runtime_error("checkpoint: malformed network header");
  net.spec_.validate();
  const auto& w = net.spec_.widths;
  for (std::size_t l = 1; l < w.size(); ++l) {
    if (net.spec_.activation == Activation::Tanh) {
      DenseLayer d{read_matrix(is, "weight"), read_matrix(is, "bias")};
      if (d.weight.rows() != w[l] || d.weight.cols() != w[l - 1] || d.bias.rows() != 1 || d.bias.cols() != w[l])
        throw std::runtime_error("checkpoint: dense layer shape does not match widths");
      net.dense_.push_back(std::move(d));
    } else {
      const Matrix knots = read_matrix(is, "knots");
      auto g = std::make_shared<spline::SplineGrid>();
      g->order = net.spec_.spline_order;
      g->inputs = knots.rows();
      g->knots_per_input = knots.cols();
      g->knots.assign(knots.data(), knots.data() + knots.size());
      KanLayer k{read_matrix(is, "weight"), std::move(g)};
      if (k.grid->inputs != w[l - 1] || k.grid->knots_per_input != net.spec_.knots_per_input() ||
          k.weight.rows() != w[l] || k.weight.cols() != w[l - 1] * (1 + net.spec_.basis_per_edge()))
        throw std::runtime_error("checkpoint: KAN layer shape does not match widths");
      net.kan_.push_back(std::move(k));
    }
  }
  expect(is, "end_network");
  return net;
}

bool operator==(const Network& a, const Network& b) {
  if (a.seed_ != b.seed_ || a.spec_.widths != b.spec_.widths || a.spec_.activation != b.spec_.activation ||
      a.spec_.spline_order != b.spec_.spline_order || a.spec_.grid_size != b.spec_.grid_size)
    return false;
  for (std::size_t k = 0; k < 3; ++k)
    if (a.spec_.input_bounds[k].lo != b.spec_.input_bounds[k].lo || a.spec_.input_bounds[k].hi != b.spec_.input_bounds[k].hi)
      return false;
  if (a.dense_.size() != b.dense_.size() || a.kan_.size() != b.kan_.size()) return false;
  for (std::size_t l = 0; l < a.dense_.size(); ++l)
    if (a.dense_[l].weight != b.dense_[l].weight || a.dense_[l].bias != b.dense_[l].bias) return false;
  for (std::size_t l = 0; l < a.kan_.size(); ++l)
    if (a.kan_[l].weight != b.kan_[l].weight || a.kan_[l].grid->knots != b.kan_[l].grid->knots) return false;
  return true;
}

}  // namespace fsipinn::nets
