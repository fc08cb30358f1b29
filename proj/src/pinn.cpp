#include "fsipinn/pinn.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <sstream>

#include "fsipinn/dataset.hpp"

namespace fsipinn::pinn {

namespace {

Var col(const Var& out, Index c) { return ad::slice_cols(out, c, c + 1); }

Var column(Tape& tape, const Matrix& m, Index c, bool leaf) {
  Matrix v = m.col(c);
  return leaf ? tape.leaf(std::move(v)) : tape.constant(std::move(v));
}

void require_rows(const Matrix& m, const std::string& term, const std::string& what) {
  if (m.rows() == 0) throw std::invalid_argument(term + ": " + what + " is empty");
}

Matrix stack_rows(std::initializer_list<const Matrix*> parts) {
  Index rows = 0, cols = 0;
  for (const Matrix* m : parts) {
    rows += m->rows();
    cols = std::max(cols, m->cols());
  }
  Matrix out(rows, cols);
  Index r = 0;
  for (const Matrix* m : parts) {
    if (m->rows() == 0) continue;
    out.middleRows(r, m->rows()) = *m;
    r += m->rows();
  }
  return out;
}

struct ResidualTerms {
  Var ru, rv, rc;
};

ResidualTerms physics(const FieldFn& f, const Matrix& pts, Tape& tape) {
  require_rows(pts, "ru", "fluid collocation set");
  const Var t = column(tape, pts, 0, true), x = column(tape, pts, 1, true), y = column(tape, pts, 2, true);
  const Var out = f(t, x, y);
  const Residuals r = navier_stokes_residuals(col(out, 0), col(out, 1), col(out, 2), t, x, y);
  return {ad::mse(r.ru, 0.0), ad::mse(r.rv, 0.0), ad::mse(r.rc, 0.0)};
}

struct BoundaryTerms {
  Var lid, wall, ic_u, ic_v, ic_p;
};

// Lid, no-slip walls and the initial slice share one forward pass.
BoundaryTerms boundaries(const FieldFn& f, const Batch& b, Tape& tape) {
  require_rows(b.lid, "lid", "top wall set");
  require_rows(b.walls, "wall", "no-slip wall set");
  require_rows(b.initial, "ic", "initial set");
  const Matrix all = stack_rows({&b.lid, &b.walls, &b.initial});
  const Var out = f(column(tape, all, 0, false), column(tape, all, 1, false), column(tape, all, 2, false));
  const Index nl = b.lid.rows(), nw = b.walls.rows(), ni = b.initial.rows();
  const Var lid = ad::slice_rows(out, 0, nl);
  const Var wall = ad::slice_rows(out, nl, nl + nw);
  const Var ini = ad::slice_rows(out, nl + nw, nl + nw + ni);
  BoundaryTerms t;
  t.lid = ad::mse(col(lid, 0), column(tape, b.lid_uv, 0, false)) + ad::mse(col(lid, 1), column(tape, b.lid_uv, 1, false));
  t.wall = ad::mse(col(wall, 0), column(tape, b.wall_uv, 0, false)) + ad::mse(col(wall, 1), column(tape, b.wall_uv, 1, false));
  t.ic_u = ad::mse(col(ini, 0), 0.0);
  t.ic_v = ad::mse(col(ini, 1), 0.0);
  t.ic_p = ad::mse(col(ini, 2), 0.0);
  return t;
}

Loss assemble(std::vector<Term> terms) {
  Loss loss;
  Var total;
  for (const Term& t : terms) {
    const Var c = t.weight * t.value;
    total = total.valid() ? total + c : c;
  }
  loss.total = total;
  loss.terms = std::move(terms);
  return loss;
}

void check_weights(const std::vector<double>& lambda, std::size_t n, const char* what) {
  if (lambda.size() != n) {
    std::ostringstream m;
    m << what << " needs " << n << " loss weights, got " << lambda.size();
    throw ConfigError(m.str());
  }
}

}  // namespace

// ---- configuration -------------------------------------------------------------

std::string to_string(Architecture a) {
  return a == Architecture::SingleFSI ? "single-fsi" : "eulerian-lagrangian";
}

Architecture architecture_from_string(const std::string& s) {
  if (s == "single-fsi" || s == "single" || s == "SingleFSI") return Architecture::SingleFSI;
  if (s == "eulerian-lagrangian" || s == "el" || s == "EulerianLagrangian") return Architecture::EulerianLagrangian;
  throw ConfigError("unknown architecture '" + s + "'");
}

std::vector<double> default_weights(Architecture a) {
  if (a == Architecture::SingleFSI) return {0.1, 2.0, 4.0, 0.1};
  return {2.0, 2.0, 2.0, 0.2, 0.1, 0.2};
}

nets::NetworkSpec ModelConfig::network_spec() const {
  nets::NetworkSpec s;
  s.widths = widths;
  s.activation = activation;
  s.input_bounds[0] = {0.0, t_max};
  return s;
}

void ModelConfig::validate() const {
  const auto fail = [&](const std::string& m) { throw ConfigError("model " + model_id + ": " + m); };
  try {
    network_spec().validate();
  } catch (const std::invalid_argument& e) {
    fail(e.what());
  }
  check_weights(loss_weights, architecture == Architecture::SingleFSI ? 4 : 6, to_string(architecture).c_str());
  for (double w : loss_weights)
    if (!(w >= 0.0) || !std::isfinite(w)) fail("loss weights must be finite and nonnegative");
  if (!(beta1 >= 0.0 && beta1 < 1.0 && beta2 >= 0.0 && beta2 < 1.0)) fail("Adam betas must be in [0, 1)");
  if (!(epsilon > 0.0)) fail("Adam epsilon must be positive");
  if (!(lr0 > 0.0)) fail("lr0 must be positive");
  if (decay_step <= 0 || !(decay_rate > 0.0 && decay_rate <= 1.0)) fail("bad learning-rate decay");
  if (iterations < 0) fail("iterations must be nonnegative");
  if (batch_size == 0) fail("batch_size must be positive");
  if (log_every <= 0 || grid_update_every <= 0) fail("log_every and grid_update_every must be positive");
  if (!(t_max > 0.0)) fail("t_max must be positive");
}

std::vector<std::string> model_ids() { return {"M1", "M2", "M3", "M4"}; }

ModelConfig model_config(const std::string& id) {
  ModelConfig c;
  c.model_id = id;
  if (id == "M1" || id == "M3") {
    c.activation = nets::Activation::Tanh;
    c.widths = {3, 300, 300, 300, 3};
  } else if (id == "M2" || id == "M4") {
    c.activation = nets::Activation::BSpline;
    c.widths = {3, 100, 100, 100, 3};
  } else {
    throw ConfigError("unknown model '" + id + "' (expected M1, M2, M3 or M4)");
  }
  c.architecture = (id == "M1" || id == "M2") ? Architecture::SingleFSI : Architecture::EulerianLagrangian;
  c.loss_weights = default_weights(c.architecture);
  return c;
}

ModelConfig desk_scale(ModelConfig c) {
  c.widths = {3, 50, 50, 50, 3};
  c.iterations = 5000;
  return c;
}

// ---- residuals -----------------------------------------------------------------

Residuals navier_stokes_residuals(const Var& u, const Var& v, const Var& p, const Var& t, const Var& x, const Var& y,
                                  double rho, double mu) {
  const ad::GradOptions keep{true};
  const Var txy[] = {t, x, y};
  const Var xy[] = {x, y};
  const auto du = ad::grad(ad::sum(u), txy, keep);
  const auto dv = ad::grad(ad::sum(v), txy, keep);
  const auto dp = ad::grad(ad::sum(p), xy, keep);
  const Var xs[] = {x};
  const Var ys[] = {y};
  const Var uxx = ad::grad(ad::sum(du[1]), xs, keep)[0];
  const Var uyy = ad::grad(ad::sum(du[2]), ys, keep)[0];
  const Var vxx = ad::grad(ad::sum(dv[1]), xs, keep)[0];
  const Var vyy = ad::grad(ad::sum(dv[2]), ys, keep)[0];
  Residuals r;
  r.ru = du[0] + u * du[1] + v * du[2] + (1.0 / rho) * dp[0] - mu * (uxx + uyy);
  r.rv = dv[0] + u * dv[1] + v * dv[2] + (1.0 / rho) * dp[1] - mu * (vxx + vyy);
  r.rc = du[1] + dv[2];
  return r;
}

Var normal_derivative(const Var& p, const Var& x, const Var& y, const Matrix& normals) {
  const Var xy[] = {x, y};
  const auto dp = ad::grad(ad::sum(p), xy, {true});
  Tape& tape = *p.tape();
  return dp[0] * tape.constant(normals.col(0)) + dp[1] * tape.constant(normals.col(1));
}

// ---- losses --------------------------------------------------------------------

FieldFn network_field(const nets::Network& net, const std::vector<Var>& params) {
  return [&net, params](const Var& t, const Var& x, const Var& y) { return net.forward(params, t, x, y); };
}

Batch full_batch(const sampling::TrainingSet& set) {
  using sampling::Wall;
  Batch b;
  b.fluid = set.fluid;
  b.lid = set.wall(Wall::Top).txy;
  b.lid_uv = set.wall(Wall::Top).uv;
  b.walls = stack_rows({&set.wall(Wall::Bottom).txy, &set.wall(Wall::Left).txy, &set.wall(Wall::Right).txy});
  b.wall_uv = stack_rows({&set.wall(Wall::Bottom).uv, &set.wall(Wall::Left).uv, &set.wall(Wall::Right).uv});
  b.initial = set.initial.txy;
  b.interface = set.interface;
  b.interface_values = set.interface_values;
  b.interface_normals = set.interface_normals;
  return b;
}

Batch make_batch(const sampling::TrainingSet& set, const sampling::Minibatch& mb) {
  using sampling::gather_rows;
  using sampling::Wall;
  const auto& idx = mb.indices;
  Batch b;
  b.fluid = gather_rows(set.fluid, idx[0]);
  b.lid = gather_rows(set.wall(Wall::Top).txy, idx[1]);
  b.lid_uv = gather_rows(set.wall(Wall::Top).uv, idx[1]);
  const Matrix bt = gather_rows(set.wall(Wall::Bottom).txy, idx[2]);
  const Matrix lt = gather_rows(set.wall(Wall::Left).txy, idx[3]);
  const Matrix rt = gather_rows(set.wall(Wall::Right).txy, idx[4]);
  const Matrix bu = gather_rows(set.wall(Wall::Bottom).uv, idx[2]);
  const Matrix lu = gather_rows(set.wall(Wall::Left).uv, idx[3]);
  const Matrix ru = gather_rows(set.wall(Wall::Right).uv, idx[4]);
  b.walls = stack_rows({&bt, &lt, &rt});
  b.wall_uv = stack_rows({&bu, &lu, &ru});
  b.initial = gather_rows(set.initial.txy, idx[5]);
  b.interface = gather_rows(set.interface, idx[6]);
  b.interface_values = gather_rows(set.interface_values, idx[6]);
  b.interface_normals = gather_rows(set.interface_normals, idx[6]);
  return b;
}

std::vector<std::string> Loss::names() const {
  std::vector<std::string> n;
  for (const auto& t : terms) n.push_back(t.name);
  return n;
}

std::vector<double> Loss::values() const {
  std::vector<double> v;
  for (const auto& t : terms) v.push_back(t.value.item());
  return v;
}

Var Loss::group_total(Group g) const {
  Var total;
  for (const auto& t : terms) {
    if (t.group != g) continue;
    const Var c = t.weight * t.value;
    total = total.valid() ? total + c : c;
  }
  if (!total.valid()) total = this->total.tape()->scalar(0.0);
  return total;
}

std::string Loss::describe() const {
  std::ostringstream m;
  m << "total=" << total.item();
  for (const auto& t : terms) m << ' ' << t.name << '=' << t.value.item() << "(x" << t.weight << ')';
  return m.str();
}

std::vector<std::string> term_names(Architecture a) {
  if (a == Architecture::SingleFSI)
    return {"ru", "rv", "rc", "lid", "wall", "ic_u", "ic_v", "ic_p", "xi_u", "xi_v", "xi_dpdn"};
  return {"ru", "rv", "rc", "lid", "wall", "ic_u", "ic_v", "ic_p", "dpdn", "couple_u", "couple_v"};
}

Loss loss_single_fsi(const FieldFn& net, const Batch& b, const std::vector<double>& lambda, Tape& tape) {
  check_weights(lambda, 4, "single-fsi");
  const auto phy = physics(net, b.fluid, tape);
  const auto bc = boundaries(net, b, tape);
  require_rows(b.interface, "xi", "interface set");
  const Var t = column(tape, b.interface, 0, false);
  const Var x = column(tape, b.interface, 1, true), y = column(tape, b.interface, 2, true);
  const Var out = net(t, x, y);
  const Var xi_u = ad::mse(col(out, 0), column(tape, b.interface_values, 0, false));
  const Var xi_v = ad::mse(col(out, 1), column(tape, b.interface_values, 1, false));
  const Var xi_dpdn = ad::mse(normal_derivative(col(out, 2), x, y, b.interface_normals), 0.0);
  const double l1 = lambda[0], l2 = lambda[1], l3 = lambda[2], l4 = lambda[3];
  const auto G = Group::Eulerian;
  return assemble({{"ru", l1, G, phy.ru},
                   {"rv", l1, G, phy.rv},
                   {"rc", l1, G, phy.rc},
                   {"lid", l2, G, bc.lid},
                   {"wall", l2, G, bc.wall},
                   {"ic_u", l3, G, bc.ic_u},
                   {"ic_v", l3, G, bc.ic_v},
                   {"ic_p", l3, G, bc.ic_p},
                   {"xi_u", l4, G, xi_u},
                   {"xi_v", l4, G, xi_v},
                   {"xi_dpdn", l4, G, xi_dpdn}});
}

Loss loss_eulerian_lagrangian(const FieldFn& eulerian, const FieldFn& lagrangian, const FieldFn& lagrangian_coupling,
                              const Batch& b, const std::vector<double>& lambda, Tape& tape) {
  check_weights(lambda, 6, "eulerian-lagrangian");
  const auto phy = physics(eulerian, b.fluid, tape);
  const auto bc = boundaries(eulerian, b, tape);
  require_rows(b.interface, "dpdn", "interface set");
  const Var t = column(tape, b.interface, 0, false);
  const Var x = column(tape, b.interface, 1, true), y = column(tape, b.interface, 2, true);
  const Var lag = lagrangian(t, x, y);
  const Var dpdn = ad::mse(normal_derivative(col(lag, 2), x, y, b.interface_normals), 0.0);
  const Var xc = column(tape, b.interface, 1, false), yc = column(tape, b.interface, 2, false);
  const Var eu = eulerian(t, xc, yc);
  const Var lc = lagrangian_coupling(t, xc, yc);
  const Var couple_u = ad::mse(col(eu, 0), col(lc, 0));
  const Var couple_v = ad::mse(col(eu, 1), col(lc, 1));
  const double l1 = lambda[0], l2 = lambda[1], l3 = lambda[2], l5 = lambda[4], l6 = lambda[5];
  const auto E = Group::Eulerian;
  return assemble({{"ru", l5, E, phy.ru},
                   {"rv", l5, E, phy.rv},
                   {"rc", l5, E, phy.rc},
                   {"lid", l1, E, bc.lid},
                   {"wall", l1, E, bc.wall},
                   {"ic_u", l2, E, bc.ic_u},
                   {"ic_v", l2, E, bc.ic_v},
                   {"ic_p", l2, E, bc.ic_p},
                   {"dpdn", l3, Group::Lagrangian, dpdn},
                   {"couple_u", l6, Group::Coupling, couple_u},
                   {"couple_v", l6, Group::Coupling, couple_v}});
}

// ---- optimiser -------------------------------------------------------------------

double learning_rate(double lr0, long iter, long step, double rate) {
  return lr0 * std::pow(rate, static_cast<double>(iter / step));
}

void Adam::step(const std::vector<Matrix*>& params, const std::vector<Matrix>& grads, double lr) {
  if (params.size() != grads.size()) throw std::invalid_argument("Adam: parameter and gradient counts differ");
  for (std::size_t i = 0; i < grads.size(); ++i) {
    if (!grads[i].allFinite()) {
      std::ostringstream m;
      m << "non-finite gradient in parameter block " << i;
      throw TrainingError(m.str());
    }
  }
  if (m_.empty()) {
    for (const Matrix* p : params) {
      m_.push_back(Matrix::Zero(p->rows(), p->cols()));
      v_.push_back(Matrix::Zero(p->rows(), p->cols()));
    }
  }
  ++t_;
  const double c1 = 1.0 - std::pow(beta1_, static_cast<double>(t_));
  const double c2 = 1.0 - std::pow(beta2_, static_cast<double>(t_));
  for (std::size_t i = 0; i < params.size(); ++i) {
    m_[i] = beta1_ * m_[i] + (1.0 - beta1_) * grads[i];
    v_[i] = beta2_ * v_[i] + (1.0 - beta2_) * grads[i].cwiseProduct(grads[i]);
    const auto mhat = m_[i].array() / c1;
    const auto vhat = v_[i].array() / c2;
    params[i]->array() -= lr * mhat / (vhat.sqrt() + eps_);
  }
}

// ---- models ----------------------------------------------------------------------

Model create_model(const ModelConfig& config) {
  config.validate();
  Model m;
  m.config = config;
  m.eulerian = nets::Network::create(config.network_spec(), config.seed);
  if (m.has_lagrangian()) m.lagrangian = nets::Network::create(config.network_spec(), config.seed ^ 0x9E3779B97F4A7C15ULL);
  return m;
}

std::vector<Matrix*> Model::parameters() {
  auto p = eulerian.parameters();
  if (has_lagrangian())
    for (Matrix* q : lagrangian.parameters()) p.push_back(q);
  return p;
}

Matrix Model::predict_fluid(const Matrix& txy) const { return eulerian.evaluate(txy); }

Matrix Model::predict_interface(const Matrix& txy) const {
  return has_lagrangian() ? lagrangian.evaluate(txy) : eulerian.evaluate(txy);
}

Loss model_loss(const Model& model, const Batch& batch, Tape& tape, std::vector<Var>* params, bool detach_lagrangian) {
  const auto pe = model.eulerian.bind(tape);
  std::vector<Var> all = pe;
  Loss loss;
  if (!model.has_lagrangian()) {
    loss = loss_single_fsi(network_field(model.eulerian, pe), batch, model.config.loss_weights, tape);
  } else {
    const auto pl = model.lagrangian.bind(tape);
    all.insert(all.end(), pl.begin(), pl.end());
    std::vector<Var> frozen;
    if (detach_lagrangian)
      for (const Matrix* m : model.lagrangian.parameters()) frozen.push_back(tape.constant(*m));
    const auto lag = network_field(model.lagrangian, pl);
    const auto coupling = detach_lagrangian ? network_field(model.lagrangian, frozen) : lag;
    loss = loss_eulerian_lagrangian(network_field(model.eulerian, pe), lag, coupling, batch, model.config.loss_weights,
                                    tape);
  }
  if (params) *params = std::move(all);
  return loss;
}

// ---- training --------------------------------------------------------------------

namespace {

bool finite_loss(const Loss& l) {
  if (!std::isfinite(l.total.item())) return false;
  for (const auto& t : l.terms)
    if (!std::isfinite(t.value.item())) return false;
  return true;
}

Matrix all_inputs(const Batch& b) {
  return stack_rows({&b.fluid, &b.lid, &b.walls, &b.initial, &b.interface});
}

}  // namespace

TrainReport train(Model& model, const sampling::TrainingSet& set, const TrainOptions& options) {
  const ModelConfig& cfg = model.config;
  cfg.validate();
  TrainReport report;
  report.model_id = cfg.model_id;
  report.seed = cfg.seed;
  report.term_names = term_names(cfg.architecture);
  const Batch full = full_batch(set);

  const auto full_loss = [&](double& total, std::vector<double>& terms) {
    Tape tape;
    const Loss l = model_loss(model, full, tape);
    total = l.total.item();
    terms = l.values();
    return finite_loss(l) ? std::string() : l.describe();
  };
  const auto record = [&](long iter, double lr, const Loss& l) {
    LogRow row{iter, lr, l.total.item(), l.values()};
    if (options.on_log) options.on_log(row);
    report.log.push_back(std::move(row));
  };

  if (auto bad = full_loss(report.initial_total, report.initial_terms); !bad.empty()) {
    report.aborted = true;
    report.error = "non-finite initial loss: " + bad;
    return report;
  }

  const bool kan = cfg.activation == nets::Activation::BSpline;
  const Matrix grid_input = all_inputs(full);
  Adam adam(cfg.beta1, cfg.beta2, cfg.epsilon);
  const auto params = model.parameters();
  long iter = 0;
  for (; iter <= cfg.iterations; ++iter) {
    if (kan && iter > 0 && iter < cfg.iterations && iter % cfg.grid_update_every == 0 && 2 * iter <= cfg.iterations) {
      model.eulerian.update_grid(grid_input);
      if (model.has_lagrangian()) model.lagrangian.update_grid(full.interface);
      ++report.grid_updates;
    }
    const Batch batch = make_batch(set, sampling::minibatch(set, cfg.batch_size, cfg.seed, iter));
    Tape tape;
    std::vector<Var> pv;
    const Loss loss = model_loss(model, batch, tape, &pv);
    const double lr = learning_rate(cfg.lr0, iter, cfg.decay_step, cfg.decay_rate);
    const bool last = iter == cfg.iterations;
    if (iter % cfg.log_every == 0 || last) record(iter, lr, loss);
    if (!finite_loss(loss)) {
      report.aborted = true;
      std::ostringstream m;
      m << "non-finite loss at iteration " << iter << ": " << loss.describe();
      report.error = m.str();
      break;
    }
    if (last) break;
    try {
      adam.step(params, ad::gradient_values(loss.total, pv), lr);
    } catch (const TrainingError& e) {
      report.aborted = true;
      std::ostringstream m;
      m << e.what() << " at iteration " << iter << ": " << loss.describe();
      report.error = m.str();
      break;
    }
  }
  report.iterations_run = std::min(iter, cfg.iterations);
  if (!report.aborted) {
    if (auto bad = full_loss(report.final_total, report.final_terms); !bad.empty()) {
      report.aborted = true;
      report.error = "non-finite final loss: " + bad;
    }
  }
  return report;
}

void write_log_csv(const TrainReport& report, std::ostream& os) {
  os << "iter,lr,total";
  for (const auto& n : report.term_names) os << ',' << n;
  os << '\n';
  for (const auto& row : report.log) {
    os << row.iter << ',' << format_double(row.lr) << ',' << format_double(row.total);
    for (double v : row.terms) os << ',' << format_double(v);
    os << '\n';
  }
}

// ---- checkpoints -------------------------------------------------------------------

void write_model(const Model& model, std::ostream& os) {
  const ModelConfig& c = model.config;
  os << "model 1\n";
  os << "model_id " << c.model_id << '\n';
  os << "architecture " << to_string(c.architecture) << '\n';
  os << "loss_weights " << c.loss_weights.size();
  for (double w : c.loss_weights) os << ' ' << format_double(w);
  os << '\n';
  os << "adam " << format_double(c.beta1) << ' ' << format_double(c.beta2) << ' ' << format_double(c.epsilon) << '\n';
  os << "schedule " << format_double(c.lr0) << ' ' << c.decay_step << ' ' << format_double(c.decay_rate) << '\n';
  os << "iterations " << c.iterations << '\n';
  os << "batch_size " << c.batch_size << '\n';
  os << "log_every " << c.log_every << '\n';
  os << "grid_update_every " << c.grid_update_every << '\n';
  os << "seed " << c.seed << '\n';
  os << "t_max " << format_double(c.t_max) << '\n';
  model.eulerian.write(os);
  if (model.has_lagrangian()) model.lagrangian.write(os);
  os << "end_model\n";
}

Model read_model(std::istream& is) {
  const auto expect = [&](const std::string& key) {
    std::string k;
    if (!(is >> k) || k != key) throw std::runtime_error("checkpoint: expected '" + key + "', found '" + k + "'");
  };
  const auto word = [&] {
    std::string w;
    if (!(is >> w)) throw std::runtime_error("checkpoint: truncated");
    return w;
  };
  const auto number = [&] { return parse_double(word()); };
  const auto integer = [&] { return std::stol(word()); };
  expect("model");
  if (word() != "1") throw std::runtime_error("checkpoint: unsupported model version");
  ModelConfig c;
  expect("model_id");
  c.model_id = word();
  expect("architecture");
  c.architecture = architecture_from_string(word());
  expect("loss_weights");
  c.loss_weights.resize(static_cast<std::size_t>(integer()));
  for (double& w : c.loss_weights) w = number();
  expect("adam");
  c.beta1 = number();
  c.beta2 = number();
  c.epsilon = number();
  expect("schedule");
  c.lr0 = number();
  c.decay_step = integer();
  c.decay_rate = number();
  expect("iterations");
  c.iterations = integer();
  expect("batch_size");
  c.batch_size = static_cast<std::size_t>(integer());
  expect("log_every");
  c.log_every = integer();
  expect("grid_update_every");
  c.grid_update_every = integer();
  expect("seed");
  c.seed = std::stoull(word());
  expect("t_max");
  c.t_max = number();
  Model m;
  m.eulerian = nets::Network::read(is);
  if (c.architecture == Architecture::EulerianLagrangian) m.lagrangian = nets::Network::read(is);
  c.activation = m.eulerian.spec().activation;
  c.widths = m.eulerian.spec().widths;
  m.config = c;
  expect("end_model");
  c.validate();
  return m;
}

void save_model(const Model& model, const std::filesystem::path& file) {
  if (file.has_parent_path()) std::filesystem::create_directories(file.parent_path());
  std::ofstream out(file);
  if (!out) throw std::runtime_error("cannot write checkpoint " + file.string());
  write_model(model, out);
  if (!out) throw std::runtime_error("failed writing checkpoint " + file.string());
}

Model load_model(const std::filesystem::path& file) {
  std::ifstream in(file);
  if (!in) throw std::runtime_error("cannot read checkpoint " + file.string());
  return read_model(in);
}

}  // namespace fsipinn::pinn
