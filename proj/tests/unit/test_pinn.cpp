#include <gtest/gtest.h>

#include <cmath>
#include <random>
#include <sstream>

#include "fsipinn/ibm_solver.hpp"
#include "fsipinn/pinn.hpp"
#include "support/finite_difference.hpp"

using namespace fsipinn;
using namespace fsipinn::pinn;

namespace {

Var stack3(const Var& a, const Var& b, const Var& c) {
  const Var parts[] = {a, b, c};
  return ad::concat_cols(parts);
}

// u = t x^2, v = -2 t x y, p = x y.
Var polynomial_field(const Var& t, const Var& x, const Var& y) {
  return stack3(t * ad::square(x), ad::scale(t * x * y, -2.0), x * y);
}

// Exact Navier-Stokes solution with zero initial state:
// u = t^2 x, v = -t^2 y, p = -(2t + t^4) x^2 / 2 + (2t - t^4) y^2 / 2.
Var exact_field(const Var& t, const Var& x, const Var& y) {
  const Var g = ad::square(t);
  const Var g4 = ad::square(g);
  const Var p = ad::scale((2.0 * t + g4) * ad::square(x), -0.5) + ad::scale((2.0 * t - g4) * ad::square(y), 0.5);
  return stack3(g * x, ad::scale(g * y, -1.0), p);
}

Var zero_field(const Var& t, const Var&, const Var&) {
  return stack3(ad::scale(t, 0.0), ad::scale(t, 0.0), ad::scale(t, 0.0));
}

Matrix random_points(Index n, std::uint64_t seed, double t_hi = 1.0) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> U(0.05, 0.95);
  Matrix m(n, 3);
  for (Index r = 0; r < n; ++r) m.row(r) << U(rng) * t_hi, U(rng), U(rng);
  return m;
}

Residuals residuals_of(const FieldFn& f, const Matrix& pts, Tape& tape) {
  const Var t = tape.leaf(pts.col(0)), x = tape.leaf(pts.col(1)), y = tape.leaf(pts.col(2));
  const Var out = f(t, x, y);
  return navier_stokes_residuals(ad::slice_cols(out, 0, 1), ad::slice_cols(out, 1, 2), ad::slice_cols(out, 2, 3), t, x,
                                 y);
}

// Small simulated dataset shared by the training tests.
const FsiDataset& small_dataset() {
  static const FsiDataset data = [] {
    ibm::SolverConfig c;
    c.grid = 16;
    c.t_end = 0.2;
    c.dt = 0.02;
    c.markers = 32;
    return ibm::run_simulation(c);
  }();
  return data;
}

const sampling::TrainingSet& small_set() {
  static const sampling::TrainingSet set = [] {
    sampling::TrainingConfig tc;
    tc.fluid_fraction = 0.05;
    tc.interface_fraction = 0.2;
    tc.boundary_points = 64;
    tc.initial_points = 64;
    tc.seed = 5;
    return sampling::build_training_set(small_dataset(), tc);
  }();
  return set;
}

ModelConfig tiny(const std::string& id, int width = 6) {
  ModelConfig c = model_config(id);
  c.widths = {3, width, width, 3};
  c.batch_size = 16;
  c.t_max = 0.2;
  c.seed = 11;
  return c;
}

Batch tiny_batch(std::size_t n = 6) {
  return make_batch(small_set(), sampling::minibatch(small_set(), n, 3, 0));
}

double loss_value(const Model& m, const Batch& b) {
  Tape tape;
  return model_loss(m, b, tape).total.item();
}

}  // namespace

// ---- residuals ----------------------------------------------------------------------

TEST(Residuals, ConstantFieldHasNone) {
  Tape tape;
  const auto r = residuals_of(
      [](const Var& t, const Var& x, const Var&) {
        return stack3(ad::add_scalar(ad::scale(t, 0.0), 0.3), ad::add_scalar(ad::scale(x, 0.0), -0.2),
                      ad::add_scalar(ad::scale(x, 0.0), 4.0));
      },
      random_points(5, 1), tape);
  EXPECT_LT(r.ru.value().cwiseAbs().maxCoeff(), 1e-14);
  EXPECT_LT(r.rv.value().cwiseAbs().maxCoeff(), 1e-14);
  EXPECT_LT(r.rc.value().cwiseAbs().maxCoeff(), 1e-14);
}

TEST(Residuals, StrainFieldExample) {
  Tape tape;
  Matrix pts(1, 3);
  pts << 0.3, 0.5, 0.25;
  const auto r = residuals_of(
      [](const Var& t, const Var& x, const Var& y) { return stack3(x, ad::scale(y, -1.0), ad::scale(t, 0.0)); }, pts,
      tape);
  EXPECT_NEAR(r.rc.item(), 0.0, 1e-14);
  EXPECT_NEAR(r.ru.item(), 0.5, 1e-14);
  EXPECT_NEAR(r.rv.item(), 0.25, 1e-14);
}

TEST(Residuals, PolynomialMatchesHandDerivation) {
  const Matrix pts = random_points(20, 2);
  Tape tape;
  const auto r = residuals_of(polynomial_field, pts, tape);
  for (Index k = 0; k < pts.rows(); ++k) {
    const double t = pts(k, 0), x = pts(k, 1), y = pts(k, 2);
    EXPECT_NEAR(r.ru.value()(k, 0), x * x + 2 * t * t * x * x * x + y - 2 * kViscosity * t, 1e-12);
    EXPECT_NEAR(r.rv.value()(k, 0), -2 * x * y + 2 * t * t * x * x * y + x, 1e-12);
    EXPECT_NEAR(r.rc.value()(k, 0), 0.0, 1e-12);
  }
}

TEST(Residuals, DensityAndViscosityEnter) {
  Matrix pts(1, 3);
  pts << 0.5, 0.4, 0.7;
  Tape tape;
  const Var t = tape.leaf(pts.col(0)), x = tape.leaf(pts.col(1)), y = tape.leaf(pts.col(2));
  const Var out = polynomial_field(t, x, y);
  const auto r = navier_stokes_residuals(ad::slice_cols(out, 0, 1), ad::slice_cols(out, 1, 2),
                                         ad::slice_cols(out, 2, 3), t, x, y, 2.0, 0.1);
  EXPECT_NEAR(r.ru.item(), 0.16 + 2 * 0.25 * 0.064 + 0.7 / 2.0 - 2 * 0.1 * 0.5, 1e-12);
}

// Residuals of a random network against finite differences of its forward pass.
TEST(Residuals, NetworkMatchesFiniteDifferences) {
  for (auto act : {nets::Activation::Tanh, nets::Activation::BSpline}) {
    nets::NetworkSpec spec;
    spec.widths = {3, 8, 8, 3};
    spec.activation = act;
    spec.input_bounds[0] = {0.0, 1.0};
    const auto net = nets::Network::create(spec, 4);
    const Matrix pts = random_points(4, 3);
    Tape tape;
    const auto params = net.bind(tape);
    const auto r = residuals_of(network_field(net, params), pts, tape);
    for (Index k = 0; k < pts.rows(); ++k) {
      const auto f = [&](double t, double x, double y, int c) {
        Matrix q(1, 3);
        q << t, x, y;
        return net.evaluate(q)(0, c);
      };
      const double t = pts(k, 0), x = pts(k, 1), y = pts(k, 2);
      const double h = 1e-4, h2 = 1e-3;
      const auto d = [&](int c, int axis) {
        double a[3] = {t, x, y}, b[3] = {t, x, y};
        a[axis] += h;
        b[axis] -= h;
        return (f(a[0], a[1], a[2], c) - f(b[0], b[1], b[2], c)) / (2 * h);
      };
      const auto dd = [&](int c, int axis) {
        double a[3] = {t, x, y}, b[3] = {t, x, y};
        a[axis] += h2;
        b[axis] -= h2;
        return (f(a[0], a[1], a[2], c) - 2 * f(t, x, y, c) + f(b[0], b[1], b[2], c)) / (h2 * h2);
      };
      const double u = f(t, x, y, 0), v = f(t, x, y, 1);
      const double ru = d(0, 0) + u * d(0, 1) + v * d(0, 2) + d(2, 1) - kViscosity * (dd(0, 1) + dd(0, 2));
      const double rv = d(1, 0) + u * d(1, 1) + v * d(1, 2) + d(2, 2) - kViscosity * (dd(1, 1) + dd(1, 2));
      EXPECT_NEAR(r.ru.value()(k, 0), ru, 1e-5);
      EXPECT_NEAR(r.rv.value()(k, 0), rv, 1e-5);
      EXPECT_NEAR(r.rc.value()(k, 0), d(0, 1) + d(1, 2), 1e-6);
    }
  }
}

TEST(Residuals, NormalDerivative) {
  Matrix pts = random_points(5, 6);
  Matrix n(5, 2);
  for (Index k = 0; k < 5; ++k) n.row(k) << std::cos(k), std::sin(k);
  Tape tape;
  const Var x = tape.leaf(pts.col(1)), y = tape.leaf(pts.col(2));
  const Var dpdn = normal_derivative(x * y, x, y, n);
  for (Index k = 0; k < 5; ++k) EXPECT_NEAR(dpdn.value()(k, 0), pts(k, 2) * n(k, 0) + pts(k, 1) * n(k, 1), 1e-14);
}

// ---- losses -------------------------------------------------------------------------

TEST(Loss, ZeroFieldLidTermIsOne) {
  Tape tape;
  const Loss l = loss_single_fsi(zero_field, full_batch(small_set()), default_weights(Architecture::SingleFSI), tape);
  ASSERT_EQ(l.names(), term_names(Architecture::SingleFSI));
  EXPECT_NEAR(l.terms[3].value.item(), 1.0, 1e-14);
  EXPECT_EQ(l.terms[4].value.item(), 0.0);
  for (int k : {5, 6, 7}) EXPECT_EQ(l.terms[static_cast<std::size_t>(k)].value.item(), 0.0);
}

TEST(Loss, ZeroNetworkLidTermIsOne) {
  Model m = create_model(tiny("M1"));
  for (Matrix* p : m.parameters()) p->setZero();
  Tape tape;
  const Loss l = model_loss(m, full_batch(small_set()), tape);
  EXPECT_NEAR(l.terms[3].value.item(), 1.0, 1e-14);
}

TEST(Loss, DecompositionSumsToTotal) {
  for (const auto& id : model_ids()) {
    const Model m = create_model(tiny(id));
    Tape tape;
    const Loss l = model_loss(m, tiny_batch(), tape);
    double sum = 0.0;
    for (const auto& t : l.terms) {
      EXPECT_GE(t.value.item(), 0.0) << id << ' ' << t.name;
      sum += t.weight * t.value.item();
    }
    EXPECT_NEAR(sum, l.total.item(), 1e-12 * std::max(1.0, std::abs(sum))) << id;
    const double groups = l.group_total(Group::Eulerian).item() + l.group_total(Group::Lagrangian).item() +
                          l.group_total(Group::Coupling).item();
    EXPECT_NEAR(groups, l.total.item(), 1e-12 * std::max(1.0, std::abs(sum))) << id;
  }
}

TEST(Loss, LinearInWeights) {
  const Model m = create_model(tiny("M3"));
  const Batch b = tiny_batch();
  Tape t1;
  const Loss base = model_loss(m, b, t1);
  Model scaled = m;
  for (double& w : scaled.config.loss_weights) w *= 3.0;
  scaled.config.loss_weights[0] = m.config.loss_weights[0];
  Tape t2;
  const Loss l = model_loss(scaled, b, t2);
  for (std::size_t k = 0; k < l.terms.size(); ++k) EXPECT_DOUBLE_EQ(l.terms[k].value.item(), base.terms[k].value.item());
  const double lid_wall = base.terms[3].weight * (base.terms[3].value.item() + base.terms[4].value.item());
  EXPECT_NEAR(l.total.item(), 3.0 * base.total.item() - 2.0 * lid_wall, 1e-10 * base.total.item());
}

// Every term vanishes for an exact solution whose boundary data come from itself.
TEST(Loss, ExactSolutionGivesZero) {
  const Matrix fluid = random_points(30, 7);
  const auto values = [](const Matrix& pts) {
    Tape tape;
    return exact_field(tape.constant(pts.col(0)), tape.constant(pts.col(1)), tape.constant(pts.col(2))).value();
  };
  Batch b;
  b.fluid = fluid;
  b.lid = random_points(10, 8);
  b.lid.col(2).setOnes();
  b.lid_uv = values(b.lid).leftCols(2);
  b.walls = random_points(10, 9);
  b.walls.col(1).setZero();
  b.wall_uv = values(b.walls).leftCols(2);
  b.initial = random_points(10, 10);
  b.initial.col(0).setZero();
  b.interface = random_points(10, 11);
  b.interface_values = values(b.interface);
  b.interface_normals.resize(10, 2);
  for (Index k = 0; k < 10; ++k) {
    const double t = b.interface(k, 0), x = b.interface(k, 1), y = b.interface(k, 2);
    const double gx = -(2 * t + std::pow(t, 4)) * x, gy = (2 * t - std::pow(t, 4)) * y;
    const double n = std::hypot(gx, gy);
    b.interface_normals.row(k) << -gy / n, gx / n;
  }
  Tape tape;
  const Loss l = loss_single_fsi(exact_field, b, default_weights(Architecture::SingleFSI), tape);
  EXPECT_LT(l.total.item(), 1e-10) << l.describe();
  Tape tape2;
  const Loss el = loss_eulerian_lagrangian(exact_field, exact_field, exact_field, b,
                                           default_weights(Architecture::EulerianLagrangian), tape2);
  EXPECT_LT(el.total.item(), 1e-10) << el.describe();
}

TEST(Loss, EmptyCollectionNamesTerm) {
  Batch b = full_batch(small_set());
  b.interface.resize(0, 3);
  Tape tape;
  try {
    loss_single_fsi(zero_field, b, default_weights(Architecture::SingleFSI), tape);
    FAIL();
  } catch (const std::invalid_argument& e) {
    EXPECT_NE(std::string(e.what()).find("xi"), std::string::npos);
  }
}

TEST(Loss, WrongWeightCount) {
  Tape tape;
  EXPECT_THROW(loss_single_fsi(zero_field, full_batch(small_set()), {1.0, 2.0}, tape), ConfigError);
}

// Parameter gradients of the total loss against central differences.
TEST(Loss, GradientsMatchFiniteDifferences) {
  const Batch b = tiny_batch(4);
  for (const auto& id : model_ids()) {
    Model m = create_model(tiny(id, 4));
    Tape tape;
    std::vector<Var> pv;
    const Loss l = model_loss(m, b, tape, &pv);
    const auto grads = ad::gradient_values(l.total, pv);
    const auto params = m.parameters();
    for (std::size_t k = 0; k < params.size(); k += 2) {
      const auto fd = fsipinn::testing::central_gradient(
          [&](const Matrix& w) {
            const Matrix saved = *params[k];
            *params[k] = w;
            const double v = loss_value(m, b);
            *params[k] = saved;
            return v;
          },
          *params[k], 1e-6);
      const double scale = std::max(1.0, fd.cwiseAbs().maxCoeff());
      EXPECT_LT((grads[k] - fd).cwiseAbs().maxCoeff(), 1e-4 * scale) << id << " block " << k;
    }
  }
}

TEST(Loss, EulerianLagrangianGroupsSeparate) {
  const Model m = create_model(tiny("M4"));
  Tape tape;
  std::vector<Var> pv;
  const Loss l = model_loss(m, tiny_batch(), tape, &pv);
  const std::size_t ne = m.eulerian.parameters().size();
  const auto ge = ad::gradient_values(l.group_total(Group::Eulerian), pv);
  const auto gl = ad::gradient_values(l.group_total(Group::Lagrangian), pv);
  double e_on_l = 0, l_on_e = 0, e_on_e = 0, l_on_l = 0;
  for (std::size_t k = 0; k < pv.size(); ++k) {
    (k < ne ? e_on_e : e_on_l) += ge[k].cwiseAbs().sum();
    (k < ne ? l_on_e : l_on_l) += gl[k].cwiseAbs().sum();
  }
  EXPECT_EQ(e_on_l, 0.0);
  EXPECT_EQ(l_on_e, 0.0);
  EXPECT_GT(e_on_e, 0.0);
  EXPECT_GT(l_on_l, 0.0);
}

TEST(Loss, DetachedCouplingOnlyMovesEulerian) {
  const Model m = create_model(tiny("M3"));
  const Batch b = tiny_batch();
  Tape tape;
  std::vector<Var> pv;
  const Loss l = model_loss(m, b, tape, &pv, true);
  const std::size_t ne = m.eulerian.parameters().size();
  const auto gt = ad::gradient_values(l.total, pv);
  const auto gl = ad::gradient_values(l.group_total(Group::Lagrangian), pv);
  for (std::size_t k = ne; k < pv.size(); ++k) EXPECT_LT((gt[k] - gl[k]).cwiseAbs().maxCoeff(), 1e-14);
  Tape attached;
  const Loss a = model_loss(m, b, attached);
  EXPECT_DOUBLE_EQ(a.total.item(), l.total.item());
}

TEST(Loss, CouplingVanishesForIdenticalNetworks) {
  Model m = create_model(tiny("M3"));
  m.lagrangian = m.eulerian;
  Tape tape;
  const Loss l = model_loss(m, tiny_batch(), tape);
  EXPECT_EQ(l.terms[9].value.item(), 0.0);
  EXPECT_EQ(l.terms[10].value.item(), 0.0);
}

// ---- optimiser ----------------------------------------------------------------------

TEST(Schedule, StepDecay) {
  EXPECT_DOUBLE_EQ(learning_rate(1e-3, 0), 1e-3);
  EXPECT_DOUBLE_EQ(learning_rate(1e-3, 999), 1e-3);
  EXPECT_DOUBLE_EQ(learning_rate(1e-3, 1000), 0.99e-3);
  EXPECT_DOUBLE_EQ(learning_rate(1e-3, 2500), 1e-3 * 0.99 * 0.99);
  EXPECT_NEAR(learning_rate(1e-3, 59999), 1e-3 * std::pow(0.99, 59), 1e-18);
}

TEST(Adam, ZeroGradientLeavesParameters) {
  Matrix w = Matrix::Constant(2, 3, 0.7);
  Adam adam(0.9, 0.999, 1e-8);
  for (int i = 0; i < 5; ++i) adam.step({&w}, {Matrix::Zero(2, 3)}, 1e-3);
  EXPECT_TRUE(w.isApproxToConstant(0.7, 0.0));
  EXPECT_EQ(adam.steps(), 5);
}

TEST(Adam, ConstantGradientMovesByLearningRate) {
  Matrix w = Matrix::Zero(1, 2);
  Matrix g(1, 2);
  g << 2.5, -0.01;
  Adam adam(0.9, 0.999, 1e-8);
  for (int i = 0; i < 50; ++i) {
    const Matrix before = w;
    adam.step({&w}, {g}, 1e-3);
    EXPECT_NEAR(w(0, 0) - before(0, 0), -1e-3, 1e-9);
    EXPECT_NEAR(w(0, 1) - before(0, 1), 1e-3, 1e-8);
  }
}

TEST(Adam, FirstStepMatchesFormula) {
  Matrix w(1, 1);
  w << 1.0;
  Adam adam(0.5, 0.75, 0.1);
  Matrix g(1, 1);
  g << 2.0;
  adam.step({&w}, {g}, 0.2);
  // m = 1, v = 1, mhat = 2, vhat = 4
  EXPECT_NEAR(w(0, 0), 1.0 - 0.2 * 2.0 / (2.0 + 0.1), 1e-15);
  g << -1.0;
  adam.step({&w}, {g}, 0.2);
  // m = 0, v = 1.25, mhat = 0
  EXPECT_NEAR(w(0, 0), 1.0 - 0.2 * 2.0 / 2.1, 1e-15);
}

TEST(Adam, NonFiniteGradientThrows) {
  Matrix w = Matrix::Zero(1, 1);
  Adam adam(0.9, 0.999, 1e-8);
  EXPECT_THROW(adam.step({&w}, {Matrix::Constant(1, 1, NAN)}, 1e-3), TrainingError);
}

// ---- configuration ----------------------------------------------------------------

TEST(Config, Registry) {
  const auto m1 = model_config("M1"), m2 = model_config("M2"), m3 = model_config("M3"), m4 = model_config("M4");
  EXPECT_EQ(m1.widths, (std::vector<int>{3, 300, 300, 300, 3}));
  EXPECT_EQ(m2.widths, (std::vector<int>{3, 100, 100, 100, 3}));
  EXPECT_EQ(m1.activation, nets::Activation::Tanh);
  EXPECT_EQ(m4.activation, nets::Activation::BSpline);
  EXPECT_EQ(m2.architecture, Architecture::SingleFSI);
  EXPECT_EQ(m3.architecture, Architecture::EulerianLagrangian);
  EXPECT_EQ(m1.loss_weights, (std::vector<double>{0.1, 2.0, 4.0, 0.1}));
  EXPECT_EQ(m4.loss_weights, (std::vector<double>{2.0, 2.0, 2.0, 0.2, 0.1, 0.2}));
  EXPECT_EQ(m1.iterations, 60000);
  EXPECT_EQ(m1.batch_size, 128u);
  EXPECT_THROW(model_config("M5"), ConfigError);
  const auto d = desk_scale(m2);
  EXPECT_EQ(d.widths, (std::vector<int>{3, 50, 50, 50, 3}));
  EXPECT_EQ(d.iterations, 5000);
  EXPECT_EQ(d.activation, nets::Activation::BSpline);
}

TEST(Config, Validation) {
  auto c = model_config("M1");
  EXPECT_NO_THROW(c.validate());
  c.loss_weights = {1, 2, 3, 4, 5, 6};
  EXPECT_THROW(c.validate(), ConfigError);
  c = model_config("M1");
  c.lr0 = 0;
  EXPECT_THROW(c.validate(), ConfigError);
  c = model_config("M3");
  c.batch_size = 0;
  EXPECT_THROW(c.validate(), ConfigError);
  c = model_config("M2");
  c.widths = {3, 10, 2};
  EXPECT_THROW(c.validate(), ConfigError);
  EXPECT_EQ(architecture_from_string(to_string(Architecture::EulerianLagrangian)), Architecture::EulerianLagrangian);
  EXPECT_THROW(architecture_from_string("hybrid"), ConfigError);
}

TEST(Model, LagrangianNetworkDiffersFromEulerian) {
  const Model m = create_model(tiny("M3"));
  ASSERT_TRUE(m.has_lagrangian());
  const Matrix pts = random_points(3, 1);
  EXPECT_GT((m.predict_fluid(pts) - m.predict_interface(pts)).cwiseAbs().maxCoeff(), 1e-6);
  const Model s = create_model(tiny("M1"));
  EXPECT_EQ(s.predict_fluid(pts), s.predict_interface(pts));
}

// ---- training -----------------------------------------------------------------------

TEST(Train, ZeroIterationsLeavesWeights) {
  auto c = tiny("M1");
  c.iterations = 0;
  Model m = create_model(c);
  const Model before = m;
  const auto r = train(m, small_set(), {});
  ASSERT_FALSE(r.aborted) << r.error;
  EXPECT_EQ(r.iterations_run, 0);
  ASSERT_EQ(r.log.size(), 1u);
  EXPECT_EQ(r.log[0].iter, 0);
  EXPECT_DOUBLE_EQ(r.initial_total, r.final_total);
  const Matrix pts = random_points(4, 2);
  EXPECT_EQ(m.predict_fluid(pts), before.predict_fluid(pts));
}

TEST(Train, DeterministicAndLogged) {
  auto c = tiny("M4");
  c.iterations = 25;
  c.log_every = 10;
  Model a = create_model(c), b = create_model(c);
  int calls = 0;
  TrainOptions opt;
  opt.on_log = [&](const LogRow&) { ++calls; };
  const auto ra = train(a, small_set(), opt);
  const auto rb = train(b, small_set(), {});
  ASSERT_FALSE(ra.aborted) << ra.error;
  ASSERT_EQ(ra.log.size(), 4u);  // 0, 10, 20, 25
  EXPECT_EQ(calls, 4);
  EXPECT_EQ(ra.log.back().iter, 25);
  for (std::size_t k = 0; k < ra.log.size(); ++k) {
    EXPECT_EQ(ra.log[k].total, rb.log[k].total);
    EXPECT_EQ(ra.log[k].terms, rb.log[k].terms);
  }
  EXPECT_EQ(ra.final_total, rb.final_total);

  std::ostringstream csv;
  write_log_csv(ra, csv);
  const std::string s = csv.str();
  EXPECT_EQ(s.substr(0, s.find('\n')), "iter,lr,total,ru,rv,rc,lid,wall,ic_u,ic_v,ic_p,dpdn,couple_u,couple_v");
  EXPECT_EQ(std::count(s.begin(), s.end(), '\n'), 5);
}

TEST(Train, GridUpdatesInFirstHalf) {
  auto c = tiny("M2");
  c.iterations = 10;
  c.grid_update_every = 2;
  Model m = create_model(c);
  const auto r = train(m, small_set());
  ASSERT_FALSE(r.aborted) << r.error;
  EXPECT_EQ(r.grid_updates, 2);  // iterations 2 and 4
  c.activation = nets::Activation::Tanh;
  Model t = create_model(c);
  EXPECT_EQ(train(t, small_set()).grid_updates, 0);
}

TEST(Train, ReducesLoss) {
  auto c = tiny("M1", 16);
  c.iterations = 400;
  c.lr0 = 5e-3;
  Model m = create_model(c);
  const auto r = train(m, small_set());
  ASSERT_FALSE(r.aborted) << r.error;
  EXPECT_LT(r.final_total, 0.5 * r.initial_total);
}

TEST(Train, NonFiniteWeightsAbortWithDecomposition) {
  Model m = create_model(tiny("M1"));
  (*m.parameters()[0])(0, 0) = NAN;
  const auto r = train(m, small_set());
  EXPECT_TRUE(r.aborted);
  EXPECT_NE(r.error.find("ru="), std::string::npos);
}

// ---- checkpoints --------------------------------------------------------------------

TEST(Checkpoint, RoundTripIsExact) {
  for (const auto& id : {"M1", "M4"}) {
    auto c = tiny(id);
    c.seed = 99;
    c.loss_weights[1] = 0.123456789;
    const Model m = create_model(c);
    std::stringstream ss;
    write_model(m, ss);
    const Model back = read_model(ss);
    EXPECT_EQ(back.config.model_id, id);
    EXPECT_EQ(back.config.seed, 99u);
    EXPECT_EQ(back.config.loss_weights, c.loss_weights);
    EXPECT_EQ(back.config.architecture, c.architecture);
    EXPECT_EQ(back.config.widths, c.widths);
    const Matrix pts = random_points(5, 4);
    EXPECT_EQ(back.predict_fluid(pts), m.predict_fluid(pts));
    EXPECT_EQ(back.predict_interface(pts), m.predict_interface(pts));
  }
}

TEST(Checkpoint, TruncatedFails) {
  std::stringstream ss;
  write_model(create_model(tiny("M1")), ss);
  const std::string s = ss.str();
  std::stringstream cut(s.substr(0, s.size() / 2));
  EXPECT_ANY_THROW(read_model(cut));
}
