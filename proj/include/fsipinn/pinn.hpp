#pragma once

// Physics-informed models for the cavity FSI problem: Navier-Stokes
// residuals, the Single-FSI and Eulerian-Lagrangian losses, Adam and the
// training loop.

#include <cstdint>
#include <filesystem>
#include <functional>
#include <iosfwd>
#include <stdexcept>
#include <string>
#include <vector>

#include "fsipinn/autodiff.hpp"
#include "fsipinn/nets.hpp"
#include "fsipinn/sampling.hpp"

namespace fsipinn::pinn {

using ad::Matrix;
using ad::Tape;
using ad::Var;
using ad::Index;

inline constexpr double kDensity = 1.0;
inline constexpr double kViscosity = 0.01;

class ConfigError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

/// Non-finite loss or gradient; the message carries the term decomposition.
class TrainingError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

enum class Architecture { SingleFSI, EulerianLagrangian };
std::string to_string(Architecture a);
Architecture architecture_from_string(const std::string& s);

struct ModelConfig {
  std::string model_id = "M1";
  Architecture architecture = Architecture::SingleFSI;
  nets::Activation activation = nets::Activation::Tanh;
  std::vector<int> widths{3, 300, 300, 300, 3};
  /// Four weights for Single-FSI, six for Eulerian-Lagrangian.
  std::vector<double> loss_weights{0.1, 2.0, 4.0, 0.1};
  double beta1 = 0.9;
  double beta2 = 0.999;
  double epsilon = 1e-8;
  double lr0 = 1e-3;
  long decay_step = 1000;
  double decay_rate = 0.99;
  long iterations = 60000;
  std::size_t batch_size = 128;
  long log_every = 100;
  /// KAN grid refits happen every this many iterations in the first half of training.
  long grid_update_every = 1000;
  std::uint64_t seed = 0;
  /// Upper end of the time input range used for normalisation.
  double t_max = 10.0;

  nets::NetworkSpec network_spec() const;
  void validate() const;
};

std::vector<double> default_weights(Architecture a);

/// Registry: M1 Tanh/Single, M2 BSpline/Single, M3 Tanh/EL, M4 BSpline/EL.
ModelConfig model_config(const std::string& model_id);
std::vector<std::string> model_ids();

/// Widths [3,50,50,50,3] and 5000 iterations.
ModelConfig desk_scale(ModelConfig config);

// ---- residuals -------------------------------------------------------------

struct Residuals {
  Var ru, rv, rc;
};

/// Momentum and continuity residuals of per-row fields u, v, p (B x 1) that
/// depend on the coordinate leaves t, x, y (B x 1). Stays on the tape.
Residuals navier_stokes_residuals(const Var& u, const Var& v, const Var& p, const Var& t, const Var& x, const Var& y,
                                  double rho = kDensity, double mu = kViscosity);

/// grad p . n with n given per row (B x 2).
Var normal_derivative(const Var& p, const Var& x, const Var& y, const Matrix& normals);

// ---- losses ----------------------------------------------------------------

/// Maps coordinate columns (B x 1 each) to outputs (B x 3: u, v, p).
using FieldFn = std::function<Var(const Var& t, const Var& x, const Var& y)>;

FieldFn network_field(const nets::Network& net, const std::vector<Var>& params);

/// Points for one loss evaluation. Rows are (t, x, y).
struct Batch {
  Matrix fluid;
  Matrix lid, lid_uv;    // top wall with its imposed velocity
  Matrix walls, wall_uv; // bottom, left and right walls stacked
  Matrix initial;
  Matrix interface, interface_values, interface_normals;  // values: (u, v, p)
};

Batch full_batch(const sampling::TrainingSet& set);
Batch make_batch(const sampling::TrainingSet& set, const sampling::Minibatch& mb);

/// Which parameter set a term belongs to: the Eulerian (or single) network,
/// the Lagrangian network, or the coupling between them.
enum class Group { Eulerian, Lagrangian, Coupling };

struct Term {
  std::string name;
  double weight = 0.0;
  Group group = Group::Eulerian;
  Var value;  // unweighted, 1 x 1
};

struct Loss {
  Var total;
  std::vector<Term> terms;

  std::vector<std::string> names() const;
  std::vector<double> values() const;
  /// Sum of weight * value over the terms of one group.
  Var group_total(Group g) const;
  std::string describe() const;
};

/// Terms: ru rv rc (l1), lid wall (l2), ic_u ic_v ic_p (l3), xi_u xi_v xi_dpdn (l4).
/// xi_u, xi_v fit the stored marker velocities; xi_dpdn is grad p . n at the markers.
Loss loss_single_fsi(const FieldFn& net, const Batch& batch, const std::vector<double>& lambda, Tape& tape);

/// Terms: ru rv rc (l5), lid wall (l1), ic_u ic_v ic_p (l2) on the Eulerian
/// network; dpdn (l3) on the Lagrangian network; couple_u couple_v (l6)
/// between them. l4 is not used. `lagrangian_coupling` evaluates the
/// Lagrangian network inside the coupling term; pass a detached copy to cut
/// its gradient.
Loss loss_eulerian_lagrangian(const FieldFn& eulerian, const FieldFn& lagrangian, const FieldFn& lagrangian_coupling,
                              const Batch& batch, const std::vector<double>& lambda, Tape& tape);

std::vector<std::string> term_names(Architecture a);

// ---- optimiser -------------------------------------------------------------

/// lr0 * rate^floor(iter / step).
double learning_rate(double lr0, long iter, long step = 1000, double rate = 0.99);

class Adam {
 public:
  Adam(double beta1, double beta2, double epsilon) : beta1_(beta1), beta2_(beta2), eps_(epsilon) {}
  /// One bias-corrected update. Throws TrainingError on a non-finite gradient.
  void step(const std::vector<Matrix*>& params, const std::vector<Matrix>& grads, double lr);
  long steps() const { return t_; }

 private:
  double beta1_, beta2_, eps_;
  long t_ = 0;
  std::vector<Matrix> m_, v_;
};

// ---- models and training -----------------------------------------------------

struct Model {
  ModelConfig config;
  nets::Network eulerian;    // the only network for Single-FSI
  nets::Network lagrangian;  // empty unless Eulerian-Lagrangian

  bool has_lagrangian() const { return config.architecture == Architecture::EulerianLagrangian; }
  std::vector<Matrix*> parameters();
  /// Predictions for fluid points and for interface points (the Lagrangian
  /// network when there is one).
  Matrix predict_fluid(const Matrix& txy) const;
  Matrix predict_interface(const Matrix& txy) const;
};

Model create_model(const ModelConfig& config);

/// Loss of the model on a batch, recorded on `tape`.
Loss model_loss(const Model& model, const Batch& batch, Tape& tape, std::vector<Var>* params = nullptr,
                bool detach_lagrangian = false);

struct LogRow {
  long iter = 0;
  double lr = 0.0;
  double total = 0.0;
  std::vector<double> terms;
};

struct TrainReport {
  std::string model_id;
  std::uint64_t seed = 0;
  std::vector<std::string> term_names;
  std::vector<LogRow> log;
  /// Loss on the full training set before and after training.
  double initial_total = 0.0;
  double final_total = 0.0;
  std::vector<double> initial_terms, final_terms;
  long iterations_run = 0;
  int grid_updates = 0;
  bool aborted = false;
  std::string error;
};

struct TrainOptions {
  /// Called for every logged row.
  std::function<void(const LogRow&)> on_log;
};

/// Mini-batch Adam for config.iterations steps. A non-finite loss or gradient
/// stops training: the report is marked aborted and carries the decomposition.
TrainReport train(Model& model, const sampling::TrainingSet& set, const TrainOptions& options = {});

void write_log_csv(const TrainReport& report, std::ostream& os);

/// Checkpoint: model config followed by the network(s) in text form.
void write_model(const Model& model, std::ostream& os);
Model read_model(std::istream& is);
void save_model(const Model& model, const std::filesystem::path& file);
Model load_model(const std::filesystem::path& file);

}  // namespace fsipinn::pinn
