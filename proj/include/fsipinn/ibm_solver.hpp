#pragma once

// Immersed-boundary projection solver for the lid-driven cavity with an
// elastic disc. MAC staggered grid on the unit square, explicit Euler with
// central advection and explicit diffusion, exact projection through a
// factorised Neumann Laplacian.

#include <Eigen/Dense>
#include <Eigen/SparseCholesky>

#include <cstdint>
#include <functional>
#include <memory>
#include <stdexcept>
#include <string>
#include <vector>

#include "fsipinn/dataset.hpp"

namespace fsipinn::ibm {

class SolverError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};
/// Instability, CFL violation or a failed solve.
class NumericalError : public SolverError {
 public:
  using SolverError::SolverError;
};

struct SolverConfig {
  int grid = 100;
  double t_end = 10.0;
  double dt = 0.01;  // output cadence
  double reynolds = 100.0;
  double lid_velocity = 1.0;
  bool disc = true;
  int markers = 120;
  double radius = 0.2;
  double center_x = 0.6;
  double center_y = 0.5;
  double kappa_p = 1e4;
  double kappa_t = 1.0;
  /// Short-range wall repulsion on markers: kappa_w * ((r - d) / r)^2 along
  /// the wall normal for wall distance d < r, with r = wall_range * h.
  double kappa_w = 0.0;
  double wall_range = 4.0;
  /// Use ghost-mirrored kernels so markers may come closer than 2h to a wall.
  bool near_wall_kernel = true;
  /// Substep limits: nu * dt_sub / h^2, max|u| * dt_sub / h and the
  /// penalty-spring limit dt_sub * sqrt(kappa_p * ds / h^2) are kept below these.
  double diffusion_limit = 0.2;
  double cfl_limit = 0.5;
  double spring_limit = 0.5;
  int max_substeps = 2000;
  std::uint64_t seed = 0;

  /// Kinematic viscosity for unit density, unit reference speed and cavity size.
  double viscosity() const { return 1.0 / reynolds; }
  double h() const { return 1.0 / grid; }
  /// Throws SolverError on an invalid configuration.
  void validate() const;
};

/// Peskin four-point cosine kernel in grid units: (1 + cos(pi r / 2)) / 4 for |r| < 2.
double delta_kernel(double r);

/// Staggered velocity and cell pressure. u faces: (N+1) x N at (i h, (j+0.5) h),
/// index j * (N+1) + i. v faces: N x (N+1) at ((i+0.5) h, j h), index j * N + i.
struct FluidState {
  int n = 0;
  double h = 0.0;
  double t = 0.0;
  std::vector<double> u, v, p;

  static FluidState zeros(int n);
  double& U(int i, int j) { return u[static_cast<std::size_t>(j * (n + 1) + i)]; }
  double U(int i, int j) const { return u[static_cast<std::size_t>(j * (n + 1) + i)]; }
  double& V(int i, int j) { return v[static_cast<std::size_t>(j * n + i)]; }
  double V(int i, int j) const { return v[static_cast<std::size_t>(j * n + i)]; }
  double& P(int i, int j) { return p[static_cast<std::size_t>(j * n + i)]; }
  double P(int i, int j) const { return p[static_cast<std::size_t>(j * n + i)]; }

  /// Cell divergence (u_{i+1,j} - u_{i,j} + v_{i,j+1} - v_{i,j}) / h.
  double divergence(int i, int j) const;
  double max_divergence() const;
  double max_speed() const;
  double kinetic_energy() const;
};

struct Point {
  double x = 0.0, y = 0.0;
};

struct MarkerState {
  std::vector<Point> position;
  std::vector<Point> rest;  // rest circle, counter-clockwise
  std::vector<Point> velocity;
  double ds = 0.0;          // rest arc length per marker

  static MarkerState circle(int count, double cx, double cy, double radius);
  std::size_t size() const { return position.size(); }
  Point centroid() const;
  /// Unit outward normals from the rotated central tangent.
  std::vector<Point> normals() const;
  /// Rest shape rigidly moved to the current centroid and best-fit angle.
  std::vector<Point> mapped_rest() const;
  /// Largest marker distance from the mapped rest shape.
  double shape_deviation() const;
  /// Smallest and largest distance between neighbouring markers.
  std::pair<double, double> spacing_range() const;
  bool contains(double x, double y) const;
};

/// F(s) = -kappa_p (X - X_map) + kappa_t * (D_{s+1} - 2 D_s + D_{s-1}) / ds^2,
/// D = X - X_map. The tension acts on the deviation from the mapped rest shape,
/// so the undeformed disc carries no force.
std::vector<Point> marker_elastic_force(const MarkerState& markers, double kappa_p, double kappa_t);

/// Contact force pushing markers away from the cavity walls; zero beyond `range`.
std::vector<Point> wall_repulsion_force(const std::vector<Point>& at, double kappa_w, double range);

/// Kernel treatment at the walls. Strict mode rejects markers within 2h of a
/// wall. Near-wall mode lets the stencil reach ghost points that mirror the
/// wall conditions (no-slip, lid velocity on top, zero normal pressure
/// gradient), so markers may approach the walls; they must stay in [0,1]^2.
struct KernelOptions {
  bool near_wall = false;
  double lid_velocity = 0.0;
};

/// Velocity at marker positions: sum over faces of u * delta_h * h^2.
/// Throws SolverError naming the offending marker.
std::vector<Point> interpolate_velocity(const FluidState& fluid, const std::vector<Point>& at, KernelOptions opt = {});
/// Cell-centre pressure interpolated the same way.
std::vector<double> interpolate_pressure(const FluidState& fluid, const std::vector<Point>& at, KernelOptions opt = {});

/// Force density on the faces: sum over markers of F * delta_h * ds, the
/// transpose of interpolate_velocity. Output arrays use the FluidState face
/// layouts; wall-normal faces are left at zero.
void spread_force(int n, const std::vector<Point>& at, const std::vector<Point>& force, double ds,
                  std::vector<double>& fx, std::vector<double>& fy, KernelOptions opt = {});

struct StepDiagnostics {
  int substeps = 0;
  double max_divergence = 0.0;
  double max_speed = 0.0;
  double max_marker_displacement = 0.0;
  double max_marker_speed = 0.0;
};

class Simulation {
 public:
  explicit Simulation(const SolverConfig& config);

  const SolverConfig& config() const { return config_; }
  const FluidState& fluid() const { return fluid_; }
  FluidState& fluid() { return fluid_; }
  const MarkerState& markers() const { return markers_; }
  MarkerState& markers() { return markers_; }
  bool has_disc() const { return config_.disc; }
  KernelOptions kernel_options() const { return {config_.near_wall_kernel, config_.lid_velocity}; }

  /// Advances one output interval (config.dt) with internal substeps.
  StepDiagnostics step();
  /// One explicit substep of size dt_sub; returns the post-projection divergence.
  double substep(double dt_sub);

  /// Number of substeps the next step() will use.
  int substeps_for_step() const;

 private:
  void project(double dt_sub);
  void apply_lid_and_walls();

  SolverConfig config_;
  FluidState fluid_;
  MarkerState markers_;
  std::vector<double> work_u_, work_v_, fx_, fy_, rhs_;
  Eigen::SimplicialLDLT<Eigen::SparseMatrix<double>> poisson_;
  Eigen::VectorXd phi_;
};

struct RunSummary {
  double max_divergence = 0.0;
  double max_shape_deviation = 0.0;
  double min_marker_coordinate = 1.0;
  double max_marker_coordinate = 0.0;
  double min_spacing = 0.0;
  double max_spacing = 0.0;
  long total_substeps = 0;
  bool partial = false;
  std::string error;
};

/// Runs from rest to t_end and collects the dataset (slice 0 is the initial
/// condition). On a step error the dataset holds the slices completed so far,
/// summary.partial is set and the error is rethrown unless `keep_partial`.
FsiDataset run_simulation(const SolverConfig& config, RunSummary* summary = nullptr, bool keep_partial = false,
                          const std::function<void(double)>& progress = {});

/// Cell-centre snapshot of the state into dataset slice arrays.
void record_slice(const Simulation& sim, FsiDataset& data);

struct RotationAnalysis {
  double center_x = 0.0, center_y = 0.0;  // recirculation centre
  double cumulative_angle = 0.0;          // signed unwrapped centroid angle change
  double max_shape_deviation = 0.0;       // over all slices, absolute
  double min_marker_coordinate = 0.0;
  double max_marker_coordinate = 0.0;
};

/// Recirculation centre as the interior extremum of the streamfunction of the
/// time-averaged velocity; disc-centroid angle about it, unwrapped.
RotationAnalysis analyse_rotation(const FsiDataset& data);

/// Streamfunction psi(i, j) at cell centres from integrating u upward from
/// the bottom wall (psi = 0 there).
std::vector<double> streamfunction(const std::vector<double>& uc, int nx, int ny, double h);

void write_solver_metadata(const SolverConfig& config, const RunSummary& summary, FsiDataset& data);

}  // namespace fsipinn::ibm
