#include "fsipinn/ibm_solver.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <sstream>

#include <Eigen/SparseCore>

namespace fsipinn::ibm {

namespace {
constexpr double kPi = std::numbers::pi;
}

void SolverConfig::validate() const {
  const auto fail = [](const std::string& m) { throw SolverError("solver config: " + m); };
  if (grid < 8) fail("grid must be at least 8");
  if (!(dt > 0.0)) fail("dt must be positive");
  if (!(t_end >= 0.0)) fail("t_end must be nonnegative");
  if (!(reynolds > 0.0)) fail("reynolds must be positive");
  if (!(lid_velocity >= 0.0)) fail("lid_velocity must be nonnegative");
  if (disc) {
    if (markers < 8) fail("need at least 8 markers");
    if (!(radius > 0.0)) fail("radius must be positive");
    const double h = 1.0 / grid;
    if (center_x - radius < 2 * h || center_x + radius > 1 - 2 * h || center_y - radius < 2 * h ||
        center_y + radius > 1 - 2 * h)
      fail("disc must stay at least 2h inside the cavity");
    const double spacing = 2.0 * radius * std::sin(kPi / markers);
    if (spacing < 0.25 * h || spacing > 2.0 * h) {
      std::ostringstream m;
      m << "marker spacing " << spacing << " outside [0.25h, 2h] for h=" << h;
      fail(m.str());
    }
    if (kappa_p < 0.0 || kappa_t < 0.0 || kappa_w < 0.0) fail("stiffnesses must be nonnegative");
    if (!(wall_range > 2.0)) fail("wall_range must exceed 2 (grid units)");
  }
  if (!(diffusion_limit > 0.0 && diffusion_limit <= 0.25)) fail("diffusion_limit must be in (0, 0.25]");
  if (!(cfl_limit > 0.0 && cfl_limit <= 1.0)) fail("cfl_limit must be in (0, 1]");
  if (!(spring_limit > 0.0)) fail("spring_limit must be positive");
  if (max_substeps < 1) fail("max_substeps must be positive");
}

double delta_kernel(double r) {
  const double a = std::abs(r);
  return a < 2.0 ? 0.25 * (1.0 + std::cos(kPi * r / 2.0)) : 0.0;
}

// ---- fluid state ---------------------------------------------------------------

FluidState FluidState::zeros(int n) {
  FluidState s;
  s.n = n;
  s.h = 1.0 / n;
  s.u.assign(static_cast<std::size_t>((n + 1) * n), 0.0);
  s.v.assign(static_cast<std::size_t>(n * (n + 1)), 0.0);
  s.p.assign(static_cast<std::size_t>(n * n), 0.0);
  return s;
}

double FluidState::divergence(int i, int j) const { return (U(i + 1, j) - U(i, j) + V(i, j + 1) - V(i, j)) / h; }

double FluidState::max_divergence() const {
  double m = 0.0;
  for (int j = 0; j < n; ++j)
    for (int i = 0; i < n; ++i) m = std::max(m, std::abs(divergence(i, j)));
  return m;
}

double FluidState::max_speed() const {
  double m = 0.0;
  for (double a : u) m = std::max(m, std::abs(a));
  for (double a : v) m = std::max(m, std::abs(a));
  return m;
}

double FluidState::kinetic_energy() const {
  double e = 0.0;
  for (double a : u) e += a * a;
  for (double a : v) e += a * a;
  return 0.5 * e * h * h;
}

// ---- markers -------------------------------------------------------------------

MarkerState MarkerState::circle(int count, double cx, double cy, double radius) {
  MarkerState m;
  m.position.resize(static_cast<std::size_t>(count));
  for (int s = 0; s < count; ++s) {
    const double a = 2.0 * kPi * s / count;
    m.position[static_cast<std::size_t>(s)] = {cx + radius * std::cos(a), cy + radius * std::sin(a)};
  }
  m.rest = m.position;
  m.velocity.assign(m.position.size(), Point{});
  m.ds = 2.0 * kPi * radius / count;
  return m;
}

Point MarkerState::centroid() const {
  Point c;
  for (const auto& p : position) {
    c.x += p.x;
    c.y += p.y;
  }
  c.x /= static_cast<double>(position.size());
  c.y /= static_cast<double>(position.size());
  return c;
}

std::vector<Point> MarkerState::normals() const {
  const std::size_t m = position.size();
  std::vector<Point> out(m);
  for (std::size_t s = 0; s < m; ++s) {
    const Point& a = position[(s + m - 1) % m];
    const Point& b = position[(s + 1) % m];
    const double tx = b.x - a.x, ty = b.y - a.y;
    const double len = std::hypot(tx, ty);
    out[s] = {ty / len, -tx / len};
  }
  return out;
}

std::vector<Point> MarkerState::mapped_rest() const {
  const std::size_t m = position.size();
  Point rc;
  for (const auto& p : rest) {
    rc.x += p.x;
    rc.y += p.y;
  }
  rc.x /= static_cast<double>(m);
  rc.y /= static_cast<double>(m);
  const Point c = centroid();
  double cross = 0.0, dot = 0.0;
  for (std::size_t s = 0; s < m; ++s) {
    const double rx = rest[s].x - rc.x, ry = rest[s].y - rc.y;
    const double qx = position[s].x - c.x, qy = position[s].y - c.y;
    cross += rx * qy - ry * qx;
    dot += rx * qx + ry * qy;
  }
  const double theta = std::atan2(cross, dot);
  const double cs = std::cos(theta), sn = std::sin(theta);
  std::vector<Point> out(m);
  for (std::size_t s = 0; s < m; ++s) {
    const double rx = rest[s].x - rc.x, ry = rest[s].y - rc.y;
    out[s] = {c.x + cs * rx - sn * ry, c.y + sn * rx + cs * ry};
  }
  return out;
}

double MarkerState::shape_deviation() const {
  const auto map = mapped_rest();
  double d = 0.0;
  for (std::size_t s = 0; s < position.size(); ++s)
    d = std::max(d, std::hypot(position[s].x - map[s].x, position[s].y - map[s].y));
  return d;
}

std::pair<double, double> MarkerState::spacing_range() const {
  double lo = 1e300, hi = 0.0;
  const std::size_t m = position.size();
  for (std::size_t s = 0; s < m; ++s) {
    const Point& a = position[s];
    const Point& b = position[(s + 1) % m];
    const double d = std::hypot(b.x - a.x, b.y - a.y);
    lo = std::min(lo, d);
    hi = std::max(hi, d);
  }
  return {lo, hi};
}

bool MarkerState::contains(double x, double y) const {
  bool inside = false;
  const std::size_t m = position.size();
  for (std::size_t s = 0, r = m - 1; s < m; r = s++) {
    const Point& a = position[s];
    const Point& b = position[r];
    if ((a.y > y) != (b.y > y) && x < (b.x - a.x) * (y - a.y) / (b.y - a.y) + a.x) inside = !inside;
  }
  return inside;
}

std::vector<Point> marker_elastic_force(const MarkerState& markers, double kappa_p, double kappa_t) {
  const std::size_t m = markers.size();
  const auto map = markers.mapped_rest();
  std::vector<Point> d(m), f(m);
  for (std::size_t s = 0; s < m; ++s) d[s] = {markers.position[s].x - map[s].x, markers.position[s].y - map[s].y};
  const double inv = 1.0 / (markers.ds * markers.ds);
  for (std::size_t s = 0; s < m; ++s) {
    const Point& a = d[(s + m - 1) % m];
    const Point& b = d[(s + 1) % m];
    f[s] = {-kappa_p * d[s].x + kappa_t * (a.x - 2.0 * d[s].x + b.x) * inv,
            -kappa_p * d[s].y + kappa_t * (a.y - 2.0 * d[s].y + b.y) * inv};
  }
  return f;
}

std::vector<Point> wall_repulsion_force(const std::vector<Point>& at, double kappa_w, double range) {
  std::vector<Point> f(at.size());
  if (kappa_w == 0.0) return f;
  const auto push = [&](double d) {
    const double gap = (range - d) / range;
    return d < range ? kappa_w * gap * gap : 0.0;
  };
  for (std::size_t s = 0; s < at.size(); ++s) {
    f[s].x = push(at[s].x) - push(1.0 - at[s].x);
    f[s].y = push(at[s].y) - push(1.0 - at[s].y);
  }
  return f;
}

// ---- interpolation and spreading -------------------------------------------------

namespace {

enum class Lattice { UFace, VFace, Cell };

// Grid value at lattice index (i, j), possibly a ghost outside the walls,
// expressed as a * f[index] + b. Ghosts mirror the wall conditions: odd
// reflection for no-slip components (with the lid value on top for u), even
// reflection for pressure.
struct Tap {
  int index;
  double a;
  double b;
};

Tap resolve(Lattice kind, int n, int i, int j, double lid) {
  double a = 1.0, b = 0.0;
  switch (kind) {
    case Lattice::UFace:
      if (i < 0) i = -i, a = -a;
      if (i > n) i = 2 * n - i, a = -a;
      if (j < 0) j = -1 - j, a = -a, b = -b;
      if (j > n - 1) j = 2 * n - 1 - j, a = -a, b = 2.0 * lid - b;
      return {j * (n + 1) + i, a, b};
    case Lattice::VFace:
      if (j < 0) j = -j, a = -a;
      if (j > n) j = 2 * n - j, a = -a;
      if (i < 0) i = -1 - i, a = -a;
      if (i > n - 1) i = 2 * n - 1 - i, a = -a;
      return {j * n + i, a, b};
    case Lattice::Cell:
      if (i < 0) i = -1 - i;
      if (i > n - 1) i = 2 * n - 1 - i;
      if (j < 0) j = -1 - j;
      if (j > n - 1) j = 2 * n - 1 - j;
      return {j * n + i, a, b};
  }
  return {0, 0.0, 0.0};
}

// Calls visit(tap, weight) for the 4 x 4 lattice points around X. Lattice
// point (i, j) of each kind sits at ((i + ox) h, (j + oy) h).
template <typename Visit>
void for_kernel(Lattice kind, int n, double x, double y, double lid, Visit&& visit) {
  const double h = 1.0 / n;
  const double ox = kind == Lattice::UFace ? 0.0 : 0.5;
  const double oy = kind == Lattice::VFace ? 0.0 : 0.5;
  const double gx = x / h - ox;
  const double gy = y / h - oy;
  const int i0 = static_cast<int>(std::floor(gx)) - 1;
  const int j0 = static_cast<int>(std::floor(gy)) - 1;
  double wx[4], wy[4];
  for (int c = 0; c < 4; ++c) {
    wx[c] = delta_kernel(gx - (i0 + c));
    wy[c] = delta_kernel(gy - (j0 + c));
  }
  for (int r = 0; r < 4; ++r) {
    if (wy[r] == 0.0) continue;
    for (int c = 0; c < 4; ++c) {
      if (wx[c] == 0.0) continue;
      visit(resolve(kind, n, i0 + c, j0 + r, lid), wx[c] * wy[r]);
    }
  }
}

void check_positions(const std::vector<Point>& at, double h, const KernelOptions& opt) {
  const double margin = opt.near_wall ? 0.0 : 2.0 * h;
  for (std::size_t s = 0; s < at.size(); ++s) {
    const Point& p = at[s];
    if (!(p.x >= margin && p.x <= 1 - margin && p.y >= margin && p.y <= 1 - margin)) {
      std::ostringstream m;
      m << "marker " << s << " at (" << p.x << ", " << p.y << ") is "
        << (opt.near_wall ? "outside the cavity" : "within 2h of a wall");
      throw SolverError(m.str());
    }
  }
}

}  // namespace

std::vector<Point> interpolate_velocity(const FluidState& fluid, const std::vector<Point>& at, KernelOptions opt) {
  check_positions(at, fluid.h, opt);
  std::vector<Point> out(at.size());
  for (std::size_t s = 0; s < at.size(); ++s) {
    // delta_h * h^2 reduces to the product of the 1-D kernels.
    double su = 0.0, sv = 0.0;
    for_kernel(Lattice::UFace, fluid.n, at[s].x, at[s].y, opt.lid_velocity, [&](const Tap& t, double w) {
      su += w * (t.a * fluid.u[static_cast<std::size_t>(t.index)] + t.b);
    });
    for_kernel(Lattice::VFace, fluid.n, at[s].x, at[s].y, opt.lid_velocity, [&](const Tap& t, double w) {
      sv += w * (t.a * fluid.v[static_cast<std::size_t>(t.index)] + t.b);
    });
    out[s] = {su, sv};
  }
  return out;
}

std::vector<double> interpolate_pressure(const FluidState& fluid, const std::vector<Point>& at, KernelOptions opt) {
  check_positions(at, fluid.h, opt);
  std::vector<double> out(at.size());
  for (std::size_t s = 0; s < at.size(); ++s) {
    double sp = 0.0;
    for_kernel(Lattice::Cell, fluid.n, at[s].x, at[s].y, 0.0, [&](const Tap& t, double w) {
      sp += w * t.a * fluid.p[static_cast<std::size_t>(t.index)];
    });
    out[s] = sp;
  }
  return out;
}

void spread_force(int n, const std::vector<Point>& at, const std::vector<Point>& force, double ds,
                  std::vector<double>& fx, std::vector<double>& fy, KernelOptions opt) {
  const double h = 1.0 / n;
  check_positions(at, h, opt);
  fx.assign(static_cast<std::size_t>((n + 1) * n), 0.0);
  fy.assign(static_cast<std::size_t>(n * (n + 1)), 0.0);
  const double scale = ds / (h * h);
  for (std::size_t s = 0; s < at.size(); ++s) {
    const double gx = force[s].x * scale, gy = force[s].y * scale;
    for_kernel(Lattice::UFace, n, at[s].x, at[s].y, 0.0,
               [&](const Tap& t, double w) { fx[static_cast<std::size_t>(t.index)] += w * t.a * gx; });
    for_kernel(Lattice::VFace, n, at[s].x, at[s].y, 0.0,
               [&](const Tap& t, double w) { fy[static_cast<std::size_t>(t.index)] += w * t.a * gy; });
  }
  // Wall-normal faces carry no momentum update.
  for (int j = 0; j < n; ++j) {
    fx[static_cast<std::size_t>(j * (n + 1))] = 0.0;
    fx[static_cast<std::size_t>(j * (n + 1) + n)] = 0.0;
  }
  for (int i = 0; i < n; ++i) {
    fy[static_cast<std::size_t>(i)] = 0.0;
    fy[static_cast<std::size_t>(n * n + i)] = 0.0;
  }
}

// ---- simulation ----------------------------------------------------------------

Simulation::Simulation(const SolverConfig& config) : config_(config) {
  config_.validate();
  const int n = config_.grid;
  fluid_ = FluidState::zeros(n);
  if (config_.disc) markers_ = MarkerState::circle(config_.markers, config_.center_x, config_.center_y, config_.radius);

  // Neumann Laplacian scaled by -h^2, gauge fixed by adding 1 to the first diagonal.
  std::vector<Eigen::Triplet<double>> trip;
  trip.reserve(static_cast<std::size_t>(5 * n * n));
  for (int j = 0; j < n; ++j) {
    for (int i = 0; i < n; ++i) {
      const int c = j * n + i;
      double diag = c == 0 ? 1.0 : 0.0;
      const auto link = [&](int ii, int jj) {
        if (ii < 0 || ii >= n || jj < 0 || jj >= n) return;
        trip.emplace_back(c, jj * n + ii, -1.0);
        diag += 1.0;
      };
      link(i - 1, j);
      link(i + 1, j);
      link(i, j - 1);
      link(i, j + 1);
      trip.emplace_back(c, c, diag);
    }
  }
  Eigen::SparseMatrix<double> a(n * n, n * n);
  a.setFromTriplets(trip.begin(), trip.end());
  poisson_.compute(a);
  if (poisson_.info() != Eigen::Success) throw NumericalError("pressure matrix factorisation failed");
  phi_.resize(n * n);
}

int Simulation::substeps_for_step() const {
  const double h = fluid_.h;
  const double dt = config_.dt;
  double need = dt * config_.viscosity() / (config_.diffusion_limit * h * h);
  const double speed = std::max(fluid_.max_speed(), config_.lid_velocity);
  need = std::max(need, dt * speed / (config_.cfl_limit * h));
  const double stiffness = config_.kappa_p + 2.0 * config_.kappa_w / (config_.wall_range * h);
  if (config_.disc && stiffness > 0.0) {
    const double omega = std::sqrt(stiffness * markers_.ds) / h;
    need = std::max(need, dt * omega / config_.spring_limit);
  }
  if (!std::isfinite(need)) throw NumericalError("non-finite velocity while choosing substeps");
  return std::max(1, static_cast<int>(std::ceil(need - 1e-12)));
}

StepDiagnostics Simulation::step() {
  StepDiagnostics d;
  d.substeps = substeps_for_step();
  if (d.substeps > config_.max_substeps) {
    std::ostringstream m;
    m << "CFL violation at t=" << fluid_.t << ": max|u|=" << fluid_.max_speed() << " needs " << d.substeps
      << " substeps (limit " << config_.max_substeps << ")";
    throw NumericalError(m.str());
  }
  const double dt_sub = config_.dt / d.substeps;
  const double t0 = fluid_.t;
  std::vector<Point> start = markers_.position;
  for (int k = 0; k < d.substeps; ++k) {
    d.max_divergence = std::max(d.max_divergence, substep(dt_sub));
    d.max_marker_speed = std::max(d.max_marker_speed, [&] {
      double m = 0.0;
      for (const auto& v : markers_.velocity) m = std::max(m, std::hypot(v.x, v.y));
      return m;
    }());
  }
  fluid_.t = t0 + config_.dt;
  for (std::size_t s = 0; s < start.size(); ++s)
    d.max_marker_displacement = std::max(
        d.max_marker_displacement, std::hypot(markers_.position[s].x - start[s].x, markers_.position[s].y - start[s].y));
  d.max_speed = fluid_.max_speed();
  return d;
}

double Simulation::substep(double dt_sub) {
  const int n = fluid_.n;
  const double h = fluid_.h;
  const double nu = config_.viscosity();
  const double lid = config_.lid_velocity;
  const double ih2 = 1.0 / (h * h);
  const double i2h = 0.5 / h;

  if (fluid_.max_speed() * dt_sub / h > 1.0) {
    std::ostringstream m;
    m << "CFL violation at t=" << fluid_.t << ": max|u| dt/h = " << fluid_.max_speed() * dt_sub / h;
    throw NumericalError(m.str());
  }

  if (config_.disc) {
    auto force = marker_elastic_force(markers_, config_.kappa_p, config_.kappa_t);
    const auto wall = wall_repulsion_force(markers_.position, config_.kappa_w, config_.wall_range * h);
    for (std::size_t s = 0; s < force.size(); ++s) {
      force[s].x += wall[s].x;
      force[s].y += wall[s].y;
    }
    spread_force(n, markers_.position, force, markers_.ds, fx_, fy_, kernel_options());
  } else {
    fx_.assign(fluid_.u.size(), 0.0);
    fy_.assign(fluid_.v.size(), 0.0);
  }

  const FluidState& f = fluid_;
  const auto u_at = [&](int i, int j) {
    if (j < 0) return -f.U(i, 0);
    if (j >= n) return 2.0 * lid - f.U(i, n - 1);
    return f.U(i, j);
  };
  const auto v_at = [&](int i, int j) {
    if (i < 0) return -f.V(0, j);
    if (i >= n) return -f.V(n - 1, j);
    return f.V(i, j);
  };

  work_u_ = f.u;
  for (int j = 0; j < n; ++j) {
    for (int i = 1; i < n; ++i) {
      const double uc = f.U(i, j);
      const double ue = f.U(i + 1, j), uw = f.U(i - 1, j), un = u_at(i, j + 1), us = u_at(i, j - 1);
      const double vbar = 0.25 * (f.V(i - 1, j) + f.V(i, j) + f.V(i - 1, j + 1) + f.V(i, j + 1));
      const double adv = uc * (ue - uw) * i2h + vbar * (un - us) * i2h;
      const double lap = (ue + uw + un + us - 4.0 * uc) * ih2;
      work_u_[static_cast<std::size_t>(j * (n + 1) + i)] =
          uc + dt_sub * (-adv + nu * lap + fx_[static_cast<std::size_t>(j * (n + 1) + i)]);
    }
  }
  work_v_ = f.v;
  for (int j = 1; j < n; ++j) {
    for (int i = 0; i < n; ++i) {
      const double vc = f.V(i, j);
      const double ve = v_at(i + 1, j), vw = v_at(i - 1, j), vn = f.V(i, j + 1), vs = f.V(i, j - 1);
      const double ubar = 0.25 * (f.U(i, j - 1) + f.U(i + 1, j - 1) + f.U(i, j) + f.U(i + 1, j));
      const double adv = ubar * (ve - vw) * i2h + vc * (vn - vs) * i2h;
      const double lap = (ve + vw + vn + vs - 4.0 * vc) * ih2;
      work_v_[static_cast<std::size_t>(j * n + i)] =
          vc + dt_sub * (-adv + nu * lap + fy_[static_cast<std::size_t>(j * n + i)]);
    }
  }
  fluid_.u.swap(work_u_);
  fluid_.v.swap(work_v_);
  apply_lid_and_walls();
  project(dt_sub);
  const double div = fluid_.max_divergence();
  if (!std::isfinite(div) || div > 1e-8) {
    std::ostringstream m;
    m << "projection left divergence " << div << " at t=" << fluid_.t;
    throw NumericalError(m.str());
  }

  if (config_.disc) {
    markers_.velocity = interpolate_velocity(fluid_, markers_.position, kernel_options());
    for (std::size_t s = 0; s < markers_.size(); ++s) {
      markers_.position[s].x += dt_sub * markers_.velocity[s].x;
      markers_.position[s].y += dt_sub * markers_.velocity[s].y;
    }
  }
  fluid_.t += dt_sub;
  return div;
}

void Simulation::apply_lid_and_walls() {
  const int n = fluid_.n;
  for (int j = 0; j < n; ++j) {
    fluid_.U(0, j) = 0.0;
    fluid_.U(n, j) = 0.0;
  }
  for (int i = 0; i < n; ++i) {
    fluid_.V(i, 0) = 0.0;
    fluid_.V(i, n) = 0.0;
  }
}

void Simulation::project(double dt_sub) {
  const int n = fluid_.n;
  const double h = fluid_.h;
  Eigen::VectorXd rhs(n * n);
  for (int j = 0; j < n; ++j)
    for (int i = 0; i < n; ++i) rhs(j * n + i) = -h * h * fluid_.divergence(i, j);
  phi_ = poisson_.solve(rhs);
  if (poisson_.info() != Eigen::Success || !phi_.allFinite()) throw NumericalError("pressure solve failed");
  for (int j = 0; j < n; ++j)
    for (int i = 1; i < n; ++i) fluid_.U(i, j) -= (phi_(j * n + i) - phi_(j * n + i - 1)) / h;
  for (int j = 1; j < n; ++j)
    for (int i = 0; i < n; ++i) fluid_.V(i, j) -= (phi_(j * n + i) - phi_((j - 1) * n + i)) / h;
  const double mean = phi_.mean();
  for (int k = 0; k < n * n; ++k) fluid_.p[static_cast<std::size_t>(k)] = (phi_(k) - mean) / dt_sub;
}

// ---- dataset assembly -----------------------------------------------------------

void record_slice(const Simulation& sim, FsiDataset& data) {
  const FluidState& f = sim.fluid();
  const int n = f.n;
  data.times.push_back(f.t);
  for (int j = 0; j < n; ++j) {
    for (int i = 0; i < n; ++i) {
      data.u.push_back(0.5 * (f.U(i, j) + f.U(i + 1, j)));
      data.v.push_back(0.5 * (f.V(i, j) + f.V(i, j + 1)));
      data.p.push_back(f.P(i, j));
      const bool solid = sim.has_disc() && sim.markers().contains((i + 0.5) * f.h, (j + 0.5) * f.h);
      data.in_fluid.push_back(solid ? 0 : 1);
    }
  }
  if (!sim.has_disc()) return;
  const auto& m = sim.markers();
  const auto vel = interpolate_velocity(f, m.position, sim.kernel_options());
  const auto pres = interpolate_pressure(f, m.position, sim.kernel_options());
  const auto nrm = m.normals();
  for (std::size_t s = 0; s < m.size(); ++s) {
    data.mx.push_back(m.position[s].x);
    data.my.push_back(m.position[s].y);
    data.mu.push_back(vel[s].x);
    data.mv.push_back(vel[s].y);
    data.mp.push_back(pres[s]);
    data.mnx.push_back(nrm[s].x);
    data.mny.push_back(nrm[s].y);
  }
}

void write_solver_metadata(const SolverConfig& c, const RunSummary& s, FsiDataset& data) {
  auto& m = data.metadata;
  m["solver_version"] = "ibm-mac-projection 1.0";
  m["grid"] = std::to_string(c.grid);
  m["dt"] = format_double(c.dt);
  m["t_end"] = format_double(c.t_end);
  m["reynolds"] = format_double(c.reynolds);
  m["viscosity"] = format_double(c.viscosity());
  m["density"] = "1";
  m["disc"] = c.disc ? "true" : "false";
  m["marker_count"] = std::to_string(c.disc ? c.markers : 0);
  m["radius"] = format_double(c.radius);
  m["center_x"] = format_double(c.center_x);
  m["center_y"] = format_double(c.center_y);
  m["kappa_p"] = format_double(c.kappa_p);
  m["kappa_t"] = format_double(c.kappa_t);
  m["kappa_w"] = format_double(c.kappa_w);
  m["wall_range"] = format_double(c.wall_range);
  m["diffusion_limit"] = format_double(c.diffusion_limit);
  m["cfl_limit"] = format_double(c.cfl_limit);
  m["spring_limit"] = format_double(c.spring_limit);
  m["max_substeps"] = std::to_string(c.max_substeps);
  m["seed"] = std::to_string(c.seed);
  m["threads"] = "1";
  m["solid_model"] = "penalty-spring membrane stand-in (rigid-map penalty plus tension on the deviation)";
  m["kernel"] = "peskin-cosine-4pt";
  m["max_divergence"] = format_double(s.max_divergence);
  m["max_shape_deviation"] = format_double(s.max_shape_deviation);
  m["total_substeps"] = std::to_string(s.total_substeps);
  m["partial"] = s.partial ? "true" : "false";
  if (!s.error.empty()) m["error"] = s.error;
}

FsiDataset run_simulation(const SolverConfig& config, RunSummary* summary_out, bool keep_partial,
                          const std::function<void(double)>& progress) {
  Simulation sim(config);
  FsiDataset data;
  data.nx = data.ny = config.grid;
  data.h = config.h();
  data.lid_velocity = config.lid_velocity;
  data.markers = config.disc ? config.markers : 0;
  RunSummary summary;
  if (config.disc) {
    const auto [lo, hi] = sim.markers().spacing_range();
    summary.min_spacing = lo;
    summary.max_spacing = hi;
  }
  const auto track_markers = [&] {
    if (!config.disc) return;
    const auto& m = sim.markers();
    summary.max_shape_deviation = std::max(summary.max_shape_deviation, m.shape_deviation());
    for (const auto& p : m.position) {
      summary.min_marker_coordinate = std::min({summary.min_marker_coordinate, p.x, p.y});
      summary.max_marker_coordinate = std::max({summary.max_marker_coordinate, p.x, p.y});
    }
    const auto [lo, hi] = m.spacing_range();
    summary.min_spacing = std::min(summary.min_spacing, lo);
    summary.max_spacing = std::max(summary.max_spacing, hi);
    const double h = config.h();
    if (lo < 0.25 * h || hi > 2.0 * h) {
      std::ostringstream msg;
      msg << "marker spacing left [0.25h, 2h] at t=" << sim.fluid().t << " (min " << lo << ", max " << hi << ")";
      throw NumericalError(msg.str());
    }
  };
  const long steps = std::lround(config.t_end / config.dt);
  try {
    track_markers();
    record_slice(sim, data);
    for (long k = 1; k <= steps; ++k) {
      const auto d = sim.step();
      // Re-anchor time to the output lattice to avoid drift.
      sim.fluid().t = static_cast<double>(k) * config.dt;
      summary.max_divergence = std::max(summary.max_divergence, d.max_divergence);
      summary.total_substeps += d.substeps;
      track_markers();
      record_slice(sim, data);
      if (progress) progress(sim.fluid().t);
    }
  } catch (const SolverError& e) {
    summary.partial = true;
    summary.error = e.what();
    write_solver_metadata(config, summary, data);
    if (summary_out) *summary_out = summary;
    if (!keep_partial) throw;
    return data;
  }
  write_solver_metadata(config, summary, data);
  if (summary_out) *summary_out = summary;
  return data;
}

// ---- analysis -------------------------------------------------------------------

std::vector<double> streamfunction(const std::vector<double>& uc, int nx, int ny, double h) {
  std::vector<double> psi(static_cast<std::size_t>(nx * ny));
  for (int i = 0; i < nx; ++i) {
    double acc = 0.5 * h * uc[static_cast<std::size_t>(i)];
    psi[static_cast<std::size_t>(i)] = acc;
    for (int j = 1; j < ny; ++j) {
      acc += 0.5 * h * (uc[static_cast<std::size_t>((j - 1) * nx + i)] + uc[static_cast<std::size_t>(j * nx + i)]);
      psi[static_cast<std::size_t>(j * nx + i)] = acc;
    }
  }
  return psi;
}

RotationAnalysis analyse_rotation(const FsiDataset& data) {
  data.validate();
  if (data.markers == 0) throw DatasetError("rotation analysis needs marker records");
  const int nx = data.nx, ny = data.ny;
  const std::size_t per = static_cast<std::size_t>(nx * ny);
  std::vector<double> mean_u(per, 0.0);
  for (std::size_t n = 0; n < data.slices(); ++n)
    for (std::size_t k = 0; k < per; ++k) mean_u[k] += data.u[n * per + k];
  for (double& a : mean_u) a /= static_cast<double>(data.slices());
  const auto psi = streamfunction(mean_u, nx, ny, data.h);
  // Primary vortex: largest |psi| away from the walls.
  std::size_t best = 0;
  double best_val = -1.0;
  for (int j = 2; j < ny - 2; ++j)
    for (int i = 2; i < nx - 2; ++i) {
      const double a = std::abs(psi[static_cast<std::size_t>(j * nx + i)]);
      if (a > best_val) {
        best_val = a;
        best = static_cast<std::size_t>(j * nx + i);
      }
    }
  RotationAnalysis r;
  r.center_x = data.cell_x(static_cast<int>(best % static_cast<std::size_t>(nx)));
  r.center_y = data.cell_y(static_cast<int>(best / static_cast<std::size_t>(nx)));
  r.min_marker_coordinate = 1.0;
  r.max_marker_coordinate = 0.0;

  MarkerState m = MarkerState::circle(data.markers, 0, 0, 1);
  // Rest shape is the first slice.
  m.rest.clear();
  const std::size_t nm = static_cast<std::size_t>(data.markers);
  for (std::size_t s = 0; s < nm; ++s) m.rest.push_back({data.mx[s], data.my[s]});
  double prev = 0.0, total = 0.0;
  for (std::size_t n = 0; n < data.slices(); ++n) {
    for (std::size_t s = 0; s < nm; ++s) {
      m.position[s] = {data.mx[n * nm + s], data.my[n * nm + s]};
      r.min_marker_coordinate = std::min({r.min_marker_coordinate, m.position[s].x, m.position[s].y});
      r.max_marker_coordinate = std::max({r.max_marker_coordinate, m.position[s].x, m.position[s].y});
    }
    r.max_shape_deviation = std::max(r.max_shape_deviation, m.shape_deviation());
    const Point c = m.centroid();
    const double ang = std::atan2(c.y - r.center_y, c.x - r.center_x);
    if (n > 0) {
      double d = ang - prev;
      while (d > kPi) d -= 2 * kPi;
      while (d < -kPi) d += 2 * kPi;
      total += d;
    }
    prev = ang;
  }
  r.cumulative_angle = total;
  return r;
}

}  // namespace fsipinn::ibm
