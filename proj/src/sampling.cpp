#include "fsipinn/sampling.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <numeric>
#include <sstream>
#include <unordered_set>

namespace fsipinn::sampling {

namespace {

// Joe-Kuo direction numbers for dimensions 2..8: degree s, polynomial a, m_1..m_s.
struct Primitive {
  int s;
  unsigned a;
  std::array<unsigned, 5> m;
};
constexpr std::array<Primitive, Sobol::kMaxDim - 1> kPrimitives{{
    {1, 0, {1}},
    {2, 1, {1, 3}},
    {3, 1, {1, 3, 1}},
    {3, 2, {1, 1, 1}},
    {4, 1, {1, 1, 3, 3}},
    {4, 4, {1, 3, 5, 13}},
    {5, 2, {1, 1, 5, 5, 17}},
}};

[[noreturn]] void fail(const std::string& domain, const std::string& what) {
  throw SamplingError(domain + ": " + what);
}

void check_fraction(const std::string& domain, double f) {
  if (!(f > 0.0 && f <= 1.0)) {
    std::ostringstream m;
    m << "fraction " << f << " must be in (0, 1]";
    fail(domain, m.str());
  }
}

}  // namespace

Sobol::Sobol(int dim) : dim_(dim) {
  if (dim < 1 || dim > kMaxDim) {
    std::ostringstream m;
    m << "Sobol dimension " << dim << " outside [1, " << kMaxDim << "]";
    throw SamplingError(m.str());
  }
  v_.resize(static_cast<std::size_t>(dim));
  x_.assign(static_cast<std::size_t>(dim), 0);
  for (int k = 0; k < kBits; ++k) v_[0][static_cast<std::size_t>(k)] = std::uint64_t{1} << (kBits - 1 - k);
  for (int d = 1; d < dim; ++d) {
    const Primitive& pr = kPrimitives[static_cast<std::size_t>(d - 1)];
    auto& v = v_[static_cast<std::size_t>(d)];
    for (int k = 0; k < kBits; ++k) {
      if (k < pr.s) {
        v[static_cast<std::size_t>(k)] = std::uint64_t{pr.m[static_cast<std::size_t>(k)]} << (kBits - 1 - k);
        continue;
      }
      std::uint64_t x = v[static_cast<std::size_t>(k - pr.s)];
      x ^= x >> pr.s;
      for (int j = 1; j < pr.s; ++j)
        if ((pr.a >> (pr.s - 1 - j)) & 1u) x ^= v[static_cast<std::size_t>(k - j)];
      v[static_cast<std::size_t>(k)] = x;
    }
  }
}

std::vector<double> Sobol::next() {
  constexpr double scale = 1.0 / static_cast<double>(std::uint64_t{1} << kBits);
  std::vector<double> p(static_cast<std::size_t>(dim_));
  for (int d = 0; d < dim_; ++d) p[static_cast<std::size_t>(d)] = static_cast<double>(x_[static_cast<std::size_t>(d)]) * scale;
  // Gray-code step: flip the direction number of the lowest zero bit of the index.
  int c = 0;
  while ((index_ >> c) & 1u) ++c;
  if (c >= kBits) throw SamplingError("Sobol sequence exhausted");
  for (int d = 0; d < dim_; ++d) x_[static_cast<std::size_t>(d)] ^= v_[static_cast<std::size_t>(d)][static_cast<std::size_t>(c)];
  ++index_;
  return p;
}

Matrix sobol_points(long n, int dim, bool skip_origin) {
  if (n <= 0) {
    std::ostringstream m;
    m << "Sobol point count must be positive, got " << n;
    throw SamplingError(m.str());
  }
  Sobol gen(dim);
  if (skip_origin) gen.next();
  Matrix out(n, dim);
  for (long i = 0; i < n; ++i) {
    const auto p = gen.next();
    for (int d = 0; d < dim; ++d) out(i, d) = p[static_cast<std::size_t>(d)];
  }
  return out;
}

std::string to_string(Wall w) {
  switch (w) {
    case Wall::Top: return "top";
    case Wall::Bottom: return "bottom";
    case Wall::Left: return "left";
    case Wall::Right: return "right";
  }
  return "?";
}

long fraction_count(double fraction, std::size_t total) {
  return std::lround(fraction * static_cast<double>(total));
}

TrainingSet build_training_set(const FsiDataset& data, const TrainingConfig& config) {
  data.validate();
  check_fraction("fluid", config.fluid_fraction);
  check_fraction("interface", config.interface_fraction);
  if (config.boundary_points <= 0) fail("boundary", "point count must be positive");
  if (config.initial_points <= 0) fail("initial", "point count must be positive");
  if (data.slices() == 0) fail("fluid", "dataset has no time slices");

  TrainingSet set;
  set.config = config;
  set.dataset_checksum = data.checksum();

  // Fluid collocation points.
  const std::size_t total = data.eulerian_count();
  std::size_t eligible = 0;
  for (auto f : data.in_fluid) eligible += f != 0;
  const long want = fraction_count(config.fluid_fraction, total);
  set.fluid_requested = want;
  if (want <= 0) fail("fluid", "fraction yields zero points");
  const std::size_t count = std::min(static_cast<std::size_t>(want), eligible);
  if (count == 0) fail("fluid", "no fluid records in the dataset");
  if (count == eligible) {
    for (std::size_t k = 0; k < total; ++k)
      if (data.in_fluid[k]) set.fluid_records.push_back(k);
  } else {
    Sobol gen(3);
    if (config.skip_origin) gen.next();
    std::unordered_set<std::size_t> taken;
    const std::size_t slices = data.slices();
    const std::size_t budget = std::max<std::size_t>(1000000, 100 * count);
    for (std::size_t draw = 0; set.fluid_records.size() < count; ++draw) {
      if (draw == budget) fail("fluid", "could not place the requested points");
      const auto p = gen.next();
      const auto n = static_cast<std::size_t>(std::llround(p[0] * static_cast<double>(slices - 1)));
      const int i = std::min(data.nx - 1, static_cast<int>(p[1] * data.nx));
      const int j = std::min(data.ny - 1, static_cast<int>(p[2] * data.ny));
      const std::size_t k = data.cell_index(n, i, j);
      if (!data.in_fluid[k] || !taken.insert(k).second) continue;
      set.fluid_records.push_back(k);
    }
  }
  set.fluid.resize(static_cast<ad::Index>(set.fluid_records.size()), 3);
  for (std::size_t r = 0; r < set.fluid_records.size(); ++r) {
    const auto rec = data.eulerian(set.fluid_records[r]);
    set.fluid.row(static_cast<ad::Index>(r)) << rec.t, rec.x, rec.y;
  }

  // Interface points from marker records; a dataset without a disc has none.
  const std::size_t markers = data.marker_count();
  if (markers > 0) {
    const long nif = fraction_count(config.interface_fraction, markers);
    if (nif <= 0) fail("interface", "fraction yields zero points");
    std::mt19937_64 rng(config.seed);
    set.interface_records = draw_without_replacement(markers, static_cast<std::size_t>(nif), rng);
    std::sort(set.interface_records.begin(), set.interface_records.end());
  }
  const auto ni = static_cast<ad::Index>(set.interface_records.size());
  set.interface.resize(ni, 3);
  set.interface_values.resize(ni, 3);
  set.interface_normals.resize(ni, 2);
  for (ad::Index r = 0; r < ni; ++r) {
    const auto m = data.marker(set.interface_records[static_cast<std::size_t>(r)]);
    set.interface.row(r) << m.t, m.x, m.y;
    set.interface_values.row(r) << m.u, m.v, m.p;
    set.interface_normals.row(r) << m.nx, m.ny;
  }

  // Walls: each uses its own pair of Sobol dimensions for (t, position).
  const double t_end = data.times.back();
  const Matrix wall_pts = sobol_points(config.boundary_points, 8, config.skip_origin);
  for (Wall w : kWalls) {
    const auto c = 2 * static_cast<ad::Index>(w);
    BoundarySet& b = set.boundary[static_cast<std::size_t>(w)];
    b.txy.resize(config.boundary_points, 3);
    b.uv = Matrix::Zero(config.boundary_points, 2);
    for (ad::Index r = 0; r < config.boundary_points; ++r) {
      const double t = wall_pts(r, c) * t_end, s = wall_pts(r, c + 1);
      switch (w) {
        case Wall::Top: b.txy.row(r) << t, s, 1.0; b.uv(r, 0) = data.lid_velocity; break;
        case Wall::Bottom: b.txy.row(r) << t, s, 0.0; break;
        case Wall::Left: b.txy.row(r) << t, 0.0, s; break;
        case Wall::Right: b.txy.row(r) << t, 1.0, s; break;
      }
    }
  }
  const Matrix init = sobol_points(config.initial_points, 2, config.skip_origin);
  set.initial.txy.resize(config.initial_points, 3);
  set.initial.uv = Matrix::Zero(config.initial_points, 2);
  for (ad::Index r = 0; r < config.initial_points; ++r) set.initial.txy.row(r) << 0.0, init(r, 0), init(r, 1);
  return set;
}

std::array<std::size_t, kCollections> collection_sizes(const TrainingSet& set) {
  std::array<std::size_t, kCollections> n{};
  n[0] = static_cast<std::size_t>(set.fluid.rows());
  for (std::size_t w = 0; w < 4; ++w) n[1 + w] = static_cast<std::size_t>(set.boundary[w].txy.rows());
  n[5] = static_cast<std::size_t>(set.initial.txy.rows());
  n[6] = static_cast<std::size_t>(set.interface.rows());
  return n;
}

std::vector<std::size_t> draw_without_replacement(std::size_t n, std::size_t batch, std::mt19937_64& rng) {
  const std::size_t k = std::min(n, batch);
  std::vector<std::size_t> pool(n);
  std::iota(pool.begin(), pool.end(), std::size_t{0});
  for (std::size_t i = 0; i < k; ++i) {
    std::uniform_int_distribution<std::size_t> pick(i, n - 1);
    std::swap(pool[i], pool[pick(rng)]);
  }
  pool.resize(k);
  return pool;
}

Minibatch minibatch(const TrainingSet& set, std::size_t batch_size, std::uint64_t seed, long iteration) {
  Minibatch mb;
  const auto sizes = collection_sizes(set);
  const auto it = static_cast<std::uint64_t>(iteration);
  for (int c = 0; c < kCollections; ++c) {
    std::seed_seq seq{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32),
                      static_cast<std::uint32_t>(it), static_cast<std::uint32_t>(it >> 32), static_cast<std::uint32_t>(c)};
    std::mt19937_64 rng(seq);
    mb.indices[static_cast<std::size_t>(c)] = draw_without_replacement(sizes[static_cast<std::size_t>(c)], batch_size, rng);
  }
  return mb;
}

Matrix gather_rows(const Matrix& m, const std::vector<std::size_t>& idx) {
  Matrix out(static_cast<ad::Index>(idx.size()), m.cols());
  for (std::size_t r = 0; r < idx.size(); ++r) out.row(static_cast<ad::Index>(r)) = m.row(static_cast<ad::Index>(idx[r]));
  return out;
}

void write_manifest(const TrainingSet& set, const std::filesystem::path& file) {
  if (file.has_parent_path()) std::filesystem::create_directories(file.parent_path());
  std::ofstream out(file);
  if (!out) throw SamplingError("cannot write manifest " + file.string());
  const auto& c = set.config;
  std::ostringstream hex;
  hex << std::hex << set.dataset_checksum;
  out << "seed = " << c.seed << "\n"
      << "fluid_fraction = " << format_double(c.fluid_fraction) << "\n"
      << "interface_fraction = " << format_double(c.interface_fraction) << "\n"
      << "skip_origin = " << (c.skip_origin ? "true" : "false") << "\n"
      << "fluid_requested = " << set.fluid_requested << "\n"
      << "fluid = " << set.fluid.rows() << "\n";
  for (Wall w : kWalls) out << "boundary_" << to_string(w) << " = " << set.wall(w).txy.rows() << "\n";
  out << "initial = " << set.initial.txy.rows() << "\n"
      << "interface = " << set.interface.rows() << "\n"
      << "dataset_checksum = " << hex.str() << "\n";
  if (!out) throw SamplingError("failed writing manifest " + file.string());
}

}  // namespace fsipinn::sampling
