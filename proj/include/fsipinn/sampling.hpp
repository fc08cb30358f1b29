#pragma once

// Sobol points, training-set construction from a reference dataset, and
// mini-batch selection.

#include <array>
#include <cstdint>
#include <filesystem>
#include <random>
#include <stdexcept>
#include <string>
#include <vector>

#include "fsipinn/autodiff.hpp"
#include "fsipinn/dataset.hpp"

namespace fsipinn::sampling {

using ad::Matrix;

class SamplingError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

/// Unscrambled Sobol sequence, up to 8 dimensions (Joe-Kuo direction numbers),
/// generated in Gray-code order.
class Sobol {
 public:
  static constexpr int kMaxDim = 8;
  static constexpr int kBits = 52;

  explicit Sobol(int dim);
  int dim() const { return dim_; }
  /// Next point; the first call returns the origin.
  std::vector<double> next();
  /// Direction number v_k for dimension d (integer scaled by 2^kBits).
  std::uint64_t direction(int d, int k) const { return v_[static_cast<std::size_t>(d)][static_cast<std::size_t>(k)]; }

 private:
  int dim_;
  std::uint64_t index_ = 0;
  std::vector<std::array<std::uint64_t, kBits>> v_;
  std::vector<std::uint64_t> x_;
};

/// n x dim matrix of Sobol points in [0,1)^dim. With skip_origin the leading
/// all-zero point is dropped. Throws SamplingError for n <= 0 or a bad dim.
Matrix sobol_points(long n, int dim, bool skip_origin = true);

enum class Wall { Top, Bottom, Left, Right };
inline constexpr std::array<Wall, 4> kWalls{Wall::Top, Wall::Bottom, Wall::Left, Wall::Right};
std::string to_string(Wall w);

struct BoundarySet {
  Matrix txy;  // n x 3
  Matrix uv;   // imposed velocity, n x 2
};

struct TrainingConfig {
  double fluid_fraction = 0.00005;
  double interface_fraction = 0.0005;
  long boundary_points = 2000;  // per wall
  long initial_points = 2000;
  bool skip_origin = true;
  std::uint64_t seed = 0;
};

struct TrainingSet {
  /// Fluid collocation points snapped to dataset cell centres outside the disc.
  Matrix fluid;  // n x 3 (t, x, y)
  std::vector<std::size_t> fluid_records;
  std::array<BoundarySet, 4> boundary;  // indexed by Wall
  BoundarySet initial;                   // t = 0, u = v = 0
  /// Marker records: coordinates, observed (u, v, p) and outward normal.
  Matrix interface;         // n x 3 (t, x, y)
  Matrix interface_values;  // n x 3 (u, v, p)
  Matrix interface_normals; // n x 2
  std::vector<std::size_t> interface_records;

  TrainingConfig config;
  std::uint64_t dataset_checksum = 0;
  long fluid_requested = 0;  // before clamping to the available records

  const BoundarySet& wall(Wall w) const { return boundary[static_cast<std::size_t>(w)]; }
};

/// Requested count for a fraction of `total` records: round half away from zero.
long fraction_count(double fraction, std::size_t total);

/// Builds the training set. Fluid points map 3-D Sobol points in (t, x, y) to the
/// nearest dataset record, skipping solid cells and repeats; when the request
/// covers every fluid record all of them are taken. Interface points are a
/// uniform draw without replacement from the marker records (none without a
/// disc). Boundary and initial points are Sobol-placed on the walls and the
/// t = 0 slice.
/// Throws SamplingError naming the domain when a fraction is outside (0, 1] or
/// yields no points.
TrainingSet build_training_set(const FsiDataset& data, const TrainingConfig& config);

/// Sizes of the collections a batch is drawn from, in loss-term order:
/// fluid, top, bottom, left, right, initial, interface.
inline constexpr int kCollections = 7;
std::array<std::size_t, kCollections> collection_sizes(const TrainingSet& set);

/// min(batch, n) distinct indices in [0, n), uniformly without replacement.
std::vector<std::size_t> draw_without_replacement(std::size_t n, std::size_t batch, std::mt19937_64& rng);

struct Minibatch {
  std::array<std::vector<std::size_t>, kCollections> indices;
};

/// Independent draw per collection, a pure function of (seed, iteration).
Minibatch minibatch(const TrainingSet& set, std::size_t batch_size, std::uint64_t seed, long iteration);

/// Rows of m selected by idx.
Matrix gather_rows(const Matrix& m, const std::vector<std::size_t>& idx);

/// Text manifest: seed, fractions, counts per collection and dataset checksum.
void write_manifest(const TrainingSet& set, const std::filesystem::path& file);

}  // namespace fsipinn::sampling
