#pragma once

// Reference data produced by the IBM solver: Eulerian fields at cell centres
// for every emitted time slice, plus Lagrangian marker records.

#include <cstdint>
#include <filesystem>
#include <map>
#include <stdexcept>
#include <string>
#include <vector>

namespace fsipinn {

class DatasetError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct EulerianRecord {
  double t, x, y, u, v, p;
  bool in_fluid;
};

struct MarkerRecord {
  double t;
  int s;
  double x, y, u, v, p, nx, ny;
};

/// Velocity and pressure at a query point.
struct FieldSample {
  double u = 0.0, v = 0.0, p = 0.0;
};

struct FsiDataset {
  /// Every solver setting plus run diagnostics, written verbatim as the
  /// metadata block (key = value).
  std::map<std::string, std::string> metadata;

  int nx = 0;
  int ny = 0;
  double h = 0.0;
  double lid_velocity = 1.0;
  int markers = 0;
  std::vector<double> times;

  // Eulerian slices, index k = (n * ny + j) * nx + i, cell centre ((i+0.5)h, (j+0.5)h).
  std::vector<double> u, v, p;
  std::vector<std::uint8_t> in_fluid;

  // Marker slices, index k = n * markers + s.
  std::vector<double> mx, my, mu, mv, mp, mnx, mny;

  std::size_t slices() const { return times.size(); }
  std::size_t eulerian_count() const { return times.size() * static_cast<std::size_t>(nx) * static_cast<std::size_t>(ny); }
  std::size_t marker_count() const { return times.size() * static_cast<std::size_t>(markers); }
  std::size_t cell_index(std::size_t n, int i, int j) const {
    return (n * static_cast<std::size_t>(ny) + static_cast<std::size_t>(j)) * static_cast<std::size_t>(nx) +
           static_cast<std::size_t>(i);
  }
  double cell_x(int i) const { return (i + 0.5) * h; }
  double cell_y(int j) const { return (j + 0.5) * h; }

  EulerianRecord eulerian(std::size_t k) const;
  MarkerRecord marker(std::size_t k) const;

  /// Index of the slice whose time equals t (to 1e-9), or throws listing the
  /// available range.
  std::size_t slice_of(double t) const;

  /// Field values at (t, x, y) with t on a stored slice. Points on a wall get
  /// the imposed boundary velocity (lid on y = 1, zero elsewhere) and the
  /// pressure of the nearest interior point; interior points are bilinear in
  /// the cell-centre values, clamped at the outermost cell centres.
  FieldSample sample(double t, double x, double y) const;

  /// FNV-1a over the raw arrays; identifies the dataset in manifests.
  std::uint64_t checksum() const;

  /// Throws DatasetError when array sizes disagree with the declared shape.
  void validate() const;
};

/// Writes eulerian.csv, markers.csv and metadata.txt into dir (created if
/// missing).
void write_dataset(const FsiDataset& data, const std::filesystem::path& dir);
FsiDataset read_dataset(const std::filesystem::path& dir);

/// Shortest round-trip decimal text of a double.
std::string format_double(double v);
double parse_double(const std::string& s);

}  // namespace fsipinn
