#pragma once

// Relative L2 errors per domain and field, dataset statistics, line profiles,
// contour tables and the cross-model ordering verdicts.

#include <array>
#include <cstdint>
#include <filesystem>
#include <functional>
#include <iosfwd>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "fsipinn/dataset.hpp"
#include "fsipinn/pinn.hpp"

namespace fsipinn::eval {

using ad::Index;
using ad::Matrix;

class EvalError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

enum class Domain { Fluid, Interface };
enum class Field { U, V, P };
inline constexpr std::array<Domain, 2> kDomains{Domain::Fluid, Domain::Interface};
inline constexpr std::array<Field, 3> kFields{Field::U, Field::V, Field::P};
std::string to_string(Domain d);
std::string to_string(Field f);

/// 100 * |ref - pred| / |ref|. Throws EvalError on a length mismatch or a zero reference.
double relative_l2(std::span<const double> pred, std::span<const double> ref);

/// Maps (t, x, y) rows to (u, v, p) rows, separately for fluid and marker points.
struct Predictor {
  std::string label;
  std::function<Matrix(const Matrix&)> fluid;
  std::function<Matrix(const Matrix&)> interface;
};

/// Eulerian (or single) network on fluid points; the Lagrangian network on
/// markers when the model has one. The model must outlive the predictor.
Predictor model_predictor(const pinn::Model& model);
/// Looks up the dataset's own values: nearest cell, nearest marker.
Predictor replay_predictor(const FsiDataset& data);
Predictor zero_predictor();

struct EvalResult {
  std::string model_id;
  std::string checkpoint;
  std::uint64_t dataset_checksum = 0;
  /// rel_l2[domain][field] in percent.
  std::array<std::array<double, 3>, 2> rel_l2{};
  /// |pred - ref| per Eulerian record (dataset layout), one vector per field.
  /// Solid cells are included; the fluid metric skips them. Empty unless kept.
  std::array<std::vector<double>, 3> abs_error;

  double metric(Domain d, Field f) const {
    return rel_l2[static_cast<std::size_t>(d)][static_cast<std::size_t>(f)];
  }
};

/// Evaluates every dataset record. Throws EvalError when a domain is missing.
EvalResult evaluate(const Predictor& predictor, const FsiDataset& data, bool keep_error_grids = false);

/// `model,domain,field,rel_l2_percent`, six rows per result.
void write_metrics_csv(const std::vector<EvalResult>& results, std::ostream& os);

struct FieldStatistics {
  Domain domain = Domain::Fluid;
  Field field = Field::U;
  std::size_t count = 0;
  double mean = 0.0, stddev = 0.0, min = 0.0, max = 0.0;
  /// 50 equal-width bins over [min, max]; a constant field puts everything in bin 0.
  std::vector<std::size_t> histogram;
};

inline constexpr int kHistogramBins = 50;

/// Population statistics over fluid cells and marker records of every slice.
std::vector<FieldStatistics> field_statistics(const FsiDataset& data);
/// Population standard deviation.
double population_std(std::span<const double> values);
void write_statistics_csv(const std::vector<FieldStatistics>& stats, std::ostream& os);
void write_histogram_csv(const std::vector<FieldStatistics>& stats, std::ostream& os);

/// One row per cell along the line nearest y at slice t:
/// x, u_ref, u_pred, v_ref, v_pred, p_ref, p_pred.
Matrix profile_table(const Predictor& predictor, const FsiDataset& data, double t, double y);

/// Full grid at slice t: x, y, pred, ref, abs_error for one field.
Matrix contour_table(const Predictor& predictor, const FsiDataset& data, double t, Field field);

/// Writes {label}_fluid_uvp_profile-t{t}-y{y}.csv per (t, y) and
/// {label}_fluid_{field}_contour-t{t}.csv per (t, field). Returns the files written.
std::vector<std::filesystem::path> emit_profiles(const Predictor& predictor, const FsiDataset& data,
                                                 const std::vector<double>& times, const std::vector<double>& y_lines,
                                                 const std::filesystem::path& dir);

// ---- cross-model report --------------------------------------------------------

struct RunSummary {
  std::string model_id;
  std::uint64_t seed = 0;
  double final_total = 0.0;
  EvalResult result;
};

/// Mean of the interface u and v errors.
double interface_velocity_error(const EvalResult& r);

struct Verdict {
  std::string name;    // e.g. "EL<Single"
  std::string detail;  // per-pair win counts
  bool pass = false;
  bool evaluated = false;  // false when the needed models are missing
};

/// EL<Single on interface velocity error, BSpline<Tanh on final total loss
/// (each a majority of shared seeds for both pairs), and Pressure>Velocity
/// for every model on per-seed medians.
std::vector<Verdict> ordering_verdicts(const std::vector<RunSummary>& runs);

/// model,seed,final_total,<domain>_<field> columns.
void write_comparison_csv(const std::vector<RunSummary>& runs, std::ostream& os);
/// `name: pass|fail (detail)` lines.
void write_verdicts(const std::vector<Verdict>& verdicts, std::ostream& os);

}  // namespace fsipinn::eval
