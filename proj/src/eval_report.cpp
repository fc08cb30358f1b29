#include "fsipinn/eval_report.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <iomanip>
#include <limits>
#include <map>
#include <sstream>

namespace fsipinn::eval {

std::string to_string(Domain d) { return d == Domain::Fluid ? "fluid" : "interface"; }

std::string to_string(Field f) {
  switch (f) {
    case Field::U: return "u";
    case Field::V: return "v";
    case Field::P: return "p";
  }
  return "?";
}

double relative_l2(std::span<const double> pred, std::span<const double> ref) {
  if (pred.size() != ref.size()) {
    std::ostringstream m;
    m << "relative_l2: " << pred.size() << " predictions for " << ref.size() << " reference values";
    throw EvalError(m.str());
  }
  double num = 0.0, den = 0.0;
  for (std::size_t k = 0; k < ref.size(); ++k) {
    const double d = ref[k] - pred[k];
    num += d * d;
    den += ref[k] * ref[k];
  }
  if (!(den > 0.0)) throw EvalError("relative_l2: reference is identically zero");
  return 100.0 * std::sqrt(num / den);
}

// ---- predictors ------------------------------------------------------------------

Predictor model_predictor(const pinn::Model& model) {
  Predictor p;
  p.label = model.config.model_id;
  p.fluid = [&model](const Matrix& txy) { return model.predict_fluid(txy); };
  p.interface = [&model](const Matrix& txy) { return model.predict_interface(txy); };
  return p;
}

Predictor replay_predictor(const FsiDataset& data) {
  Predictor p;
  p.label = "replay";
  p.fluid = [&data](const Matrix& txy) {
    Matrix out(txy.rows(), 3);
    for (Index r = 0; r < txy.rows(); ++r) {
      const std::size_t n = data.slice_of(txy(r, 0));
      const int i = std::clamp(static_cast<int>(std::floor(txy(r, 1) / data.h)), 0, data.nx - 1);
      const int j = std::clamp(static_cast<int>(std::floor(txy(r, 2) / data.h)), 0, data.ny - 1);
      const std::size_t k = data.cell_index(n, i, j);
      out.row(r) << data.u[k], data.v[k], data.p[k];
    }
    return out;
  };
  p.interface = [&data](const Matrix& txy) {
    Matrix out(txy.rows(), 3);
    const auto M = static_cast<std::size_t>(data.markers);
    for (Index r = 0; r < txy.rows(); ++r) {
      const std::size_t n = data.slice_of(txy(r, 0));
      std::size_t best = n * M;
      double dmin = std::numeric_limits<double>::infinity();
      for (std::size_t k = n * M; k < (n + 1) * M; ++k) {
        const double d = std::hypot(data.mx[k] - txy(r, 1), data.my[k] - txy(r, 2));
        if (d < dmin) {
          dmin = d;
          best = k;
        }
      }
      out.row(r) << data.mu[best], data.mv[best], data.mp[best];
    }
    return out;
  };
  return p;
}

Predictor zero_predictor() {
  Predictor p;
  p.label = "zero";
  p.fluid = p.interface = [](const Matrix& txy) { return Matrix::Zero(txy.rows(), 3).eval(); };
  return p;
}

// ---- evaluation ----------------------------------------------------------------------

EvalResult evaluate(const Predictor& predictor, const FsiDataset& data, bool keep_error_grids) {
  if (data.slices() == 0) throw EvalError("dataset has no time slices");
  if (data.markers == 0) throw EvalError("dataset has no interface (marker) records");
  const auto cells = static_cast<std::size_t>(data.nx) * static_cast<std::size_t>(data.ny);
  const auto M = static_cast<std::size_t>(data.markers);

  // Predictions and references gathered per domain and field.
  std::array<std::array<std::vector<double>, 3>, 2> pred, ref;
  EvalResult res;
  res.model_id = predictor.label;
  res.dataset_checksum = data.checksum();
  if (keep_error_grids)
    for (auto& e : res.abs_error) e.assign(data.eulerian_count(), 0.0);

  Matrix txy(static_cast<Index>(cells), 3);
  for (std::size_t n = 0; n < data.slices(); ++n) {
    for (int j = 0; j < data.ny; ++j)
      for (int i = 0; i < data.nx; ++i) {
        const auto r = static_cast<Index>(static_cast<std::size_t>(j) * static_cast<std::size_t>(data.nx) +
                                          static_cast<std::size_t>(i));
        txy.row(r) << data.times[n], data.cell_x(i), data.cell_y(j);
      }
    const Matrix out = predictor.fluid(txy);
    for (std::size_t c = 0; c < cells; ++c) {
      const std::size_t k = n * cells + c;
      const double rv[3] = {data.u[k], data.v[k], data.p[k]};
      for (int f = 0; f < 3; ++f) {
        const double pv = out(static_cast<Index>(c), f);
        if (keep_error_grids) res.abs_error[static_cast<std::size_t>(f)][k] = std::abs(pv - rv[f]);
        if (!data.in_fluid[k]) continue;
        pred[0][static_cast<std::size_t>(f)].push_back(pv);
        ref[0][static_cast<std::size_t>(f)].push_back(rv[f]);
      }
    }
    Matrix mtxy(static_cast<Index>(M), 3);
    for (std::size_t s = 0; s < M; ++s) mtxy.row(static_cast<Index>(s)) << data.times[n], data.mx[n * M + s], data.my[n * M + s];
    const Matrix mout = predictor.interface(mtxy);
    for (std::size_t s = 0; s < M; ++s) {
      const std::size_t k = n * M + s;
      const double rv[3] = {data.mu[k], data.mv[k], data.mp[k]};
      for (int f = 0; f < 3; ++f) {
        pred[1][static_cast<std::size_t>(f)].push_back(mout(static_cast<Index>(s), f));
        ref[1][static_cast<std::size_t>(f)].push_back(rv[f]);
      }
    }
  }
  if (ref[0][0].empty()) throw EvalError("dataset has no fluid records");
  for (std::size_t d = 0; d < 2; ++d)
    for (std::size_t f = 0; f < 3; ++f) {
      try {
        res.rel_l2[d][f] = relative_l2(pred[d][f], ref[d][f]);
      } catch (const EvalError& e) {
        throw EvalError(to_string(kDomains[d]) + " " + to_string(kFields[f]) + ": " + e.what());
      }
    }
  return res;
}

void write_metrics_csv(const std::vector<EvalResult>& results, std::ostream& os) {
  os << "model,domain,field,rel_l2_percent\n";
  for (const auto& r : results)
    for (Domain d : kDomains)
      for (Field f : kFields) os << r.model_id << ',' << to_string(d) << ',' << to_string(f) << ',' << format_double(r.metric(d, f)) << '\n';
}

// ---- statistics ------------------------------------------------------------------------

namespace {

// Mean with one refinement pass, so a constant sample returns its value exactly.
double sample_mean(std::span<const double> values) {
  const auto n = static_cast<double>(values.size());
  double mean = 0.0;
  for (double v : values) mean += v;
  mean /= n;
  double fix = 0.0;
  for (double v : values) fix += v - mean;
  return mean + fix / n;
}

}  // namespace

double population_std(std::span<const double> values) {
  if (values.empty()) return 0.0;
  const double mean = sample_mean(values);
  double ss = 0.0;
  for (double v : values) ss += (v - mean) * (v - mean);
  return std::sqrt(ss / static_cast<double>(values.size()));
}

namespace {

FieldStatistics summarise(Domain d, Field f, const std::vector<double>& values) {
  FieldStatistics s;
  s.domain = d;
  s.field = f;
  s.count = values.size();
  s.histogram.assign(kHistogramBins, 0);
  if (values.empty()) return s;
  s.mean = sample_mean(values);
  s.stddev = population_std(values);
  const auto [lo, hi] = std::minmax_element(values.begin(), values.end());
  s.min = *lo;
  s.max = *hi;
  const double width = (s.max - s.min) / kHistogramBins;
  for (double v : values) {
    int b = width > 0.0 ? static_cast<int>((v - s.min) / width) : 0;
    b = std::clamp(b, 0, kHistogramBins - 1);
    ++s.histogram[static_cast<std::size_t>(b)];
  }
  return s;
}

}  // namespace

std::vector<FieldStatistics> field_statistics(const FsiDataset& data) {
  std::array<std::vector<double>, 3> fluid;
  for (std::size_t k = 0; k < data.eulerian_count(); ++k) {
    if (!data.in_fluid[k]) continue;
    fluid[0].push_back(data.u[k]);
    fluid[1].push_back(data.v[k]);
    fluid[2].push_back(data.p[k]);
  }
  const std::array<const std::vector<double>*, 3> markers{&data.mu, &data.mv, &data.mp};
  std::vector<FieldStatistics> out;
  for (std::size_t f = 0; f < 3; ++f) out.push_back(summarise(Domain::Fluid, kFields[f], fluid[f]));
  for (std::size_t f = 0; f < 3; ++f) out.push_back(summarise(Domain::Interface, kFields[f], *markers[f]));
  return out;
}

void write_statistics_csv(const std::vector<FieldStatistics>& stats, std::ostream& os) {
  os << "domain,field,count,mean,std,min,max\n";
  for (const auto& s : stats)
    os << to_string(s.domain) << ',' << to_string(s.field) << ',' << s.count << ',' << format_double(s.mean) << ','
       << format_double(s.stddev) << ',' << format_double(s.min) << ',' << format_double(s.max) << '\n';
}

void write_histogram_csv(const std::vector<FieldStatistics>& stats, std::ostream& os) {
  os << "domain,field,bin,lo,hi,count\n";
  for (const auto& s : stats) {
    const double width = (s.max - s.min) / kHistogramBins;
    for (int b = 0; b < kHistogramBins; ++b)
      os << to_string(s.domain) << ',' << to_string(s.field) << ',' << b << ',' << format_double(s.min + b * width)
         << ',' << format_double(s.min + (b + 1) * width) << ',' << s.histogram[static_cast<std::size_t>(b)] << '\n';
  }
}

// ---- profiles and contours ---------------------------------------------------------------

Matrix profile_table(const Predictor& predictor, const FsiDataset& data, double t, double y) {
  const std::size_t n = data.slice_of(t);
  if (!(y >= 0.0 && y <= 1.0)) {
    std::ostringstream m;
    m << "profile line y=" << y << " is outside the grid [0, 1]";
    throw EvalError(m.str());
  }
  const int j = std::clamp(static_cast<int>(std::floor(y / data.h)), 0, data.ny - 1);
  Matrix txy(data.nx, 3);
  for (int i = 0; i < data.nx; ++i) txy.row(i) << data.times[n], data.cell_x(i), data.cell_y(j);
  const Matrix pred = predictor.fluid(txy);
  Matrix out(data.nx, 7);
  for (int i = 0; i < data.nx; ++i) {
    const std::size_t k = data.cell_index(n, i, j);
    out.row(i) << data.cell_x(i), data.u[k], pred(i, 0), data.v[k], pred(i, 1), data.p[k], pred(i, 2);
  }
  return out;
}

Matrix contour_table(const Predictor& predictor, const FsiDataset& data, double t, Field field) {
  const std::size_t n = data.slice_of(t);
  const Index cells = static_cast<Index>(data.nx) * data.ny;
  Matrix txy(cells, 3);
  for (int j = 0; j < data.ny; ++j)
    for (int i = 0; i < data.nx; ++i) txy.row(j * data.nx + i) << data.times[n], data.cell_x(i), data.cell_y(j);
  const Matrix pred = predictor.fluid(txy);
  const int f = static_cast<int>(field);
  const std::vector<double>& ref = field == Field::U ? data.u : field == Field::V ? data.v : data.p;
  Matrix out(cells, 5);
  for (int j = 0; j < data.ny; ++j)
    for (int i = 0; i < data.nx; ++i) {
      const Index r = j * data.nx + i;
      const double rv = ref[data.cell_index(n, i, j)];
      out.row(r) << txy(r, 1), txy(r, 2), pred(r, f), rv, std::abs(pred(r, f) - rv);
    }
  return out;
}

namespace {

std::string tag(double v) {
  std::ostringstream s;
  s << std::fixed << std::setprecision(2) << v;
  return s.str();
}

void write_table(const std::filesystem::path& file, const std::string& header, const Matrix& m) {
  std::ofstream out(file);
  if (!out) throw std::runtime_error("cannot write " + file.string());
  out << header << '\n';
  for (Index r = 0; r < m.rows(); ++r) {
    for (Index c = 0; c < m.cols(); ++c) out << (c ? "," : "") << format_double(m(r, c));
    out << '\n';
  }
}

}  // namespace

std::vector<std::filesystem::path> emit_profiles(const Predictor& predictor, const FsiDataset& data,
                                                 const std::vector<double>& times, const std::vector<double>& y_lines,
                                                 const std::filesystem::path& dir) {
  // Validate every request before writing anything.
  for (double t : times) data.slice_of(t);
  for (double y : y_lines)
    if (!(y >= 0.0 && y <= 1.0)) {
      std::ostringstream m;
      m << "profile line y=" << y << " is outside the grid [0, 1]";
      throw EvalError(m.str());
    }
  std::filesystem::create_directories(dir);
  std::vector<std::filesystem::path> written;
  for (double t : times) {
    for (double y : y_lines) {
      const auto file = dir / (predictor.label + "_fluid_uvp_profile-t" + tag(t) + "-y" + tag(y) + ".csv");
      write_table(file, "x,u_ref,u_pred,v_ref,v_pred,p_ref,p_pred", profile_table(predictor, data, t, y));
      written.push_back(file);
    }
    for (Field f : kFields) {
      const auto file = dir / (predictor.label + "_fluid_" + to_string(f) + "_contour-t" + tag(t) + ".csv");
      write_table(file, "x,y,pred,ref,abs_error", contour_table(predictor, data, t, f));
      written.push_back(file);
    }
  }
  return written;
}

// ---- report ------------------------------------------------------------------------------

double interface_velocity_error(const EvalResult& r) {
  return 0.5 * (r.metric(Domain::Interface, Field::U) + r.metric(Domain::Interface, Field::V));
}

namespace {

using RunIndex = std::map<std::string, std::map<std::uint64_t, const RunSummary*>>;

// Pairwise comparison over the seeds both models share: `better` wins when
// its score is strictly lower.
struct PairOutcome {
  int wins = 0, seeds = 0;
};

PairOutcome compare(const RunIndex& idx, const std::string& better, const std::string& worse,
                    const std::function<double(const RunSummary&)>& score) {
  PairOutcome o;
  const auto b = idx.find(better), w = idx.find(worse);
  if (b == idx.end() || w == idx.end()) return o;
  for (const auto& [seed, run] : b->second) {
    const auto other = w->second.find(seed);
    if (other == w->second.end()) continue;
    ++o.seeds;
    if (score(*run) < score(*other->second)) ++o.wins;
  }
  return o;
}

Verdict pair_verdict(const std::string& name, const RunIndex& idx,
                     const std::vector<std::pair<std::string, std::string>>& pairs,
                     const std::function<double(const RunSummary&)>& score) {
  Verdict v;
  v.name = name;
  v.pass = true;
  std::ostringstream detail;
  for (const auto& [better, worse] : pairs) {
    const PairOutcome o = compare(idx, better, worse, score);
    if (o.seeds == 0) continue;
    v.evaluated = true;
    if (!(2 * o.wins > o.seeds)) v.pass = false;
    if (!detail.str().empty()) detail << "; ";
    detail << better << '<' << worse << ' ' << o.wins << '/' << o.seeds;
  }
  if (!v.evaluated) {
    v.pass = false;
    detail << "no comparable model pairs";
  }
  v.detail = detail.str();
  return v;
}

double median(std::vector<double> v) {
  std::sort(v.begin(), v.end());
  const std::size_t n = v.size();
  return n % 2 ? v[n / 2] : 0.5 * (v[n / 2 - 1] + v[n / 2]);
}

}  // namespace

std::vector<Verdict> ordering_verdicts(const std::vector<RunSummary>& runs) {
  RunIndex idx;
  for (const auto& r : runs) idx[r.model_id][r.seed] = &r;

  std::vector<Verdict> out;
  out.push_back(pair_verdict("EL<Single", idx, {{"M3", "M1"}, {"M4", "M2"}},
                             [](const RunSummary& r) { return interface_velocity_error(r.result); }));
  out.push_back(pair_verdict("BSpline<Tanh", idx, {{"M2", "M1"}, {"M4", "M3"}},
                             [](const RunSummary& r) { return r.final_total; }));

  Verdict pv;
  pv.name = "Pressure>Velocity";
  pv.pass = !idx.empty();
  pv.evaluated = !idx.empty();
  std::ostringstream detail;
  for (const auto& [model, seeds] : idx) {
    bool ok = true;
    for (Domain d : kDomains) {
      std::array<std::vector<double>, 3> cells;
      for (const auto& [seed, run] : seeds)
        for (Field f : kFields) cells[static_cast<std::size_t>(f)].push_back(run->result.metric(d, f));
      const double u = median(cells[0]), v = median(cells[1]), p = median(cells[2]);
      if (!(p > u && p > v)) ok = false;
    }
    if (!ok) pv.pass = false;
    if (!detail.str().empty()) detail << "; ";
    detail << model << (ok ? " ok" : " violated");
  }
  pv.detail = pv.evaluated ? detail.str() : "no runs";
  out.push_back(pv);
  return out;
}

void write_comparison_csv(const std::vector<RunSummary>& runs, std::ostream& os) {
  os << "model,seed,final_total";
  for (Domain d : kDomains)
    for (Field f : kFields) os << ',' << to_string(d) << '_' << to_string(f);
  os << '\n';
  for (const auto& r : runs) {
    os << r.model_id << ',' << r.seed << ',' << format_double(r.final_total);
    for (Domain d : kDomains)
      for (Field f : kFields) os << ',' << format_double(r.result.metric(d, f));
    os << '\n';
  }
}

void write_verdicts(const std::vector<Verdict>& verdicts, std::ostream& os) {
  for (const auto& v : verdicts) os << v.name << ": " << (v.pass ? "pass" : "fail") << " (" << v.detail << ")\n";
}

}  // namespace fsipinn::eval
