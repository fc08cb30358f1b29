#include "cli.hpp"

#include <CLI11.hpp>

#include <algorithm>
#include <chrono>
#include <cmath>
#include <fstream>
#include <iostream>
#include <regex>
#include <set>
#include <sstream>

#include "fsipinn/eval_report.hpp"
#include "fsipinn/ibm_solver.hpp"
#include "fsipinn/pinn.hpp"
#include "fsipinn/sampling.hpp"

namespace fsipinn::cli {

namespace fs = std::filesystem;
using pinn::ConfigError;

namespace {

// A missing dataset or checkpoint.
class MissingInput : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string::npos) return "";
  const auto e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

std::string normalise_key(std::string k) {
  std::replace(k.begin(), k.end(), '-', '_');
  return k;
}

std::map<std::string, std::string> read_key_values(const fs::path& file) {
  std::ifstream in(file);
  if (!in) throw MissingInput("cannot read " + file.string());
  std::map<std::string, std::string> kv;
  std::string line;
  while (std::getline(in, line)) {
    const auto eq = line.find('=');
    if (eq == std::string::npos) continue;
    kv[trim(line.substr(0, eq))] = trim(line.substr(eq + 1));
  }
  return kv;
}

}  // namespace

// ---- RunConfig -----------------------------------------------------------------

const std::vector<std::pair<std::string, std::string>>& RunConfig::defaults() {
  static const std::vector<std::pair<std::string, std::string>> d{
      // layout
      {"out", "runs"},
      {"dataset", ""},  // empty: <out>/dataset
      // solver
      {"grid", "100"},
      {"t_end", "10"},
      {"dt", "0.01"},
      {"reynolds", "100"},
      {"lid_velocity", "1"},
      {"disc", "true"},
      {"markers", "120"},
      {"radius", "0.2"},
      {"center_x", "0.6"},
      {"center_y", "0.5"},
      {"kappa_p", "10000"},
      {"kappa_t", "1"},
      {"kappa_w", "0"},
      {"near_wall_kernel", "true"},
      {"solver_seed", "0"},
      // sampling
      {"fluid_fraction", "0.00005"},
      {"interface_fraction", "0.0005"},
      {"boundary_points", "2000"},
      {"initial_points", "2000"},
      // training
      {"models", "M1,M2,M3,M4"},
      {"seeds", "0"},
      {"desk_scale", "false"},
      {"iterations", ""},      // empty: model default
      {"widths", ""},          // empty: model default, e.g. 3,50,50,50,3
      {"bspline_widths", ""},  // overrides widths for BSpline models
      {"lr0", "0.001"},
      {"decay_step", "1000"},
      {"decay_rate", "0.99"},
      {"batch_size", "128"},
      {"log_every", "100"},
      {"grid_update_every", "1000"},
      {"weights_single", "0.1,2,4,0.1"},
      {"weights_el", "2,2,2,0.2,0.1,0.2"},
      {"evaluate_after_train", "true"},
      // evaluation
      {"profile_times", ""},  // empty: slices at a quarter, half and the end
      {"profile_y", "0.25,0.5,0.75"},
      {"emit_profiles", "true"},
  };
  return d;
}

RunConfig::RunConfig() {
  for (const auto& [k, v] : defaults()) {
    values_[k] = v;
    explicit_[k] = false;
  }
}

bool RunConfig::has_key(const std::string& key) const { return values_.count(normalise_key(key)) > 0; }

bool RunConfig::explicitly_set(const std::string& key) const { return explicit_.at(normalise_key(key)); }

void RunConfig::set(const std::string& key, const std::string& value) {
  const std::string k = normalise_key(key);
  if (!values_.count(k)) throw ConfigError("unknown config key '" + key + "'");
  values_[k] = trim(value);
  explicit_[k] = true;
}

void RunConfig::load_file(const fs::path& file) {
  std::ifstream in(file);
  if (!in) throw MissingInput("cannot read config file " + file.string());
  std::string line;
  int n = 0;
  while (std::getline(in, line)) {
    ++n;
    const auto hash = line.find('#');
    if (hash != std::string::npos) line.erase(hash);
    line = trim(line);
    if (line.empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos) {
      throw ConfigError(file.string() + ":" + std::to_string(n) + ": expected 'key = value'");
    }
    try {
      set(trim(line.substr(0, eq)), line.substr(eq + 1));
    } catch (const ConfigError& e) {
      throw ConfigError(file.string() + ":" + std::to_string(n) + ": " + e.what());
    }
  }
}

std::string RunConfig::str(const std::string& key) const {
  const auto it = values_.find(normalise_key(key));
  if (it == values_.end()) throw ConfigError("unknown config key '" + key + "'");
  return it->second;
}

double RunConfig::num(const std::string& key) const {
  const std::string s = str(key);
  try {
    std::size_t used = 0;
    const double v = std::stod(s, &used);
    if (used == s.size()) return v;
  } catch (const std::exception&) {
  }
  throw ConfigError(key + ": '" + s + "' is not a number");
}

long RunConfig::integer(const std::string& key) const {
  const std::string s = str(key);
  try {
    std::size_t used = 0;
    const long v = std::stol(s, &used);
    if (used == s.size()) return v;
  } catch (const std::exception&) {
  }
  throw ConfigError(key + ": '" + s + "' is not an integer");
}

bool RunConfig::flag(const std::string& key) const {
  const std::string s = str(key);
  if (s == "true" || s == "1" || s == "yes" || s == "on") return true;
  if (s == "false" || s == "0" || s == "no" || s == "off") return false;
  throw ConfigError(key + ": '" + s + "' is not a boolean");
}

std::vector<std::string> RunConfig::list(const std::string& key) const {
  std::vector<std::string> out;
  std::stringstream ss(str(key));
  std::string item;
  while (std::getline(ss, item, ',')) {
    item = trim(item);
    if (!item.empty()) out.push_back(item);
  }
  return out;
}

std::vector<double> RunConfig::numbers(const std::string& key) const {
  std::vector<double> out;
  for (const auto& s : list(key)) {
    try {
      std::size_t used = 0;
      out.push_back(std::stod(s, &used));
      if (used != s.size()) throw std::invalid_argument(s);
    } catch (const std::exception&) {
      throw ConfigError(key + ": '" + s + "' is not a number");
    }
  }
  return out;
}

fs::path RunConfig::out_dir() const { return str("out"); }

fs::path RunConfig::dataset_dir() const {
  const std::string d = str("dataset");
  return d.empty() ? out_dir() / "dataset" : fs::path(d);
}

void RunConfig::write_snapshot(std::ostream& os) const {
  for (const auto& [k, v] : values_) os << k << " = " << v << '\n';
}

// ---- commands --------------------------------------------------------------------

namespace {

struct Context {
  RunConfig config;
  bool force = false;
  std::ostream& out;
  std::ostream& err;
};

void write_file(const fs::path& file, const std::string& text) {
  if (file.has_parent_path()) fs::create_directories(file.parent_path());
  std::ofstream f(file, std::ios::binary);
  if (!f) throw std::runtime_error("cannot write " + file.string());
  f << text;
}

void write_snapshot(const Context& ctx, const fs::path& file) {
  std::ostringstream os;
  ctx.config.write_snapshot(os);
  write_file(file, os.str());
}

void refuse_existing(const Context& ctx, const std::vector<fs::path>& files) {
  if (ctx.force) return;
  for (const auto& f : files)
    if (fs::exists(f)) throw ConfigError(f.string() + " already exists; pass --force to overwrite");
}

ibm::SolverConfig solver_config(const RunConfig& c) {
  ibm::SolverConfig s;
  s.grid = static_cast<int>(c.integer("grid"));
  s.t_end = c.num("t_end");
  s.dt = c.num("dt");
  s.reynolds = c.num("reynolds");
  s.lid_velocity = c.num("lid_velocity");
  s.disc = c.flag("disc");
  s.markers = static_cast<int>(c.integer("markers"));
  s.radius = c.num("radius");
  s.center_x = c.num("center_x");
  s.center_y = c.num("center_y");
  s.kappa_p = c.num("kappa_p");
  s.kappa_t = c.num("kappa_t");
  s.kappa_w = c.num("kappa_w");
  s.near_wall_kernel = c.flag("near_wall_kernel");
  s.seed = static_cast<std::uint64_t>(c.integer("solver_seed"));
  return s;
}

FsiDataset load_dataset(const RunConfig& c) {
  const fs::path dir = c.dataset_dir();
  if (!fs::exists(dir / "metadata.txt")) {
    throw MissingInput("no dataset at " + dir.string() + " (run 'generate' first)");
  }
  return read_dataset(dir);
}

int cmd_generate(Context& ctx) {
  const ibm::SolverConfig sc = solver_config(ctx.config);
  sc.validate();
  const fs::path dir = ctx.config.dataset_dir();
  refuse_existing(ctx, {dir / "metadata.txt"});
  const auto start = std::chrono::steady_clock::now();
  ibm::RunSummary summary;
  FsiDataset data = ibm::run_simulation(sc, &summary);
  const double seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  ibm::write_solver_metadata(sc, summary, data);
  write_dataset(data, dir);

  const auto stats = eval::field_statistics(data);
  std::ostringstream s, h;
  eval::write_statistics_csv(stats, s);
  eval::write_histogram_csv(stats, h);
  write_file(dir / "statistics.csv", s.str());
  write_file(dir / "histogram.csv", h.str());
  write_snapshot(ctx, dir / "generate_config.txt");

  ctx.out << "dataset: " << dir.string() << " (" << data.slices() << " slices, " << data.eulerian_count()
          << " Eulerian and " << data.marker_count() << " marker records, " << seconds << " s)\n";
  ctx.out << "max divergence " << summary.max_divergence << ", substeps " << summary.total_substeps << '\n';
  ctx.out << "fluid std u " << stats[0].stddev << " v " << stats[1].stddev << " p " << stats[2].stddev << '\n';
  if (data.markers > 0) {
    const auto rot = ibm::analyse_rotation(data);
    ctx.out << "disc rotation " << std::abs(rot.cumulative_angle) / (2 * M_PI) << " turns about (" << rot.center_x
            << ", " << rot.center_y << "), max shape deviation " << rot.max_shape_deviation << '\n';
  }
  return kOk;
}

std::vector<int> parse_widths(const RunConfig& c, const std::string& key) {
  std::vector<int> w;
  for (double v : c.numbers(key)) {
    if (v != std::floor(v)) throw ConfigError(key + ": widths must be integers");
    w.push_back(static_cast<int>(v));
  }
  return w;
}

std::vector<std::uint64_t> parse_seeds(const RunConfig& c) {
  std::vector<std::uint64_t> seeds;
  for (const auto& s : c.list("seeds")) {
    if (s.empty() || s.find_first_not_of("0123456789") != std::string::npos) {
      throw ConfigError("seeds: '" + s + "' is not a nonnegative integer");
    }
    seeds.push_back(std::stoull(s));
  }
  if (seeds.empty()) throw ConfigError("seeds: empty list");
  return seeds;
}

std::vector<std::string> parse_models(const RunConfig& c) {
  auto models = c.list("models");
  if (models.empty()) throw ConfigError("models: empty list");
  for (const auto& m : models) pinn::model_config(m);  // validates the id
  return models;
}

pinn::ModelConfig resolve_model(const RunConfig& c, const std::string& id, std::uint64_t seed, double t_max) {
  pinn::ModelConfig mc = pinn::model_config(id);
  if (c.flag("desk_scale")) mc = pinn::desk_scale(mc);
  if (!c.str("iterations").empty()) mc.iterations = c.integer("iterations");
  if (!c.str("widths").empty()) mc.widths = parse_widths(c, "widths");
  if (mc.activation == nets::Activation::BSpline && !c.str("bspline_widths").empty()) {
    mc.widths = parse_widths(c, "bspline_widths");
  }
  mc.lr0 = c.num("lr0");
  mc.decay_step = c.integer("decay_step");
  mc.decay_rate = c.num("decay_rate");
  const long batch = c.integer("batch_size");
  if (batch <= 0) throw ConfigError("batch_size must be positive");
  mc.batch_size = static_cast<std::size_t>(batch);
  mc.log_every = c.integer("log_every");
  mc.grid_update_every = c.integer("grid_update_every");
  mc.loss_weights = c.numbers(mc.architecture == pinn::Architecture::SingleFSI ? "weights_single" : "weights_el");
  mc.seed = seed;
  mc.t_max = t_max > 0.0 ? t_max : 1.0;
  mc.validate();
  return mc;
}

sampling::TrainingConfig sampling_config(const RunConfig& c, std::uint64_t seed) {
  sampling::TrainingConfig tc;
  tc.fluid_fraction = c.num("fluid_fraction");
  tc.interface_fraction = c.num("interface_fraction");
  tc.boundary_points = c.integer("boundary_points");
  tc.initial_points = c.integer("initial_points");
  tc.seed = seed;
  return tc;
}

std::string run_name(const std::string& model, std::uint64_t seed) { return model + "_s" + std::to_string(seed); }

std::string metrics_text(const std::vector<eval::EvalResult>& results) {
  std::ostringstream os;
  eval::write_metrics_csv(results, os);
  return os.str();
}

int cmd_train(Context& ctx) {
  const RunConfig& c = ctx.config;
  const auto models = parse_models(c);
  const auto seeds = parse_seeds(c);
  const bool evaluate_after = c.flag("evaluate_after_train");
  const FsiDataset data = load_dataset(c);
  const double t_max = data.times.empty() ? 1.0 : data.times.back();

  // Resolve everything up front so a bad setting fails before any training.
  std::vector<pinn::ModelConfig> configs;
  std::vector<fs::path> targets;
  const fs::path dir = c.out_dir() / "models";
  for (auto seed : seeds)
    for (const auto& id : models) {
      configs.push_back(resolve_model(c, id, seed, t_max));
      targets.push_back(dir / (run_name(id, seed) + ".ckpt"));
      targets.push_back(dir / (run_name(id, seed) + "_log.csv"));
    }
  for (auto seed : seeds) sampling_config(c, seed);
  refuse_existing(ctx, targets);
  fs::create_directories(dir);
  write_snapshot(ctx, dir / "train_config.txt");

  int status = kOk;
  std::size_t k = 0;
  for (auto seed : seeds) {
    const auto set = sampling::build_training_set(data, sampling_config(c, seed));
    sampling::write_manifest(set, dir / ("training_set_s" + std::to_string(seed) + ".txt"));
    for (const auto& id : models) {
      const pinn::ModelConfig& mc = configs[k++];
      const std::string name = run_name(id, seed);
      pinn::Model model = pinn::create_model(mc);
      pinn::TrainOptions opt;
      opt.on_log = [&](const pinn::LogRow& row) {
        ctx.out << name << " iter " << row.iter << " lr " << row.lr << " loss " << row.total << '\n';
      };
      const auto start = std::chrono::steady_clock::now();
      const auto report = pinn::train(model, set, opt);
      const double seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();

      std::ostringstream log;
      pinn::write_log_csv(report, log);
      write_file(dir / (name + "_log.csv"), log.str());
      std::ostringstream summary;
      summary << "model = " << id << "\nseed = " << seed << "\niterations_run = " << report.iterations_run
              << "\ngrid_updates = " << report.grid_updates << "\ninitial_total = " << format_double(report.initial_total)
              << "\nfinal_total = " << format_double(report.final_total) << "\naborted = "
              << (report.aborted ? "true" : "false") << "\nerror = " << report.error
              << "\ndataset_checksum = " << std::hex << data.checksum() << std::dec << "\nwall_clock_seconds = " << seconds
              << '\n';
      write_file(dir / (name + "_train.txt"), summary.str());
      if (report.aborted) {
        ctx.err << "error: " << name << ": " << report.error << '\n';
        status = kNumericalFailure;
        continue;
      }
      pinn::save_model(model, dir / (name + ".ckpt"));
      ctx.out << name << ": loss " << report.initial_total << " -> " << report.final_total << " in " << seconds << " s\n";
      if (evaluate_after) {
        auto result = eval::evaluate(eval::model_predictor(model), data);
        result.checkpoint = (dir / (name + ".ckpt")).string();
        write_file(dir / (name + "_metrics.csv"), metrics_text({result}));
      }
    }
  }
  return status;
}

struct Checkpoint {
  std::string model;
  std::uint64_t seed;
  fs::path file;
};

std::vector<Checkpoint> find_checkpoints(const RunConfig& c) {
  const fs::path dir = c.out_dir() / "models";
  std::vector<Checkpoint> found;
  if (fs::is_directory(dir)) {
    const std::regex pattern(R"((M[1-4])_s([0-9]+)\.ckpt)");
    for (const auto& e : fs::directory_iterator(dir)) {
      std::smatch m;
      const std::string name = e.path().filename().string();
      if (std::regex_match(name, m, pattern)) found.push_back({m[1], std::stoull(m[2]), e.path()});
    }
  }
  if (found.empty()) throw MissingInput("no checkpoints found in " + dir.string() + " (run 'train' first)");
  std::sort(found.begin(), found.end(),
            [](const Checkpoint& a, const Checkpoint& b) { return std::tie(a.seed, a.model) < std::tie(b.seed, b.model); });
  return found;
}

std::vector<double> profile_times(const RunConfig& c, const FsiDataset& data) {
  if (!c.str("profile_times").empty()) return c.numbers("profile_times");
  const std::size_t n = data.slices() - 1;
  std::set<std::size_t> idx{n / 4, n / 2, n};
  std::vector<double> t;
  for (auto i : idx) t.push_back(data.times[i]);
  return t;
}

// Evaluates every checkpoint into `dir`: metrics_s{seed}.csv per seed and, if
// enabled, profile and contour tables under profiles/s{seed}.
std::vector<eval::RunSummary> evaluate_all(Context& ctx, const fs::path& dir, bool need_summary) {
  const RunConfig& c = ctx.config;
  const auto checkpoints = find_checkpoints(c);
  const FsiDataset data = load_dataset(c);
  std::set<std::uint64_t> seeds;
  for (const auto& ck : checkpoints) seeds.insert(ck.seed);
  std::vector<fs::path> targets;
  for (auto s : seeds) targets.push_back(dir / ("metrics_s" + std::to_string(s) + ".csv"));
  refuse_existing(ctx, targets);
  const bool profiles = c.flag("emit_profiles");
  const auto times = profile_times(c, data);
  const auto ys = c.numbers("profile_y");
  fs::create_directories(dir);

  std::vector<eval::RunSummary> runs;
  for (auto seed : seeds) {
    std::vector<eval::EvalResult> results;
    for (const auto& ck : checkpoints) {
      if (ck.seed != seed) continue;
      const pinn::Model model = pinn::load_model(ck.file);
      if (model.config.model_id != ck.model) {
        throw ConfigError(ck.file.string() + " holds model " + model.config.model_id);
      }
      auto predictor = eval::model_predictor(model);
      auto result = eval::evaluate(predictor, data);
      result.checkpoint = ck.file.string();
      ctx.out << run_name(ck.model, seed) << ":";
      for (auto d : eval::kDomains)
        for (auto f : eval::kFields) ctx.out << ' ' << eval::to_string(d) << '_' << eval::to_string(f) << '=' << result.metric(d, f);
      ctx.out << '\n';
      if (profiles) eval::emit_profiles(predictor, data, times, ys, dir / "profiles" / ("s" + std::to_string(seed)));
      eval::RunSummary rs;
      rs.model_id = ck.model;
      rs.seed = seed;
      if (need_summary) {
        const fs::path summary = ck.file.parent_path() / (run_name(ck.model, seed) + "_train.txt");
        const auto kv = read_key_values(summary);
        const auto it = kv.find("final_total");
        if (it == kv.end()) throw MissingInput(summary.string() + " has no final_total");
        rs.final_total = parse_double(it->second);
      }
      rs.result = result;
      runs.push_back(rs);
      results.push_back(std::move(result));
    }
    write_file(dir / ("metrics_s" + std::to_string(seed) + ".csv"), metrics_text(results));
  }
  const auto stats = eval::field_statistics(data);
  std::ostringstream s;
  eval::write_statistics_csv(stats, s);
  write_file(dir / "statistics.csv", s.str());
  return runs;
}

int cmd_evaluate(Context& ctx) {
  const fs::path dir = ctx.config.out_dir() / "eval";
  evaluate_all(ctx, dir, false);
  write_snapshot(ctx, dir / "evaluate_config.txt");
  return kOk;
}

int cmd_report(Context& ctx) {
  const fs::path dir = ctx.config.out_dir() / "report";
  refuse_existing(ctx, {dir / "comparison.csv", dir / "verdicts.txt"});
  const auto runs = evaluate_all(ctx, dir, true);
  std::ostringstream cmp, verdicts;
  eval::write_comparison_csv(runs, cmp);
  eval::write_verdicts(eval::ordering_verdicts(runs), verdicts);
  write_file(dir / "comparison.csv", cmp.str());
  write_file(dir / "verdicts.txt", verdicts.str());
  write_snapshot(ctx, dir / "report_config.txt");
  ctx.out << verdicts.str();
  return kOk;
}

}  // namespace

// ---- entry point ---------------------------------------------------------------------

int run(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
  CLI::App app{"Immersed-boundary FSI data generation and physics-informed network training"};
  app.require_subcommand(1);
  app.set_help_all_flag("--help-all", "Show help for every command");

  struct Command {
    const char* name;
    const char* help;
    int (*fn)(Context&);
  };
  const Command commands[] = {
      {"generate", "Run the immersed-boundary solver and write the reference dataset", cmd_generate},
      {"train", "Train the selected models for every seed", cmd_train},
      {"evaluate", "Relative L2 errors, profiles and contours for every checkpoint", cmd_evaluate},
      {"report", "Evaluate, compare models across seeds and print the ordering verdicts", cmd_report},
  };

  std::string config_file;
  bool force = false, desk = false;
  std::map<std::string, std::string> overrides;
  std::map<std::string, CLI::Option*> options;
  std::map<std::string, CLI::App*> subs;
  for (const auto& cmd : commands) {
    CLI::App* sub = app.add_subcommand(cmd.name, cmd.help);
    subs[cmd.name] = sub;
    sub->add_option("--config", config_file, "key = value config file");
    sub->add_flag("--force", force, "Overwrite existing outputs");
    sub->add_flag("--desk-scale,--desk_scale", desk, "Widths [3,50,50,50,3] and 5000 iterations");
    for (const auto& [key, def] : RunConfig::defaults()) {
      if (key == "desk_scale") continue;
      std::string names = "--" + key;
      std::string dashed = key;
      std::replace(dashed.begin(), dashed.end(), '_', '-');
      if (dashed != key) names = "--" + dashed + "," + names;
      options[std::string(cmd.name) + "/" + key] =
          sub->add_option(names, overrides[std::string(cmd.name) + "/" + key], "default: " + (def.empty() ? "(auto)" : def))
              ->multi_option_policy(CLI::MultiOptionPolicy::TakeLast);
    }
  }

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e, out, err);
    return code == 0 ? kOk : kConfigError;
  }

  const Command* chosen = nullptr;
  for (const auto& cmd : commands)
    if (subs[cmd.name]->parsed()) chosen = &cmd;

  Context ctx{RunConfig{}, force, out, err};
  try {
    if (!config_file.empty()) ctx.config.load_file(config_file);
    for (const auto& [key, def] : RunConfig::defaults()) {
      const auto it = options.find(std::string(chosen->name) + "/" + key);
      if (it != options.end() && it->second->count() > 0) ctx.config.set(key, overrides[it->first]);
    }
    if (desk) ctx.config.set("desk_scale", "true");
    return chosen->fn(ctx);
  } catch (const MissingInput& e) {
    err << "error: " << e.what() << '\n';
    return kMissingInput;
  } catch (const DatasetError& e) {
    err << "error: " << e.what() << '\n';
    return kMissingInput;
  } catch (const ibm::NumericalError& e) {
    err << "error: " << e.what() << '\n';
    return kNumericalFailure;
  } catch (const pinn::TrainingError& e) {
    err << "error: " << e.what() << '\n';
    return kNumericalFailure;
  } catch (const ibm::SolverError& e) {
    err << "error: " << e.what() << '\n';
    return kConfigError;
  } catch (const std::invalid_argument& e) {
    err << "error: " << e.what() << '\n';
    return kConfigError;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << '\n';
    return 1;
  }
}

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  std::vector<const char*> argv{"fsipinn"};
  for (const auto& a : args) argv.push_back(a.c_str());
  return run(static_cast<int>(argv.size()), argv.data(), out, err);
}

}  // namespace fsipinn::cli
