#pragma once

// Command-line pipeline: generate | train | evaluate | report.

#include <filesystem>
#include <iosfwd>
#include <map>
#include <string>
#include <vector>

namespace fsipinn::cli {

enum ExitCode { kOk = 0, kConfigError = 2, kNumericalFailure = 3, kMissingInput = 4 };

/// Resolved key/value settings: built-in defaults, then the config file, then
/// command-line overrides.
class RunConfig {
 public:
  RunConfig();

  /// `key = value` lines; `#` starts a comment. Unknown keys are config errors.
  void load_file(const std::filesystem::path& file);
  void set(const std::string& key, const std::string& value);
  bool has_key(const std::string& key) const;
  /// True when the key was set by a file or an override.
  bool explicitly_set(const std::string& key) const;

  std::string str(const std::string& key) const;
  double num(const std::string& key) const;
  long integer(const std::string& key) const;
  bool flag(const std::string& key) const;
  std::vector<std::string> list(const std::string& key) const;
  std::vector<double> numbers(const std::string& key) const;

  std::filesystem::path out_dir() const;
  std::filesystem::path dataset_dir() const;

  /// Sorted `key = value` snapshot of every setting.
  void write_snapshot(std::ostream& os) const;

  static const std::vector<std::pair<std::string, std::string>>& defaults();

 private:
  std::map<std::string, std::string> values_;
  std::map<std::string, bool> explicit_;
};

/// Runs one command. argv[0] is the program name.
int run(int argc, const char* const* argv, std::ostream& out, std::ostream& err);
int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace fsipinn::cli
