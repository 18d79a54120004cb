#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "epilna/inference.hpp"
#include "epilna/models.hpp"

namespace epilna {

class ConfigError : public std::runtime_error {
 public:
  ConfigError(const std::string& what, int line = 0)
      : std::runtime_error(line > 0 ? "line " + std::to_string(line) + ": " + what : what),
        line_(line) {}
  int line() const { return line_; }

 private:
  int line_;
};

// Flat key/value document. `[section]` headers prefix the keys that follow
// with "section."; `#` starts a comment. Every entry remembers its line.
class ConfigDocument {
 public:
  struct Entry {
    std::string value;
    int line = 0;
  };

  static ConfigDocument parse(const std::string& text, const std::string& origin = "<string>");
  static ConfigDocument load(const std::filesystem::path& path);

  bool has(const std::string& key) const { return entries_.count(key) != 0; }
  const Entry& at(const std::string& key) const;
  int line(const std::string& key) const { return has(key) ? entries_.at(key).line : 0; }

  std::string get_string(const std::string& key) const;
  std::string get_string(const std::string& key, const std::string& fallback) const;
  double get_double(const std::string& key) const;
  double get_double(const std::string& key, double fallback) const;
  long long get_int(const std::string& key) const;
  long long get_int(const std::string& key, long long fallback) const;
  bool get_bool(const std::string& key, bool fallback) const;
  std::vector<double> get_doubles(const std::string& key) const;

  // Keys under "section." (without the prefix), in file order.
  std::vector<std::string> keys_in(const std::string& section) const;
  // Fails on the first key that was never read.
  void reject_unused() const;

  const std::string& origin() const { return origin_; }

 private:
  std::map<std::string, Entry> entries_;
  std::vector<std::string> order_;
  mutable std::map<std::string, bool> used_;
  std::string origin_;
};

struct SimulationBlock {
  double t_end = 0.0;
  double interval = 0.0;
};

// A fully resolved experiment.
struct ExperimentConfig {
  std::string label;
  std::string model_name;
  double npop = 0.0;
  std::string time_unit = "days";
  std::uint64_t seed = 1;

  Params params;  // truth for simulation, start values for free parameters, fixed values otherwise
  std::vector<FreeParameter> priors;

  std::optional<std::filesystem::path> data_path;
  double data_interval = 0.0;
  std::optional<SimulationBlock> simulation;

  Scheme scheme = Scheme::ffmh;
  ChainSettings settings;

  std::vector<int> pf_variance_particles;
  int pf_variance_replicates = 100;

  std::filesystem::path output_dir;  // empty: chosen by the caller
  std::filesystem::path source;

  CompartmentModel model() const { return make_model(model_name, npop); }
  ParameterSpace space() const { return ParameterSpace(params, priors); }
  // Observation interval used for inference.
  double interval() const { return simulation ? simulation->interval : data_interval; }
};

ExperimentConfig load_experiment(const std::filesystem::path& path);
ExperimentConfig parse_experiment(const ConfigDocument& doc, const std::filesystem::path& base_dir);

// Writes the resolved configuration in the same syntax, so it can be re-run.
std::string render_experiment(const ExperimentConfig& config);

// Directory holding the bundled presets (configs/) and data (data/).
std::filesystem::path bundled_root();
std::filesystem::path preset_path(const std::string& name);

}  // namespace epilna
