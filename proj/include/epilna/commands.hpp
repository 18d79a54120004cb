#pragma once

#include <filesystem>
#include <string>
#include <vector>

#include "epilna/config.hpp"
#include "epilna/diagnostics.hpp"
#include "epilna/inference.hpp"
#include "epilna/io.hpp"
#include "epilna/simulate.hpp"

namespace epilna {

struct SimulatedData {
  EventPath path;
  Series data;
};

// Exact simulation plus observation noise, both seeded from config.seed.
SimulatedData simulate_experiment(const ExperimentConfig& config);

// The observations a fit conditions on: the data file or a fresh simulation.
Series experiment_data(const ExperimentConfig& config);

struct ParameterSummary {
  std::string name;
  double mean = 0.0;
  double sd = 0.0;
  double ess = 0.0;
  double ess_per_second = 0.0;
};

struct FitReport {
  std::string label;
  std::vector<std::string> names;   // free parameters, then "r0"
  Eigen::MatrixXd natural;          // iterations x names.size(), natural scale
  ChainOutput chain;
  std::vector<ParameterSummary> summary;
  DicResult dic;
  double min_ess = 0.0;
  double mess_per_second = 0.0;
};

// Runs the chain and derives summaries without touching the filesystem.
FitReport fit_experiment(const ExperimentConfig& config);

void write_simulation(const ExperimentConfig& config, const SimulatedData& sim,
                      const std::filesystem::path& out_dir);
void write_fit(const ExperimentConfig& config, const FitReport& report,
               const std::filesystem::path& out_dir);

void cmd_simulate(const ExperimentConfig& config, const std::filesystem::path& out_dir);
FitReport cmd_fit(const ExperimentConfig& config, const std::filesystem::path& out_dir);

struct CompareRow {
  std::string label;
  DicResult dic;
};

// Fits every member (up to `threads` at a time) into out_dir/<index>-<label>
// and writes dic.csv. If a member fails, rows for the members that finished
// are still written before the first error is rethrown.
std::vector<CompareRow> cmd_compare(const std::vector<ExperimentConfig>& configs,
                                    const std::filesystem::path& out_dir, int threads = 1);

struct PfVarianceRow {
  int particles = 0;
  LoglikVariance stats;
};
std::vector<PfVarianceRow> cmd_pf_variance(const ExperimentConfig& config,
                                           const std::filesystem::path& out_dir);

// Rows of summary.csv / dic.csv: a label column followed by numbers.
struct LabeledRows {
  std::vector<std::string> columns;
  std::vector<std::string> labels;
  std::vector<std::vector<double>> values;
};
LabeledRows read_labeled(const std::filesystem::path& path);

}  // namespace epilna
