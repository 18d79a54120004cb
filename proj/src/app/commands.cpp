#include "epilna/commands.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdio>
#include <exception>
#include <fstream>
#include <limits>
#include <mutex>
#include <sstream>
#include <thread>

namespace epilna {

namespace {

std::string number(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

void write_labeled(const std::filesystem::path& path, const LabeledRows& rows) {
  std::filesystem::create_directories(path.parent_path());
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write '" + path.string() + "'");
  for (std::size_t i = 0; i < rows.columns.size(); ++i) out << (i ? "," : "") << rows.columns[i];
  out << "\n";
  for (std::size_t r = 0; r < rows.labels.size(); ++r) {
    out << rows.labels[r];
    for (double v : rows.values[r]) out << "," << number(v);
    out << "\n";
  }
}

std::string slug(const std::string& label) {
  std::string out;
  for (char ch : label) {
    if (std::isalnum(static_cast<unsigned char>(ch)))
      out += static_cast<char>(std::tolower(static_cast<unsigned char>(ch)));
    else if (!out.empty() && out.back() != '-')
      out += '-';
  }
  while (!out.empty() && out.back() == '-') out.pop_back();
  return out.empty() ? "run" : out;
}

void write_manifest(const ExperimentConfig& config, const std::filesystem::path& out_dir) {
  write_text(out_dir / "manifest.cfg", render_experiment(config));
}

}  // namespace

SimulatedData simulate_experiment(const ExperimentConfig& config) {
  if (!config.simulation) throw ConfigError("config has no [simulate] block");
  const CompartmentModel model = config.model();
  SimulatedData out;
  out.path = simulate_mjp(model, config.params, config.simulation->t_end, config.simulation->interval,
                          config.seed, SimulateOptions{false});
  const std::vector<double> y = corrupt(out.path.grid_incidence, config.params.obs, config.seed);
  for (std::size_t k = 0; k < y.size(); ++k) {
    out.data.t.push_back(config.simulation->interval * static_cast<double>(k + 1));
    out.data.y.push_back(y[k]);
  }
  return out;
}

Series experiment_data(const ExperimentConfig& config) {
  if (config.simulation) return simulate_experiment(config).data;
  if (!config.data_path) throw ConfigError("config needs a [data] or [simulate] block");
  return read_series(*config.data_path, config.data_interval);
}

FitReport fit_experiment(const ExperimentConfig& config) {
  if (config.priors.empty()) throw ConfigError("config has no [prior] entries, nothing to fit");
  const CompartmentModel model = config.model();
  const ParameterSpace space = config.space();
  const Series data = experiment_data(config);
  const double dt = config.interval();

  FitReport report;
  report.label = config.label;
  report.chain = run_chain(config.scheme, model, space, data.y, dt, config.settings);
  const ChainOutput& chain = report.chain;

  const int d = space.size();
  const int n = chain.iterations();
  report.names = space.names();
  report.names.push_back("r0");
  report.natural.resize(n, d + 1);
  for (int i = 0; i < n; ++i) {
    const Params p = space.inverse_transform(chain.draws.row(i).transpose());
    for (int j = 0; j < d; ++j) report.natural(i, j) = get_param(p, space.free()[j].id);
    report.natural(i, d) = r0(p, model);
  }

  report.min_ess = std::numeric_limits<double>::infinity();
  for (int j = 0; j <= d; ++j) {
    ParameterSummary s;
    s.name = report.names[j];
    std::vector<double> col(report.natural.col(j).data(), report.natural.col(j).data() + n);
    const Summary m = summarise(col);
    s.mean = m.mean;
    s.sd = m.sd;
    s.ess = n >= 10 ? ess(col).ess : std::nan("");
    s.ess_per_second = chain.seconds > 0 ? s.ess / chain.seconds : std::nan("");
    if (j < d) report.min_ess = std::min(report.min_ess, s.ess);
    report.summary.push_back(s);
  }
  if (n < 10) report.min_ess = std::nan("");
  report.mess_per_second = chain.seconds > 0 ? report.min_ess / chain.seconds : std::nan("");

  if (n > 0) {
    Rng rng = make_stream(config.seed, "dic");
    const LogLikFn loglik = make_loglik(config.scheme, model, space, data.y, dt, config.settings, rng);
    report.dic = dic(chain, loglik);
  } else {
    report.dic = {std::nan(""), std::nan(""), std::nan(""), std::nan("")};
  }
  return report;
}

void write_simulation(const ExperimentConfig& config, const SimulatedData& sim,
                      const std::filesystem::path& out_dir) {
  write_series(out_dir / "data.csv", sim.data);
  const CompartmentModel model = config.model();
  const Eigen::MatrixXd prev = sim.path.prevalence(model, config.params.x0);
  Table truth;
  truth.columns = {"t", "s", "i"};
  for (const auto& e : model.event_names) truth.columns.push_back("n_" + e);
  for (Eigen::Index k = 0; k < sim.path.grid_cumulative.rows(); ++k) {
    std::vector<double> row{sim.path.grid * static_cast<double>(k), prev(k, 0), prev(k, 1)};
    for (Eigen::Index e = 0; e < sim.path.grid_cumulative.cols(); ++e)
      row.push_back(sim.path.grid_cumulative(k, e));
    truth.rows.push_back(std::move(row));
  }
  write_table(out_dir / "truth.csv", truth);
}

void write_fit(const ExperimentConfig& config, const FitReport& report,
               const std::filesystem::path& out_dir) {
  const ChainOutput& chain = report.chain;
  const int n = chain.iterations();
  const int cols = static_cast<int>(report.names.size());

  Table draws;
  draws.columns.push_back("iteration");
  for (const auto& name : report.names) draws.columns.push_back(name);
  draws.columns.push_back("loglik");
  draws.columns.push_back("accepted");
  for (int i = 0; i < n; ++i) {
    std::vector<double> row{static_cast<double>(i)};
    for (int j = 0; j < cols; ++j) row.push_back(report.natural(i, j));
    row.push_back(chain.loglik[i]);
    row.push_back(chain.accepted[i]);
    draws.rows.push_back(std::move(row));
  }
  write_table(out_dir / "draws.csv", draws);

  LabeledRows summary;
  summary.columns = {"parameter", "mean", "sd", "ess", "ess_per_second"};
  for (const auto& s : report.summary) {
    summary.labels.push_back(s.name);
    summary.values.push_back({s.mean, s.sd, s.ess, s.ess_per_second});
  }
  write_labeled(out_dir / "summary.csv", summary);

  Table stats;
  stats.columns = {"iterations", "acceptance_rate", "seconds",  "pilot_seconds", "min_ess",
                   "mess_per_second", "dic", "p_d", "mean_loglik", "loglik_at_mean", "scale"};
  stats.rows.push_back({static_cast<double>(n), chain.acceptance_rate(), chain.seconds,
                        chain.pilot_seconds, report.min_ess, report.mess_per_second, report.dic.dic,
                        report.dic.p_d, report.dic.mean_loglik, report.dic.loglik_at_mean, chain.scale});
  write_table(out_dir / "stats.csv", stats);

  if (!chain.warnings.empty()) {
    std::string text;
    for (const auto& w : chain.warnings) text += w + "\n";
    write_text(out_dir / "warnings.txt", text);
  }

  if (!chain.paths.empty()) {
    const CompartmentModel model = config.model();
    const ParameterSpace space = config.space();
    const int thin = std::max(1, config.settings.path_thin);
    const Eigen::Index rows = chain.paths.front().rows();
    std::vector<std::string> quantities{"s", "i"};
    if (model.tv_beta) {
      quantities.push_back("log_beta");
      quantities.push_back("r0");
    }
    Table bands;
    bands.columns.push_back("t");
    for (const auto& q : quantities) {
      bands.columns.push_back(q + "_mean");
      bands.columns.push_back(q + "_lo");
      bands.columns.push_back(q + "_hi");
    }
    for (Eigen::Index t = 0; t < rows; ++t) {
      std::vector<std::vector<double>> samples(quantities.size());
      for (std::size_t p = 0; p < chain.paths.size(); ++p) {
        const Vec nt = chain.paths[p].row(t).transpose();
        const Vec x = incidence_to_prevalence(model, nt, config.params.x0);
        samples[0].push_back(x[0]);
        samples[1].push_back(x[1]);
        if (model.tv_beta) {
          const double lb = nt[model.log_beta_index()];
          const Params theta =
              space.inverse_transform(chain.draws.row(static_cast<Eigen::Index>(p) * thin).transpose());
          samples[2].push_back(lb);
          samples[3].push_back(r0(theta, model, lb));
        }
      }
      std::vector<double> row{config.interval() * static_cast<double>(t)};
      for (const auto& s : samples) {
        row.push_back(summarise(s).mean);
        row.push_back(quantile(s, 0.025));
        row.push_back(quantile(s, 0.975));
      }
      bands.rows.push_back(std::move(row));
    }
    write_table(out_dir / "predictive.csv", bands);
  }
}

void cmd_simulate(const ExperimentConfig& config, const std::filesystem::path& out_dir) {
  write_manifest(config, out_dir);
  write_simulation(config, simulate_experiment(config), out_dir);
}

FitReport cmd_fit(const ExperimentConfig& config, const std::filesystem::path& out_dir) {
  write_manifest(config, out_dir);
  if (config.simulation) write_simulation(config, simulate_experiment(config), out_dir);
  FitReport report = fit_experiment(config);
  write_fit(config, report, out_dir);
  return report;
}

std::vector<CompareRow> cmd_compare(const std::vector<ExperimentConfig>& configs,
                                    const std::filesystem::path& out_dir, int threads) {
  if (configs.empty()) throw ConfigError("compare needs at least one config");
  const std::size_t m = configs.size();
  std::vector<std::optional<DicResult>> results(m);
  std::exception_ptr first_error;
  std::mutex mutex;
  std::atomic<std::size_t> next{0};
  std::atomic<bool> failed{false};

  auto worker = [&] {
    for (;;) {
      const std::size_t i = next++;
      if (i >= m || failed) return;
      try {
        char prefix[8];
        std::snprintf(prefix, sizeof prefix, "%02zu-", i + 1);
        const FitReport r = cmd_fit(configs[i], out_dir / (prefix + slug(configs[i].label)));
        results[i] = r.dic;
      } catch (...) {
        std::lock_guard<std::mutex> lock(mutex);
        if (!first_error) first_error = std::current_exception();
        failed = true;
      }
    }
  };
  const int n_threads = std::max(1, std::min<int>(threads, static_cast<int>(m)));
  if (n_threads == 1) {
    worker();
  } else {
    std::vector<std::thread> pool;
    for (int k = 0; k < n_threads; ++k) pool.emplace_back(worker);
    for (auto& th : pool) th.join();
  }

  std::vector<CompareRow> rows;
  for (std::size_t i = 0; i < m; ++i)
    if (results[i]) rows.push_back({configs[i].label, *results[i]});

  std::size_t best = 0;
  for (std::size_t i = 1; i < rows.size(); ++i)
    if (rows[i].dic.dic < rows[best].dic.dic) best = i;
  LabeledRows table;
  table.columns = {"model", "dic", "p_d", "mean_loglik", "loglik_at_mean", "preferred"};
  for (std::size_t i = 0; i < rows.size(); ++i) {
    table.labels.push_back(rows[i].label);
    const DicResult& d = rows[i].dic;
    table.values.push_back({d.dic, d.p_d, d.mean_loglik, d.loglik_at_mean, i == best ? 1.0 : 0.0});
  }
  write_labeled(out_dir / "dic.csv", table);
  if (first_error) std::rethrow_exception(first_error);
  return rows;
}

std::vector<PfVarianceRow> cmd_pf_variance(const ExperimentConfig& config,
                                           const std::filesystem::path& out_dir) {
  write_manifest(config, out_dir);
  const CompartmentModel model = config.model();
  const Series data = experiment_data(config);
  std::vector<int> counts = config.pf_variance_particles;
  if (counts.empty()) counts.push_back(config.settings.particles > 0 ? config.settings.particles : 15);
  const double rho = config.scheme == Scheme::cpmmh ? config.settings.rho : 0.99;

  std::vector<PfVarianceRow> rows;
  Table table;
  table.columns = {"particles", "mean_loglik", "var_independent", "var_correlated_diff", "degenerate"};
  for (int n : counts) {
    if (n < 1) throw ConfigError("pf_variance.particles entries must be positive");
    PfVarianceRow row;
    row.particles = n;
    row.stats = loglik_variance(model, config.params, data.y, config.interval(), n, rho,
                                config.pf_variance_replicates, config.seed, config.settings.propagation,
                                config.settings.ode_steps);
    table.rows.push_back({static_cast<double>(n), row.stats.mean, row.stats.var_independent,
                          row.stats.var_correlated_diff, static_cast<double>(row.stats.degenerate)});
    rows.push_back(row);
  }
  write_table(out_dir / "pf_variance.csv", table);
  return rows;
}

LabeledRows read_labeled(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open '" + path.string() + "'");
  LabeledRows rows;
  std::string line;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    std::stringstream ss(line);
    std::string cell;
    std::vector<std::string> cells;
    while (std::getline(ss, cell, ',')) cells.push_back(cell);
    if (rows.columns.empty()) {
      rows.columns = cells;
      continue;
    }
    rows.labels.push_back(cells.at(0));
    std::vector<double> values;
    for (std::size_t i = 1; i < cells.size(); ++i) values.push_back(std::stod(cells[i]));
    rows.values.push_back(std::move(values));
  }
  return rows;
}

}  // namespace epilna
