#include <cstdio>
#include <filesystem>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "epilna/commands.hpp"

namespace fs = std::filesystem;
using namespace epilna;

namespace {

// A bare name such as "d1" refers to a bundled preset.
fs::path resolve_config(const std::string& arg) {
  fs::path p(arg);
  if (fs::exists(p)) return p;
  if (!p.has_parent_path() && p.extension().empty()) {
    const fs::path preset = preset_path(arg);
    if (fs::exists(preset)) return preset;
  }
  throw ConfigError("config file '" + arg + "' not found");
}

ExperimentConfig load(const std::string& arg, std::optional<std::uint64_t> seed) {
  ExperimentConfig c = load_experiment(resolve_config(arg));
  if (seed) {
    c.seed = *seed;
    c.settings.seed = *seed;
  }
  return c;
}

fs::path output_dir(const std::string& flag, const ExperimentConfig& c) {
  if (!flag.empty()) return flag;
  if (!c.output_dir.empty()) return c.output_dir;
  return fs::path("runs") / c.label;
}

void print_fit(const FitReport& r) {
  std::printf("%-12s %14s %14s %10s %10s\n", "parameter", "mean", "sd", "ess", "ess/s");
  for (const auto& s : r.summary)
    std::printf("%-12s %14.6g %14.6g %10.1f %10.2f\n", s.name.c_str(), s.mean, s.sd, s.ess,
                s.ess_per_second);
  std::printf("acceptance %.3f  seconds %.2f  min ESS %.1f  mESS/s %.2f  DIC %.2f  pD %.2f\n",
              r.chain.acceptance_rate(), r.chain.seconds, r.min_ess, r.mess_per_second, r.dic.dic,
              r.dic.p_d);
  for (const auto& w : r.chain.warnings) std::fprintf(stderr, "warning: %s\n", w.c_str());
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Bayesian inference for stochastic epidemic models from incidence counts"};
  app.require_subcommand(1);

  std::vector<std::string> configs;
  std::optional<std::uint64_t> seed;
  std::string out;
  int threads = 1;

  auto add_common = [&](CLI::App* sub, bool many) {
    if (many)
      sub->add_option("--config", configs, "config file or preset name (repeatable)")->required();
    else
      sub->add_option("--config", configs, "config file or preset name")->required()->expected(1);
    sub->add_option("--seed", seed, "override the config seed");
    sub->add_option("--out", out, "output directory");
  };

  CLI::App* simulate = app.add_subcommand("simulate", "simulate a data set from a config");
  add_common(simulate, false);
  CLI::App* fit = app.add_subcommand("fit", "run MCMC for a config");
  add_common(fit, false);
  CLI::App* compare = app.add_subcommand("compare", "fit several models and tabulate DIC");
  add_common(compare, true);
  compare->add_option("--threads", threads, "member fits to run at once")->check(CLI::PositiveNumber);
  CLI::App* pfvar = app.add_subcommand("pf-variance", "log-likelihood estimator variance by particle count");
  add_common(pfvar, false);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 2;
  }

  try {
    if (simulate->parsed()) {
      const ExperimentConfig c = load(configs.front(), seed);
      const fs::path dir = output_dir(out, c);
      cmd_simulate(c, dir);
      std::printf("wrote %s\n", (dir / "data.csv").string().c_str());
    } else if (fit->parsed()) {
      const ExperimentConfig c = load(configs.front(), seed);
      const fs::path dir = output_dir(out, c);
      print_fit(cmd_fit(c, dir));
      std::printf("wrote %s\n", dir.string().c_str());
    } else if (compare->parsed()) {
      std::vector<ExperimentConfig> cs;
      for (const auto& a : configs) cs.push_back(load(a, seed));
      const fs::path dir = out.empty() ? fs::path("runs") / "compare" : fs::path(out);
      const std::vector<CompareRow> rows = cmd_compare(cs, dir, threads);
      std::size_t best = 0;
      for (std::size_t i = 0; i < rows.size(); ++i) {
        std::printf("%-16s DIC %9.2f  pD %7.2f\n", rows[i].label.c_str(), rows[i].dic.dic, rows[i].dic.p_d);
        if (rows[i].dic.dic < rows[best].dic.dic) best = i;
      }
      std::printf("preferred: %s\n", rows[best].label.c_str());
    } else if (pfvar->parsed()) {
      const ExperimentConfig c = load(configs.front(), seed);
      const fs::path dir = output_dir(out, c);
      for (const auto& r : cmd_pf_variance(c, dir))
        std::printf("N=%-5d var(loglik) %.3f  var(diff, CN) %.3f  degenerate %d\n", r.particles,
                    r.stats.var_independent, r.stats.var_correlated_diff, r.stats.degenerate);
    }
  } catch (const ConfigError& e) {
    std::fprintf(stderr, "config error: %s\n", e.what());
    return 2;
  } catch (const InvalidInput& e) {
    std::fprintf(stderr, "invalid input: %s\n", e.what());
    return 2;
  } catch (const NumericalFailure& e) {
    std::fprintf(stderr, "numerical failure at t=%g: %s\n", e.time(), e.what());
    return 3;
  } catch (const std::exception& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 1;
  }
  return 0;
}
