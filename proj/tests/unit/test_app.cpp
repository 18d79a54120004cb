#include <doctest.h>

#include <sys/wait.h>

#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <regex>

#include "epilna/commands.hpp"

using namespace epilna;
namespace fs = std::filesystem;

namespace {

fs::path scratch(const std::string& name) {
  const fs::path p = fs::temp_directory_path() / ("epilna-test-" + name);
  fs::remove_all(p);
  fs::create_directories(p);
  return p;
}

std::string read_file(const fs::path& p) {
  std::ifstream in(p);
  return {std::istreambuf_iterator<char>(in), {}};
}

// A quick D1-style fit.
std::string quick_config(int iterations = 300) {
  std::string text = read_file(preset_path("d1"));
  text = std::regex_replace(text, std::regex("iterations = 10000"), "iterations = " + std::to_string(iterations));
  return text;
}

ExperimentConfig from_text(const std::string& text, const fs::path& dir = bundled_root() / "configs") {
  return parse_experiment(ConfigDocument::parse(text), dir);
}

int line_of(const std::string& text, const std::string& needle) {
  int line = 1;
  for (std::size_t i = 0; i < text.find(needle); ++i)
    if (text[i] == '\n') ++line;
  return line;
}

void expect_config_error(const std::string& text, int line, const std::string& fragment) {
  try {
    from_text(text);
    FAIL("expected a configuration error");
  } catch (const ConfigError& e) {
    CHECK(e.line() == line);
    CHECK(std::string(e.what()).find(fragment) != std::string::npos);
  }
}

int run_cli(const std::string& args) {
  const std::string cmd = std::string(EPILNA_CLI) + " " + args + " > /dev/null 2>&1";
  const int status = std::system(cmd.c_str());
  return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
}

}  // namespace

TEST_SUITE("app") {

TEST_CASE("configuration errors point at the offending line") {
  const std::string base = quick_config();

  const std::string unknown = std::regex_replace(base, std::regex("path_thin = 10"), "path_thin = 10\nwibble = 3");
  expect_config_error(unknown, line_of(unknown, "wibble"), "unknown key");

  const std::string particles =
      std::regex_replace(base, std::regex("name = ffmh"), "name = ffmh\nparticles = 100");
  expect_config_error(particles, line_of(particles, "particles"), "particles");

  const std::string rho = std::regex_replace(base, std::regex("name = ffmh"), "name = pmmh\nparticles = 10\nrho = 0.9");
  expect_config_error(rho, line_of(rho, "rho"), "rho");

  const std::string missing =
      std::regex_replace(base, std::regex("\\[simulate\\]\nt_end = 80\ninterval = 10\n"),
                         "[data]\npath = nowhere.csv\ninterval = 10\n");
  expect_config_error(missing, line_of(missing, "nowhere"), "nowhere.csv");

  const std::string dup = base + "\n[obs]\nlambda = 0.5\n";
  CHECK_THROWS_AS(from_text(dup), ConfigError);
  CHECK_THROWS_AS(ConfigDocument::parse("novalue\n"), ConfigError);
}

TEST_CASE("bundled synthetic presets") {
  struct Expect {
    const char* name;
    double s0, i0, beta, gamma, gamma_rate;
  };
  for (const Expect e : {Expect{"d1", 119, 1, 0.00091, 0.082, 100}, Expect{"d2", 359, 1, 0.00091, 0.246, 30},
                         Expect{"d3", 1180, 20, 0.00018, 0.164, 30}}) {
    const ExperimentConfig c = load_experiment(preset_path(e.name));
    CHECK(c.params.x0[0] == e.s0);
    CHECK(c.params.x0[1] == e.i0);
    CHECK(c.npop == e.s0 + e.i0);
    CHECK(c.params.beta == e.beta);
    CHECK(c.params.gamma == e.gamma);
    CHECK(c.params.obs.lambda == 0.8);
    REQUIRE(c.simulation);
    CHECK(c.simulation->t_end == 80);
    CHECK(c.simulation->interval == 10);
    REQUIRE(c.priors.size() == 3);
    CHECK(c.priors[0].prior.kind == Prior::Kind::gamma);
    CHECK(c.priors[0].prior.a == 10);
    CHECK(c.priors[0].prior.b == 1e4);
    CHECK(c.priors[1].prior.b == e.gamma_rate);
    CHECK(c.priors[2].prior.kind == Prior::Kind::uniform);
    CHECK(c.scheme == Scheme::ffmh);
    CHECK(c.settings.iterations == 10000);
    CHECK(simulate_experiment(c).data.y.size() == 8);
  }
  for (const char* name : {"opm-sir-bin", "opm-sir-negbin", "opm-sirs-bin", "opm-sirs-negbin"}) {
    const ExperimentConfig c = load_experiment(preset_path(name));
    CHECK(experiment_data(c).y.size() == 8);
    CHECK(c.model().tv_beta);
  }
}

TEST_CASE("a rendered manifest reproduces the fit bit for bit") {
  const ExperimentConfig c = from_text(quick_config());
  const FitReport a = fit_experiment(c);
  const fs::path dir = scratch("manifest");
  write_text(dir / "manifest.cfg", render_experiment(c));
  const ExperimentConfig again = load_experiment(dir / "manifest.cfg");
  const FitReport b = fit_experiment(again);
  CHECK(a.chain.draws == b.chain.draws);
  CHECK(a.chain.loglik == b.chain.loglik);
  CHECK(std::bit_cast<std::uint64_t>(a.dic.dic) == std::bit_cast<std::uint64_t>(b.dic.dic));
}

TEST_CASE("fit outputs are self-consistent") {
  const ExperimentConfig c = from_text(quick_config());
  const fs::path dir = scratch("fit");
  const FitReport r = cmd_fit(c, dir);
  for (const char* f : {"draws.csv", "summary.csv", "stats.csv", "predictive.csv", "manifest.cfg", "data.csv"})
    CHECK(fs::exists(dir / f));

  const LabeledRows summary = read_labeled(dir / "summary.csv");
  CHECK(summary.labels.size() == c.priors.size() + 1);
  CHECK(summary.labels.back() == "r0");

  // Summaries recomputed from draws.csv agree exactly with summary.csv.
  const Table draws = read_table(dir / "draws.csv");
  CHECK(draws.rows.size() == 300);
  for (std::size_t k = 0; k < summary.labels.size(); ++k) {
    const std::vector<double> col = draws.column_values(summary.labels[k]);
    const Summary s = summarise(col);
    CHECK(s.mean == summary.values[k][0]);
    CHECK(s.sd == summary.values[k][1]);
    CHECK(ess(col).ess == summary.values[k][2]);
  }
  CHECK(r.names.back() == "r0");
}

TEST_CASE("compare") {
  const ExperimentConfig c = from_text(quick_config(200));
  const fs::path one = scratch("compare-one");
  const auto rows = cmd_compare({c}, one);
  REQUIRE(rows.size() == 1);
  CHECK(fs::exists(one / "dic.csv"));
  CHECK(read_labeled(one / "dic.csv").labels.size() == 1);

  const fs::path two = scratch("compare-two");
  const auto pair = cmd_compare({c, c}, two, 2);
  REQUIRE(pair.size() == 2);
  CHECK(pair[0].dic.dic == pair[1].dic.dic);
  CHECK(pair[0].dic.dic == rows[0].dic.dic);
}

TEST_CASE("command line exit codes") {
  const fs::path dir = scratch("cli");
  write_text(dir / "bad.cfg", quick_config() + "\nbogus = 1\n");
  CHECK(run_cli("fit --config " + (dir / "bad.cfg").string() + " --out " + (dir / "o").string()) == 2);
  CHECK(run_cli("fit --config " + (dir / "missing.cfg").string()) == 2);
  write_text(dir / "ok.cfg", quick_config(100));
  CHECK(run_cli("simulate --config " + (dir / "ok.cfg").string() + " --out " + (dir / "sim").string()) == 0);
  CHECK(fs::exists(dir / "sim" / "data.csv"));
  CHECK(run_cli("fit --config " + (dir / "ok.cfg").string() + " --seed 5 --out " + (dir / "fit").string()) == 0);
  CHECK(read_file(dir / "fit" / "manifest.cfg").find("seed = 5") != std::string::npos);
}

}
