#include "epilna/config.hpp"

#include <cmath>
#include <fstream>
#include <iomanip>
#include <sstream>

namespace epilna {

namespace {

std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string::npos) return {};
  const auto e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

std::string fmt(double v) {
  std::ostringstream os;
  os << std::setprecision(17) << v;
  return os.str();
}

}  // namespace

ConfigDocument ConfigDocument::parse(const std::string& text, const std::string& origin) {
  ConfigDocument doc;
  doc.origin_ = origin;
  std::istringstream in(text);
  std::string raw;
  std::string section;
  int line_no = 0;
  while (std::getline(in, raw)) {
    ++line_no;
    const auto hash = raw.find('#');
    const std::string line = trim(hash == std::string::npos ? raw : raw.substr(0, hash));
    if (line.empty()) continue;
    if (line.front() == '[') {
      if (line.back() != ']') throw ConfigError("unterminated section header", line_no);
      section = trim(line.substr(1, line.size() - 2));
      if (section.empty()) throw ConfigError("empty section name", line_no);
      continue;
    }
    const auto eq = line.find('=');
    if (eq == std::string::npos) throw ConfigError("expected 'key = value'", line_no);
    const std::string key = trim(line.substr(0, eq));
    if (key.empty()) throw ConfigError("missing key before '='", line_no);
    const std::string full = section.empty() ? key : section + "." + key;
    if (doc.entries_.count(full)) throw ConfigError("duplicate key '" + full + "'", line_no);
    doc.entries_[full] = Entry{trim(line.substr(eq + 1)), line_no};
    doc.order_.push_back(full);
  }
  return doc;
}

ConfigDocument ConfigDocument::load(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open config file '" + path.string() + "'");
  std::stringstream ss;
  ss << in.rdbuf();
  return parse(ss.str(), path.string());
}

const ConfigDocument::Entry& ConfigDocument::at(const std::string& key) const {
  const auto it = entries_.find(key);
  if (it == entries_.end()) throw ConfigError("missing required key '" + key + "'");
  used_[key] = true;
  return it->second;
}

std::string ConfigDocument::get_string(const std::string& key) const { return at(key).value; }

std::string ConfigDocument::get_string(const std::string& key, const std::string& fallback) const {
  return has(key) ? get_string(key) : fallback;
}

double ConfigDocument::get_double(const std::string& key) const {
  const Entry& e = at(key);
  try {
    std::size_t used = 0;
    const double v = std::stod(e.value, &used);
    if (used != e.value.size()) throw std::invalid_argument(e.value);
    return v;
  } catch (const std::exception&) {
    throw ConfigError("'" + key + "' must be a number, got '" + e.value + "'", e.line);
  }
}

double ConfigDocument::get_double(const std::string& key, double fallback) const {
  return has(key) ? get_double(key) : fallback;
}

long long ConfigDocument::get_int(const std::string& key) const {
  const Entry& e = at(key);
  try {
    std::size_t used = 0;
    const long long v = std::stoll(e.value, &used);
    if (used != e.value.size()) throw std::invalid_argument(e.value);
    return v;
  } catch (const std::exception&) {
    throw ConfigError("'" + key + "' must be an integer, got '" + e.value + "'", e.line);
  }
}

long long ConfigDocument::get_int(const std::string& key, long long fallback) const {
  return has(key) ? get_int(key) : fallback;
}

bool ConfigDocument::get_bool(const std::string& key, bool fallback) const {
  if (!has(key)) return fallback;
  const Entry& e = at(key);
  if (e.value == "true" || e.value == "yes" || e.value == "1") return true;
  if (e.value == "false" || e.value == "no" || e.value == "0") return false;
  throw ConfigError("'" + key + "' must be true or false", e.line);
}

std::vector<double> ConfigDocument::get_doubles(const std::string& key) const {
  const Entry& e = at(key);
  std::vector<double> out;
  std::stringstream ss(e.value);
  std::string item;
  while (std::getline(ss, item, ',')) {
    item = trim(item);
    try {
      std::size_t used = 0;
      out.push_back(std::stod(item, &used));
      if (used != item.size()) throw std::invalid_argument(item);
    } catch (const std::exception&) {
      throw ConfigError("'" + key + "' must be a comma-separated list of numbers", e.line);
    }
  }
  return out;
}

std::vector<std::string> ConfigDocument::keys_in(const std::string& section) const {
  std::vector<std::string> out;
  const std::string prefix = section + ".";
  for (const auto& k : order_)
    if (k.rfind(prefix, 0) == 0) out.push_back(k.substr(prefix.size()));
  return out;
}

void ConfigDocument::reject_unused() const {
  for (const auto& k : order_)
    if (!used_.count(k)) throw ConfigError("unknown key '" + k + "'", entries_.at(k).line);
}

ExperimentConfig parse_experiment(const ConfigDocument& doc, const std::filesystem::path& base_dir) {
  ExperimentConfig c;
  auto wrap = [&](const std::string& key, auto&& fn) {
    try {
      return fn();
    } catch (const InvalidInput& e) {
      throw ConfigError(std::string(e.what()) + " ('" + key + "')", doc.line(key));
    }
  };

  c.model_name = doc.get_string("model");
  const std::vector<double> x0 = doc.get_doubles("x0");
  if (x0.size() != 2) throw ConfigError("x0 must list two values (s0, i0)", doc.line("x0"));
  if (x0[0] < 0 || x0[1] < 0) throw ConfigError("x0 entries must be nonnegative", doc.line("x0"));
  c.params.x0 = Vec(2);
  c.params.x0 << x0[0], x0[1];
  c.npop = doc.get_double("npop", x0[0] + x0[1]);
  if (x0[0] + x0[1] > c.npop) throw ConfigError("s0 + i0 exceeds npop", doc.line("x0"));
  wrap("model", [&] { return c.model(); });
  c.label = doc.get_string("label", c.model_name);
  c.time_unit = doc.get_string("time_unit", "days");
  c.seed = static_cast<std::uint64_t>(doc.get_int("seed", 1));
  c.params.log_beta0 = doc.get_double("log_beta0", 0.0);
  c.output_dir = doc.get_string("output", "");

  for (const std::string& name : doc.keys_in("params")) {
    const std::string key = "params." + name;
    const ParamId id = wrap(key, [&] { return parse_param_id(name); });
    set_param(c.params, id, doc.get_double(key));
  }

  c.params.obs.kind = wrap("obs.kind", [&] { return parse_obs_kind(doc.get_string("obs.kind")); });
  const std::string target = doc.get_string("obs.target", "infections");
  if (target == "infections")
    c.params.obs.target = 0;
  else if (target == "removals")
    c.params.obs.target = 1;
  else
    throw ConfigError("obs.target must be infections or removals", doc.line("obs.target"));
  if (doc.has("obs.lambda")) c.params.obs.lambda = doc.get_double("obs.lambda");
  if (doc.has("obs.sigma2")) c.params.obs.sigma2 = doc.get_double("obs.sigma2");
  if (doc.has("obs.phi")) c.params.obs.phi = doc.get_double("obs.phi");

  for (const std::string& name : doc.keys_in("prior")) {
    const std::string key = "prior." + name;
    const ParamId id = wrap(key, [&] { return parse_param_id(name); });
    const Prior prior = wrap(key, [&] { return Prior::parse(doc.get_string(key)); });
    c.priors.push_back({id, prior});
  }

  if (doc.has("data.path")) {
    std::filesystem::path p = doc.get_string("data.path");
    if (p.is_relative()) p = base_dir / p;
    if (!std::filesystem::exists(p))
      throw ConfigError("data file '" + p.string() + "' does not exist", doc.line("data.path"));
    c.data_path = std::filesystem::absolute(p).lexically_normal();
    c.data_interval = doc.get_double("data.interval", 1.0);
    if (!(c.data_interval > 0)) throw ConfigError("data.interval must be positive", doc.line("data.interval"));
  }
  if (doc.has("simulate.t_end") || doc.has("simulate.interval")) {
    SimulationBlock s;
    s.t_end = doc.get_double("simulate.t_end");
    s.interval = doc.get_double("simulate.interval");
    if (!(s.t_end > 0 && s.interval > 0))
      throw ConfigError("simulate.t_end and simulate.interval must be positive", doc.line("simulate.t_end"));
    const double ratio = s.t_end / s.interval;
    if (std::abs(ratio - std::round(ratio)) > 1e-9 * ratio)
      throw ConfigError("simulate.interval must divide simulate.t_end", doc.line("simulate.interval"));
    c.simulation = s;
  }
  if (c.data_path && c.simulation)
    throw ConfigError("give either [data] or [simulate], not both", doc.line("data.path"));

  c.scheme = wrap("scheme.name", [&] { return parse_scheme(doc.get_string("scheme.name", "ffmh")); });
  ChainSettings& s = c.settings;
  s.iterations = static_cast<int>(doc.get_int("scheme.iterations", 10000));
  if (s.iterations < 0) throw ConfigError("scheme.iterations must be nonnegative", doc.line("scheme.iterations"));
  s.pilot_fraction = doc.get_double("scheme.pilot_fraction", 0.1);
  if (!(s.pilot_fraction >= 0.0)) throw ConfigError("scheme.pilot_fraction must be nonnegative", doc.line("scheme.pilot_fraction"));
  const bool pm = c.scheme == Scheme::pmmh || c.scheme == Scheme::cpmmh;
  if (doc.has("scheme.particles")) {
    if (!pm) throw ConfigError("scheme.particles only applies to pmmh/cpmmh", doc.line("scheme.particles"));
    s.particles = static_cast<int>(doc.get_int("scheme.particles"));
    if (s.particles < 1) throw ConfigError("scheme.particles must be positive", doc.line("scheme.particles"));
  } else if (pm) {
    throw ConfigError("pseudo-marginal schemes need scheme.particles", doc.line("scheme.name"));
  }
  if (doc.has("scheme.rho")) {
    if (c.scheme != Scheme::cpmmh) throw ConfigError("scheme.rho only applies to cpmmh", doc.line("scheme.rho"));
    s.rho = doc.get_double("scheme.rho");
    if (!(s.rho >= 0 && s.rho <= 1)) throw ConfigError("scheme.rho must lie in [0,1]", doc.line("scheme.rho"));
  } else if (c.scheme == Scheme::cpmmh) {
    throw ConfigError("cpmmh needs scheme.rho", doc.line("scheme.name"));
  }
  const std::string prop = doc.get_string("scheme.propagation", "lna");
  if (prop == "lna")
    s.propagation = Propagation::lna;
  else if (prop == "mjp")
    s.propagation = Propagation::mjp;
  else
    throw ConfigError("scheme.propagation must be lna or mjp", doc.line("scheme.propagation"));
  s.ode_steps = static_cast<int>(doc.get_int("scheme.ode_steps", kDefaultOdeSteps));
  if (s.ode_steps < 1) throw ConfigError("scheme.ode_steps must be positive", doc.line("scheme.ode_steps"));
  if (doc.has("scheme.target_acceptance")) s.target_acceptance = doc.get_double("scheme.target_acceptance");
  s.initial_proposal_sd = doc.get_double("scheme.initial_proposal_sd", 0.1);
  s.log_beta_prior_var = doc.get_double("scheme.log_beta_prior_var", 0.0);
  s.sample_paths = doc.get_bool("scheme.paths", false);
  s.path_thin = static_cast<int>(doc.get_int("scheme.path_thin", 10));
  if (s.path_thin < 1) throw ConfigError("scheme.path_thin must be positive", doc.line("scheme.path_thin"));

  if (doc.has("pf_variance.particles")) {
    for (double v : doc.get_doubles("pf_variance.particles")) c.pf_variance_particles.push_back(static_cast<int>(v));
  }
  c.pf_variance_replicates = static_cast<int>(doc.get_int("pf_variance.replicates", 100));

  doc.reject_unused();

  // Cross-checks that need the whole document.
  wrap("obs.kind", [&] { c.params.obs.validate(); return 0; });
  const CompartmentModel model = c.model();
  if (c.params.obs.target >= model.n_events)
    throw ConfigError("observation target is not an event of this model", doc.line("obs.target"));
  for (const auto& f : c.priors) {
    const int line = doc.line("prior." + to_string(f.id));
    if (f.id == ParamId::beta && model.tv_beta)
      throw ConfigError("beta is latent in time-varying models; use log_beta0", line);
    if (f.id == ParamId::kappa && model.n_events < 3) throw ConfigError("kappa needs an SIRS model", line);
    if (f.id == ParamId::sigma_beta && !model.tv_beta) throw ConfigError("sigma_beta needs a time-varying model", line);
    if (f.id == ParamId::phi && c.params.obs.kind != ObsKind::negbinomial)
      throw ConfigError("phi needs a negbinomial observation model", line);
    if (f.id == ParamId::sigma2 && c.params.obs.kind != ObsKind::gaussian)
      throw ConfigError("sigma2 needs a gaussian observation model", line);
  }
  wrap("prior", [&] { ParameterSpace sp = c.space(); (void)sp; return 0; });
  c.settings.seed = c.seed;
  return c;
}

ExperimentConfig load_experiment(const std::filesystem::path& path) {
  const ConfigDocument doc = ConfigDocument::load(path);
  try {
    ExperimentConfig c = parse_experiment(doc, path.parent_path());
    c.source = path;
    return c;
  } catch (const ConfigError& e) {
    throw ConfigError(path.string() + ": " + e.what(), e.line());
  }
}

std::string render_experiment(const ExperimentConfig& c) {
  std::ostringstream os;
  os << "# resolved configuration\n";
  os << "label = " << c.label << "\n";
  os << "model = " << c.model_name << "\n";
  os << "npop = " << fmt(c.npop) << "\n";
  os << "x0 = " << fmt(c.params.x0[0]) << ", " << fmt(c.params.x0[1]) << "\n";
  os << "log_beta0 = " << fmt(c.params.log_beta0) << "\n";
  os << "time_unit = " << c.time_unit << "\n";
  os << "seed = " << c.seed << "\n";
  if (!c.output_dir.empty()) os << "output = " << c.output_dir.string() << "\n";
  os << "\n[params]\n";
  for (ParamId id : {ParamId::beta, ParamId::gamma, ParamId::kappa, ParamId::sigma_beta})
    os << to_string(id) << " = " << fmt(get_param(c.params, id)) << "\n";
  os << "\n[obs]\nkind = " << to_string(c.params.obs.kind) << "\n";
  os << "target = " << (c.params.obs.target == 0 ? "infections" : "removals") << "\n";
  os << "lambda = " << fmt(c.params.obs.lambda) << "\n";
  os << "sigma2 = " << fmt(c.params.obs.sigma2) << "\n";
  os << "phi = " << fmt(c.params.obs.phi) << "\n";
  if (!c.priors.empty()) {
    os << "\n[prior]\n";
    for (const auto& f : c.priors) os << to_string(f.id) << " = " << f.prior.describe() << "\n";
  }
  if (c.data_path) {
    os << "\n[data]\npath = " << c.data_path->string() << "\ninterval = " << fmt(c.data_interval) << "\n";
  }
  if (c.simulation) {
    os << "\n[simulate]\nt_end = " << fmt(c.simulation->t_end)
       << "\ninterval = " << fmt(c.simulation->interval) << "\n";
  }
  const ChainSettings& s = c.settings;
  os << "\n[scheme]\nname = " << to_string(c.scheme) << "\n";
  os << "iterations = " << s.iterations << "\n";
  os << "pilot_fraction = " << fmt(s.pilot_fraction) << "\n";
  if (c.scheme == Scheme::pmmh || c.scheme == Scheme::cpmmh) os << "particles = " << s.particles << "\n";
  if (c.scheme == Scheme::cpmmh) os << "rho = " << fmt(s.rho) << "\n";
  os << "propagation = " << (s.propagation == Propagation::lna ? "lna" : "mjp") << "\n";
  os << "ode_steps = " << s.ode_steps << "\n";
  if (s.target_acceptance) os << "target_acceptance = " << fmt(*s.target_acceptance) << "\n";
  os << "initial_proposal_sd = " << fmt(s.initial_proposal_sd) << "\n";
  os << "log_beta_prior_var = " << fmt(s.log_beta_prior_var) << "\n";
  os << "paths = " << (s.sample_paths ? "true" : "false") << "\n";
  os << "path_thin = " << s.path_thin << "\n";
  if (!c.pf_variance_particles.empty()) {
    os << "\n[pf_variance]\nparticles = ";
    for (std::size_t i = 0; i < c.pf_variance_particles.size(); ++i)
      os << (i ? ", " : "") << c.pf_variance_particles[i];
    os << "\nreplicates = " << c.pf_variance_replicates << "\n";
  }
  return os.str();
}

std::filesystem::path bundled_root() {
  if (const char* env = std::getenv("EPILNA_HOME")) return env;
#ifdef EPILNA_SOURCE_DIR
  return EPILNA_SOURCE_DIR;
#else
  return std::filesystem::current_path();
#endif
}

std::filesystem::path preset_path(const std::string& name) {
  return bundled_root() / "configs" / (name + ".cfg");
}

}  // namespace epilna
