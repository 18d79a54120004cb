#include "epilna/inference.hpp"

#include <chrono>
#include <cmath>
#include <limits>
#include <numbers>
#include <sstream>

namespace epilna {

namespace {

constexpr double kNegInf = -std::numeric_limits<double>::infinity();

std::string trim(std::string_view s) {
  const auto b = s.find_first_not_of(" \t");
  if (b == std::string_view::npos) return {};
  const auto e = s.find_last_not_of(" \t");
  return std::string(s.substr(b, e - b + 1));
}

double logit(double p) { return std::log(p) - std::log1p(-p); }
double inv_logit(double x) { return 1.0 / (1.0 + std::exp(-x)); }

}  // namespace

ParamId parse_param_id(std::string_view name) {
  if (name == "beta") return ParamId::beta;
  if (name == "gamma") return ParamId::gamma;
  if (name == "kappa") return ParamId::kappa;
  if (name == "sigma_beta") return ParamId::sigma_beta;
  if (name == "lambda") return ParamId::lambda;
  if (name == "phi") return ParamId::phi;
  if (name == "sigma2") return ParamId::sigma2;
  throw InvalidInput("unknown parameter '" + std::string(name) + "'");
}

std::string to_string(ParamId id) {
  switch (id) {
    case ParamId::beta: return "beta";
    case ParamId::gamma: return "gamma";
    case ParamId::kappa: return "kappa";
    case ParamId::sigma_beta: return "sigma_beta";
    case ParamId::lambda: return "lambda";
    case ParamId::phi: return "phi";
    case ParamId::sigma2: return "sigma2";
  }
  return "?";
}

double get_param(const Params& p, ParamId id) {
  switch (id) {
    case ParamId::beta: return p.beta;
    case ParamId::gamma: return p.gamma;
    case ParamId::kappa: return p.kappa;
    case ParamId::sigma_beta: return p.sigma_beta;
    case ParamId::lambda: return p.obs.lambda;
    case ParamId::phi: return p.obs.phi;
    case ParamId::sigma2: return p.obs.sigma2;
  }
  return 0.0;
}

void set_param(Params& p, ParamId id, double v) {
  switch (id) {
    case ParamId::beta: p.beta = v; break;
    case ParamId::gamma: p.gamma = v; break;
    case ParamId::kappa: p.kappa = v; break;
    case ParamId::sigma_beta: p.sigma_beta = v; break;
    case ParamId::lambda: p.obs.lambda = v; break;
    case ParamId::phi: p.obs.phi = v; break;
    case ParamId::sigma2: p.obs.sigma2 = v; break;
  }
}

Prior Prior::parse(std::string_view text) {
  const std::string s = trim(text);
  const auto open = s.find('(');
  const auto close = s.rfind(')');
  if (open == std::string::npos || close == std::string::npos || close < open)
    throw InvalidInput("prior must look like name(a, b): '" + s + "'");
  const std::string name = trim(std::string_view(s).substr(0, open));
  const std::string args = s.substr(open + 1, close - open - 1);
  const auto comma = args.find(',');
  if (comma == std::string::npos) throw InvalidInput("prior needs two arguments: '" + s + "'");
  double a = 0.0;
  double b = 0.0;
  try {
    std::size_t used = 0;
    const std::string sa = trim(std::string_view(args).substr(0, comma));
    const std::string sb = trim(std::string_view(args).substr(comma + 1));
    a = std::stod(sa, &used);
    if (used != sa.size()) throw std::invalid_argument(sa);
    b = std::stod(sb, &used);
    if (used != sb.size()) throw std::invalid_argument(sb);
  } catch (const std::exception&) {
    throw InvalidInput("prior arguments must be numbers: '" + s + "'");
  }
  Prior p;
  if (name == "gamma") {
    p = gamma(a, b);
    if (!(a > 0 && b > 0)) throw InvalidInput("gamma prior needs positive shape and rate");
  } else if (name == "uniform") {
    p = uniform(a, b);
    if (!(b > a)) throw InvalidInput("uniform prior needs lower < upper");
  } else if (name == "lognormal") {
    p = lognormal(a, b);
    if (!(b > 0)) throw InvalidInput("lognormal prior needs a positive sd");
  } else {
    throw InvalidInput("unknown prior '" + name + "'");
  }
  return p;
}

double Prior::log_density(double x) const {
  switch (kind) {
    case Kind::gamma:
      if (!(x > 0.0)) return kNegInf;
      return a * std::log(b) - std::lgamma(a) + (a - 1.0) * std::log(x) - b * x;
    case Kind::uniform:
      if (!(x > this->a && x < this->b)) return kNegInf;
      return -std::log(this->b - this->a);
    case Kind::lognormal: {
      if (!(x > 0.0)) return kNegInf;
      const double z = (std::log(x) - a) / b;
      return -0.5 * z * z - std::log(b) - 0.5 * std::log(2.0 * std::numbers::pi) - std::log(x);
    }
  }
  return kNegInf;
}

std::string Prior::describe() const {
  std::ostringstream os;
  os.precision(17);
  switch (kind) {
    case Kind::gamma: os << "gamma(" << a << ", " << b << ")"; break;
    case Kind::uniform: os << "uniform(" << a << ", " << b << ")"; break;
    case Kind::lognormal: os << "lognormal(" << a << ", " << b << ")"; break;
  }
  return os.str();
}

ParameterSpace::ParameterSpace(Params base, std::vector<FreeParameter> free)
    : base_(std::move(base)), free_(std::move(free)) {
  for (std::size_t i = 0; i < free_.size(); ++i) {
    for (std::size_t j = 0; j < i; ++j)
      if (free_[i].id == free_[j].id)
        throw InvalidInput("parameter '" + to_string(free_[i].id) + "' has two priors");
    if (uses_logit(free_[i].id) && free_[i].prior.kind == Prior::Kind::uniform &&
        (free_[i].prior.a < 0.0 || free_[i].prior.b > 1.0))
      throw InvalidInput("lambda prior support must lie within (0,1)");
  }
}

std::vector<std::string> ParameterSpace::names() const {
  std::vector<std::string> out;
  for (const auto& f : free_) out.push_back(to_string(f.id));
  return out;
}

Eigen::VectorXd ParameterSpace::transform(const Params& params) const {
  Eigen::VectorXd x(size());
  for (int i = 0; i < size(); ++i) {
    const double v = get_param(params, free_[i].id);
    if (uses_logit(free_[i].id)) {
      if (!(v > 0.0 && v < 1.0)) throw InvalidInput(to_string(free_[i].id) + " must lie in (0,1)");
      x[i] = logit(v);
    } else {
      if (!(v > 0.0)) throw InvalidInput(to_string(free_[i].id) + " must be positive");
      x[i] = std::log(v);
    }
  }
  return x;
}

Params ParameterSpace::inverse_transform(const Eigen::VectorXd& x) const {
  if (x.size() != size()) throw InvalidInput("transformed vector has the wrong length");
  Params p = base_;
  for (int i = 0; i < size(); ++i)
    set_param(p, free_[i].id, uses_logit(free_[i].id) ? inv_logit(x[i]) : std::exp(x[i]));
  return p;
}

double ParameterSpace::log_prior(const Eigen::VectorXd& x) const {
  double lp = 0.0;
  for (int i = 0; i < size(); ++i) {
    if (!std::isfinite(x[i])) return kNegInf;
    if (uses_logit(free_[i].id)) {
      const double v = inv_logit(x[i]);
      // log lambda(1 - lambda) computed stably from x.
      const double log_jac = -std::log1p(std::exp(-x[i])) - std::log1p(std::exp(x[i]));
      lp += free_[i].prior.log_density(v) + log_jac;
    } else {
      lp += free_[i].prior.log_density(std::exp(x[i])) + x[i];
    }
  }
  return lp;
}

bool mh_kernel(ChainState& current, const Eigen::MatrixXd& proposal_chol, double scale,
               const ParameterSpace& space, const LogLikFn& loglik, Rng& rng) {
  std::normal_distribution<double> normal;
  Eigen::VectorXd xi(current.x.size());
  for (Eigen::Index i = 0; i < xi.size(); ++i) xi[i] = normal(rng);
  const Eigen::VectorXd proposal = current.x + scale * (proposal_chol * xi);
  const double log_u = std::log(std::uniform_real_distribution<double>(0.0, 1.0)(rng));

  const double lp = space.log_prior(proposal);
  if (!std::isfinite(lp)) return false;
  double ll = kNegInf;
  try {
    ll = loglik(proposal);
  } catch (const NumericalFailure&) {
    return false;
  } catch (const InvalidInput&) {
    return false;
  }
  if (!std::isfinite(ll)) return false;
  const double log_alpha = (lp + ll) - (current.log_prior + current.loglik);
  if (!(log_u < log_alpha)) return false;
  current.x = proposal;
  current.log_prior = lp;
  current.loglik = ll;
  return true;
}

AuxBlock cn_update(const AuxBlock& aux, double rho, Rng& rng) {
  if (!(rho >= 0.0 && rho <= 1.0)) throw InvalidInput("rho must lie in [0,1]");
  AuxBlock out = aux;
  if (rho == 1.0) return out;
  const double s = std::sqrt(1.0 - rho * rho);
  std::normal_distribution<double> normal;
  for (double& v : out.values()) v = rho * v + s * normal(rng);
  return out;
}

Scheme parse_scheme(std::string_view name) {
  if (name == "ffmh") return Scheme::ffmh;
  if (name == "ode_mh" || name == "ode-mh") return Scheme::ode_mh;
  if (name == "pmmh") return Scheme::pmmh;
  if (name == "cpmmh") return Scheme::cpmmh;
  throw InvalidInput("unknown scheme '" + std::string(name) + "'");
}

std::string to_string(Scheme scheme) {
  switch (scheme) {
    case Scheme::ffmh: return "ffmh";
    case Scheme::ode_mh: return "ode_mh";
    case Scheme::pmmh: return "pmmh";
    case Scheme::cpmmh: return "cpmmh";
  }
  return "?";
}

double default_target_acceptance(Scheme scheme) {
  switch (scheme) {
    case Scheme::ffmh:
    case Scheme::ode_mh: return 0.25;
    case Scheme::pmmh: return 0.10;
    case Scheme::cpmmh: return 0.15;
  }
  return 0.25;
}

double ChainOutput::acceptance_rate() const {
  if (accepted.empty()) return 0.0;
  double s = 0.0;
  for (auto a : accepted) s += a;
  return s / static_cast<double>(accepted.size());
}

namespace {

bool pseudo_marginal(Scheme s) { return s == Scheme::pmmh || s == Scheme::cpmmh; }

// Evaluates the scheme's likelihood at a transformed point, optionally keeping
// what is needed to draw a latent path at that point.
class Evaluator {
 public:
  Evaluator(Scheme scheme, const CompartmentModel& model, const ParameterSpace& space,
            std::span<const double> y, double dt, const ChainSettings& settings)
      : scheme_(scheme), model_(model), space_(space), y_(y), dt_(dt), settings_(settings) {}

  struct Result {
    double loglik = kNegInf;
    FilterArchive archive;
    ParticleHistory history;
  };

  Result operator()(const Eigen::VectorXd& x, const AuxBlock* aux, bool keep) const {
    const Params p = space_.inverse_transform(x);
    Result r;
    switch (scheme_) {
      case Scheme::ffmh: {
        FilterOptions fo;
        fo.ode_steps = settings_.ode_steps;
        fo.log_beta_prior_var = settings_.log_beta_prior_var;
        FilterResult f = forward_filter(model_, p, y_, dt_, fo);
        r.loglik = f.loglik;
        if (keep) r.archive = std::move(f.archive);
        break;
      }
      case Scheme::ode_mh:
        r.loglik = ode_loglik(model_, p, y_, dt_, settings_.ode_steps);
        break;
      case Scheme::pmmh:
      case Scheme::cpmmh: {
        PfOptions po;
        po.ode_steps = settings_.ode_steps;
        po.store_history = keep;
        PfResult pf = pf_loglik(model_, p, y_, dt_, *aux, settings_.particles,
                                settings_.propagation, po);
        r.loglik = pf.loglik;
        if (keep && !pf.degenerate) r.history = std::move(pf.history);
        break;
      }
    }
    return r;
  }

 private:
  Scheme scheme_;
  const CompartmentModel& model_;
  const ParameterSpace& space_;
  std::span<const double> y_;
  double dt_;
  const ChainSettings& settings_;
};

Eigen::MatrixXd sample_cov(const std::vector<Eigen::VectorXd>& xs) {
  const int d = static_cast<int>(xs.front().size());
  Eigen::VectorXd mean = Eigen::VectorXd::Zero(d);
  for (const auto& x : xs) mean += x;
  mean /= static_cast<double>(xs.size());
  Eigen::MatrixXd cov = Eigen::MatrixXd::Zero(d, d);
  for (const auto& x : xs) cov += (x - mean) * (x - mean).transpose();
  return cov / static_cast<double>(xs.size() - 1);
}

}  // namespace

LogLikFn make_loglik(Scheme scheme, const CompartmentModel& model, const ParameterSpace& space,
                     std::span<const double> y, double dt, const ChainSettings& settings, Rng& rng) {
  return [=, &model, &space, &settings, &rng](const Eigen::VectorXd& x) {
    Evaluator eval(scheme, model, space, y, dt, settings);
    if (!pseudo_marginal(scheme)) return eval(x, nullptr, false).loglik;
    const AuxBlock aux = AuxBlock::draw(static_cast<int>(y.size()), settings.particles,
                                        model.n_latent, rng);
    return eval(x, &aux, false).loglik;
  };
}

ChainOutput run_chain(Scheme scheme, const CompartmentModel& model, const ParameterSpace& space,
                      std::span<const double> y, double dt, const ChainSettings& settings) {
  const int d = space.size();
  if (d == 0) throw InvalidInput("no free parameters to sample");
  if (settings.iterations < 0) throw InvalidInput("iterations must be nonnegative");
  if (pseudo_marginal(scheme) && settings.particles < 1)
    throw InvalidInput("pseudo-marginal schemes need a positive particle count");
  if (scheme == Scheme::cpmmh && !(settings.rho >= 0.0 && settings.rho <= 1.0))
    throw InvalidInput("rho must lie in [0,1]");

  ChainOutput out;
  out.names = space.names();
  out.draws.resize(settings.iterations, d);
  if (settings.iterations == 0) {
    out.proposal_cov = Eigen::MatrixXd::Zero(d, d);
    return out;
  }

  Rng rng_pilot = make_stream(settings.seed, "pilot");
  Rng rng_chain = make_stream(settings.seed, "chain");
  Rng rng_aux = make_stream(settings.seed, "aux");
  Rng rng_paths = make_stream(settings.seed, "paths");
  const int T = static_cast<int>(y.size());
  const bool pm = pseudo_marginal(scheme);
  const bool keep = settings.sample_paths;
  const Evaluator evaluate(scheme, model, space, y, dt, settings);

  // Current and pending (proposed) latent-side state.
  AuxBlock aux;
  AuxBlock pending_aux;
  Evaluator::Result stored;
  Evaluator::Result pending;
  if (pm) aux = AuxBlock::draw(T, settings.particles, model.n_latent, rng_aux);

  ChainState state;
  state.x = settings.init ? *settings.init : space.transform(space.base());
  state.log_prior = space.log_prior(state.x);
  if (!std::isfinite(state.log_prior)) throw InvalidInput("initial parameters have zero prior density");
  stored = evaluate(state.x, pm ? &aux : nullptr, keep);
  state.loglik = stored.loglik;
  // Pseudo-marginal chains may start from a collapsed estimate; redraw a few times.
  for (int tries = 0; pm && !std::isfinite(state.loglik) && tries < 100; ++tries) {
    aux = AuxBlock::draw(T, settings.particles, model.n_latent, rng_aux);
    stored = evaluate(state.x, &aux, keep);
    state.loglik = stored.loglik;
  }
  if (!std::isfinite(state.loglik))
    throw NumericalFailure("log-likelihood is not finite at the initial parameters");

  const LogLikFn proposal_loglik = [&](const Eigen::VectorXd& x) {
    if (pm) {
      pending_aux = scheme == Scheme::pmmh
                        ? AuxBlock::draw(T, settings.particles, model.n_latent, rng_aux)
                        : cn_update(aux, settings.rho, rng_aux);
    }
    pending = evaluate(x, pm ? &pending_aux : nullptr, keep);
    return pending.loglik;
  };
  auto step = [&](const Eigen::MatrixXd& chol, double scale, Rng& rng) {
    const bool accepted = mh_kernel(state, chol, scale, space, proposal_loglik, rng);
    if (accepted) {
      if (pm) std::swap(aux, pending_aux);
      if (keep) std::swap(stored, pending);
    }
    return accepted;
  };

  const double target = settings.target_acceptance.value_or(default_target_acceptance(scheme));
  const int pilot = static_cast<int>(std::lround(settings.pilot_fraction * settings.iterations));
  Eigen::MatrixXd chol =
      Eigen::MatrixXd::Identity(d, d) * settings.initial_proposal_sd;
  Eigen::MatrixXd cov = chol * chol.transpose();
  double scale = 1.0;

  const auto pilot_start = std::chrono::steady_clock::now();
  if (pilot >= 4) {
    // Stage A: diagonal proposal with Robbins-Monro scale adaptation.
    const int stage_a = pilot / 2;
    std::vector<Eigen::VectorXd> draws_a;
    double log_scale = 0.0;
    for (int i = 0; i < stage_a; ++i) {
      const bool acc = step(chol, std::exp(log_scale), rng_pilot);
      log_scale += (static_cast<double>(acc) - target) / std::pow(i + 1.0, 0.6);
      if (i >= stage_a / 2) draws_a.push_back(state.x);
    }
    // Stage B: pilot covariance with the scale re-tuned from 2.38 / sqrt(d).
    bool have_cov = false;
    if (draws_a.size() > static_cast<std::size_t>(d) + 1) {
      Eigen::MatrixXd c = sample_cov(draws_a);
      Eigen::LLT<Eigen::MatrixXd> llt(c);
      if (llt.info() == Eigen::Success && c.diagonal().minCoeff() > 1e-14) {
        cov = c;
        have_cov = true;
      } else {
        Eigen::MatrixXd diag = Eigen::MatrixXd::Zero(d, d);
        bool ok = true;
        for (int j = 0; j < d; ++j) {
          diag(j, j) = c(j, j);
          ok = ok && c(j, j) > 1e-14;
        }
        out.warnings.push_back("pilot covariance is singular; using marginal variances");
        if (ok) {
          cov = diag;
          have_cov = true;
        } else {
          out.warnings.push_back("pilot marginal variance is zero; keeping the initial proposal");
        }
      }
    }
    if (have_cov) chol = Eigen::LLT<Eigen::MatrixXd>(cov).matrixL();
    log_scale = have_cov ? std::log(2.38 / std::sqrt(static_cast<double>(d))) : log_scale;
    const int stage_b = pilot - stage_a;
    for (int i = 0; i < stage_b; ++i) {
      const bool acc = step(chol, std::exp(log_scale), rng_pilot);
      log_scale += (static_cast<double>(acc) - target) / std::pow(i + 1.0, 0.6);
    }
    scale = std::exp(log_scale);
  }
  out.pilot_seconds =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - pilot_start).count();
  out.proposal_cov = cov;
  out.scale = scale;

  const auto start = std::chrono::steady_clock::now();
  out.loglik.reserve(settings.iterations);
  out.accepted.reserve(settings.iterations);
  std::uniform_real_distribution<double> unif(0.0, 1.0);
  std::normal_distribution<double> normal;
  const int thin = std::max(1, settings.path_thin);
  for (int i = 0; i < settings.iterations; ++i) {
    const bool acc = step(chol, scale, rng_chain);
    out.draws.row(i) = state.x.transpose();
    out.loglik.push_back(state.loglik);
    out.accepted.push_back(acc ? 1 : 0);
    if (keep && i % thin == 0) {
      if (pm) {
        out.paths.push_back(sample_path(stored.history, unif(rng_paths)));
      } else if (scheme == Scheme::ffmh) {
        Eigen::MatrixXd z(T + 1, model.n_latent);
        for (Eigen::Index r = 0; r < z.rows(); ++r)
          for (Eigen::Index c = 0; c < z.cols(); ++c) z(r, c) = normal(rng_paths);
        out.paths.push_back(backward_sample(stored.archive, z));
      }
    }
  }
  out.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  return out;
}

LoglikVariance loglik_variance(const CompartmentModel& model, const Params& params,
                               std::span<const double> y, double dt, int particles, double rho,
                               int replicates, std::uint64_t seed, Propagation propagation,
                               int ode_steps) {
  if (replicates < 2) throw InvalidInput("need at least two replicates");
  Rng rng = make_stream(seed, "pf-variance");
  const int T = static_cast<int>(y.size());
  PfOptions po;
  po.ode_steps = ode_steps;
  po.store_history = false;

  auto estimate = [&](const AuxBlock& aux) {
    return pf_loglik(model, params, y, dt, aux, particles, propagation, po).loglik;
  };
  auto variance = [](const std::vector<double>& v) {
    if (v.size() < 2) return std::numeric_limits<double>::quiet_NaN();
    double m = 0.0;
    for (double x : v) m += x;
    m /= static_cast<double>(v.size());
    double s = 0.0;
    for (double x : v) s += (x - m) * (x - m);
    return s / static_cast<double>(v.size() - 1);
  };

  LoglikVariance out;
  std::vector<double> indep;
  for (int r = 0; r < replicates; ++r) {
    const double ll = estimate(AuxBlock::draw(T, particles, model.n_latent, rng));
    if (std::isfinite(ll))
      indep.push_back(ll);
    else
      ++out.degenerate;
  }
  for (double v : indep) out.mean += v;
  if (!indep.empty()) out.mean /= static_cast<double>(indep.size());
  out.var_independent = variance(indep);

  std::vector<double> diffs;
  AuxBlock aux = AuxBlock::draw(T, particles, model.n_latent, rng);
  double prev = estimate(aux);
  for (int r = 0; r < replicates; ++r) {
    aux = cn_update(aux, rho, rng);
    const double next = estimate(aux);
    if (std::isfinite(prev) && std::isfinite(next)) diffs.push_back(next - prev);
    prev = next;
  }
  out.var_correlated_diff = variance(diffs);
  return out;
}

}  // namespace epilna
