#pragma once

#include <cstdint>
#include <functional>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "epilna/common.hpp"
#include "epilna/gaussfilter.hpp"
#include "epilna/models.hpp"
#include "epilna/smc.hpp"

namespace epilna {

enum class ParamId { beta, gamma, kappa, sigma_beta, lambda, phi, sigma2 };

ParamId parse_param_id(std::string_view name);
std::string to_string(ParamId id);

double get_param(const Params& params, ParamId id);
void set_param(Params& params, ParamId id, double value);

// Prior on the natural scale of one parameter.
struct Prior {
  enum class Kind { gamma, uniform, lognormal };
  Kind kind = Kind::gamma;
  double a = 1.0;  // gamma: shape; uniform: lower; lognormal: mean of log
  double b = 1.0;  // gamma: rate;  uniform: upper; lognormal: sd of log

  static Prior gamma(double shape, double rate) { return {Kind::gamma, shape, rate}; }
  static Prior uniform(double lo, double hi) { return {Kind::uniform, lo, hi}; }
  static Prior lognormal(double mean_log, double sd_log) { return {Kind::lognormal, mean_log, sd_log}; }

  // Parses "gamma(10, 1e4)", "uniform(0, 1)" or "lognormal(0, 0.5)".
  static Prior parse(std::string_view text);

  double log_density(double x) const;
  std::string describe() const;
};

struct FreeParameter {
  ParamId id;
  Prior prior;
};

// The sampled parameters and their bijection to an unconstrained vector: log
// for rates and scales, logit for the reporting proportion.
class ParameterSpace {
 public:
  ParameterSpace(Params base, std::vector<FreeParameter> free);

  int size() const { return static_cast<int>(free_.size()); }
  const std::vector<FreeParameter>& free() const { return free_; }
  const Params& base() const { return base_; }
  std::vector<std::string> names() const;

  Eigen::VectorXd transform(const Params& params) const;
  Params inverse_transform(const Eigen::VectorXd& x) const;

  // Log prior density of the transformed vector, including the log-Jacobian
  // of the inverse map (sum of log theta for log, log lambda(1 - lambda) for logit).
  double log_prior(const Eigen::VectorXd& x) const;

  static bool uses_logit(ParamId id) { return id == ParamId::lambda; }

 private:
  Params base_;
  std::vector<FreeParameter> free_;
};

struct ChainState {
  Eigen::VectorXd x;  // transformed parameters
  double log_prior = 0.0;
  double loglik = 0.0;
};

// log-likelihood (or its estimate) at a transformed parameter vector.
using LogLikFn = std::function<double(const Eigen::VectorXd&)>;

// One random-walk Metropolis-Hastings step with proposal x + scale * L xi,
// L L' = proposal_cov. The proposal is symmetric so no Hastings correction is
// applied. Non-finite or failing evaluations are rejected. Returns whether the
// proposal was accepted.
bool mh_kernel(ChainState& current, const Eigen::MatrixXd& proposal_chol, double scale,
               const ParameterSpace& space, const LogLikFn& loglik, Rng& rng);

// Crank-Nicolson proposal u* = rho u + sqrt(1 - rho^2) xi on every entry.
AuxBlock cn_update(const AuxBlock& aux, double rho, Rng& rng);

enum class Scheme { ffmh, ode_mh, pmmh, cpmmh };

Scheme parse_scheme(std::string_view name);
std::string to_string(Scheme scheme);

struct ChainSettings {
  int iterations = 10000;    // main-phase iterations (reported)
  double pilot_fraction = 0.1;
  int particles = 0;         // pmmh / cpmmh
  double rho = 0.0;          // cpmmh
  Propagation propagation = Propagation::lna;
  int ode_steps = kDefaultOdeSteps;
  double log_beta_prior_var = 0.0;
  std::optional<double> target_acceptance;  // default per scheme
  double initial_proposal_sd = 0.1;         // pilot proposal sd on the transformed scale
  std::optional<Eigen::VectorXd> init;      // transformed starting point
  bool sample_paths = false;
  int path_thin = 1;
  std::uint64_t seed = 1;
};

double default_target_acceptance(Scheme scheme);

struct ChainOutput {
  std::vector<std::string> names;
  Eigen::MatrixXd draws;        // iterations x free parameters, transformed scale
  std::vector<double> loglik;   // per draw
  std::vector<std::uint8_t> accepted;
  std::vector<Eigen::MatrixXd> paths;  // sampled incidence paths, (T + 1) x dim each
  Eigen::MatrixXd proposal_cov;
  double scale = 0.0;
  double seconds = 0.0;         // main-phase wall time
  double pilot_seconds = 0.0;
  std::vector<std::string> warnings;

  double acceptance_rate() const;
  int iterations() const { return static_cast<int>(draws.rows()); }
};

ChainOutput run_chain(Scheme scheme, const CompartmentModel& model, const ParameterSpace& space,
                      std::span<const double> y, double dt, const ChainSettings& settings);

// Log-likelihood function for `scheme` at fixed data; pseudo-marginal schemes
// use fresh auxiliary variables from `rng` on every call.
LogLikFn make_loglik(Scheme scheme, const CompartmentModel& model, const ParameterSpace& space,
                     std::span<const double> y, double dt, const ChainSettings& settings, Rng& rng);

// Particle-count diagnostic: variance of repeated log-likelihood estimates at
// fixed params with independent auxiliary draws, and variance of the
// differences between successive estimates under the Crank-Nicolson kernel.
struct LoglikVariance {
  double mean = 0.0;
  double var_independent = 0.0;
  double var_correlated_diff = 0.0;
  int degenerate = 0;
};

LoglikVariance loglik_variance(const CompartmentModel& model, const Params& params,
                               std::span<const double> y, double dt, int particles, double rho,
                               int replicates, std::uint64_t seed,
                               Propagation propagation = Propagation::lna,
                               int ode_steps = kDefaultOdeSteps);

}  // namespace epilna
