#pragma once

#include <functional>
#include <span>
#include <vector>

#include "epilna/common.hpp"
#include "epilna/inference.hpp"
#include "epilna/models.hpp"

namespace epilna {

struct EssResult {
  double ess = 0.0;
  bool constant = false;  // zero-variance chain; ess reported as 0
};

// Effective sample size n / (1 + 2 sum rho_k) with the autocorrelation sum
// truncated by Geyer's initial positive sequence. Needs at least 10 draws.
EssResult ess(std::span<const double> chain);

struct DicResult {
  double dic = 0.0;
  double p_d = 0.0;
  double mean_loglik = 0.0;
  double loglik_at_mean = 0.0;
};

// DIC = -2 E[log p(y|theta)] + p_D, p_D = -2 E[log p(y|theta)] + 2 log p(y|theta_bar),
// with theta_bar the posterior mean of the transformed parameters.
DicResult dic(const ChainOutput& chain, const std::function<double(const Eigen::VectorXd&)>& loglik_fn);

// npop * beta / gamma.
double r0(const Params& params, const CompartmentModel& model);
// Time-resolved version for a latent log infection rate.
double r0(const Params& params, const CompartmentModel& model, double log_beta_t);

struct Summary {
  double mean = 0.0;
  double sd = 0.0;
};

Summary summarise(std::span<const double> values);

// Empirical quantile with linear interpolation (type 7).
double quantile(std::vector<double> values, double p);

}  // namespace epilna
