#pragma once

#include <span>
#include <utility>
#include <vector>

#include "epilna/common.hpp"
#include "epilna/lna.hpp"
#include "epilna/models.hpp"

namespace epilna {

// N_t | y_{1:t} ~ N(a, C) under the LNA with a Gaussian observation surrogate.
struct FilterState {
  Vec a;
  Mat C;
  double loglik = 0.0;
  double t = 0.0;
};

// Quantities kept from one forward step for backward sampling.
struct FilterRecord {
  Vec a;         // filtered mean at the start of the interval
  Mat C;         // filtered covariance at the start of the interval
  Vec eta_next;  // LNA mean at the end of the interval
  Mat G_next;
  Mat V_next;
};

struct FilterArchive {
  std::vector<FilterRecord> steps;  // one per observation interval, in order
  FilterState final;
};

struct FilterOptions {
  int ode_steps = kDefaultOdeSteps;
  double log_beta_prior_var = 0.0;  // initial variance of log beta (time-varying rate)
  bool zero_process_noise = false;  // force V = 0 each step (reduces to the ODE model)
};

FilterState initial_filter_state(const CompartmentModel& model, const Params& params,
                                 const FilterOptions& options = {});

// One step of the approximate Kalman recursion over an interval of length dt:
// restart the LNA at (a, C), add the predictive log density of y_next, and
// condition on it.
std::pair<FilterState, FilterRecord> ff_step(const FilterState& state, double y_next, double dt,
                                             const CompartmentModel& model, const Params& params,
                                             const FilterOptions& options = {});

struct FilterResult {
  double loglik = 0.0;
  FilterArchive archive;
};

FilterResult forward_filter(const CompartmentModel& model, const Params& params,
                            std::span<const double> y, double dt,
                            const FilterOptions& options = {});

// Draws n_{0:T} from the smoothing distribution implied by the archive, using
// z ((T + 1) x dim standard normals; row t drives n_t). Returns (T + 1) x dim.
Eigen::MatrixXd backward_sample(const FilterArchive& archive, const Eigen::MatrixXd& z);

// Deterministic ODE baseline: eta integrated from n = 0 with only the
// observation variance in each predictive density.
double ode_loglik(const CompartmentModel& model, const Params& params, std::span<const double> y,
                  double dt, int ode_steps = kDefaultOdeSteps);

}  // namespace epilna
