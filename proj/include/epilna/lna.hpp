#pragma once

#include "epilna/common.hpp"
#include "epilna/models.hpp"

namespace epilna {

// Linear noise approximation of the cumulative incidence process: deterministic
// mean path eta, fundamental matrix G and covariance V.
struct LnaState {
  Vec eta;
  Mat G;
  Mat V;
  double t = 0.0;

  // Restart at `eta` with G = I and covariance V0.
  static LnaState restart(const Vec& eta, const Mat& V0, double t = 0.0);
};

struct LnaDerivative {
  Vec eta;
  Mat G;
  Mat V;
};

// Which parts of the coupled system to propagate.
enum class LnaParts {
  full,         // eta, G and V
  no_fundamental,  // eta and V (restarted transitions never need G)
  mean_only,    // eta alone (deterministic ODE model)
};

inline constexpr int kDefaultOdeSteps = 20;

// d eta/dt = h*(eta);  dG/dt = F G;  dV/dt = V F' + diag{h*} + F V, with the
// diffusion sigma_beta^2 in the log-beta slot for time-varying rate models.
LnaDerivative ode_rhs(const CompartmentModel& model, const LnaState& state, const Params& params,
                      LnaParts parts = LnaParts::full);

// Classical fixed-step RK4 from t0 to t1. V is symmetrised after each step.
// Throws NumericalFailure (carrying the time) if the state becomes non-finite.
LnaState integrate(const CompartmentModel& model, const LnaState& init, const Params& params,
                   double t0, double t1, int n_steps = kDefaultOdeSteps,
                   LnaParts parts = LnaParts::full);

struct TransitionMoments {
  Vec mean;
  Mat cov;
};

// One-interval restarted LNA moments from n (eta = n, V = 0, G skipped).
TransitionMoments transition_moments(const CompartmentModel& model, const Vec& n,
                                     const Params& params, double delta,
                                     int n_steps = kDefaultOdeSteps);

// mean + L z where L L' = cov (+ jitter).
Vec sample_transition(const TransitionMoments& moments, const Vec& z);

}  // namespace epilna
