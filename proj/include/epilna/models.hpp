#pragma once

#include <functional>
#include <string>
#include <string_view>
#include <vector>

#include "epilna/common.hpp"
#include "epilna/observation.hpp"

namespace epilna {

// Static parameters of a compartment model. Rates are on the natural scale.
struct Params {
  double beta = 0.0;        // infection rate; unused when the model's rate is latent
  double gamma = 0.0;       // removal rate
  double kappa = 0.0;       // loss-of-immunity rate (SIRS)
  double sigma_beta = 0.0;  // diffusion scale of log beta (time-varying rate)
  double log_beta0 = 0.0;   // initial log infection rate (time-varying rate)
  ObsParams obs;
  Vec x0;  // initial prevalence (s0, i0)
};

struct CompartmentModel;

// Hazards in prevalence coordinates. `beta` is the current infection rate.
using HazardFn = std::function<void(const CompartmentModel&, const Vec& x, double beta,
                                    const Params&, Vec& h)>;
// Gradient of the hazards with respect to prevalence (n_events x compartments).
using HazardGradientFn = std::function<void(const CompartmentModel&, const Vec& x, double beta,
                                            const Params&, Mat& dh)>;

// A compartment model described as data: stoichiometry plus hazard callbacks.
// The engine derives incidence-coordinate hazards and Jacobians from these, so
// adding a model needs no changes elsewhere.
struct CompartmentModel {
  std::string name;
  int n_events = 0;
  int n_latent = 0;           // n_events, +1 when log beta is a latent component
  Eigen::MatrixXi stoich;     // compartments x events
  double npop = 0.0;
  bool tv_beta = false;
  int infection_event = 0;    // the event whose hazard is linear in beta
  std::vector<std::string> compartment_names;
  std::vector<std::string> event_names;
  HazardFn hazard;
  HazardGradientFn hazard_gradient;

  int n_compartments() const { return static_cast<int>(stoich.rows()); }
  // Index of the log-beta component (tv_beta models only).
  int log_beta_index() const { return n_events; }
};

CompartmentModel make_sir(double npop, bool tv_beta = false);
CompartmentModel make_sirs(double npop, bool tv_beta = false);

// "sir", "sirs", "sir-tvbeta" or "sirs-tvbeta".
CompartmentModel make_model(std::string_view name, double npop);

struct IncidenceState {
  Vec n;  // cumulative event counts; last entry is log beta for tv_beta models
  double t = 0.0;
};

// Hazards at prevalence x, clamped at zero.
Vec hazard_prevalence(const CompartmentModel& model, const Vec& x, const Params& params);

// x = x0 + S n over the counting components of n.
Vec incidence_to_prevalence(const CompartmentModel& model, const Vec& n, const Vec& x0);

// Hazards written in terms of cumulative incidence, h*(n).
Vec hazard_incidence(const CompartmentModel& model, const Vec& n, const Params& params);

// F = d h*(eta) / d eta, including the log-beta column and (zero) drift row for
// tv_beta models. Rows whose unclamped hazard is negative are zero.
Mat jacobian(const CompartmentModel& model, const Vec& eta, const Params& params);

// Hazards and Jacobian in one pass (used by the ODE right-hand side).
void hazard_and_jacobian(const CompartmentModel& model, const Vec& eta, const Params& params,
                         Vec& h, Mat& F);

}  // namespace epilna
