#include "epilna/models.hpp"

#include <cmath>

namespace epilna {

namespace {

void sir_hazard(const CompartmentModel&, const Vec& x, double beta, const Params& p, Vec& h) {
  h.resize(2);
  h[0] = beta * x[0] * x[1];
  h[1] = p.gamma * x[1];
}

void sir_gradient(const CompartmentModel&, const Vec& x, double beta, const Params& p, Mat& dh) {
  dh.resize(2, 2);
  dh << beta * x[1], beta * x[0],
        0.0, p.gamma;
}

void sirs_hazard(const CompartmentModel& m, const Vec& x, double beta, const Params& p, Vec& h) {
  h.resize(3);
  h[0] = beta * x[0] * x[1];
  h[1] = p.gamma * x[1];
  h[2] = p.kappa * (m.npop - x[0] - x[1]);
}

void sirs_gradient(const CompartmentModel&, const Vec& x, double beta, const Params& p, Mat& dh) {
  dh.resize(3, 2);
  dh << beta * x[1], beta * x[0],
        0.0, p.gamma,
        -p.kappa, -p.kappa;
}

double infection_rate(const CompartmentModel& model, const Vec& n, const Params& params) {
  return model.tv_beta ? std::exp(n[model.log_beta_index()]) : params.beta;
}

void check_latent(const CompartmentModel& model, const Vec& n) {
  if (n.size() != model.n_latent)
    throw InvalidInput("incidence state has dimension " + std::to_string(n.size()) +
                       ", model '" + model.name + "' expects " + std::to_string(model.n_latent));
}

}  // namespace

CompartmentModel make_sir(double npop, bool tv_beta) {
  CompartmentModel m;
  m.name = tv_beta ? "sir-tvbeta" : "sir";
  m.n_events = 2;
  m.n_latent = tv_beta ? 3 : 2;
  m.stoich.resize(2, 2);
  m.stoich << -1, 0,
               1, -1;
  m.npop = npop;
  m.tv_beta = tv_beta;
  m.compartment_names = {"s", "i"};
  m.event_names = {"infection", "removal"};
  m.hazard = sir_hazard;
  m.hazard_gradient = sir_gradient;
  return m;
}

CompartmentModel make_sirs(double npop, bool tv_beta) {
  CompartmentModel m;
  m.name = tv_beta ? "sirs-tvbeta" : "sirs";
  m.n_events = 3;
  m.n_latent = tv_beta ? 4 : 3;
  m.stoich.resize(2, 3);
  m.stoich << -1, 0, 1,
               1, -1, 0;
  m.npop = npop;
  m.tv_beta = tv_beta;
  m.compartment_names = {"s", "i"};
  m.event_names = {"infection", "removal", "loss_of_immunity"};
  m.hazard = sirs_hazard;
  m.hazard_gradient = sirs_gradient;
  return m;
}

CompartmentModel make_model(std::string_view name, double npop) {
  if (name == "sir") return make_sir(npop, false);
  if (name == "sirs") return make_sirs(npop, false);
  if (name == "sir-tvbeta") return make_sir(npop, true);
  if (name == "sirs-tvbeta") return make_sirs(npop, true);
  throw InvalidInput("unknown model '" + std::string(name) + "'");
}

Vec hazard_prevalence(const CompartmentModel& model, const Vec& x, const Params& params) {
  if (x.size() != model.n_compartments())
    throw InvalidInput("prevalence vector does not match the model's compartments");
  Vec h;
  const double beta = model.tv_beta ? std::exp(params.log_beta0) : params.beta;
  model.hazard(model, x, beta, params, h);
  return h.cwiseMax(0.0);
}

Vec incidence_to_prevalence(const CompartmentModel& model, const Vec& n, const Vec& x0) {
  if (x0.size() != model.n_compartments())
    throw InvalidInput("initial prevalence does not match the model's compartments");
  if (n.size() < model.n_events) throw InvalidInput("incidence vector is too short");
  Vec x = x0;
  for (int e = 0; e < model.n_events; ++e)
    for (int c = 0; c < model.n_compartments(); ++c) x[c] += model.stoich(c, e) * n[e];
  return x;
}

Vec hazard_incidence(const CompartmentModel& model, const Vec& n, const Params& params) {
  check_latent(model, n);
  const Vec x = incidence_to_prevalence(model, n, params.x0);
  Vec h;
  model.hazard(model, x, infection_rate(model, n, params), params, h);
  return h.cwiseMax(0.0);
}

void hazard_and_jacobian(const CompartmentModel& model, const Vec& eta, const Params& params,
                         Vec& h, Mat& F) {
  check_latent(model, eta);
  const Vec x = incidence_to_prevalence(model, eta, params.x0);
  const double beta = infection_rate(model, eta, params);
  Mat dh;
  model.hazard(model, x, beta, params, h);
  model.hazard_gradient(model, x, beta, params, dh);

  const int ne = model.n_events;
  F.setZero(model.n_latent, model.n_latent);
  F.topLeftCorner(ne, ne) = dh * model.stoich.cast<double>();
  if (model.tv_beta) F(model.infection_event, model.log_beta_index()) = h[model.infection_event];
  for (int e = 0; e < ne; ++e) {
    if (h[e] < 0.0) {
      h[e] = 0.0;
      F.row(e).setZero();
    }
  }
}

Mat jacobian(const CompartmentModel& model, const Vec& eta, const Params& params) {
  Vec h;
  Mat F;
  hazard_and_jacobian(model, eta, params, h, F);
  return F;
}

}  // namespace epilna
