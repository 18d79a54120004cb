#include "epilna/lna.hpp"

#include <cmath>
#include <sstream>

namespace epilna {

LnaState LnaState::restart(const Vec& eta, const Mat& V0, double t) {
  LnaState s;
  s.eta = eta;
  s.G = Mat::Identity(eta.size(), eta.size());
  s.V = V0;
  s.t = t;
  return s;
}

LnaDerivative ode_rhs(const CompartmentModel& model, const LnaState& state, const Params& params,
                      LnaParts parts) {
  Vec h;
  Mat F;
  hazard_and_jacobian(model, state.eta, params, h, F);

  const int d = model.n_latent;
  LnaDerivative out;
  out.eta.setZero(d);
  out.eta.head(model.n_events) = h;
  if (parts == LnaParts::mean_only) return out;

  out.V = F * state.V;
  out.V += out.V.transpose().eval();
  for (int e = 0; e < model.n_events; ++e) out.V(e, e) += h[e];
  if (model.tv_beta) {
    const int b = model.log_beta_index();
    out.V(b, b) += params.sigma_beta * params.sigma_beta;
  }
  if (parts == LnaParts::full) out.G = F * state.G;
  return out;
}

namespace {

// y + c * k over the propagated parts.
LnaState advance(const LnaState& y, const LnaDerivative& k, double c, LnaParts parts) {
  LnaState out;
  out.eta = y.eta + c * k.eta;
  if (parts != LnaParts::mean_only) out.V = y.V + c * k.V;
  if (parts == LnaParts::full) out.G = y.G + c * k.G;
  return out;
}

}  // namespace

LnaState integrate(const CompartmentModel& model, const LnaState& init, const Params& params,
                   double t0, double t1, int n_steps, LnaParts parts) {
  if (!(t1 > t0)) throw InvalidInput("integrate requires t1 > t0");
  if (n_steps < 1) throw InvalidInput("integrate requires at least one step");
  if (init.eta.size() != model.n_latent) throw InvalidInput("LNA state dimension mismatch");

  const double h = (t1 - t0) / n_steps;
  LnaState y = init;
  if (parts == LnaParts::full && y.G.size() == 0) y.G = Mat::Identity(model.n_latent, model.n_latent);
  if (parts != LnaParts::mean_only && y.V.size() == 0) y.V = Mat::Zero(model.n_latent, model.n_latent);

  for (int step = 0; step < n_steps; ++step) {
    const LnaDerivative k1 = ode_rhs(model, y, params, parts);
    const LnaDerivative k2 = ode_rhs(model, advance(y, k1, 0.5 * h, parts), params, parts);
    const LnaDerivative k3 = ode_rhs(model, advance(y, k2, 0.5 * h, parts), params, parts);
    const LnaDerivative k4 = ode_rhs(model, advance(y, k3, h, parts), params, parts);
    const double w = h / 6.0;
    y.eta += w * (k1.eta + 2.0 * k2.eta + 2.0 * k3.eta + k4.eta);
    if (parts != LnaParts::mean_only) {
      y.V += w * (k1.V + 2.0 * k2.V + 2.0 * k3.V + k4.V);
      y.V = 0.5 * (y.V + y.V.transpose()).eval();
    }
    if (parts == LnaParts::full) y.G += w * (k1.G + 2.0 * k2.G + 2.0 * k3.G + k4.G);

    const bool finite = y.eta.allFinite() && (parts == LnaParts::mean_only || y.V.allFinite()) &&
                        (parts != LnaParts::full || y.G.allFinite());
    if (!finite) {
      const double when = t0 + (step + 1) * h;
      std::ostringstream msg;
      msg << "LNA integration produced a non-finite state at t=" << when;
      throw NumericalFailure(msg.str(), when);
    }
  }
  y.t = t1;
  return y;
}

TransitionMoments transition_moments(const CompartmentModel& model, const Vec& n,
                                     const Params& params, double delta, int n_steps) {
  if (!(delta > 0.0)) throw InvalidInput("transition interval must be positive");
  LnaState init;
  init.eta = n;
  init.V = Mat::Zero(n.size(), n.size());
  const LnaState out = integrate(model, init, params, 0.0, delta, n_steps, LnaParts::no_fundamental);
  return {out.eta, out.V};
}

Vec sample_transition(const TransitionMoments& moments, const Vec& z) {
  if (z.size() != moments.mean.size()) throw InvalidInput("normal draw dimension mismatch");
  const Mat L = psd_factor(moments.cov);
  return moments.mean + L * z;
}

}  // namespace epilna
