#include "epilna/gaussfilter.hpp"

#include <cmath>
#include <numbers>

#include "epilna/observation.hpp"

namespace epilna {

namespace {

double normal_logpdf(double y, double mean, double var) {
  const double r = y - mean;
  return -0.5 * (std::log(2.0 * std::numbers::pi * var) + r * r / var);
}

Vec initial_mean(const CompartmentModel& model, const Params& params) {
  Vec a = Vec::Zero(model.n_latent);
  if (model.tv_beta) a[model.log_beta_index()] = params.log_beta0;
  return a;
}

}  // namespace

FilterState initial_filter_state(const CompartmentModel& model, const Params& params,
                                 const FilterOptions& options) {
  FilterState s;
  s.a = initial_mean(model, params);
  s.C = Mat::Zero(model.n_latent, model.n_latent);
  if (model.tv_beta) s.C(model.log_beta_index(), model.log_beta_index()) = options.log_beta_prior_var;
  return s;
}

std::pair<FilterState, FilterRecord> ff_step(const FilterState& state, double y_next, double dt,
                                             const CompartmentModel& model, const Params& params,
                                             const FilterOptions& options) {
  const LnaState prior = integrate(model, LnaState::restart(state.a, state.C, state.t), params,
                                   state.t, state.t + dt, options.ode_steps, LnaParts::full);
  FilterRecord rec{state.a, state.C, prior.eta, prior.G, prior.V};
  if (options.zero_process_noise) rec.V_next.setZero();
  const Mat& G = rec.G_next;
  const Mat& V = rec.V_next;
  const Mat& C = state.C;

  const Vec dn_hat = rec.eta_next - state.a;
  Mat var_dn = V + C - C * G.transpose() - G * C;
  var_dn = 0.5 * (var_dn + var_dn.transpose()).eval();

  const GaussianApprox obs = gaussian_approx(params.obs, dn_hat);
  const int p = params.obs.target;
  const double y_mean = obs.scale * dn_hat[p];
  const double y_var = obs.scale * obs.scale * var_dn(p, p) + obs.variance;
  if (!(y_var > 0.0) || !std::isfinite(y_var))
    throw NumericalFailure("predicted observation variance is not positive", state.t + dt);

  FilterState next;
  next.t = state.t + dt;
  next.loglik = state.loglik + normal_logpdf(y_next, y_mean, y_var);

  const Vec cov_ny = obs.scale * (V - G * C).col(p);
  next.a = rec.eta_next + cov_ny * ((y_next - y_mean) / y_var);
  next.C = V - cov_ny * cov_ny.transpose() / y_var;
  next.C = 0.5 * (next.C + next.C.transpose()).eval();
  try {
    psd_factor(next.C);
  } catch (const NumericalFailure& e) {
    throw NumericalFailure(std::string("filter covariance update: ") + e.what(), next.t);
  }
  return {std::move(next), std::move(rec)};
}

FilterResult forward_filter(const CompartmentModel& model, const Params& params,
                            std::span<const double> y, double dt, const FilterOptions& options) {
  if (!(dt > 0.0)) throw InvalidInput("observation interval must be positive");
  params.obs.validate();
  FilterResult result;
  FilterState state = initial_filter_state(model, params, options);
  result.archive.steps.reserve(y.size());
  for (double yt : y) {
    auto [next, rec] = ff_step(state, yt, dt, model, params, options);
    result.archive.steps.push_back(std::move(rec));
    state = std::move(next);
  }
  result.loglik = state.loglik;
  result.archive.final = std::move(state);
  return result;
}

Eigen::MatrixXd backward_sample(const FilterArchive& archive, const Eigen::MatrixXd& z) {
  const int T = static_cast<int>(archive.steps.size());
  const int d = static_cast<int>(archive.final.a.size());
  if (z.rows() != T + 1 || z.cols() != d)
    throw InvalidInput("backward sampling draws must be (T + 1) x dim");

  Eigen::MatrixXd path(T + 1, d);
  Vec next = archive.final.a + psd_factor(archive.final.C) * Vec(z.row(T).transpose());
  path.row(T) = next.transpose();
  for (int t = T - 1; t >= 0; --t) {
    const FilterRecord& r = archive.steps[t];
    // K = C G' V^{-1}; the pivoted LDL' solve tolerates singular V.
    const Eigen::LDLT<Mat> ldlt(r.V_next);
    if (ldlt.info() != Eigen::Success)
      throw NumericalFailure("backward sampling: LNA covariance factorisation failed");
    const Mat GC = r.G_next * r.C;
    const Mat K = ldlt.solve(GC).transpose();
    const Vec mean = r.a + K * (next - r.eta_next);
    const Mat cov = r.C - K * r.G_next * r.C;
    next = mean + psd_factor(cov) * Vec(z.row(t).transpose());
    path.row(t) = next.transpose();
  }
  return path;
}

double ode_loglik(const CompartmentModel& model, const Params& params, std::span<const double> y,
                  double dt, int ode_steps) {
  if (!(dt > 0.0)) throw InvalidInput("observation interval must be positive");
  params.obs.validate();
  LnaState state;
  state.eta = initial_mean(model, params);
  double loglik = 0.0;
  double t = 0.0;
  const int p = params.obs.target;
  for (double yt : y) {
    const LnaState next = integrate(model, state, params, t, t + dt, ode_steps, LnaParts::mean_only);
    const Vec dn = next.eta - state.eta;
    const GaussianApprox obs = gaussian_approx(params.obs, dn);
    loglik += normal_logpdf(yt, obs.scale * dn[p], obs.variance);
    state.eta = next.eta;
    t += dt;
  }
  return loglik;
}

}  // namespace epilna
