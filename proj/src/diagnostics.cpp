#include "epilna/diagnostics.hpp"

#include <algorithm>
#include <cmath>

namespace epilna {

EssResult ess(std::span<const double> chain) {
  const std::size_t n = chain.size();
  if (n < 10) throw InvalidInput("effective sample size needs at least 10 draws");

  double mean = 0.0;
  for (double v : chain) mean += v;
  mean /= static_cast<double>(n);

  auto autocov = [&](std::size_t lag) {
    double s = 0.0;
    for (std::size_t i = 0; i + lag < n; ++i) s += (chain[i] - mean) * (chain[i + lag] - mean);
    return s / static_cast<double>(n);
  };

  const double c0 = autocov(0);
  if (!(c0 > 0.0) || c0 < 1e-300) return {0.0, true};

  // Sum of autocorrelations via pairs Gamma_m = rho_{2m} + rho_{2m+1}, stopping
  // at the first non-positive pair.
  double tau = -1.0;  // -rho_0 so that tau = -1 + 2 sum_m Gamma_m = 1 + 2 sum_{k>=1} rho_k
  for (std::size_t m = 0; 2 * m + 1 < n; ++m) {
    const double pair = (autocov(2 * m) + autocov(2 * m + 1)) / c0;
    if (pair <= 0.0) break;
    tau += 2.0 * pair;
  }
  return {static_cast<double>(n) / tau, false};
}

DicResult dic(const ChainOutput& chain,
              const std::function<double(const Eigen::VectorXd&)>& loglik_fn) {
  if (chain.loglik.empty()) throw InvalidInput("DIC needs per-draw log-likelihoods");
  DicResult out;
  for (double l : chain.loglik) out.mean_loglik += l;
  out.mean_loglik /= static_cast<double>(chain.loglik.size());
  const Eigen::VectorXd theta_bar = chain.draws.colwise().mean().transpose();
  out.loglik_at_mean = loglik_fn(theta_bar);
  out.p_d = -2.0 * out.mean_loglik + 2.0 * out.loglik_at_mean;
  out.dic = -2.0 * out.mean_loglik + out.p_d;
  return out;
}

double r0(const Params& params, const CompartmentModel& model) {
  if (model.tv_beta) return r0(params, model, params.log_beta0);
  if (!(params.gamma > 0.0)) throw InvalidInput("R0 requires a positive removal rate");
  return model.npop * params.beta / params.gamma;
}

double r0(const Params& params, const CompartmentModel& model, double log_beta_t) {
  if (!(params.gamma > 0.0)) throw InvalidInput("R0 requires a positive removal rate");
  return model.npop * std::exp(log_beta_t) / params.gamma;
}

Summary summarise(std::span<const double> values) {
  Summary s;
  if (values.empty()) return s;
  for (double v : values) s.mean += v;
  s.mean /= static_cast<double>(values.size());
  if (values.size() > 1) {
    double ss = 0.0;
    for (double v : values) ss += (v - s.mean) * (v - s.mean);
    s.sd = std::sqrt(ss / static_cast<double>(values.size() - 1));
  }
  return s;
}

double quantile(std::vector<double> values, double p) {
  if (values.empty()) throw InvalidInput("quantile of an empty sample");
  std::sort(values.begin(), values.end());
  const double h = (static_cast<double>(values.size()) - 1.0) * p;
  const auto lo = static_cast<std::size_t>(std::floor(h));
  const std::size_t hi = std::min(lo + 1, values.size() - 1);
  return values[lo] + (h - static_cast<double>(lo)) * (values[hi] - values[lo]);
}

}  // namespace epilna
