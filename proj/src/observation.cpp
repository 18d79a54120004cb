#include "epilna/observation.hpp"

#include <cmath>
#include <limits>
#include <numbers>

namespace epilna {

namespace {
constexpr double kNegInf = -std::numeric_limits<double>::infinity();

double selected(const Vec& delta_n, const ObsParams& obs) {
  if (obs.target < 0 || obs.target >= delta_n.size())
    throw InvalidInput("observation target index outside the increment vector");
  return delta_n[obs.target];
}
}  // namespace

ObsKind parse_obs_kind(std::string_view name) {
  if (name == "gaussian") return ObsKind::gaussian;
  if (name == "binomial") return ObsKind::binomial;
  if (name == "negbinomial") return ObsKind::negbinomial;
  throw InvalidInput("unknown observation model '" + std::string(name) + "'");
}

std::string to_string(ObsKind kind) {
  switch (kind) {
    case ObsKind::gaussian: return "gaussian";
    case ObsKind::binomial: return "binomial";
    case ObsKind::negbinomial: return "negbinomial";
  }
  return "?";
}

void ObsParams::validate() const {
  if (target < 0) throw InvalidInput("observation target must be a counting component");
  switch (kind) {
    case ObsKind::gaussian:
      if (!(sigma2 > 0.0) || !std::isfinite(sigma2))
        throw InvalidInput("gaussian observation variance must be positive");
      break;
    case ObsKind::binomial:
      if (!(lambda > 0.0 && lambda <= 1.0))
        throw InvalidInput("binomial reporting proportion must lie in (0,1]");
      break;
    case ObsKind::negbinomial:
      if (!(lambda > 0.0 && lambda <= 1.0))
        throw InvalidInput("negative binomial reporting proportion must lie in (0,1]");
      if (!(phi >= 0.0) || !std::isfinite(phi))
        throw InvalidInput("negative binomial phi must be nonnegative");
      break;
  }
}

double obs_logdensity(double y, const Vec& delta_n, const ObsParams& obs) {
  obs.validate();
  const double m = selected(delta_n, obs);
  switch (obs.kind) {
    case ObsKind::gaussian: {
      const double r = y - m;
      return -0.5 * (std::log(2.0 * std::numbers::pi * obs.sigma2) + r * r / obs.sigma2);
    }
    case ObsKind::binomial: {
      if (!(m >= 0.0) || m < y || y < 0.0) return kNegInf;
      const double failures = m - y;
      double ld = std::lgamma(m + 1.0) - std::lgamma(y + 1.0) - std::lgamma(failures + 1.0) +
                  y * std::log(obs.lambda);
      if (failures > 0.0) {
        if (obs.lambda == 1.0) return kNegInf;
        ld += failures * std::log1p(-obs.lambda);
      }
      return ld;
    }
    case ObsKind::negbinomial: {
      if (y < 0.0) return kNegInf;
      const double mu = obs.lambda * std::max(m, kObsFloor);
      if (obs.phi == 0.0)  // Poisson limit
        return y * std::log(mu) - mu - std::lgamma(y + 1.0);
      const double size = 1.0 / obs.phi;
      return std::lgamma(y + size) - std::lgamma(size) - std::lgamma(y + 1.0) +
             size * std::log(size / (size + mu)) + y * std::log(mu / (size + mu));
    }
  }
  return kNegInf;
}

GaussianApprox gaussian_approx(const ObsParams& obs, const Vec& delta_n_hat) {
  const double m = std::max(selected(delta_n_hat, obs), kObsFloor);
  switch (obs.kind) {
    case ObsKind::gaussian:
      return {1.0, obs.sigma2};
    case ObsKind::binomial:
      return {obs.lambda, std::max(obs.lambda * (1.0 - obs.lambda) * m, kObsFloor)};
    case ObsKind::negbinomial: {
      const double mu = obs.lambda * m;
      return {obs.lambda, std::max(mu + obs.phi * mu * mu, kObsFloor)};
    }
  }
  return {1.0, kObsFloor};
}

}  // namespace epilna
