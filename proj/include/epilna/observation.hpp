#pragma once

#include <string>
#include <string_view>

#include "epilna/common.hpp"

namespace epilna {

enum class ObsKind { gaussian, binomial, negbinomial };

ObsKind parse_obs_kind(std::string_view name);
std::string to_string(ObsKind kind);

// Observation model linking an interval incidence P'dn to a univariate count.
struct ObsParams {
  ObsKind kind = ObsKind::binomial;
  double lambda = 1.0;  // reporting proportion (binomial, negbinomial)
  double sigma2 = 1.0;  // observation variance (gaussian)
  double phi = 0.0;     // inverse overdispersion (negbinomial)
  int target = 0;       // counting component selected by P: 0 infections, 1 removals

  // Throws InvalidInput when the parameters relevant to `kind` are out of range.
  void validate() const;
};

// Floor applied to means and variances that the LNA can drive to zero or below.
inline constexpr double kObsFloor = 1e-8;

// Log density of y given the real-valued increment vector delta_n.
//
// The binomial case uses a log-Gamma continuous relaxation in the trial count
// m = P'dn so real LNA increments can be weighted; it is the exact pmf at
// integer m and returns -inf whenever m < y or m < 0.
double obs_logdensity(double y, const Vec& delta_n, const ObsParams& obs);

// Linear-Gaussian surrogate y ~ N(scale * P'dn, variance) with the variance
// evaluated at the expected increment.
struct GaussianApprox {
  double scale;
  double variance;
};

GaussianApprox gaussian_approx(const ObsParams& obs, const Vec& delta_n_hat);

}  // namespace epilna
