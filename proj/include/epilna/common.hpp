#pragma once

#include <cstdint>
#include <limits>
#include <random>
#include <stdexcept>
#include <string>
#include <string_view>

#include <Eigen/Dense>

namespace epilna {

// Upper bound on the LNA state dimension. Small fixed-capacity Eigen types keep
// the inner ODE and particle loops free of heap allocation.
inline constexpr int kMaxLatent = 8;

using Vec = Eigen::Matrix<double, Eigen::Dynamic, 1, 0, kMaxLatent, 1>;
using Mat = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, 0, kMaxLatent, kMaxLatent>;

using Rng = std::mt19937_64;

class InvalidInput : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

class NumericalFailure : public std::runtime_error {
 public:
  NumericalFailure(const std::string& what, double time)
      : std::runtime_error(what), time_(time) {}
  explicit NumericalFailure(const std::string& what)
      : NumericalFailure(what, std::numeric_limits<double>::quiet_NaN()) {}

  // Model time at which the failure was detected (NaN when not applicable).
  double time() const { return time_; }

 private:
  double time_;
};

// Independent generator for a named sub-stream of a run seed. All randomness in
// a run flows from one seed through these.
Rng make_stream(std::uint64_t seed, std::string_view name);

double standard_normal_cdf(double x);

// log(sum(exp(v))) without overflow; -inf when every entry is -inf.
double log_sum_exp(const double* v, std::size_t n);

// Square-root factor L with L L' = M for a symmetric positive semidefinite M.
// Tries a plain Cholesky factor, then a pivoted LDL' factor (exact for
// singular PSD matrices), then Cholesky with jitter starting at 1e-10 (scaled
// by the largest diagonal entry when that exceeds 1) escalating x10 up to
// 1e-6. Throws NumericalFailure when all of these fail.
Mat psd_factor(const Mat& M);

}  // namespace epilna
