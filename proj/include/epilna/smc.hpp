#pragma once

#include <span>
#include <vector>

#include "epilna/common.hpp"
#include "epilna/lna.hpp"
#include "epilna/models.hpp"

namespace epilna {

// Every random variable consumed by one particle filter run, stored as
// standard normals: z(t, k, .) propagates particle k over interval t, and
// u_bar(t) is mapped through the normal CDF to the systematic-resampling
// uniform. Keeping the block Gaussian lets the Crank-Nicolson kernel act on
// all of it at once.
class AuxBlock {
 public:
  AuxBlock() = default;
  AuxBlock(int T, int N, int dim);

  static AuxBlock draw(int T, int N, int dim, Rng& rng);

  int steps() const { return T_; }
  int particles() const { return N_; }
  int dim() const { return dim_; }

  double z(int t, int k, int j) const { return values_[index(t, k, j)]; }
  double& z(int t, int k, int j) { return values_[index(t, k, j)]; }
  Vec z_vector(int t, int k) const;
  double u_bar(int t) const { return values_[offset_bar() + t]; }
  double& u_bar(int t) { return values_[offset_bar() + t]; }

  std::span<const double> values() const { return values_; }
  std::span<double> values() { return values_; }

 private:
  std::size_t index(int t, int k, int j) const {
    return (static_cast<std::size_t>(t) * N_ + k) * dim_ + j;
  }
  std::size_t offset_bar() const { return static_cast<std::size_t>(T_) * N_ * dim_; }

  int T_ = 0;
  int N_ = 0;
  int dim_ = 0;
  std::vector<double> values_;
};

enum class Propagation { lna, mjp };

// Particle states at every observation time plus the ancestry needed to trace
// a path back from a terminal particle.
struct ParticleHistory {
  int T = 0;
  int N = 0;
  int dim = 0;
  std::vector<Vec> particles;       // (T + 1) * N, row-major in time
  std::vector<int> ancestors;       // T * N: ancestors[t*N + k] indexes particles at time t
  std::vector<double> final_logw;   // unnormalised log weights at time T

  const Vec& particle(int t, int k) const { return particles[static_cast<std::size_t>(t) * N + k]; }
  int ancestor(int t, int k) const { return ancestors[static_cast<std::size_t>(t) * N + k]; }
};

struct PfOptions {
  int ode_steps = kDefaultOdeSteps;
  bool sort = true;           // sort particles before propagation
  bool store_history = true;  // needed for sample_path
};

struct PfResult {
  double loglik = 0.0;
  bool degenerate = false;  // all weights were zero at some step (loglik = -inf)
  ParticleHistory history;
};

// Bootstrap particle filter estimate of log p(y | theta): a deterministic
// function of (params, y, aux). Particles start at n = 0 (log beta0 for
// time-varying rates); each step sorts, propagates, weights by the observation
// density of the increment, and resamples systematically.
PfResult pf_loglik(const CompartmentModel& model, const Params& params, std::span<const double> y,
                   double dt, const AuxBlock& aux, int N, Propagation propagation,
                   const PfOptions& options = {});

// Indices selected by systematic resampling with positions (j + u) / N.
// Throws NumericalFailure when every weight is zero.
std::vector<int> systematic_resample(std::span<const double> weights, double u);
std::vector<int> systematic_resample(std::span<const double> weights, double u, int n_out);

// Permutation ordering particles by Euclidean distance from the particle with
// the smallest first component; ties keep the lower index first.
std::vector<int> sort_particles(std::span<const Vec> particles);

// Draws a terminal particle with probability proportional to its final weight
// (inverse CDF at u) and traces its ancestry. Returns (T + 1) x dim.
Eigen::MatrixXd sample_path(const ParticleHistory& history, double u);

}  // namespace epilna
