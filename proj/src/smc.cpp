#include "epilna/smc.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstring>
#include <limits>
#include <numeric>

#include "epilna/observation.hpp"
#include "epilna/simulate.hpp"

namespace epilna {

AuxBlock::AuxBlock(int T, int N, int dim) : T_(T), N_(N), dim_(dim) {
  if (T < 0 || N < 1 || dim < 1) throw InvalidInput("invalid auxiliary block dimensions");
  values_.assign(static_cast<std::size_t>(T) * N * dim + T, 0.0);
}

AuxBlock AuxBlock::draw(int T, int N, int dim, Rng& rng) {
  AuxBlock aux(T, N, dim);
  std::normal_distribution<double> normal;
  for (double& v : aux.values_) v = normal(rng);
  return aux;
}

Vec AuxBlock::z_vector(int t, int k) const {
  Vec out(dim_);
  for (int j = 0; j < dim_; ++j) out[j] = z(t, k, j);
  return out;
}

std::vector<int> systematic_resample(std::span<const double> weights, double u) {
  return systematic_resample(weights, u, static_cast<int>(weights.size()));
}

std::vector<int> systematic_resample(std::span<const double> weights, double u, int n_out) {
  double total = 0.0;
  for (double w : weights) {
    if (w < 0.0 || !std::isfinite(w)) throw InvalidInput("resampling weights must be finite and nonnegative");
    total += w;
  }
  if (!(total > 0.0)) throw NumericalFailure("all resampling weights are zero");

  // Cumulative weights on the count scale. Values within round-off of an
  // integer are snapped so that equal weights reproduce the identity exactly.
  const int n = static_cast<int>(weights.size());
  std::vector<double> edge(static_cast<std::size_t>(n));
  double running = 0.0;
  for (int i = 0; i < n; ++i) {
    running += weights[i];
    double c = running / total * n_out;
    const double r = std::round(c);
    if (std::abs(c - r) <= 64 * std::numeric_limits<double>::epsilon() * n_out) c = r;
    edge[i] = c;
  }

  std::vector<int> out(static_cast<std::size_t>(n_out));
  int i = 0;
  for (int j = 0; j < n_out; ++j) {
    const double position = j + u;
    while (position >= edge[i] && i < n - 1) ++i;
    // Round-off can leave the final positions past a trailing zero weight.
    while (weights[i] == 0.0 && i > 0) --i;
    out[j] = i;
  }
  return out;
}

std::vector<int> sort_particles(std::span<const Vec> particles) {
  const int n = static_cast<int>(particles.size());
  std::vector<int> order(n);
  std::iota(order.begin(), order.end(), 0);
  if (n <= 1) return order;

  int ref = 0;
  for (int k = 1; k < n; ++k)
    if (particles[k][0] < particles[ref][0]) ref = k;

  std::vector<double> dist(n);
  for (int k = 0; k < n; ++k) dist[k] = (particles[k] - particles[ref]).squaredNorm();
  std::stable_sort(order.begin(), order.end(), [&](int a, int b) { return dist[a] < dist[b]; });
  return order;
}

namespace {

// Seed for the Gillespie stream of particle k on interval t, derived from the
// particle's slice of the auxiliary block.
std::uint64_t mjp_seed(const AuxBlock& aux, int t, int k) {
  std::uint64_t h = 0x9E3779B97F4A7C15ULL ^ (static_cast<std::uint64_t>(t) << 32) ^
                    static_cast<std::uint64_t>(k);
  for (int j = 0; j < aux.dim(); ++j) {
    const std::uint64_t bits = std::bit_cast<std::uint64_t>(aux.z(t, k, j));
    h ^= bits + 0x9E3779B97F4A7C15ULL + (h << 6) + (h >> 2);
  }
  return h;
}

Vec initial_particle(const CompartmentModel& model, const Params& params) {
  Vec n0 = Vec::Zero(model.n_latent);
  if (model.tv_beta) n0[model.log_beta_index()] = params.log_beta0;
  return n0;
}

}  // namespace

PfResult pf_loglik(const CompartmentModel& model, const Params& params, std::span<const double> y,
                   double dt, const AuxBlock& aux, int N, Propagation propagation,
                   const PfOptions& options) {
  const int T = static_cast<int>(y.size());
  if (aux.steps() != T || aux.particles() != N || aux.dim() != model.n_latent)
    throw InvalidInput("auxiliary block dimensions do not match (T, N, n_latent)");
  if (propagation == Propagation::mjp && model.tv_beta)
    throw InvalidInput("jump-process propagation requires a constant infection rate");
  if (!(dt > 0.0)) throw InvalidInput("observation interval must be positive");
  params.obs.validate();

  PfResult result;
  ParticleHistory& hist = result.history;
  if (options.store_history) {
    hist.T = T;
    hist.N = N;
    hist.dim = model.n_latent;
    hist.particles.reserve(static_cast<std::size_t>(T + 1) * N);
    hist.ancestors.reserve(static_cast<std::size_t>(T) * N);
  }

  const Vec n0 = initial_particle(model, params);
  std::vector<Vec> parents(N, n0);
  std::vector<int> parent_idx(N);
  std::iota(parent_idx.begin(), parent_idx.end(), 0);
  if (options.store_history) hist.particles.assign(N, n0);

  std::vector<Vec> children(N);
  std::vector<double> logw(N);
  std::vector<double> w(N);
  const double log_n = std::log(static_cast<double>(N));

  for (int t = 0; t < T; ++t) {
    if (options.sort && N > 1) {
      const std::vector<int> perm = sort_particles(parents);
      std::vector<Vec> sorted(N);
      std::vector<int> sorted_idx(N);
      for (int k = 0; k < N; ++k) {
        sorted[k] = parents[perm[k]];
        sorted_idx[k] = parent_idx[perm[k]];
      }
      parents.swap(sorted);
      parent_idx.swap(sorted_idx);
    }

    for (int k = 0; k < N; ++k) {
      const Vec& parent = parents[k];
      try {
        if (propagation == Propagation::lna) {
          const TransitionMoments m = transition_moments(model, parent, params, dt, options.ode_steps);
          children[k] = sample_transition(m, aux.z_vector(t, k));
        } else {
          children[k] = parent;
          Rng rng(mjp_seed(aux, t, k));
          gillespie_advance(model, params, children[k], dt, rng);
        }
        const Vec delta = children[k] - parent;
        logw[k] = obs_logdensity(y[t], delta, params.obs);
        if (std::isnan(logw[k])) logw[k] = -std::numeric_limits<double>::infinity();
      } catch (const NumericalFailure&) {
        children[k] = parent;
        logw[k] = -std::numeric_limits<double>::infinity();
      }
    }

    if (options.store_history) {
      hist.particles.insert(hist.particles.end(), children.begin(), children.end());
      hist.ancestors.insert(hist.ancestors.end(), parent_idx.begin(), parent_idx.end());
    }

    const double lse = log_sum_exp(logw.data(), logw.size());
    if (!std::isfinite(lse)) {
      result.loglik = -std::numeric_limits<double>::infinity();
      result.degenerate = true;
      return result;
    }
    result.loglik += lse - log_n;

    if (t == T - 1) {
      if (options.store_history) hist.final_logw = logw;
      break;
    }
    for (int k = 0; k < N; ++k) w[k] = std::exp(logw[k] - lse);
    const std::vector<int> idx = systematic_resample(w, standard_normal_cdf(aux.u_bar(t)));
    for (int k = 0; k < N; ++k) parents[k] = children[idx[k]];
    parent_idx = idx;
  }
  if (T == 0 && options.store_history) hist.final_logw.assign(N, 0.0);
  return result;
}

Eigen::MatrixXd sample_path(const ParticleHistory& history, double u) {
  const int T = history.T;
  const int N = history.N;
  if (N < 1 || history.particles.size() != static_cast<std::size_t>(T + 1) * N)
    throw InvalidInput("particle history is incomplete");

  std::vector<double> w(N);
  const double lse = log_sum_exp(history.final_logw.data(), history.final_logw.size());
  for (int k = 0; k < N; ++k) w[k] = std::exp(history.final_logw[k] - lse);
  int k = systematic_resample(w, u, 1)[0];

  Eigen::MatrixXd path(T + 1, history.dim);
  path.row(T) = history.particle(T, k).transpose();
  for (int t = T - 1; t >= 0; --t) {
    k = history.ancestor(t, k);
    path.row(t) = history.particle(t, k).transpose();
  }
  return path;
}

}  // namespace epilna
