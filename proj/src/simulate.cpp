#include "epilna/simulate.hpp"

#include <cmath>
#include <limits>

namespace epilna {

namespace {

void check_simulable(const CompartmentModel& model) {
  if (model.tv_beta)
    throw InvalidInput("exact simulation is not available for time-varying infection rates");
}

// Samples the index of the next event; `total` is the sum of h.
int choose_event(const Vec& h, double total, Rng& rng) {
  const double u = std::uniform_real_distribution<double>(0.0, total)(rng);
  double acc = 0.0;
  for (int e = 0; e < h.size(); ++e) {
    acc += h[e];
    if (u < acc) return e;
  }
  // Round-off: return the last event with positive hazard.
  for (int e = static_cast<int>(h.size()) - 1; e >= 0; --e)
    if (h[e] > 0.0) return e;
  return 0;
}

}  // namespace

Eigen::MatrixXd EventPath::prevalence(const CompartmentModel& model, const Vec& x0) const {
  Eigen::MatrixXd out(grid_cumulative.rows(), model.n_compartments());
  for (Eigen::Index r = 0; r < grid_cumulative.rows(); ++r) {
    const Vec n = grid_cumulative.row(r).transpose();
    out.row(r) = incidence_to_prevalence(model, n, x0).transpose();
  }
  return out;
}

void gillespie_advance(const CompartmentModel& model, const Params& params, Vec& n, double dt,
                       Rng& rng) {
  check_simulable(model);
  double t = 0.0;
  std::exponential_distribution<double> exp1(1.0);
  while (true) {
    const Vec h = hazard_incidence(model, n, params);
    const double total = h.sum();
    if (!(total > 0.0)) return;
    t += exp1(rng) / total;
    if (t >= dt) return;
    n[choose_event(h, total, rng)] += 1.0;
  }
}

EventPath simulate_mjp(const CompartmentModel& model, const Params& params, double t_end,
                       double grid, std::uint64_t seed, const SimulateOptions& options) {
  check_simulable(model);
  if (!(t_end > 0.0) || !(grid > 0.0)) throw InvalidInput("t_end and grid must be positive");
  const double ratio = t_end / grid;
  const long windows = std::lround(ratio);
  if (windows < 1 || std::abs(ratio - static_cast<double>(windows)) > 1e-9 * ratio)
    throw InvalidInput("grid must divide t_end");

  Rng rng = make_stream(seed, "simulate");
  std::exponential_distribution<double> exp1(1.0);

  EventPath path;
  path.grid = grid;
  path.grid_incidence = Eigen::MatrixXi::Zero(windows, model.n_events);
  path.grid_cumulative = Eigen::MatrixXd::Zero(windows + 1, model.n_events);

  Vec n = Vec::Zero(model.n_latent);
  double t = 0.0;
  long window = 0;
  bool dead = false;
  while (window < windows) {
    double next = std::numeric_limits<double>::infinity();
    Vec h;
    double total = 0.0;
    if (!dead) {
      h = hazard_incidence(model, n, params);
      total = h.sum();
      if (total > 0.0)
        next = t + exp1(rng) / total;
      else
        dead = true;
    }
    // Close every window that ends before the next event.
    while (window < windows && next > (window + 1) * grid) {
      path.grid_cumulative.row(window + 1) = n.head(model.n_events).transpose();
      ++window;
    }
    if (window >= windows) break;
    t = next;
    const int e = choose_event(h, total, rng);
    n[e] += 1.0;
    path.grid_incidence(window, e) += 1;
    if (options.record_events) {
      path.times.push_back(t);
      path.event_ids.push_back(e);
    }
  }
  return path;
}

std::vector<double> corrupt(const Eigen::MatrixXi& incidence, const ObsParams& obs,
                            std::uint64_t seed) {
  if (obs.kind == ObsKind::binomial && !(obs.lambda > 0.0 && obs.lambda <= 1.0))
    throw InvalidInput("binomial reporting proportion must lie in (0,1]");
  obs.validate();
  if (obs.target >= incidence.cols()) throw InvalidInput("observation target outside incidence");

  Rng rng = make_stream(seed, "corrupt");
  std::vector<double> y(static_cast<std::size_t>(incidence.rows()));
  for (Eigen::Index t = 0; t < incidence.rows(); ++t) {
    const int m = incidence(t, obs.target);
    if (m < 0) throw InvalidInput("incidence counts must be nonnegative");
    switch (obs.kind) {
      case ObsKind::gaussian:
        y[t] = std::normal_distribution<double>(m, std::sqrt(obs.sigma2))(rng);
        break;
      case ObsKind::binomial:
        y[t] = static_cast<double>(std::binomial_distribution<int>(m, obs.lambda)(rng));
        break;
      case ObsKind::negbinomial: {
        const double mu = obs.lambda * m;
        if (mu <= 0.0) {
          y[t] = 0.0;
          break;
        }
        double rate = mu;
        if (obs.phi > 0.0) {
          const double size = 1.0 / obs.phi;
          rate = std::gamma_distribution<double>(size, mu / size)(rng);
        }
        y[t] = static_cast<double>(std::poisson_distribution<long>(rate)(rng));
        break;
      }
    }
  }
  return y;
}

}  // namespace epilna
