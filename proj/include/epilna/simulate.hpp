#pragma once

#include <cstdint>
#include <vector>

#include "epilna/common.hpp"
#include "epilna/models.hpp"

namespace epilna {

// An exact jump-process realisation summarised on a fixed observation grid.
struct EventPath {
  std::vector<double> times;    // event times (empty unless recorded)
  std::vector<int> event_ids;   // event type per jump (empty unless recorded)
  Eigen::MatrixXi grid_incidence;   // windows x events: counts per window
  Eigen::MatrixXd grid_cumulative;  // (windows + 1) x events: N at grid times
  double grid = 0.0;

  Eigen::MatrixXd prevalence(const CompartmentModel& model, const Vec& x0) const;
};

struct SimulateOptions {
  bool record_events = true;  // keep the full event list (off for large populations)
};

// Gillespie direct method. Window counts are accumulated online; the run stops
// early once every hazard is zero and the remaining windows record no events.
// Time-varying rate models have no exact jump representation and are rejected.
EventPath simulate_mjp(const CompartmentModel& model, const Params& params, double t_end,
                       double grid, std::uint64_t seed, const SimulateOptions& options = {});

// Advances integer incidence n over [0, dt) with the direct method.
void gillespie_advance(const CompartmentModel& model, const Params& params, Vec& n, double dt,
                       Rng& rng);

// Draws y_t independently per window from the observation model applied to
// the selected column of `incidence` (windows x events).
std::vector<double> corrupt(const Eigen::MatrixXi& incidence, const ObsParams& obs,
                            std::uint64_t seed);

}  // namespace epilna
