#pragma once

#include <optional>
#include <string>
#include <vector>

#include "graphflow/spectral.hpp"

namespace graphflow {

struct TrajectoryRow {
  double t = 0.0;
  double total_mass = 0.0;
  double min_value = 0.0;
  double distance = 0.0;  // NaN when no equilibrium is available
  std::vector<double> edge_masses;
};

struct Trajectory {
  std::vector<TrajectoryRow> rows;
};

/// L1 distance between a state and the equilibrium on the same grid.
double distance_to_equilibrium(const FlowState& state,
                               const EquilibriumState& eq,
                               const Discretization& grid);

struct Window {
  double t_begin = 0.0;
  double t_end = 0.0;
};

struct DecayFit {
  double rate = 0.0;
  double r_squared = 0.0;
};

/// Least-squares slope of log(distance) against t over the window. Requires
/// at least 10 rows with positive distance; Error(insufficient_data)
/// otherwise.
DecayFit fit_decay_rate(const Trajectory& traj, const Window& window);

/// Which scalar series the periodicity scan inspects. The L1 distance is
/// nearly shift invariant for circulating profiles, so transport periodicity
/// shows up far more sharply in the per-edge masses.
enum class PeriodSignal { distance, edge_mass };

/// Smallest lattice shift under which the tail of the chosen signal repeats
/// within tol, or nullopt. A constant tail reports one sample spacing.
std::optional<double> detect_period(const Trajectory& traj, double tol,
                                    PeriodSignal signal = PeriodSignal::distance);

/// Runs the solver and records one row per observation; distance is measured
/// against eq when provided.
Trajectory simulate_trajectory(const FlowState& init,
                               const MatrixBundle& bundle,
                               const Discretization& grid, double horizon,
                               const StepPolicy& policy, int cadence,
                               const EquilibriumState* eq);

/// Simulates a family of unit-mass indicator initial states (buffers first,
/// then cells spread across edges, up to basis_size runs) and returns the
/// largest terminal distance to the shared unit-mass equilibrium. A finite
/// probe, not an operator norm.
double operator_norm_probe(const MetricGraph& g, const MatrixBundle& bundle,
                           const Discretization& grid, int basis_size,
                           double horizon, const StepPolicy& policy);

/// CSV with header t,total_mass,min_value,distance,rate_window_flag.
std::string trajectory_csv(const Trajectory& traj, const Window* rate_window);

}  // namespace graphflow
