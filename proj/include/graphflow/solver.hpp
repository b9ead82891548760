#pragma once

#include <functional>
#include <optional>
#include <vector>

#include "graphflow/matrices.hpp"

namespace graphflow {

/// Uniform finite-volume grid on the normalized edges: n cells per edge,
/// velocities sampled at the n+1 interfaces and the n cell centers.
struct Discretization {
  int cells = 128;
  double dx = 0.0;
  std::vector<std::vector<double>> iface_vel;   // per edge, size cells+1
  std::vector<std::vector<double>> center_vel;  // per edge, size cells
  double max_iface_vel = 0.0;
};

/// Samples the grid. Requires a normalized graph (unit edge lengths) and
/// n >= 2.
Discretization make_grid(const MetricGraph& g, int cells);

/// Cell-averaged densities per edge plus buffer mass levels.
struct FlowState {
  std::vector<std::vector<double>> edge_cells;
  std::vector<double> buffers;
  double time = 0.0;
};

FlowState zero_state(const MatrixBundle& bundle, const Discretization& grid);

bool same_shape(const FlowState& a, const FlowState& b);

/// Time step selection: dt = theta * min(dx / max sampled velocity,
/// 1 / max buffer rate). A caller-supplied dt must satisfy the same CFL and
/// buffer constraints or step() refuses it.
struct StepPolicy {
  double theta = 0.9;
  std::optional<double> dt_override;
};

double stable_dt(const MatrixBundle& bundle, const Discretization& grid,
                 const StepPolicy& policy);

/// Flux entering each edge at its tail face:
/// phi = B_NB * (c(0) u(0)) + B_B * (k b), with the outflow trace taken from
/// the first cell average.
std::vector<double> boundary_inflows(const FlowState& state,
                                     const MatrixBundle& bundle,
                                     const Discretization& grid);

enum class GeneratorPart {
  full,            // transport + boundary coupling + buffer exchange
  transport_only,  // same boundary condition, buffers only decay
  coupling_only,   // trace deposits into buffers, nothing else
};

/// Applies the discrete generator (the solver's own stencil) and returns the
/// time derivative in state layout.
FlowState apply_generator(const FlowState& state, const MatrixBundle& bundle,
                          const Discretization& grid, GeneratorPart part);

/// One explicit conservative upwind step. Throws Error(cfl_violation) when a
/// dt override breaks the stability constraints.
FlowState step(const FlowState& state, const MatrixBundle& bundle,
               const Discretization& grid, const StepPolicy& policy);

/// Steps until time >= horizon, invoking the observer on the initial state,
/// every `cadence` steps and on the final state. Returns the final state.
FlowState simulate(const FlowState& init, const MatrixBundle& bundle,
                   const Discretization& grid, double horizon,
                   const StepPolicy& policy, int cadence,
                   const std::function<void(const FlowState&)>& observer);

/// AL-norm mass of a nonnegative state: sum_e dx * sum_i u + sum_v b.
double total_mass(const FlowState& state, const Discretization& grid);

/// L1 norm in the same weighting (equals total_mass on nonnegative states).
double state_norm(const FlowState& state, const Discretization& grid);

double min_value(const FlowState& state);

}  // namespace graphflow
