#include "graphflow/solver.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace graphflow {

namespace {

Eigen::VectorXd outflow_traces(const FlowState& state,
                               const Discretization& grid) {
  const int ne = static_cast<int>(state.edge_cells.size());
  Eigen::VectorXd out(ne);
  for (int e = 0; e < ne; ++e)
    out[e] = grid.iface_vel[e][0] * state.edge_cells[e][0];
  return out;
}

Eigen::VectorXd buffer_emissions(const FlowState& state,
                                 const MatrixBundle& bundle) {
  const int nb = bundle.buffer_count();
  Eigen::VectorXd kb(nb);
  for (int v = 0; v < nb; ++v) kb[v] = bundle.buffer_rates[v] * state.buffers[v];
  return kb;
}

void check_dimensions(const FlowState& state, const MatrixBundle& bundle,
                      const Discretization& grid) {
  if (static_cast<int>(state.edge_cells.size()) != bundle.edge_count() ||
      static_cast<int>(state.buffers.size()) != bundle.buffer_count())
    throw Error(ErrorCode::dimension_mismatch,
                "state does not match the graph layout");
  for (const auto& cells : state.edge_cells)
    if (static_cast<int>(cells.size()) != grid.cells)
      throw Error(ErrorCode::dimension_mismatch,
                  "state does not match the grid resolution");
}

}  // namespace

Discretization make_grid(const MetricGraph& g, int cells) {
  if (cells < 2)
    throw Error(ErrorCode::invalid_argument, "grid needs at least 2 cells");
  if (!is_normalized(g))
    throw Error(ErrorCode::invalid_graph,
                "grid requires unit edge lengths; apply normalize_edges first");
  Discretization grid;
  grid.cells = cells;
  grid.dx = 1.0 / cells;
  grid.iface_vel.resize(g.edges.size());
  grid.center_vel.resize(g.edges.size());
  grid.max_iface_vel = 0.0;
  for (std::size_t e = 0; e < g.edges.size(); ++e) {
    const auto& profile = g.edges[e].velocity;
    auto& iv = grid.iface_vel[e];
    auto& cv = grid.center_vel[e];
    iv.resize(cells + 1);
    cv.resize(cells);
    for (int j = 0; j <= cells; ++j) {
      iv[j] = profile.value(j * grid.dx);
      grid.max_iface_vel = std::max(grid.max_iface_vel, iv[j]);
    }
    for (int i = 0; i < cells; ++i) cv[i] = profile.value((i + 0.5) * grid.dx);
  }
  return grid;
}

FlowState zero_state(const MatrixBundle& bundle, const Discretization& grid) {
  FlowState s;
  s.edge_cells.assign(bundle.edge_count(),
                      std::vector<double>(grid.cells, 0.0));
  s.buffers.assign(bundle.buffer_count(), 0.0);
  return s;
}

bool same_shape(const FlowState& a, const FlowState& b) {
  if (a.edge_cells.size() != b.edge_cells.size() ||
      a.buffers.size() != b.buffers.size())
    return false;
  for (std::size_t e = 0; e < a.edge_cells.size(); ++e)
    if (a.edge_cells[e].size() != b.edge_cells[e].size()) return false;
  return true;
}

double stable_dt(const MatrixBundle& bundle, const Discretization& grid,
                 const StepPolicy& policy) {
  if (!(policy.theta > 0.0 && policy.theta <= 1.0))
    throw Error(ErrorCode::invalid_argument, "theta must lie in (0,1]");
  double dt = grid.dx / grid.max_iface_vel;
  for (double k : bundle.buffer_rates) dt = std::min(dt, 1.0 / k);
  return policy.theta * dt;
}

std::vector<double> boundary_inflows(const FlowState& state,
                                     const MatrixBundle& bundle,
                                     const Discretization& grid) {
  check_dimensions(state, bundle, grid);
  const Eigen::VectorXd out = outflow_traces(state, grid);
  const Eigen::VectorXd kb = buffer_emissions(state, bundle);
  Eigen::VectorXd phi = bundle.b_nb * out;
  if (bundle.buffer_count() > 0) phi += bundle.b_buf * kb;
  return std::vector<double>(phi.data(), phi.data() + phi.size());
}

FlowState apply_generator(const FlowState& state, const MatrixBundle& bundle,
                          const Discretization& grid, GeneratorPart part) {
  check_dimensions(state, bundle, grid);
  const int ne = bundle.edge_count();
  const int nb = bundle.buffer_count();
  const int n = grid.cells;

  FlowState deriv = zero_state(bundle, grid);
  deriv.time = state.time;

  const Eigen::VectorXd out = outflow_traces(state, grid);
  const Eigen::VectorXd kb = buffer_emissions(state, bundle);

  if (part != GeneratorPart::coupling_only) {
    Eigen::VectorXd phi = bundle.b_nb * out;
    if (nb > 0) phi += bundle.b_buf * kb;
    for (int e = 0; e < ne; ++e) {
      const auto& u = state.edge_cells[e];
      const auto& iv = grid.iface_vel[e];
      auto& du = deriv.edge_cells[e];
      // Upwind face fluxes: interface j takes the trace from cell j (the
      // side mass arrives from); the tail face carries the routed inflow.
      double flux_low = iv[0] * u[0];
      for (int i = 0; i < n; ++i) {
        const double flux_high = (i + 1 < n) ? iv[i + 1] * u[i + 1] : phi[e];
        du[i] = (flux_high - flux_low) / grid.dx;
        flux_low = flux_high;
      }
    }
    for (int v = 0; v < nb; ++v) deriv.buffers[v] = -kb[v];
  }
  if (part != GeneratorPart::transport_only && nb > 0) {
    const Eigen::VectorXd inflow = bundle.phi_in_buffered * out;
    for (int v = 0; v < nb; ++v) deriv.buffers[v] += inflow[v];
  }
  return deriv;
}

FlowState step(const FlowState& state, const MatrixBundle& bundle,
               const Discretization& grid, const StepPolicy& policy) {
  const double dt =
      policy.dt_override ? *policy.dt_override : stable_dt(bundle, grid, policy);
  const double slack = 1.0 + 1e-12;
  if (dt <= 0.0 || dt * grid.max_iface_vel > grid.dx * slack)
    throw Error(ErrorCode::cfl_violation,
                "dt violates the CFL constraint dt*c <= dx");
  for (double k : bundle.buffer_rates)
    if (dt * k > slack)
      throw Error(ErrorCode::cfl_violation,
                  "dt violates the buffer constraint dt*k <= 1");

  const FlowState deriv = apply_generator(state, bundle, grid, GeneratorPart::full);
  FlowState next = state;
  for (std::size_t e = 0; e < next.edge_cells.size(); ++e)
    for (int i = 0; i < grid.cells; ++i)
      next.edge_cells[e][i] += dt * deriv.edge_cells[e][i];
  for (std::size_t v = 0; v < next.buffers.size(); ++v)
    next.buffers[v] += dt * deriv.buffers[v];
  next.time = state.time + dt;
  return next;
}

FlowState simulate(const FlowState& init, const MatrixBundle& bundle,
                   const Discretization& grid, double horizon,
                   const StepPolicy& policy, int cadence,
                   const std::function<void(const FlowState&)>& observer) {
  if (horizon < 0.0)
    throw Error(ErrorCode::invalid_argument, "horizon must be nonnegative");
  if (cadence < 1)
    throw Error(ErrorCode::invalid_argument, "cadence must be >= 1");
  const double dt =
      policy.dt_override ? *policy.dt_override : stable_dt(bundle, grid, policy);
  const long steps =
      horizon > 0.0 ? static_cast<long>(std::ceil(horizon / dt - 1e-12)) : 0;

  FlowState current = init;
  if (observer) observer(current);
  StepPolicy fixed = policy;
  fixed.dt_override = dt;
  for (long s = 1; s <= steps; ++s) {
    current = step(current, bundle, grid, fixed);
    current.time = init.time + static_cast<double>(s) * dt;
    if (observer && (s % cadence == 0 || s == steps)) observer(current);
  }
  return current;
}

double total_mass(const FlowState& state, const Discretization& grid) {
  double mass = 0.0;
  for (const auto& cells : state.edge_cells) {
    double edge = 0.0;
    for (double u : cells) edge += u;
    mass += grid.dx * edge;
  }
  for (double b : state.buffers) mass += b;
  return mass;
}

double state_norm(const FlowState& state, const Discretization& grid) {
  double norm = 0.0;
  for (const auto& cells : state.edge_cells) {
    double edge = 0.0;
    for (double u : cells) edge += std::abs(u);
    norm += grid.dx * edge;
  }
  for (double b : state.buffers) norm += std::abs(b);
  return norm;
}

double min_value(const FlowState& state) {
  double m = std::numeric_limits<double>::infinity();
  for (const auto& cells : state.edge_cells)
    for (double u : cells) m = std::min(m, u);
  for (double b : state.buffers) m = std::min(m, b);
  return m;
}

}  // namespace graphflow
