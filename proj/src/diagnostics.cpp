#include "graphflow/diagnostics.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <limits>

namespace graphflow {

namespace {

std::string format_double(double x) {
  if (std::isnan(x)) return "nan";
  char buf[32];
  auto [ptr, ec] = std::to_chars(buf, buf + sizeof(buf), x);
  return std::string(buf, ptr);
}

double sample_spacing(const Trajectory& traj) {
  if (traj.rows.size() < 2) return 0.0;
  return traj.rows[1].t - traj.rows[0].t;
}

}  // namespace

double distance_to_equilibrium(const FlowState& state,
                               const EquilibriumState& eq,
                               const Discretization& grid) {
  if (state.edge_cells.size() != eq.edge_density.size() ||
      state.buffers.size() != eq.buffer_levels.size())
    throw Error(ErrorCode::dimension_mismatch,
                "state and equilibrium layouts differ");
  double distance = 0.0;
  for (std::size_t e = 0; e < state.edge_cells.size(); ++e) {
    if (state.edge_cells[e].size() != eq.edge_density[e].size())
      throw Error(ErrorCode::dimension_mismatch,
                  "state and equilibrium grids differ");
    double edge = 0.0;
    for (std::size_t i = 0; i < state.edge_cells[e].size(); ++i)
      edge += std::abs(state.edge_cells[e][i] - eq.edge_density[e][i]);
    distance += grid.dx * edge;
  }
  for (std::size_t v = 0; v < state.buffers.size(); ++v)
    distance += std::abs(state.buffers[v] - eq.buffer_levels[v]);
  return distance;
}

DecayFit fit_decay_rate(const Trajectory& traj, const Window& window) {
  std::vector<std::pair<double, double>> points;
  for (const auto& row : traj.rows) {
    if (row.t < window.t_begin || row.t > window.t_end) continue;
    if (!(row.distance > 0.0) || !std::isfinite(row.distance)) continue;
    points.emplace_back(row.t, std::log(row.distance));
  }
  if (points.size() < 10)
    throw Error(ErrorCode::insufficient_data,
                "decay fit needs at least 10 rows with positive distance");

  const double n = static_cast<double>(points.size());
  double st = 0.0, sy = 0.0;
  for (const auto& [t, y] : points) {
    st += t;
    sy += y;
  }
  const double mt = st / n, my = sy / n;
  double stt = 0.0, sty = 0.0, syy = 0.0;
  for (const auto& [t, y] : points) {
    stt += (t - mt) * (t - mt);
    sty += (t - mt) * (y - my);
    syy += (y - my) * (y - my);
  }
  DecayFit fit;
  fit.rate = stt > 0.0 ? sty / stt : 0.0;
  fit.r_squared = (stt > 0.0 && syy > 0.0) ? (sty * sty) / (stt * syy) : 1.0;
  return fit;
}

std::optional<double> detect_period(const Trajectory& traj, double tol,
                                    PeriodSignal signal) {
  std::size_t rows = traj.rows.size();
  if (rows < 8) return std::nullopt;
  const double spacing = sample_spacing(traj);
  if (!(spacing > 0.0)) return std::nullopt;
  // The forced end-of-run observation may sit off the lattice; drop it.
  if (std::abs((traj.rows[rows - 1].t - traj.rows[rows - 2].t) - spacing) >
      1e-9 * spacing)
    --rows;

  const std::size_t tail_begin = rows / 2;
  const std::size_t tail_len = rows - tail_begin;
  // Enough overlapping pairs to make the comparison meaningful.
  const std::size_t min_pairs = 4;
  if (tail_len < min_pairs + 1) return std::nullopt;

  auto pair_gap = [&](std::size_t i, std::size_t j) {
    if (signal == PeriodSignal::distance)
      return std::abs(traj.rows[j].distance - traj.rows[i].distance);
    double sup = 0.0;
    const auto& a = traj.rows[i].edge_masses;
    const auto& b = traj.rows[j].edge_masses;
    for (std::size_t e = 0; e < a.size() && e < b.size(); ++e)
      sup = std::max(sup, std::abs(b[e] - a[e]));
    return sup;
  };

  for (std::size_t m = 1; m + min_pairs <= tail_len; ++m) {
    double sup = 0.0;
    for (std::size_t i = tail_begin; i + m < rows; ++i)
      sup = std::max(sup, pair_gap(i, i + m));
    if (sup <= tol) return m * spacing;
  }
  return std::nullopt;
}

Trajectory simulate_trajectory(const FlowState& init,
                               const MatrixBundle& bundle,
                               const Discretization& grid, double horizon,
                               const StepPolicy& policy, int cadence,
                               const EquilibriumState* eq) {
  Trajectory traj;
  auto observer = [&](const FlowState& state) {
    TrajectoryRow row;
    row.t = state.time;
    row.total_mass = total_mass(state, grid);
    row.min_value = min_value(state);
    row.distance = eq ? distance_to_equilibrium(state, *eq, grid)
                      : std::numeric_limits<double>::quiet_NaN();
    row.edge_masses.reserve(state.edge_cells.size());
    for (const auto& cells : state.edge_cells) {
      double edge = 0.0;
      for (double u : cells) edge += u;
      row.edge_masses.push_back(grid.dx * edge);
    }
    traj.rows.push_back(row);
  };
  simulate(init, bundle, grid, horizon, policy, cadence, observer);
  return traj;
}

double operator_norm_probe(const MetricGraph& g, const MatrixBundle& bundle,
                           const Discretization& grid, int basis_size,
                           double horizon, const StepPolicy& policy) {
  if (basis_size < 1)
    throw Error(ErrorCode::invalid_argument, "basis_size must be >= 1");
  const int ne = bundle.edge_count();
  const int nb = bundle.buffer_count();
  const int n = grid.cells;

  const FixedVector w = perron_fixed_vector(bundle);
  const EquilibriumState eq = equilibrium_state(g, bundle, grid, w, 1.0);

  double sup = 0.0;
  int runs = 0;
  auto run_from = [&](const FlowState& init) {
    const FlowState final_state =
        simulate(init, bundle, grid, horizon, policy, 1 << 30, nullptr);
    sup = std::max(sup, distance_to_equilibrium(final_state, eq, grid));
    ++runs;
  };

  for (int v = 0; v < nb && runs < basis_size; ++v) {
    FlowState init = zero_state(bundle, grid);
    init.buffers[v] = 1.0;
    run_from(init);
  }
  const int cell_slots = basis_size - runs;
  if (cell_slots > 0) {
    const long total_cells = static_cast<long>(ne) * n;
    for (int s = 0; s < cell_slots && s < total_cells; ++s) {
      // Spread indicator cells uniformly across the flattened cell space.
      const long flat =
          (s * total_cells + total_cells / 2) / std::max(1, cell_slots);
      FlowState init = zero_state(bundle, grid);
      init.edge_cells[flat / n][flat % n] = 1.0 / grid.dx;
      run_from(init);
    }
  }
  return sup;
}

std::string trajectory_csv(const Trajectory& traj, const Window* rate_window) {
  std::string out = "t,total_mass,min_value,distance,rate_window_flag\n";
  for (const auto& row : traj.rows) {
    const bool flagged = rate_window && row.t >= rate_window->t_begin &&
                         row.t <= rate_window->t_end;
    out += format_double(row.t);
    out += ',';
    out += format_double(row.total_mass);
    out += ',';
    out += format_double(row.min_value);
    out += ',';
    out += format_double(row.distance);
    out += ',';
    out += flagged ? '1' : '0';
    out += '\n';
  }
  return out;
}

}  // namespace graphflow
