#include "graphflow/spectral.hpp"

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <deque>
#include <numeric>

namespace graphflow {

namespace {

// Iterative Tarjan; returns the number of strongly connected components.
int scc_count(const std::vector<std::vector<int>>& adj) {
  const int n = static_cast<int>(adj.size());
  std::vector<int> index(n, -1), low(n, 0), on_stack(n, 0);
  std::vector<int> stack;
  int next_index = 0;
  int components = 0;

  struct Frame {
    int node;
    std::size_t child;
  };
  std::vector<Frame> call;
  for (int root = 0; root < n; ++root) {
    if (index[root] != -1) continue;
    call.push_back({root, 0});
    while (!call.empty()) {
      auto& frame = call.back();
      const int v = frame.node;
      if (frame.child == 0) {
        index[v] = low[v] = next_index++;
        stack.push_back(v);
        on_stack[v] = 1;
      }
      bool descended = false;
      while (frame.child < adj[v].size()) {
        const int w = adj[v][frame.child++];
        if (index[w] == -1) {
          call.push_back({w, 0});
          descended = true;
          break;
        }
        if (on_stack[w]) low[v] = std::min(low[v], index[w]);
      }
      if (descended) continue;
      if (low[v] == index[v]) {
        ++components;
        while (true) {
          const int w = stack.back();
          stack.pop_back();
          on_stack[w] = 0;
          if (w == v) break;
        }
      }
      call.pop_back();
      if (!call.empty())
        low[call.back().node] = std::min(low[call.back().node], low[v]);
    }
  }
  return components;
}

Eigen::MatrixXd dense_adjacency(const MatrixBundle& bundle) {
  return Eigen::MatrixXd(bundle.adjacency);
}

// Least-squares solve of the fixed-vector system with the normalization row.
Eigen::VectorXd homogeneous_fixed_vector(const MatrixBundle& bundle) {
  const int ne = bundle.edge_count();
  Eigen::MatrixXd system(ne + 1, ne);
  system.topRows(ne) =
      dense_adjacency(bundle) - Eigen::MatrixXd::Identity(ne, ne);
  system.bottomRows(1).setOnes();
  Eigen::VectorXd rhs = Eigen::VectorXd::Zero(ne + 1);
  rhs[ne] = 1.0;
  return system.colPivHouseholderQr().solve(rhs);
}

}  // namespace

bool strongly_connected(const MetricGraph& g) {
  const GraphIndex idx = GraphIndex::build(g);
  const int nv = idx.vertex_count();
  if (nv == 0) return false;
  std::vector<std::vector<int>> adj(nv);
  for (int e = 0; e < idx.edge_count(); ++e)
    adj[idx.edge_tail[e]].push_back(idx.edge_head[e]);
  return scc_count(adj) == 1;
}

bool is_irreducible(const MatrixBundle& bundle) {
  const int ne = bundle.edge_count();
  if (ne == 0) return false;
  std::vector<std::vector<int>> adj(ne);
  // Column k of the adjacency matrix lists the edges fed by edge k.
  for (int k = 0; k < ne; ++k)
    for (Eigen::SparseMatrix<double>::InnerIterator it(bundle.adjacency, k); it;
         ++it)
      if (it.value() != 0.0) adj[k].push_back(static_cast<int>(it.row()));
  return scc_count(adj) == 1;
}

FixedVector perron_fixed_vector(const MatrixBundle& bundle, double tol) {
  if (!is_irreducible(bundle))
    throw Error(ErrorCode::not_irreducible,
                "adjacency matrix is not irreducible");
  const int ne = bundle.edge_count();
  const long max_iterations = 1000000;
  const int max_window = 4 * ne;
  const long stall_cap = std::max<long>(4000, 50l * max_window);

  Eigen::VectorXd v = Eigen::VectorXd::Constant(ne, 1.0 / ne);
  std::deque<Eigen::VectorXd> window;
  Eigen::VectorXd window_sum = Eigen::VectorXd::Zero(ne);

  auto finish = [&](Eigen::VectorXd w, long iters, bool fallback) {
    w = w.cwiseMax(0.0);
    const double sum = w.sum();
    if (!(sum > 0.0))
      throw Error(ErrorCode::no_convergence, "fixed vector collapsed to zero");
    w /= sum;
    FixedVector result;
    result.entries.assign(w.data(), w.data() + ne);
    result.residual = (bundle.adjacency * w - w).cwiseAbs().sum();
    result.iterations = iters;
    result.used_fallback = fallback;
    return result;
  };

  for (long iter = 1; iter <= max_iterations; ++iter) {
    v = bundle.adjacency * v;
    window.push_back(v);
    window_sum += v;
    if (static_cast<int>(window.size()) > max_window) {
      window_sum -= window.front();
      window.pop_front();
    }
    const Eigen::VectorXd avg =
        window_sum / static_cast<double>(window.size());
    const double residual = (bundle.adjacency * avg - avg).cwiseAbs().sum();
    if (residual <= tol) return finish(avg, iter, false);
    if (iter >= stall_cap) break;
  }

  Eigen::VectorXd direct = homogeneous_fixed_vector(bundle);
  if (direct.sum() < 0.0) direct = -direct;
  const double residual = (bundle.adjacency * direct - direct).cwiseAbs().sum();
  if (residual > tol)
    throw Error(ErrorCode::no_convergence,
                "fixed vector residual " + std::to_string(residual) +
                    " above tolerance after " + std::to_string(stall_cap) +
                    " iterations and direct solve");
  if (direct.minCoeff() <= 0.0)
    throw Error(ErrorCode::no_convergence,
                "direct fixed vector is not strictly positive");
  return finish(direct, stall_cap, true);
}

UnitEigenvalueReport has_unit_eigenvalue(const MatrixBundle& bundle) {
  UnitEigenvalueReport report;
  Eigen::VectorXd w = homogeneous_fixed_vector(bundle);
  const double scale = w.cwiseAbs().sum();
  if (scale > 0.0) w /= scale;
  report.certificate.assign(w.data(), w.data() + w.size());
  report.residual = (bundle.adjacency * w - w).cwiseAbs().sum();
  report.present = report.residual <= 1e-6;
  return report;
}

EquilibriumState equilibrium_state(const MetricGraph& g,
                                   const MatrixBundle& bundle,
                                   const Discretization& grid,
                                   const FixedVector& w, double target_mass) {
  if (!(target_mass > 0.0))
    throw Error(ErrorCode::zero_mass, "target mass must be positive");
  if (static_cast<int>(w.entries.size()) != bundle.edge_count())
    throw Error(ErrorCode::dimension_mismatch,
                "fixed vector does not match the edge count");
  if (!is_normalized(g))
    throw Error(ErrorCode::invalid_graph,
                "equilibrium requires normalized edges");

  const int ne = bundle.edge_count();
  const int nb = bundle.buffer_count();

  Eigen::VectorXd wv(ne);
  for (int e = 0; e < ne; ++e) wv[e] = w.entries[e];
  Eigen::VectorXd incoming(nb);
  if (nb > 0) incoming = bundle.phi_in_buffered * wv;

  double unscaled = 0.0;
  for (int e = 0; e < ne; ++e) {
    double cell_sum = 0.0;
    for (int i = 0; i < grid.cells; ++i)
      cell_sum += 1.0 / grid.center_vel[e][i];
    unscaled += w.entries[e] * grid.dx * cell_sum;
  }
  for (int v = 0; v < nb; ++v)
    unscaled += incoming[v] / bundle.buffer_rates[v];

  const double alpha = target_mass / unscaled;

  EquilibriumState eq;
  eq.scale = alpha;
  eq.edge_density.resize(ne);
  for (int e = 0; e < ne; ++e) {
    eq.edge_density[e].resize(grid.cells);
    for (int i = 0; i < grid.cells; ++i)
      eq.edge_density[e][i] = alpha * w.entries[e] / grid.center_vel[e][i];
  }
  eq.buffer_levels.resize(nb);
  for (int v = 0; v < nb; ++v)
    eq.buffer_levels[v] = alpha * incoming[v] / bundle.buffer_rates[v];
  return eq;
}

FlowState to_flow_state(const EquilibriumState& eq) {
  FlowState s;
  s.edge_cells = eq.edge_density;
  s.buffers = eq.buffer_levels;
  return s;
}

double kernel_residual(const FlowState& state, const MatrixBundle& bundle,
                       const Discretization& grid) {
  const FlowState deriv =
      apply_generator(state, bundle, grid, GeneratorPart::full);
  return state_norm(deriv, grid);
}

double kernel_residual(const EquilibriumState& eq, const MatrixBundle& bundle,
                       const Discretization& grid) {
  return kernel_residual(to_flow_state(eq), bundle, grid);
}

}  // namespace graphflow
