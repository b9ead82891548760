#pragma once

#include <vector>

#include "graphflow/matrices.hpp"
#include "graphflow/solver.hpp"

namespace graphflow {

/// True iff every ordered vertex pair is joined by a directed path.
bool strongly_connected(const MetricGraph& g);

/// True iff the directed graph on edges induced by the nonzero pattern of the
/// adjacency matrix is strongly connected. For valid graphs this agrees with
/// strongly_connected on the vertex level.
bool is_irreducible(const MatrixBundle& bundle);

/// Normalized nonnegative fixed vector of the adjacency matrix.
struct FixedVector {
  std::vector<double> entries;  // indexed by edge, sums to 1
  double residual = 0.0;        // l1 norm of (B w - w)
  long iterations = 0;
  bool used_fallback = false;
};

/// Cesaro-averaged power iteration with a dense homogeneous-system fallback
/// when the averaging stalls. Requires an irreducible adjacency matrix.
FixedVector perron_fixed_vector(const MatrixBundle& bundle, double tol = 1e-10);

struct UnitEigenvalueReport {
  bool present = false;
  std::vector<double> certificate;  // fixed vector witnessing the eigenvalue
  double residual = 0.0;
};

/// For a finite column-stochastic adjacency matrix this always holds; the
/// report carries a certificate vector so the hypothesis is explicit.
UnitEigenvalueReport has_unit_eigenvalue(const MatrixBundle& bundle);

/// The explicit stationary state: edge density alpha * w_e / c_e(x) sampled
/// at cell centers, buffer level alpha / k_v * (incoming fixed-vector mass).
struct EquilibriumState {
  std::vector<std::vector<double>> edge_density;
  std::vector<double> buffer_levels;
  double scale = 1.0;  // alpha
};

/// Scales the fixed vector so the state's total mass equals target_mass.
/// Throws Error(zero_mass) for a nonpositive target.
EquilibriumState equilibrium_state(const MetricGraph& g,
                                   const MatrixBundle& bundle,
                                   const Discretization& grid,
                                   const FixedVector& w, double target_mass);

FlowState to_flow_state(const EquilibriumState& eq);

/// L1 norm of the discrete generator applied to the state; vanishes on the
/// equilibrium as the grid refines.
double kernel_residual(const FlowState& state, const MatrixBundle& bundle,
                       const Discretization& grid);
double kernel_residual(const EquilibriumState& eq, const MatrixBundle& bundle,
                       const Discretization& grid);

}  // namespace graphflow
