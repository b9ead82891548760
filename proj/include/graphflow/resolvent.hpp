#pragma once

#include <Eigen/SparseCore>
#include <cstdint>
#include <string>
#include <vector>

#include "graphflow/solver.hpp"

namespace graphflow {

struct ResolventInput {
  double lambda = 1.0;
  std::vector<std::vector<double>> edge_rhs;  // sampled at cell centers
  std::vector<double> buffer_rhs;
};

struct ResolventOutput {
  FlowState f;
  std::vector<double> mu;  // boundary constants, one per edge
  double residual = 0.0;   // l1 residual under the discrete operator
  int terms = 0;           // series terms used (series route only)
};

/// Closed-form resolvent of the transport part: exponential integrating
/// factors with trapezoidal quadrature on the grid, buffer components solved
/// exactly, boundary constants from the edge-coupling linear system.
/// Throws Error(system_singular) when that system is numerically singular and
/// Error(quadrature_overflow) when the integrating factor overflows.
ResolventOutput resolvent_C(const MetricGraph& g, const MatrixBundle& bundle,
                            const Discretization& grid,
                            const ResolventInput& input);

/// Neumann series for the full generator built from the discrete transport
/// resolvent and the trace-deposit perturbation. Terms are summed until their
/// norm drops below tol; Error(series_diverging) when the norms fail to
/// decrease for five consecutive terms or the term budget is exhausted.
ResolventOutput resolvent_A_series(const MetricGraph& g,
                                   const MatrixBundle& bundle,
                                   const Discretization& grid,
                                   const ResolventInput& input, double tol,
                                   int max_terms = 200);

/// Direct sparse solve of the full discrete resolvent equation.
FlowState resolvent_A_direct(const MetricGraph& g, const MatrixBundle& bundle,
                             const Discretization& grid,
                             const ResolventInput& input);

/// Sparse matrix of the discrete generator, assembled from the solver
/// stencil. Unknown order: edge cells in edge-major order, then buffers.
Eigen::SparseMatrix<double> assemble_generator(const MatrixBundle& bundle,
                                               const Discretization& grid,
                                               GeneratorPart part);

/// Conservative a-priori lower bound on lambda for the boundary system
/// solvability, from the diagonal-dominance estimate. Reported for
/// information; the runtime detector governs behavior.
double apriori_lambda_threshold(const MetricGraph& g,
                                const MatrixBundle& bundle);

/// Desk-scale surrogate suite on random generator-like matrices plus a
/// positive rank-one perturbation with zero total column sums: Neumann series
/// vs direct inverse, uniform resolvent bound, and positivity/stochasticity
/// of the matrix exponential.
struct PerturbationCheckReport {
  int dim = 0;
  int trials = 0;
  std::uint64_t seed = 0;
  int failures = 0;
  double max_colsum_error = 0.0;
  double min_exp_entry = 0.0;
  double max_neumann_gap = 0.0;
  double max_lambda_resolvent_norm = 0.0;
  std::vector<std::string> notes;
};

PerturbationCheckReport matrix_perturbation_check(int dim, int trials,
                                                  std::uint64_t seed);

}  // namespace graphflow
