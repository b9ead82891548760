#include "graphflow/resolvent.hpp"

#include <Eigen/Dense>
#include <Eigen/SparseLU>
#include <unsupported/Eigen/MatrixFunctions>

#include <algorithm>
#include <cmath>
#include <random>
#include <sstream>

namespace graphflow {

namespace {

int flat_size(const MatrixBundle& bundle, const Discretization& grid) {
  return bundle.edge_count() * grid.cells + bundle.buffer_count();
}

Eigen::VectorXd flatten(const FlowState& s, const Discretization& grid) {
  const int n = grid.cells;
  Eigen::VectorXd v(static_cast<int>(s.edge_cells.size()) * n +
                    static_cast<int>(s.buffers.size()));
  int at = 0;
  for (const auto& cells : s.edge_cells)
    for (int i = 0; i < n; ++i) v[at++] = cells[i];
  for (double b : s.buffers) v[at++] = b;
  return v;
}

FlowState unflatten(const Eigen::VectorXd& v, const MatrixBundle& bundle,
                    const Discretization& grid) {
  FlowState s = zero_state(bundle, grid);
  int at = 0;
  for (auto& cells : s.edge_cells)
    for (int i = 0; i < grid.cells; ++i) cells[i] = v[at++];
  for (auto& b : s.buffers) b = v[at++];
  return s;
}

// AL-norm weights: dx on cell entries, 1 on buffer entries.
double flat_norm(const Eigen::VectorXd& v, const MatrixBundle& bundle,
                 const Discretization& grid) {
  const int cells = bundle.edge_count() * grid.cells;
  double norm = 0.0;
  for (int i = 0; i < cells; ++i) norm += std::abs(v[i]);
  norm *= grid.dx;
  for (int i = cells; i < v.size(); ++i) norm += std::abs(v[i]);
  return norm;
}

void check_input(const ResolventInput& input, const MatrixBundle& bundle,
                 const Discretization& grid) {
  if (!(input.lambda > 0.0))
    throw Error(ErrorCode::invalid_argument, "lambda must be positive");
  if (static_cast<int>(input.edge_rhs.size()) != bundle.edge_count() ||
      static_cast<int>(input.buffer_rhs.size()) != bundle.buffer_count())
    throw Error(ErrorCode::dimension_mismatch,
                "resolvent input does not match the graph layout");
  for (const auto& cells : input.edge_rhs)
    if (static_cast<int>(cells.size()) != grid.cells)
      throw Error(ErrorCode::dimension_mismatch,
                  "resolvent input does not match the grid resolution");
}

FlowState input_state(const ResolventInput& input) {
  FlowState s;
  s.edge_cells = input.edge_rhs;
  s.buffers = input.buffer_rhs;
  return s;
}

double operator_norm_1(const Eigen::MatrixXd& m) {
  return m.cwiseAbs().colwise().sum().maxCoeff();
}

double rand_unit(std::mt19937_64& rng) {
  return static_cast<double>(rng() >> 11) * 0x1.0p-53;
}

}  // namespace

ResolventOutput resolvent_C(const MetricGraph& g, const MatrixBundle& bundle,
                            const Discretization& grid,
                            const ResolventInput& input) {
  check_input(input, bundle, grid);
  const int ne = bundle.edge_count();
  const int nb = bundle.buffer_count();
  const int n = grid.cells;
  const double lambda = input.lambda;
  const double h = 0.5 * grid.dx;

  // Integrating factor exponent at interfaces and centers, trapezoid on the
  // half-step grid; the derivative of the profile is exact.
  std::vector<std::vector<double>> exponent_center(ne);
  std::vector<double> p(ne);
  for (int e = 0; e < ne; ++e) {
    const auto& profile = g.edges[e].velocity;
    auto d_of = [&](double x) {
      return (lambda - profile.derivative(x)) / profile.value(x);
    };
    exponent_center[e].resize(n);
    double acc = 0.0;
    double prev = d_of(0.0);
    for (int m = 1; m <= 2 * n; ++m) {
      const double x = m * h;
      const double cur = d_of(x);
      acc += 0.5 * h * (prev + cur);
      prev = cur;
      if (m % 2 == 1) exponent_center[e][(m - 1) / 2] = acc;
    }
    if (acc > 700.0)
      throw Error(ErrorCode::quadrature_overflow,
                  "integrating factor overflows; lower lambda or refine grid");
    p[e] = std::exp(acc);
  }

  // Per-cell contributions of the source integral and its backward tails.
  Eigen::VectorXd q(ne);
  std::vector<std::vector<double>> tail(ne);
  for (int e = 0; e < ne; ++e) {
    tail[e].resize(n);
    double running = 0.0;
    for (int i = n - 1; i >= 0; --i) {
      const double contribution = input.edge_rhs[e][i] /
                                  grid.center_vel[e][i] *
                                  std::exp(-exponent_center[e][i]) * grid.dx;
      tail[e][i] = running + 0.5 * contribution;
      running += contribution;
    }
    q[e] = running;
  }

  // Buffer components are closed form.
  std::vector<double> b(nb);
  Eigen::VectorXd kb(nb);
  for (int v = 0; v < nb; ++v) {
    b[v] = input.buffer_rhs[v] / (lambda + bundle.buffer_rates[v]);
    kb[v] = bundle.buffer_rates[v] * b[v];
  }

  // Boundary system for the constants mu.
  Eigen::VectorXd c0(ne), c1(ne);
  for (int e = 0; e < ne; ++e) {
    c0[e] = grid.iface_vel[e][0];
    c1[e] = grid.iface_vel[e][n];
  }
  Eigen::MatrixXd system = -Eigen::MatrixXd(bundle.b_nb) * c0.asDiagonal();
  for (int e = 0; e < ne; ++e) system(e, e) += c1[e] * p[e];

  Eigen::VectorXd rhs =
      Eigen::MatrixXd(bundle.b_nb) * (c0.array() * q.array()).matrix();
  if (nb > 0) rhs += Eigen::MatrixXd(bundle.b_buf) * kb;

  Eigen::FullPivLU<Eigen::MatrixXd> lu(system);
  const Eigen::VectorXd pivots = lu.matrixLU().diagonal().cwiseAbs();
  const double pivot_max = pivots.maxCoeff();
  const double pivot_min = pivots.minCoeff();
  if (!(pivot_max > 0.0) || pivot_min < 1e-12 * pivot_max)
    throw Error(ErrorCode::system_singular,
                "boundary system is numerically singular; increase lambda");
  const Eigen::VectorXd mu = lu.solve(rhs);

  ResolventOutput out;
  out.f = zero_state(bundle, grid);
  for (int e = 0; e < ne; ++e)
    for (int i = 0; i < n; ++i)
      out.f.edge_cells[e][i] =
          std::exp(exponent_center[e][i]) * (mu[e] + tail[e][i]);
  out.f.buffers = b;
  out.mu.assign(mu.data(), mu.data() + ne);

  const FlowState applied =
      apply_generator(out.f, bundle, grid, GeneratorPart::transport_only);
  double residual = 0.0;
  for (int e = 0; e < ne; ++e) {
    double edge = 0.0;
    for (int i = 0; i < n; ++i)
      edge += std::abs(lambda * out.f.edge_cells[e][i] -
                       applied.edge_cells[e][i] - input.edge_rhs[e][i]);
    residual += grid.dx * edge;
  }
  for (int v = 0; v < nb; ++v)
    residual += std::abs(lambda * out.f.buffers[v] - applied.buffers[v] -
                         input.buffer_rhs[v]);
  out.residual = residual;
  return out;
}

Eigen::SparseMatrix<double> assemble_generator(const MatrixBundle& bundle,
                                               const Discretization& grid,
                                               GeneratorPart part) {
  const int size = flat_size(bundle, grid);
  std::vector<Eigen::Triplet<double>> triplets;
  FlowState basis = zero_state(bundle, grid);
  Eigen::VectorXd flat = Eigen::VectorXd::Zero(size);
  for (int j = 0; j < size; ++j) {
    flat[j] = 1.0;
    basis = unflatten(flat, bundle, grid);
    const FlowState column = apply_generator(basis, bundle, grid, part);
    const Eigen::VectorXd col = flatten(column, grid);
    for (int i = 0; i < size; ++i)
      if (col[i] != 0.0) triplets.emplace_back(i, j, col[i]);
    flat[j] = 0.0;
  }
  Eigen::SparseMatrix<double> m(size, size);
  m.setFromTriplets(triplets.begin(), triplets.end());
  m.makeCompressed();
  return m;
}

FlowState resolvent_A_direct(const MetricGraph&, const MatrixBundle& bundle,
                             const Discretization& grid,
                             const ResolventInput& input) {
  check_input(input, bundle, grid);
  const int size = flat_size(bundle, grid);
  Eigen::SparseMatrix<double> system =
      -assemble_generator(bundle, grid, GeneratorPart::full);
  for (int j = 0; j < size; ++j) system.coeffRef(j, j) += input.lambda;
  system.makeCompressed();
  Eigen::SparseLU<Eigen::SparseMatrix<double>> lu(system);
  if (lu.info() != Eigen::Success)
    throw Error(ErrorCode::system_singular,
                "discrete resolvent system could not be factored");
  const Eigen::VectorXd sol = lu.solve(flatten(input_state(input), grid));
  return unflatten(sol, bundle, grid);
}

ResolventOutput resolvent_A_series(const MetricGraph&,
                                   const MatrixBundle& bundle,
                                   const Discretization& grid,
                                   const ResolventInput& input, double tol,
                                   int max_terms) {
  check_input(input, bundle, grid);
  if (!(tol > 0.0))
    throw Error(ErrorCode::invalid_argument, "series tolerance must be positive");
  const int size = flat_size(bundle, grid);

  Eigen::SparseMatrix<double> transport =
      -assemble_generator(bundle, grid, GeneratorPart::transport_only);
  for (int j = 0; j < size; ++j) transport.coeffRef(j, j) += input.lambda;
  transport.makeCompressed();
  Eigen::SparseLU<Eigen::SparseMatrix<double>> lu(transport);
  if (lu.info() != Eigen::Success)
    throw Error(ErrorCode::system_singular,
                "transport resolvent system could not be factored");
  const Eigen::SparseMatrix<double> coupling =
      assemble_generator(bundle, grid, GeneratorPart::coupling_only);

  Eigen::VectorXd term = lu.solve(flatten(input_state(input), grid));
  Eigen::VectorXd sum = term;
  double prev_norm = flat_norm(term, bundle, grid);
  int stalled = 0;
  int terms = 1;
  while (prev_norm > tol) {
    if (terms >= max_terms)
      throw Error(ErrorCode::series_diverging,
                  "series did not reach tolerance within " +
                      std::to_string(max_terms) +
                      " terms; lambda is too small");
    term = lu.solve(coupling * term);
    sum += term;
    ++terms;
    const double norm = flat_norm(term, bundle, grid);
    stalled = norm >= prev_norm ? stalled + 1 : 0;
    if (stalled >= 5)
      throw Error(ErrorCode::series_diverging,
                  "series terms stopped decreasing; lambda is too small");
    prev_norm = norm;
  }

  ResolventOutput out;
  out.f = unflatten(sum, bundle, grid);
  out.terms = terms;
  const FlowState applied =
      apply_generator(out.f, bundle, grid, GeneratorPart::full);
  const Eigen::VectorXd residual_vec = input.lambda * sum -
                                       flatten(applied, grid) -
                                       flatten(input_state(input), grid);
  out.residual = flat_norm(residual_vec, bundle, grid);
  return out;
}

double apriori_lambda_threshold(const MetricGraph& g,
                                const MatrixBundle& bundle) {
  double c_min = std::numeric_limits<double>::infinity();
  double c_max = 0.0;
  double w11_sup = 0.0;
  double c1_min = std::numeric_limits<double>::infinity();
  for (const auto& e : g.edges) {
    c_min = std::min(c_min, e.velocity.min_value());
    c_max = std::max(c_max, e.velocity.max_value());
    w11_sup = std::max(w11_sup, e.velocity.w11_norm());
    c1_min = std::min(c1_min, e.velocity.value(1.0));
  }
  Eigen::VectorXd c0(bundle.edge_count());
  for (int e = 0; e < bundle.edge_count(); ++e)
    c0[e] = g.edges[e].velocity.value(0.0);
  const double routed =
      operator_norm_1(Eigen::MatrixXd(bundle.b_nb) * c0.asDiagonal());
  if (routed <= 0.0) return 0.0;
  const double lambda =
      c_max * (std::log(routed / c1_min) + w11_sup / c_min);
  return std::max(0.0, lambda);
}

namespace {

struct PairMetrics {
  bool ok = true;
  double colsum_error = 0.0;
  double min_entry = 0.0;
  double neumann_gap = 0.0;
  double lambda_norm_max = 0.0;
  std::string note;
};

PairMetrics check_pair(const Eigen::MatrixXd& a0, const Eigen::MatrixXd& b0) {
  PairMetrics m;
  const int dim = static_cast<int>(a0.rows());
  const Eigen::MatrixXd identity = Eigen::MatrixXd::Identity(dim, dim);
  const Eigen::MatrixXd full = a0 + b0;

  const double lambdas[] = {1.0, 2.0, 5.0, 10.0, 20.0, 50.0, 100.0};
  double series_lambda = 0.0;
  for (double lambda : lambdas) {
    const Eigen::MatrixXd resolvent = (lambda * identity - a0).inverse();
    m.lambda_norm_max =
        std::max(m.lambda_norm_max, operator_norm_1(lambda * resolvent));
    if (series_lambda == 0.0 &&
        operator_norm_1(resolvent * b0) < 0.9)
      series_lambda = lambda;
  }
  if (m.lambda_norm_max > 1.0 + 1e-10) {
    m.ok = false;
    m.note = "resolvent bound exceeded";
  }
  if (series_lambda == 0.0) {
    m.ok = false;
    m.note = "no lambda with contracting series factor";
    return m;
  }

  const Eigen::MatrixXd resolvent =
      (series_lambda * identity - a0).inverse();
  const Eigen::MatrixXd factor = resolvent * b0;
  Eigen::MatrixXd term = resolvent;
  Eigen::MatrixXd series = resolvent;
  for (int k = 0; k < 10000; ++k) {
    term = factor * term;
    series += term;
    if (operator_norm_1(term) < 1e-16) break;
  }
  const Eigen::MatrixXd direct =
      (series_lambda * identity - full).inverse();
  m.neumann_gap = operator_norm_1(series - direct);
  if (m.neumann_gap > 1e-10) {
    m.ok = false;
    m.note = "neumann series disagrees with the inverse";
  }

  m.min_entry = std::numeric_limits<double>::infinity();
  for (double t : {0.5, 1.0, 2.0}) {
    const Eigen::MatrixXd expm = (full * t).exp();
    m.min_entry = std::min(m.min_entry, expm.minCoeff());
    m.colsum_error = std::max(
        m.colsum_error,
        (expm.colwise().sum().array() - 1.0).abs().maxCoeff());
  }
  if (m.colsum_error > 1e-10) {
    m.ok = false;
    m.note = "exponential column sums drift from 1";
  }
  if (m.min_entry < -1e-12) {
    m.ok = false;
    m.note = "exponential has a negative entry";
  }
  return m;
}

}  // namespace

PerturbationCheckReport matrix_perturbation_check(int dim, int trials,
                                                  std::uint64_t seed) {
  if (dim < 2 || dim > 50)
    throw Error(ErrorCode::invalid_argument, "dim must lie in [2,50]");
  if (trials < 1)
    throw Error(ErrorCode::invalid_argument, "trials must be >= 1");

  PerturbationCheckReport report;
  report.dim = dim;
  report.trials = trials;
  report.seed = seed;
  report.min_exp_entry = std::numeric_limits<double>::infinity();

  std::mt19937_64 rng(seed ^ 0xd1b54a32d192ed03ull);
  for (int trial = 0; trial < trials; ++trial) {
    Eigen::MatrixXd a0 = Eigen::MatrixXd::Zero(dim, dim);
    for (int j = 0; j < dim; ++j) {
      double colsum = 0.0;
      for (int i = 0; i < dim; ++i) {
        if (i == j) continue;
        if (rand_unit(rng) < 0.6) {
          a0(i, j) = rand_unit(rng);
          colsum += a0(i, j);
        }
      }
      const double leak = 0.1 + rand_unit(rng);
      a0(j, j) = -colsum - leak;
    }
    // Rank-one positive perturbation returning the leaked mass: B0 = rho * d^T.
    Eigen::VectorXd rho(dim), leak(dim);
    double rho_sum = 0.0;
    for (int i = 0; i < dim; ++i) {
      rho[i] = 0.05 + rand_unit(rng);
      rho_sum += rho[i];
    }
    rho /= rho_sum;
    for (int j = 0; j < dim; ++j)
      leak[j] = -a0.col(j).sum();  // exactly the missing column mass
    const Eigen::MatrixXd b0 = rho * leak.transpose();

    const PairMetrics m = check_pair(a0, b0);
    report.max_colsum_error = std::max(report.max_colsum_error, m.colsum_error);
    report.min_exp_entry = std::min(report.min_exp_entry, m.min_entry);
    report.max_neumann_gap = std::max(report.max_neumann_gap, m.neumann_gap);
    report.max_lambda_resolvent_norm =
        std::max(report.max_lambda_resolvent_norm, m.lambda_norm_max);
    if (!m.ok) {
      ++report.failures;
      std::ostringstream note;
      note << "trial " << trial << ": " << m.note;
      report.notes.push_back(note.str());
    }
  }
  return report;
}

}  // namespace graphflow
