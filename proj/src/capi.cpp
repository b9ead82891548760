#include "graphflow/graphflow.h"

#include <cmath>
#include <cstring>
#include <random>
#include <string>

#include "json.hpp"

#include "graphflow/diagnostics.hpp"
#include "graphflow/families.hpp"
#include "graphflow/json_io.hpp"
#include "graphflow/resolvent.hpp"
#include "graphflow/version.hpp"

using Json = nlohmann::ordered_json;
using namespace graphflow;

struct gf_graph {
  MetricGraph g;
};

namespace {

thread_local std::string t_last_error;

gf_status map_code(ErrorCode code) {
  switch (code) {
    case ErrorCode::invalid_argument: return GF_ERR_INVALID_ARGUMENT;
    case ErrorCode::parse_error: return GF_ERR_PARSE;
    case ErrorCode::invalid_graph: return GF_ERR_INVALID_GRAPH;
    case ErrorCode::not_irreducible: return GF_ERR_NOT_IRREDUCIBLE;
    case ErrorCode::no_convergence: return GF_ERR_NO_CONVERGENCE;
    case ErrorCode::dimension_mismatch: return GF_ERR_DIMENSION_MISMATCH;
    case ErrorCode::cfl_violation: return GF_ERR_CFL_VIOLATION;
    case ErrorCode::series_diverging: return GF_ERR_SERIES_DIVERGING;
    case ErrorCode::system_singular: return GF_ERR_SYSTEM_SINGULAR;
    case ErrorCode::quadrature_overflow: return GF_ERR_QUADRATURE_OVERFLOW;
    case ErrorCode::zero_mass: return GF_ERR_ZERO_MASS;
    case ErrorCode::insufficient_data: return GF_ERR_INSUFFICIENT_DATA;
    case ErrorCode::io_error: return GF_ERR_IO;
  }
  return GF_ERR_UNKNOWN;
}

template <typename Fn>
gf_status wrap(Fn&& fn) {
  try {
    fn();
    t_last_error.clear();
    return GF_OK;
  } catch (const Error& e) {
    t_last_error = e.what();
    return map_code(e.code());
  } catch (const std::exception& e) {
    t_last_error = e.what();
    return GF_ERR_UNKNOWN;
  }
}

char* alloc_string(const std::string& s) {
  char* out = new char[s.size() + 1];
  std::memcpy(out, s.c_str(), s.size() + 1);
  return out;
}

void require(bool condition, const char* message) {
  if (!condition) throw Error(ErrorCode::invalid_argument, message);
}

double rand_unit(std::mt19937_64& rng) {
  return static_cast<double>(rng() >> 11) * 0x1.0p-53;
}

struct Prepared {
  MetricGraph normalized;
  MatrixBundle bundle;
  Discretization grid;
};

Prepared prepare(const MetricGraph& g, int cells) {
  const ValidationReport report = validate(g, ValidationProfile::unbuffered);
  if (!report.valid()) {
    std::string msg = "graph fails validation:";
    for (const auto& v : report.violations) msg += " [" + v.message + "]";
    throw Error(ErrorCode::invalid_graph, msg);
  }
  Prepared p;
  p.normalized = normalize_edges(g);
  p.bundle = build_matrices(p.normalized);
  p.grid = make_grid(p.normalized, cells > 0 ? cells : 128);
  return p;
}

FlowState build_init(const Prepared& p, const std::string& kind,
                     std::uint64_t seed) {
  FlowState init = zero_state(p.bundle, p.grid);
  const int ne = p.bundle.edge_count();
  const int nb = p.bundle.buffer_count();
  if (kind == "buffers") {
    require(nb > 0, "init 'buffers' needs at least one buffered vertex");
    for (int v = 0; v < nb; ++v) init.buffers[v] = 1.0 / nb;
  } else if (kind == "uniform") {
    for (auto& cells : init.edge_cells)
      for (auto& u : cells) u = 1.0 / ne;
  } else if (kind == "impulse") {
    init.edge_cells[0][p.grid.cells - 1] = 1.0 / p.grid.dx;
  } else if (kind == "random") {
    std::mt19937_64 rng(seed ^ 0xa0761d6478bd642full);
    for (auto& cells : init.edge_cells)
      for (auto& u : cells) u = rand_unit(rng);
    for (auto& b : init.buffers) b = rand_unit(rng);
    const double mass = total_mass(init, p.grid);
    for (auto& cells : init.edge_cells)
      for (auto& u : cells) u /= mass;
    for (auto& b : init.buffers) b /= mass;
  } else {
    throw Error(ErrorCode::invalid_argument,
                "unknown init '" + kind +
                    "' (use buffers|uniform|impulse|random)");
  }
  return init;
}

Json validation_json(const ValidationReport& report, const char* profile) {
  Json j;
  j["valid"] = report.valid();
  j["profile"] = profile;
  Json violations = Json::array();
  for (const auto& v : report.violations) {
    Json jv;
    jv["code"] = v.code;
    jv["subject"] = v.subject;
    jv["message"] = v.message;
    violations.push_back(std::move(jv));
  }
  j["violations"] = std::move(violations);
  Json degrees = Json::object();
  for (const auto& [id, degree] : report.out_degrees) degrees[id] = degree;
  j["out_degrees"] = std::move(degrees);
  return j;
}

}  // namespace

extern "C" {

const char* gf_version(void) { return kVersion; }

const char* gf_status_name(gf_status status) {
  switch (status) {
    case GF_OK: return "OK";
    case GF_ERR_INVALID_ARGUMENT: return "InvalidArgument";
    case GF_ERR_PARSE: return "ParseError";
    case GF_ERR_INVALID_GRAPH: return "InvalidGraph";
    case GF_ERR_NOT_IRREDUCIBLE: return "NotIrreducible";
    case GF_ERR_NO_CONVERGENCE: return "NoConvergence";
    case GF_ERR_DIMENSION_MISMATCH: return "DimensionMismatch";
    case GF_ERR_CFL_VIOLATION: return "CflViolation";
    case GF_ERR_SERIES_DIVERGING: return "SeriesDiverging";
    case GF_ERR_SYSTEM_SINGULAR: return "SystemSingular";
    case GF_ERR_QUADRATURE_OVERFLOW: return "QuadratureOverflow";
    case GF_ERR_ZERO_MASS: return "ZeroMass";
    case GF_ERR_INSUFFICIENT_DATA: return "InsufficientData";
    case GF_ERR_IO: return "IoError";
    case GF_ERR_UNKNOWN: return "Unknown";
  }
  return "Unknown";
}

const char* gf_last_error(void) { return t_last_error.c_str(); }

void gf_string_free(char* s) { delete[] s; }

void gf_graph_free(gf_graph* g) { delete g; }

gf_status gf_graph_from_json(const char* json_text, gf_graph** out) {
  return wrap([&] {
    require(json_text && out, "json_text and out must be non-null");
    *out = new gf_graph{graph_from_json(json_text)};
  });
}

gf_status gf_graph_load(const char* path, gf_graph** out) {
  return wrap([&] {
    require(path && out, "path and out must be non-null");
    *out = new gf_graph{load_graph_file(path)};
  });
}

gf_status gf_graph_to_json(const gf_graph* g, char** json_out) {
  return wrap([&] {
    require(g && json_out, "graph and out must be non-null");
    *json_out = alloc_string(graph_to_json(g->g));
  });
}

gf_status gf_graph_save(const gf_graph* g, const char* path) {
  return wrap([&] {
    require(g && path, "graph and path must be non-null");
    save_graph_file(g->g, path);
  });
}

gf_status gf_graph_generate(const char* kind, int n, double buffer_fraction,
                            unsigned long long seed, gf_graph** out) {
  return wrap([&] {
    require(kind && out, "kind and out must be non-null");
    FamilySpec spec;
    const std::string k = kind;
    if (k == "cycle")
      spec.kind = FamilyKind::cycle;
    else if (k == "fork_merge")
      spec.kind = FamilyKind::fork_merge;
    else if (k == "random_scc")
      spec.kind = FamilyKind::random_scc;
    else
      throw Error(ErrorCode::invalid_argument,
                  "unknown family kind '" + k +
                      "' (use cycle|fork_merge|random_scc)");
    spec.n = n;
    spec.buffer_fraction = buffer_fraction;
    spec.seed = seed;
    *out = new gf_graph{generate_family(spec)};
  });
}

gf_status gf_graph_normalize(const gf_graph* g, gf_graph** out) {
  return wrap([&] {
    require(g && out, "graph and out must be non-null");
    *out = new gf_graph{normalize_edges(g->g)};
  });
}

gf_status gf_graph_validate(const gf_graph* g, int buffered_profile,
                            char** report_json) {
  return wrap([&] {
    require(g && report_json, "graph and out must be non-null");
    const auto profile = buffered_profile ? ValidationProfile::buffered
                                          : ValidationProfile::unbuffered;
    const ValidationReport report = validate(g->g, profile);
    *report_json = alloc_string(
        validation_json(report, buffered_profile ? "buffered" : "unbuffered")
            .dump(2) +
        "\n");
  });
}

gf_status gf_analyze(const gf_graph* g, int cells, double tol,
                     char** report_json) {
  return wrap([&] {
    require(g && report_json, "graph and out must be non-null");
    if (tol <= 0.0) tol = 1e-10;
    const Prepared p = prepare(g->g, cells);

    Json j;
    j["version"] = kVersion;
    j["graph_hash"] = graph_hash(g->g);
    j["vertices"] = g->g.vertices.size();
    j["edges"] = g->g.edges.size();
    j["buffers"] = p.bundle.buffer_count();
    j["cells"] = p.grid.cells;
    j["tol"] = tol;

    const bool connected = strongly_connected(g->g);
    const bool irreducible = is_irreducible(p.bundle);
    j["strongly_connected"] = connected;
    j["irreducible"] = irreducible;
    j["connectivity_matches_irreducibility"] = connected == irreducible;

    const UnitEigenvalueReport unit = has_unit_eigenvalue(p.bundle);
    j["unit_eigenvalue"] = {{"present", unit.present},
                            {"residual", unit.residual}};

    if (irreducible) {
      const FixedVector w = perron_fixed_vector(p.bundle, tol);
      Json entries = Json::object();
      for (std::size_t e = 0; e < g->g.edges.size(); ++e)
        entries[g->g.edges[e].id] = w.entries[e];
      j["perron"] = {{"residual", w.residual},
                     {"iterations", w.iterations},
                     {"used_fallback", w.used_fallback},
                     {"entries", std::move(entries)}};
      const EquilibriumState eq =
          equilibrium_state(p.normalized, p.bundle, p.grid, w, 1.0);
      Json buffers = Json::object();
      for (int v = 0; v < p.bundle.buffer_count(); ++v)
        buffers[g->g.vertices[p.bundle.buffered_vertices[v]].id] =
            eq.buffer_levels[v];
      j["equilibrium"] = {
          {"target_mass", 1.0},
          {"alpha", eq.scale},
          {"buffer_levels", std::move(buffers)},
          {"kernel_residual", kernel_residual(eq, p.bundle, p.grid)}};
    } else {
      j["perron"] = nullptr;
      j["equilibrium"] = nullptr;
    }
    *report_json = alloc_string(j.dump(2) + "\n");
  });
}

gf_status gf_simulate(const gf_graph* g, const gf_sim_config* config,
                      char** csv_out, char** summary_json_out) {
  return wrap([&] {
    require(g && config && csv_out && summary_json_out,
            "graph, config and outputs must be non-null");
    require(config->horizon > 0.0, "horizon must be positive");
    const Prepared p = prepare(g->g, config->cells);
    StepPolicy policy;
    policy.theta = config->theta > 0.0 ? config->theta : 0.9;
    const int cadence = config->cadence > 0 ? config->cadence : 16;
    const std::string init_kind = config->init ? config->init : "impulse";
    const FlowState init = build_init(p, init_kind, config->seed);
    const double mass0 = total_mass(init, p.grid);

    bool have_eq = false;
    EquilibriumState eq;
    if (is_irreducible(p.bundle) && p.bundle.buffer_count() > 0 &&
        mass0 > 0.0) {
      const FixedVector w = perron_fixed_vector(p.bundle);
      eq = equilibrium_state(p.normalized, p.bundle, p.grid, w, mass0);
      have_eq = true;
    }

    const Trajectory traj = simulate_trajectory(
        init, p.bundle, p.grid, config->horizon, policy, cadence,
        have_eq ? &eq : nullptr);

    const Window rate_window{0.5 * config->horizon, config->horizon};
    *csv_out = alloc_string(trajectory_csv(traj, &rate_window));

    double drift = 0.0;
    double min_seen = traj.rows.empty() ? 0.0 : traj.rows.front().min_value;
    for (const auto& row : traj.rows) {
      drift = std::max(drift, std::abs(row.total_mass - mass0));
      min_seen = std::min(min_seen, row.min_value);
    }

    Json j;
    j["version"] = kVersion;
    j["graph_hash"] = graph_hash(g->g);
    j["config"] = {{"cells", p.grid.cells},
                   {"theta", policy.theta},
                   {"horizon", config->horizon},
                   {"cadence", cadence},
                   {"init", init_kind},
                   {"seed", config->seed},
                   {"dt", stable_dt(p.bundle, p.grid, policy)}};
    Json results;
    results["rows"] = traj.rows.size();
    results["mass_initial"] = mass0;
    results["mass_final"] =
        traj.rows.empty() ? mass0 : traj.rows.back().total_mass;
    results["mass_drift_rel"] = mass0 > 0.0 ? drift / mass0 : drift;
    results["min_value"] = min_seen;
    if (have_eq) {
      results["final_distance"] = traj.rows.back().distance;
      try {
        const DecayFit fit = fit_decay_rate(traj, rate_window);
        results["decay"] = {{"rate", fit.rate}, {"r_squared", fit.r_squared}};
      } catch (const Error&) {
        results["decay"] = nullptr;
      }
      const auto period = detect_period(traj, 1e-6 * mass0);
      results["period"] = period ? Json(*period) : Json(nullptr);
    } else {
      results["final_distance"] = nullptr;
      results["decay"] = nullptr;
      results["period"] = nullptr;
    }
    const auto edge_period =
        detect_period(traj, 1e-6 * mass0, PeriodSignal::edge_mass);
    results["period_edge_mass"] =
        edge_period ? Json(*edge_period) : Json(nullptr);
    j["results"] = std::move(results);
    *summary_json_out = alloc_string(j.dump(2) + "\n");
  });
}

gf_status gf_equilibrium(const gf_graph* g, int cells, double target_mass,
                         double tol, char** json_out) {
  return wrap([&] {
    require(g && json_out, "graph and out must be non-null");
    if (tol <= 0.0) tol = 1e-10;
    const Prepared p = prepare(g->g, cells);
    const FixedVector w = perron_fixed_vector(p.bundle, tol);
    const EquilibriumState eq =
        equilibrium_state(p.normalized, p.bundle, p.grid, w, target_mass);

    Json j;
    j["version"] = kVersion;
    j["graph_hash"] = graph_hash(g->g);
    j["cells"] = p.grid.cells;
    j["target_mass"] = target_mass;
    j["alpha"] = eq.scale;
    j["total_mass"] = total_mass(to_flow_state(eq), p.grid);
    j["kernel_residual"] = kernel_residual(eq, p.bundle, p.grid);
    Json edges = Json::object();
    for (std::size_t e = 0; e < g->g.edges.size(); ++e)
      edges[g->g.edges[e].id] = {{"fixed_vector", w.entries[e]},
                                 {"density", eq.edge_density[e]}};
    j["edges"] = std::move(edges);
    Json buffers = Json::object();
    for (int v = 0; v < p.bundle.buffer_count(); ++v)
      buffers[g->g.vertices[p.bundle.buffered_vertices[v]].id] =
          eq.buffer_levels[v];
    j["buffer_levels"] = std::move(buffers);
    *json_out = alloc_string(j.dump(2) + "\n");
  });
}

gf_status gf_resolvent_report(const gf_graph* g, int cells, double lambda,
                              double tol, char** json_out) {
  return wrap([&] {
    require(g && json_out, "graph and out must be non-null");
    require(lambda > 0.0, "lambda must be positive");
    if (tol <= 0.0) tol = 1e-10;
    const Prepared p = prepare(g->g, cells);

    ResolventInput input;
    input.lambda = lambda;
    const double scale =
        1.0 / (p.bundle.edge_count() + p.bundle.buffer_count());
    input.edge_rhs.assign(p.bundle.edge_count(),
                          std::vector<double>(p.grid.cells, scale));
    input.buffer_rhs.assign(p.bundle.buffer_count(), scale);

    Json j;
    j["version"] = kVersion;
    j["graph_hash"] = graph_hash(g->g);
    j["cells"] = p.grid.cells;
    j["lambda"] = lambda;
    j["tol"] = tol;
    j["apriori_lambda_threshold"] =
        apriori_lambda_threshold(p.normalized, p.bundle);

    try {
      const ResolventOutput closed =
          resolvent_C(p.normalized, p.bundle, p.grid, input);
      double buffer_gap = 0.0;
      for (int v = 0; v < p.bundle.buffer_count(); ++v)
        buffer_gap = std::max(
            buffer_gap, std::abs(closed.f.buffers[v] *
                                     (lambda + p.bundle.buffer_rates[v]) -
                                 input.buffer_rhs[v]));
      j["closed_form"] = {{"residual", closed.residual},
                          {"buffer_identity_gap", buffer_gap}};
    } catch (const Error& e) {
      j["closed_form"] = {{"error", error_code_name(e.code())},
                          {"message", e.what()}};
    }

    try {
      const ResolventOutput series =
          resolvent_A_series(p.normalized, p.bundle, p.grid, input, tol);
      const FlowState direct =
          resolvent_A_direct(p.normalized, p.bundle, p.grid, input);
      double gap = 0.0;
      for (int e = 0; e < p.bundle.edge_count(); ++e) {
        double edge = 0.0;
        for (int i = 0; i < p.grid.cells; ++i)
          edge += std::abs(series.f.edge_cells[e][i] -
                           direct.edge_cells[e][i]);
        gap += p.grid.dx * edge;
      }
      for (int v = 0; v < p.bundle.buffer_count(); ++v)
        gap += std::abs(series.f.buffers[v] - direct.buffers[v]);
      j["series"] = {{"converged", true},
                     {"terms", series.terms},
                     {"residual", series.residual},
                     {"gap_to_direct_solve", gap}};
    } catch (const Error& e) {
      j["series"] = {{"converged", false},
                     {"error", error_code_name(e.code())},
                     {"message", e.what()}};
    }
    *json_out = alloc_string(j.dump(2) + "\n");
  });
}

gf_status gf_perturbation_check(int dim, int trials, unsigned long long seed,
                                char** json_out) {
  return wrap([&] {
    require(json_out, "out must be non-null");
    const PerturbationCheckReport report =
        matrix_perturbation_check(dim, trials, seed);
    Json j;
    j["version"] = kVersion;
    j["dim"] = report.dim;
    j["trials"] = report.trials;
    j["seed"] = report.seed;
    j["failures"] = report.failures;
    j["max_colsum_error"] = report.max_colsum_error;
    j["min_exp_entry"] = report.min_exp_entry;
    j["max_neumann_gap"] = report.max_neumann_gap;
    j["max_lambda_resolvent_norm"] = report.max_lambda_resolvent_norm;
    j["notes"] = report.notes;
    *json_out = alloc_string(j.dump(2) + "\n");
  });
}

gf_status gf_probe_norm(const gf_graph* g, int cells, double theta,
                        int basis_size, double horizon, char** json_out) {
  return wrap([&] {
    require(g && json_out, "graph and out must be non-null");
    require(horizon > 0.0, "horizon must be positive");
    const Prepared p = prepare(g->g, cells);
    StepPolicy policy;
    policy.theta = theta > 0.0 ? theta : 0.9;
    const double sup = operator_norm_probe(p.normalized, p.bundle, p.grid,
                                           basis_size, horizon, policy);
    Json j;
    j["version"] = kVersion;
    j["graph_hash"] = graph_hash(g->g);
    j["cells"] = p.grid.cells;
    j["theta"] = policy.theta;
    j["basis_size"] = basis_size;
    j["horizon"] = horizon;
    j["sup_distance"] = sup;
    *json_out = alloc_string(j.dump(2) + "\n");
  });
}

}  // extern "C"
