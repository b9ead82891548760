/* C interface of the graphflow shared library.
 *
 * All objects are opaque handles created and destroyed here. Functions
 * return gf_status; on failure gf_last_error() carries a human-readable
 * message for the calling thread. Strings returned through char** are
 * heap-allocated and must be released with gf_string_free().
 */
#ifndef GRAPHFLOW_H
#define GRAPHFLOW_H

#ifdef __cplusplus
extern "C" {
#endif

typedef enum gf_status {
  GF_OK = 0,
  GF_ERR_INVALID_ARGUMENT = 1,
  GF_ERR_PARSE = 2,
  GF_ERR_INVALID_GRAPH = 3,
  GF_ERR_NOT_IRREDUCIBLE = 4,
  GF_ERR_NO_CONVERGENCE = 5,
  GF_ERR_DIMENSION_MISMATCH = 6,
  GF_ERR_CFL_VIOLATION = 7,
  GF_ERR_SERIES_DIVERGING = 8,
  GF_ERR_SYSTEM_SINGULAR = 9,
  GF_ERR_QUADRATURE_OVERFLOW = 10,
  GF_ERR_ZERO_MASS = 11,
  GF_ERR_INSUFFICIENT_DATA = 12,
  GF_ERR_IO = 13,
  GF_ERR_UNKNOWN = 14
} gf_status;

typedef struct gf_graph gf_graph;

const char* gf_version(void);
const char* gf_status_name(gf_status status);
/* Message of the most recent failure on this thread; empty string if none. */
const char* gf_last_error(void);

void gf_string_free(char* s);
void gf_graph_free(gf_graph* g);

gf_status gf_graph_from_json(const char* json_text, gf_graph** out);
gf_status gf_graph_load(const char* path, gf_graph** out);
gf_status gf_graph_to_json(const gf_graph* g, char** json_out);
gf_status gf_graph_save(const gf_graph* g, const char* path);

/* kind: "cycle" | "fork_merge" | "random_scc" */
gf_status gf_graph_generate(const char* kind, int n, double buffer_fraction,
                            unsigned long long seed, gf_graph** out);

gf_status gf_graph_normalize(const gf_graph* g, gf_graph** out);

/* Validation report as JSON; GF_OK even when the graph is invalid.
 * buffered_profile != 0 additionally requires at least one buffer. */
gf_status gf_graph_validate(const gf_graph* g, int buffered_profile,
                            char** report_json);

/* Connectivity, irreducibility, fixed vector and equilibrium summary. */
gf_status gf_analyze(const gf_graph* g, int cells, double tol,
                     char** report_json);

typedef struct gf_sim_config {
  int cells;             /* cells per edge, default 128 when <= 0 */
  double theta;          /* CFL fraction in (0,1], default 0.9 when <= 0 */
  double horizon;        /* simulated time */
  int cadence;           /* steps between trajectory rows, default 16 */
  const char* init;      /* "buffers" | "uniform" | "impulse" | "random" */
  unsigned long long seed;
} gf_sim_config;

/* Runs the solver; trajectory CSV and a JSON summary are returned. */
gf_status gf_simulate(const gf_graph* g, const gf_sim_config* config,
                      char** csv_out, char** summary_json_out);

gf_status gf_equilibrium(const gf_graph* g, int cells, double target_mass,
                         double tol, char** json_out);

/* Closed-form and series resolvent residual report at the given lambda. */
gf_status gf_resolvent_report(const gf_graph* g, int cells, double lambda,
                              double tol, char** json_out);

gf_status gf_perturbation_check(int dim, int trials, unsigned long long seed,
                                char** json_out);

gf_status gf_probe_norm(const gf_graph* g, int cells, double theta,
                        int basis_size, double horizon, char** json_out);

#ifdef __cplusplus
}
#endif

#endif /* GRAPHFLOW_H */
