/* C interface to the cavity memory toolkit.
 *
 * Every object lives behind an opaque handle created and destroyed by this
 * library; every fallible call returns a cavmem_status and leaves a
 * human-readable message in cavmem_last_error() (thread-local) on failure.
 * Output parameters are written only on CAVMEM_OK.
 */
#ifndef CAVMEM_CAVMEM_H
#define CAVMEM_CAVMEM_H

#include <stddef.h>

#ifdef __cplusplus
extern "C" {
#endif

typedef enum cavmem_status {
    CAVMEM_OK = 0,
    CAVMEM_ERR_DOMAIN = 1,        /* invalid argument or parameter combination */
    CAVMEM_ERR_CONVERGENCE = 2,   /* grid refinement failed to stabilize */
    CAVMEM_ERR_ASSERTION = 3,     /* a scan's built-in consistency check failed */
    CAVMEM_ERR_INVALID_HANDLE = 4,/* NULL or mismatched handle / output pointer */
    CAVMEM_ERR_INTERNAL = 5
} cavmem_status;

/* Library version, "major.minor.patch". */
const char* cavmem_version(void);

/* Message of the most recent failure on this thread ("" if none). */
const char* cavmem_last_error(void);

/* ---- opaque handles ---------------------------------------------------- */

typedef struct cavmem_params cavmem_params;
typedef struct cavmem_envelope cavmem_envelope;
typedef struct cavmem_trajectory cavmem_trajectory;
typedef struct cavmem_shaping cavmem_shaping;
typedef struct cavmem_fast_result cavmem_fast_result;
typedef struct cavmem_table cavmem_table;

/* ---- physical parameters ----------------------------------------------- */

/* Bad-cavity (adiabatically eliminated) model. gamma sets the time unit. */
cavmem_status cavmem_params_bad_cavity(double cooperativity, double delta, double gamma_s,
                                       double gamma, cavmem_params** out);

/* Full cavity model; the cooperativity is derived as gN^2/(kappa*gamma). */
cavmem_status cavmem_params_full_cavity(double coupling_gN, double kappa, double delta,
                                        double gamma_s, double gamma, cavmem_params** out);

/* Any output pointer may be NULL to skip that field. */
cavmem_status cavmem_params_get(const cavmem_params* params, double* cooperativity, double* gamma,
                                double* delta, double* gamma_s, double* kappa, double* coupling_gN);

void cavmem_params_free(cavmem_params* params);

/* ---- envelopes ---------------------------------------------------------- */

typedef enum cavmem_role {
    CAVMEM_ROLE_INPUT = 0,
    CAVMEM_ROLE_OUTPUT = 1,
    CAVMEM_ROLE_CONTROL = 2,
    CAVMEM_ROLE_SPIN = 3
} cavmem_role;

/* Complex envelope sampled on the uniform grid [t0, t1] with n >= 2 points.
 * im may be NULL for a real envelope. Values are interpreted as piecewise
 * linear between samples and must all be finite. */
cavmem_status cavmem_envelope_create(double t0, double t1, size_t n, const double* re,
                                     const double* im, cavmem_role role, cavmem_envelope** out);

cavmem_status cavmem_envelope_size(const cavmem_envelope* env, size_t* out);
cavmem_status cavmem_envelope_grid(const cavmem_envelope* env, double* t0, double* t1, size_t* n);
/* Buffers must hold cavmem_envelope_size() doubles; either may be NULL. */
cavmem_status cavmem_envelope_values(const cavmem_envelope* env, double* re, double* im);
cavmem_status cavmem_envelope_times(const cavmem_envelope* env, double* times);
cavmem_status cavmem_envelope_norm2(const cavmem_envelope* env, double* out);
cavmem_status cavmem_envelope_normalized(const cavmem_envelope* env, cavmem_envelope** out);

/* Smooth single-bump mode of duration T on [0, T] with n samples, unit norm. */
cavmem_status cavmem_gaussian_like_mode(double T, size_t n, cavmem_envelope** out);

/* value(t) -> conj(value(T - t)) on a grid spanning [0, T]. */
cavmem_status cavmem_time_reverse(const cavmem_envelope* env, double T, cavmem_envelope** out);

/* Trapezoidal integral of conj(a) * b; grids must match. */
cavmem_status cavmem_mode_overlap(const cavmem_envelope* a, const cavmem_envelope* b, double* re,
                                  double* im);

void cavmem_envelope_free(cavmem_envelope* env);

/* ---- exact dynamics ------------------------------------------------------ */

typedef struct cavmem_run_options {
    double eta_tol;        /* <= 0 for the default 1e-6 */
    int max_refinements;   /* <= 0 for the default 11 */
    int check_convergence; /* 0 = single pass on the given grid, else refine */
    double rate_margin;    /* <= 0 for the default 0.1 */
} cavmem_run_options;

typedef enum cavmem_run_kind {
    CAVMEM_RUN_STORAGE = 0,
    CAVMEM_RUN_RETRIEVAL = 1
} cavmem_run_kind;

/* Storage from vacuum: control and input share a grid spanning [0, T]. */
cavmem_status cavmem_simulate_storage(const cavmem_params* params, const cavmem_envelope* control,
                                      const cavmem_envelope* input,
                                      const cavmem_run_options* options, cavmem_trajectory** out);

/* Retrieval from the initial amplitudes (P, S) with no input field. */
cavmem_status cavmem_simulate_retrieval(const cavmem_params* params, const cavmem_envelope* control,
                                        double initial_P_re, double initial_P_im,
                                        double initial_S_re, double initial_S_im,
                                        const cavmem_run_options* options,
                                        cavmem_trajectory** out);

/* Full cavity model (params must carry kappa and gN). input may be NULL for
 * retrieval runs. */
cavmem_status cavmem_simulate_full_cavity(const cavmem_params* params,
                                          const cavmem_envelope* control,
                                          const cavmem_envelope* input, double initial_P_re,
                                          double initial_P_im, double initial_S_re,
                                          double initial_S_im, cavmem_run_kind kind,
                                          const cavmem_run_options* options,
                                          cavmem_trajectory** out);

typedef enum cavmem_series {
    CAVMEM_SERIES_P = 0,
    CAVMEM_SERIES_S = 1,
    CAVMEM_SERIES_E_OUT = 2,
    CAVMEM_SERIES_E_CAV = 3 /* full cavity model only */
} cavmem_series;

cavmem_status cavmem_trajectory_size(const cavmem_trajectory* traj, size_t* out);
cavmem_status cavmem_trajectory_grid(const cavmem_trajectory* traj, double* t0, double* t1,
                                     size_t* n);
/* Buffers must hold cavmem_trajectory_size() doubles; either may be NULL. */
cavmem_status cavmem_trajectory_series(const cavmem_trajectory* traj, cavmem_series which,
                                       double* re, double* im);
/* Any output pointer may be NULL. incomplete_retrieval is 0 or 1. */
cavmem_status cavmem_trajectory_metrics(const cavmem_trajectory* traj, double* eta_s,
                                        double* eta_r, double* residual_excitation,
                                        int* incomplete_retrieval);
cavmem_status cavmem_trajectory_convergence(const cavmem_trajectory* traj, size_t* n_final,
                                            int* refinements, double* last_delta, int* checked);

/* Max defect of d/dt(|P|^2+|S|^2) = -2 gamma(1+C) |P|^2 over the run
 * (bad-cavity retrieval with gamma_s = 0 only). */
cavmem_status cavmem_conservation_residual(const cavmem_trajectory* traj,
                                           const cavmem_params* params, double* out);

void cavmem_trajectory_free(cavmem_trajectory* traj);

/* eta_s * eta_r * exp(-2 gamma_s * hold_duration) */
cavmem_status cavmem_composite_efficiency(double eta_s, double eta_r, double gamma_s,
                                          double hold_duration, double* out);

/* F = (1 + eta) / 2 for eta in [0, 1]. */
cavmem_status cavmem_fidelity_from_efficiency(double eta, double* out);

/* ---- adiabatic closed forms and control shaping -------------------------- */

typedef struct cavmem_shaping_options {
    double epsilon_boundary;    /* <= 0 for the default 1e-4 */
    double truncation_fraction; /* < 0 for the default 0.01 */
} cavmem_shaping_options;

/* Control that retrieves into / stores the given mode; see the shaping
 * accessors for the result. gamma_s tilts the target so the decayed run
 * still matches it. */
cavmem_status cavmem_shape_retrieval(const cavmem_params* params, const cavmem_envelope* mode,
                                     double gamma_s, const cavmem_shaping_options* options,
                                     cavmem_shaping** out);
cavmem_status cavmem_shape_storage(const cavmem_params* params, const cavmem_envelope* input,
                                   double gamma_s, const cavmem_shaping_options* options,
                                   cavmem_shaping** out);

cavmem_status cavmem_shaping_control(const cavmem_shaping* shaping, cavmem_envelope** out);
/* Any output pointer may be NULL. truncated is 0 or 1. */
cavmem_status cavmem_shaping_info(const cavmem_shaping* shaping, double* predicted_efficiency,
                                  int* truncated, double* epsilon_boundary);
void cavmem_shaping_free(cavmem_shaping* shaping);

/* Closed-form retrieval output from S(0) = 1 for a given control. */
cavmem_status cavmem_adiabatic_retrieval_output(const cavmem_params* params,
                                                const cavmem_envelope* control,
                                                cavmem_envelope** out);

/* Closed-form stored amplitude S(T) for a control/input pair. */
cavmem_status cavmem_adiabatic_storage_amplitude(const cavmem_params* params,
                                                 const cavmem_envelope* control,
                                                 const cavmem_envelope* input, double* re,
                                                 double* im);

/* Storage response kernel f(t) of a control (integral |f|^2 <= 1). */
cavmem_status cavmem_storage_kernel(const cavmem_params* params, const cavmem_envelope* control,
                                    cavmem_envelope** out);

typedef struct cavmem_margins {
    double tc_gamma;
    double power_ratio;
    double control_rate_ratio;
    double magnitude_rate_ratio;
    double phase_rate_ratio;
    double input_rate_ratio;
    int adiabatic;
} cavmem_margins;

/* Smooth-control diagnostics; input may be NULL. T is the mode duration. */
cavmem_status cavmem_adiabaticity_margins(const cavmem_params* params,
                                          const cavmem_envelope* control,
                                          const cavmem_envelope* input, double T,
                                          cavmem_margins* out);

/* (gamma^2 C^2 + delta^2) / (gamma C omega_scale^2) */
cavmem_status cavmem_output_duration_estimate(const cavmem_params* params, double omega_scale,
                                              double* out);

/* ---- fast (pi-pulse) protocol -------------------------------------------- */

/* E_out(t) = -sqrt(2 gamma C) exp(-gamma(1+C) t) on [0, T], n samples. */
cavmem_status cavmem_fast_retrieval_output(const cavmem_params* params, double T, size_t n,
                                           cavmem_envelope** out);

/* Rising exponential input that fast storage maps onto the spin wave.
 * norm2/complete may be NULL. */
cavmem_status cavmem_optimal_fast_input(const cavmem_params* params, double T, size_t n,
                                        cavmem_envelope** mode, double* norm2, int* complete);

/* Stored amplitude under an ideal pulse at the end of the input. */
cavmem_status cavmem_fast_storage_amplitude(const cavmem_params* params,
                                            const cavmem_envelope* input, double* re, double* im);

/* Absorb the input on [0, T], apply a rectangular resonant pulse of Rabi
 * frequency omega (pi pulse: duration pi/(2 omega)), ring down until t_end;
 * the trajectory is sampled on n points of [0, t_end]. */
cavmem_status cavmem_simulate_fast_protocol(const cavmem_params* params,
                                            const cavmem_envelope* input, double omega,
                                            double t_end, size_t n, cavmem_fast_result** out);

cavmem_status cavmem_fast_result_trajectory(const cavmem_fast_result* result,
                                            cavmem_trajectory** out);
/* states holds {P_re, P_im, S_re, S_im} for before, after, ideal-after: 12
 * doubles. Any output pointer may be NULL. */
cavmem_status cavmem_fast_result_metrics(const cavmem_fast_result* result, double* eta_s,
                                         double* map_deviation, double* states12);
void cavmem_fast_result_free(cavmem_fast_result* result);

/* ---- scans ---------------------------------------------------------------- */

typedef struct cavmem_scan_options {
    int threads;          /* <= 0 for 1 */
    size_t base_samples;  /* 0 for the default 2001 */
    double eta_tol;       /* <= 0 for the default 1e-6 */
    double epsilon_boundary; /* <= 0 for the default 1e-4 */
    int enforce;          /* nonzero: built-in checks throw CAVMEM_ERR_ASSERTION */
} cavmem_scan_options;

cavmem_status cavmem_scan_breakdown(const double* C_list, size_t n_C, const double* delta_list,
                                    size_t n_delta, const double* tc_gamma_list, size_t n_tc,
                                    const cavmem_scan_options* options, cavmem_table** out);

cavmem_status cavmem_scan_universality(const double* C_list, size_t n_C, const double* delta_list,
                                       size_t n_delta, double margin,
                                       const cavmem_scan_options* options, cavmem_table** out);

cavmem_status cavmem_scan_time_reversal(const double* C_list, size_t n_C,
                                        const cavmem_envelope* const* modes,
                                        const char* const* mode_names, size_t n_modes,
                                        double delta, double gamma_s,
                                        const cavmem_scan_options* options, cavmem_table** out);

cavmem_status cavmem_scan_bad_cavity(const double* kappa_over_gN, size_t n_ratios,
                                     double cooperativity, const cavmem_scan_options* options,
                                     cavmem_table** out);

cavmem_status cavmem_table_shape(const cavmem_table* table, size_t* rows, size_t* cols);
/* Returns NULL on a bad handle or index; the string lives as long as the table. */
const char* cavmem_table_column_name(const cavmem_table* table, size_t col);
const char* cavmem_table_metadata(const cavmem_table* table);
cavmem_status cavmem_table_value(const cavmem_table* table, size_t row, size_t col, double* out);
void cavmem_table_free(cavmem_table* table);

#ifdef __cplusplus
} /* extern "C" */
#endif

#endif /* CAVMEM_CAVMEM_H */
