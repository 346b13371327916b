/* Copyright seeds contributors */
/* SPDX-License-Identifier: Apache-2.0 */
/*
 * C interface to the seeds sampling library.
 *
 * Every call returns a seeds_status; on failure seeds_last_error() gives a
 * message for the calling thread. Objects are opaque and released with the
 * matching *_destroy function. Strings returned through char** are released
 * with seeds_string_free.
 */
#ifndef SEEDS_SEEDS_H
#define SEEDS_SEEDS_H

#include <stddef.h>
#include <stdint.h>

#if defined(_WIN32)
#    define SEEDS_API __declspec(dllexport)
#else
#    define SEEDS_API __attribute__((visibility("default")))
#endif

#ifdef __cplusplus
extern "C" {
#endif

typedef enum seeds_status
{
    SEEDS_OK = 0,
    SEEDS_ERR_ARGUMENT = 1,
    SEEDS_ERR_DOMAIN = 2,
    SEEDS_ERR_RANGE = 3,
    SEEDS_ERR_CONFIG = 4,
    SEEDS_ERR_GRID = 5,
    SEEDS_ERR_INTERNAL = 6
} seeds_status;

typedef enum seeds_order_kind
{
    SEEDS_ORDER_STRONG = 0,
    SEEDS_ORDER_WEAK = 1
} seeds_order_kind;

typedef struct seeds_config seeds_config;
typedef struct seeds_samples seeds_samples;
typedef struct seeds_order_report seeds_order_report;
typedef struct seeds_grid seeds_grid;

SEEDS_API char const* seeds_version(void);
SEEDS_API char const* seeds_last_error(void);
SEEDS_API void seeds_string_free(char* str);

/* Configuration */
SEEDS_API seeds_status seeds_config_parse(char const* json, seeds_config** out);
SEEDS_API seeds_status seeds_config_resolved_json(seeds_config const* cfg,
                                                  char** out);
SEEDS_API void seeds_config_destroy(seeds_config* cfg);

/* Sampling: paths, seed, workers and trajectory storage come from cfg */
SEEDS_API seeds_status seeds_sample(seeds_config const* cfg,
                                    seeds_samples** out);
SEEDS_API size_t seeds_samples_n_paths(seeds_samples const* s);
SEEDS_API size_t seeds_samples_dim(seeds_samples const* s);
SEEDS_API size_t seeds_samples_n_nodes(seeds_samples const* s);
SEEDS_API uint64_t seeds_samples_nfe(seeds_samples const* s);
/* n_paths x dim, row major */
SEEDS_API double const* seeds_samples_terminal(seeds_samples const* s);
/* n_paths x n_nodes x dim, or NULL when trajectories were not kept */
SEEDS_API double const* seeds_samples_trajectories(seeds_samples const* s);
/* n_nodes grid times */
SEEDS_API double const* seeds_samples_times(seeds_samples const* s);
SEEDS_API void seeds_samples_destroy(seeds_samples* s);

/* Convergence order */
SEEDS_API seeds_status seeds_order(seeds_config const* cfg,
                                   seeds_order_kind kind,
                                   seeds_order_report** out);
SEEDS_API size_t seeds_order_n_points(seeds_order_report const* r);
SEEDS_API seeds_status seeds_order_point(seeds_order_report const* r,
                                         size_t i,
                                         double* h,
                                         double* error,
                                         double* se,
                                         size_t* n_paths,
                                         int* included);
SEEDS_API double seeds_order_slope(seeds_order_report const* r);
SEEDS_API double seeds_order_slope_se(seeds_order_report const* r);
SEEDS_API double seeds_order_r2(seeds_order_report const* r);
SEEDS_API int seeds_order_exact(seeds_order_report const* r);
SEEDS_API size_t seeds_order_n_notes(seeds_order_report const* r);
SEEDS_API char const* seeds_order_note(seeds_order_report const* r, size_t i);
SEEDS_API void seeds_order_destroy(seeds_order_report* r);

/* Per-step comparison of two solvers on the same schedule, grid and seed */
SEEDS_API seeds_status seeds_compare(seeds_config const* a,
                                     seeds_config const* b,
                                     double* max_rel_diff);

/* Time grid */
SEEDS_API seeds_status seeds_grid_build(seeds_config const* cfg,
                                        seeds_grid** out);
SEEDS_API size_t seeds_grid_n_nodes(seeds_grid const* g);
SEEDS_API double const* seeds_grid_times(seeds_grid const* g);
SEEDS_API double const* seeds_grid_sigmas(seeds_grid const* g);
/* lambda = -log(sigma) per node, +inf at a zero sentinel */
SEEDS_API double const* seeds_grid_lambdas(seeds_grid const* g);
SEEDS_API void seeds_grid_destroy(seeds_grid* g);

/* Invariant suite: *passed is 1 when every check passed */
SEEDS_API seeds_status seeds_selftest(char** report, int* passed);

SEEDS_API seeds_status seeds_phi(int k, double h, double* out);

#ifdef __cplusplus
}
#endif

#endif
