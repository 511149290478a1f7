/*
 * C API for the deep survival learner library.
 *
 * All functions that can fail return a dsl_status; on failure a human
 * readable message is available from dsl_last_error() (thread-local, valid
 * until the next failing call on the same thread). Objects returned through
 * out-parameters are owned by the caller and released with the matching
 * *_free function.
 */
#ifndef DSL_H
#define DSL_H

#include <stdint.h>

#if defined(_WIN32)
#define DSL_API __declspec(dllexport)
#else
#define DSL_API __attribute__((visibility("default")))
#endif

#ifdef __cplusplus
extern "C" {
#endif

typedef enum dsl_status {
  DSL_OK = 0,
  DSL_ERR_INVALID_ARGUMENT = 1,
  DSL_ERR_IO = 2,
  DSL_ERR_NUMERIC = 3,
  DSL_ERR_INTERNAL = 4
} dsl_status;

typedef struct dsl_dataset dsl_dataset;
typedef struct dsl_grid dsl_grid;
typedef struct dsl_phi dsl_phi;
typedef struct dsl_model dsl_model;

DSL_API const char* dsl_version(void);
DSL_API const char* dsl_last_error(void);

/* ---- datasets (CSV schema: time,event,treatment,x1,...,xd) ---- */

DSL_API dsl_status dsl_dataset_read_csv(const char* path, int impute_missing,
                                        dsl_dataset** out);
DSL_API dsl_status dsl_dataset_write_csv(const dsl_dataset* ds, const char* path);

/* case_id in {1,2,3}; the generator uses the published coefficient layouts */
DSL_API dsl_status dsl_simulate(int case_id, long long n, int d, uint64_t seed,
                                dsl_dataset** out);

DSL_API long long dsl_dataset_size(const dsl_dataset* ds);
DSL_API int dsl_dataset_dim(const dsl_dataset* ds);
DSL_API void dsl_dataset_free(dsl_dataset* ds);

/* ---- evaluation time grids ---- */

DSL_API dsl_status dsl_grid_build(const dsl_dataset* ds, int j, double q_lo,
                                  double q_hi, dsl_grid** out);
DSL_API int dsl_grid_size(const dsl_grid* grid);
/* out_times must hold dsl_grid_size(grid) doubles */
DSL_API dsl_status dsl_grid_times(const dsl_grid* grid, double* out_times);
DSL_API void dsl_grid_free(dsl_grid* grid);

/* ---- Kaplan-Meier (arm 0/1, or -1 for the pooled sample) ---- */

DSL_API dsl_status dsl_kaplan_meier(const dsl_dataset* ds, int arm,
                                    const double* times, int n_times,
                                    double* out_survival);

/* ---- cross-fitted pseudo-outcomes (fitted Cox/logistic nuisances) ---- */

DSL_API dsl_status dsl_cross_fit(const dsl_dataset* ds, const dsl_grid* grid,
                                 int k, uint64_t seed, dsl_phi** out);
DSL_API long long dsl_phi_rows(const dsl_phi* phi);
DSL_API int dsl_phi_cols(const dsl_phi* phi);
/* out must hold rows*cols doubles; row-major */
DSL_API dsl_status dsl_phi_values(const dsl_phi* phi, double* out);
DSL_API dsl_status dsl_phi_write_csv(const dsl_phi* phi, const char* path);
DSL_API void dsl_phi_free(dsl_phi* phi);

/* ---- CATE model training and prediction ---- */

/* train_config_json: NULL or a JSON object; recognized keys include
 * learning_rate, epochs, batch_size, hidden, seed (see README) */
DSL_API dsl_status dsl_train(const dsl_dataset* ds, const dsl_phi* phi,
                             const char* train_config_json, dsl_model** out);
DSL_API int dsl_model_outputs(const dsl_model* model);
DSL_API dsl_status dsl_model_predict(const dsl_model* model, const double* x,
                                     int d, double* out, int j);
DSL_API dsl_status dsl_model_save(const dsl_model* model, const char* path);
DSL_API dsl_status dsl_model_load(const char* path, dsl_model** out);
DSL_API void dsl_model_free(dsl_model* model);

/* ---- whole-workflow entry points driven by JSON configs ---- */

/* simulate-to-CSV: {"case":1,"n":800,"d":30,"seed":7,"out":"data.csv",
 *                   "oracle":"oracle.csv","grid_j":10} */
DSL_API dsl_status dsl_cmd_sim(const char* config_json);

/* pseudo-outcomes-to-CSV: {"in":"data.csv","grid_j":10,"k":5,"seed":7,
 *                          "out":"phi.csv"} */
DSL_API dsl_status dsl_cmd_pseudo(const char* config_json);

/* simulation experiment; config mirrors the `run` CLI flags. Writes
 * summary.json, replicates.csv, run_log.json into out_dir. When
 * summary_json_out is non-NULL it receives a malloc'd summary (release with
 * dsl_string_free). */
DSL_API dsl_status dsl_cmd_run(const char* config_json, const char* out_dir,
                               char** summary_json_out);

/* application mode: {"data":"blcs.csv","j":10,"profiles":"profiles.json",
 *                    "out":"dir","k":5,"seed":7,"train":{...}} */
DSL_API dsl_status dsl_cmd_apply(const char* config_json);

DSL_API void dsl_string_free(char* s);

#ifdef __cplusplus
}
#endif

#endif /* DSL_H */
