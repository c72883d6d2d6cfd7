#ifndef BULKSURF_CAPI_H
#define BULKSURF_CAPI_H

#ifdef __cplusplus
extern "C" {
#endif

/* Shared-library C interface. All entry points return an error code from
 * bsx_status (0 on success); details of the last failure on the calling
 * thread are available as a human-readable message and as a JSON record. */

typedef enum bsx_status {
  BSX_OK = 0,
  BSX_ERR_INVALID_ARG = 1,
  BSX_ERR_CONFIG = 2,
  BSX_ERR_RUNTIME = 3,
} bsx_status;

typedef struct bsx_config_s bsx_config;

/* Load + validate a JSON config file. On success *out owns the handle. */
int bsx_config_load(const char* path, bsx_config** out);
/* Parse + validate a JSON config from memory. */
int bsx_config_parse(const char* json_text, bsx_config** out);
void bsx_config_free(bsx_config* cfg);

/* Last failure on this thread: plain message and machine-readable JSON.
 * Pointers stay valid until the next failing call on the same thread. */
const char* bsx_last_error(void);
const char* bsx_last_error_json(void);

/* Full validation: builds the discrete problem and the model variant. */
int bsx_validate(const bsx_config* cfg);

/* Run the configured experiment, writing trajectory.ndjson and
 * final_state.csv into out_dir (error.json on failure). */
int bsx_run(const bsx_config* cfg, const char* out_dir);

/* Regime classification report as a JSON string (free with
 * bsx_string_free). */
int bsx_regimes_json(const bsx_config* cfg, char** out);

/* Limit-convergence study for the named variant at the given epsilons;
 * returns the CSV error table (free with bsx_string_free). */
int bsx_convergence_csv(const bsx_config* cfg, const char* variant, const double* epsilons,
                        int n_epsilons, char** out);

/* Closed-form MP equilibrium for conserved averages a, b and boundary
 * constant kappa; writes (c1, c2, c3). */
int bsx_mp_equilibrium(double a, double b, double kappa, double c_out[3]);

void bsx_string_free(char* s);

#ifdef __cplusplus
}
#endif

#endif /* BULKSURF_CAPI_H */
