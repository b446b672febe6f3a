/* flowcast C API: opaque handles over the forecasting core.
 *
 * Conventions:
 *   - every function returns fc_status; FC_OK (0) means success
 *   - on failure, fc_last_error() returns a thread-local message
 *   - out-parameters are written only on success
 *   - handles are destroyed with their matching *_destroy function
 *   - strings returned through char** are freed with fc_string_free
 */
#ifndef FLOWCAST_H
#define FLOWCAST_H

#include <stddef.h>
#include <stdint.h>

#ifdef __cplusplus
extern "C" {
#endif

typedef enum fc_status {
    FC_OK = 0,
    FC_USAGE_ERROR = 1,
    FC_CONFIG_ERROR = 2,
    FC_RUNTIME_ERROR = 3,
    FC_PHYSICS_FAILURE = 4
} fc_status;

const char* fc_version(void);

/* Message for the most recent failure on this thread. */
const char* fc_last_error(void);

void fc_string_free(char* text);

/* ---- scalar fields -------------------------------------------------- */

typedef struct fc_field fc_field;

/* values is row-major height*width, or NULL for a zero field. */
fc_status fc_field_create(int height, int width, double length_x, double length_y,
                          const char* variable, const char* unit, const double* values,
                          fc_field** out);
fc_status fc_field_load(const char* stem, fc_field** out);
fc_status fc_field_save(const fc_field* field, const char* stem);
fc_status fc_field_shape(const fc_field* field, int* height, int* width);
fc_status fc_field_values(const fc_field* field, const double** values);
fc_status fc_field_stats(const fc_field* field, double* mean, double* min, double* max,
                         double* std_dev);
fc_status fc_field_convert_units(const fc_field* field, const char* unit, fc_field** out);
void fc_field_destroy(fc_field* field);

/* Spectral operators on periodic grids. */
fc_status fc_divergence(const fc_field* u, const fc_field* v, fc_field** out);
fc_status fc_vorticity(const fc_field* u, const fc_field* v, fc_field** out);
fc_status fc_velocity_from_vorticity(const fc_field* vorticity, fc_field** u_out, fc_field** v_out);

/* ---- knowledge store ------------------------------------------------- */

typedef struct fc_store fc_store;

/* embedder_spec: "hash:<dim>:<seed>" or "remote:<dim>:<url>". */
fc_status fc_store_create(const char* embedder_spec, fc_store** out);
/* partition: "phy", "prot" or "hist". */
fc_status fc_store_ingest_dir(fc_store* store, const char* directory, const char* partition,
                              int* count_out);
/* partition NULL or "all" searches every partition. The result is a JSON
 * array [{"id", "score", "text"}] ranked by inner product. */
fc_status fc_store_query(const fc_store* store, const char* text, int k, const char* partition,
                         char** ranked_json_out);
fc_status fc_store_save(const fc_store* store, const char* stem);
fc_status fc_store_load(const char* stem, const char* embedder_spec, fc_store** out);
void fc_store_destroy(fc_store* store);

/* ---- subcommand runner ----------------------------------------------- */

/* Runs one command exactly as the CLI does: "simulate", "ensemble",
 * "probe", "retrieve", "agent-run", "report", "evaluate" or
 * "train-projector". config_file may be NULL; overrides are key=value
 * strings applied on top (flags > file > defaults); out_dir receives the
 * artifacts plus a manifest.json. summary_json_out (optional) receives the
 * run summary. FC_PHYSICS_FAILURE reports an episode that ended failed. */
fc_status fc_run(const char* command, const char* config_file, const char* const* overrides,
                 size_t n_overrides, const char* out_dir, char** summary_json_out);

#ifdef __cplusplus
}
#endif

#endif /* FLOWCAST_H */
