/* C interface to the penseg library: 3D-to-2D learned projection,
 * multi-channel flow-based instance segmentation, synthetic scene
 * generation, training, evaluation, and tiled inference.
 *
 * All functions return PS_OK (0) on success or a nonzero error code;
 * ps_last_error() describes the most recent failure on the calling
 * thread. Strings returned through char** out-parameters are owned by
 * the caller and must be released with ps_string_free(). */

#ifndef PENSEG_H
#define PENSEG_H

#ifdef __cplusplus
extern "C" {
#endif

enum ps_error_code {
    PS_OK = 0,
    PS_ERR_FORMAT = 1,     /* malformed file contents */
    PS_ERR_VALIDATION = 2, /* contract violation (bad arguments, bad data) */
    PS_ERR_CONFIG = 3,     /* invalid configuration */
    PS_ERR_CAPACITY = 4,   /* generator could not satisfy its constraints */
    PS_ERR_IO = 5,         /* filesystem failure */
    PS_ERR_UNKNOWN = 6
};

/* Thread-local message for the last failing call; never NULL. */
const char* ps_last_error(void);

void ps_string_free(char* s);

/* ---- opaque handles ---- */

typedef struct ps_stack ps_stack;   /* a loaded 3D image stack */
typedef struct ps_model ps_model;   /* a trained or initialized model */

int ps_stack_load(const char* tiff_path, ps_stack** out);
int ps_stack_dims(const ps_stack* stack, int* z, int* h, int* w);
void ps_stack_free(ps_stack* stack);

int ps_model_load(const char* model_dir, ps_model** out);
void ps_model_free(ps_model* model);

/* ---- pipeline operations (mirroring the CLI subcommands) ---- */

/* Writes n_scenes TIFF+JSON fixture pairs into out_dir. */
int ps_synth(const char* config_path, const char* out_dir);

/* Trains per the config on TIFF+JSON pairs under data_dir (val_dir may
 * equal data_dir) and writes parameters + history.json into out_dir. */
int ps_train(const char* config_path, const char* data_dir, const char* val_dir,
             const char* out_dir);

/* Evaluates a saved model over a dataset directory; *report_json gets a
 * JSON object {tp, fp, fn, jaccard, precision, recall, quality,
 * threshold, degenerate}. */
int ps_eval(const char* model_dir, const char* data_dir, double iou_threshold,
            char** report_json);

/* Renders the model's 2D projection of a stack as an 8-bit RGB PNG. */
int ps_model_project(ps_model* model, const ps_stack* stack, const char* out_png);

/* As above for the built-in projections; mode is "mip" or "linear". */
int ps_project_mode(const char* mode, const ps_stack* stack, const char* out_png);

/* Tiled whole-stack detection; writes detections (with per-cell output
 * channel) as annotation JSON to out_json. */
int ps_model_infer(ps_model* model, const ps_stack* stack, int tile, int overlap,
                   const char* out_json);

/* Standalone metrics between two annotation JSON files. */
int ps_metrics(const char* gt_json_path, const char* pred_json_path, double iou_threshold,
               char** report_json);

#ifdef __cplusplus
}
#endif

#endif /* PENSEG_H */
