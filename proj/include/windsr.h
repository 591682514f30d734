/*
 * windsr — conditioned ensemble diffusion downscaling of gridded wind fields.
 *
 * C API of the shared library. All functions return a windsr_status code
 * (WINDSR_OK on success); the thread-local message from windsr_last_error()
 * describes the most recent failure on the calling thread. Handles are
 * opaque and must be released with their matching *_close function.
 */
#ifndef WINDSR_H
#define WINDSR_H

#include <stddef.h>
#include <stdint.h>

#ifdef __cplusplus
extern "C" {
#endif

typedef enum windsr_status {
    WINDSR_OK = 0,
    WINDSR_ERR_INVALID_ARGUMENT = 1,
    WINDSR_ERR_EXTENT = 2,
    WINDSR_ERR_SHAPE = 3,
    WINDSR_ERR_KERNEL = 4,
    WINDSR_ERR_ALIGNMENT = 5,
    WINDSR_ERR_BOUNDARY = 6,
    WINDSR_ERR_IO = 7,
    WINDSR_ERR_DATA = 8,
    WINDSR_ERR_SCHEDULE = 9,
    WINDSR_ERR_SINGULARITY = 10,
    WINDSR_ERR_NUMERIC = 11,
    WINDSR_ERR_EMPTY = 12,
    WINDSR_ERR_INTERNAL = 99
} windsr_status;

const char* windsr_version(void);

/* Message for the last failing call on this thread ("" if none). */
const char* windsr_last_error(void);

/* 1 if the status denotes a numerical failure (CLI exit 3), 0 otherwise
 * (input/config problems, CLI exit 2). */
int windsr_status_is_numeric(windsr_status status);

/* ------------------------------------------------------------------ */
/* Pipeline commands. Each takes the full run-config JSON text (not a
 * filename) and writes its artifacts plus a manifest under the configured
 * output directory. */
windsr_status windsr_cmd_synth(const char* config_json);
windsr_status windsr_cmd_train(const char* config_json);
windsr_status windsr_cmd_sample(const char* config_json);
windsr_status windsr_cmd_evaluate(const char* config_json);
windsr_status windsr_cmd_validate(const char* config_json);

/* ------------------------------------------------------------------ */
/* Gridded stores (.f32grid + JSON sidecar). */
typedef struct windsr_store windsr_store;

typedef struct windsr_store_info {
    int32_t rows;
    int32_t cols;
    int64_t times;
    double north, south, east, west;
    int64_t t0_epoch_seconds;
    int32_t step_hours;
    int32_t normalized;  /* 0: m/s, 1: normalized */
    double norm_max;     /* <= 0 when absent */
} windsr_store_info;

windsr_status windsr_store_open(const char* path, windsr_store** out);
void windsr_store_close(windsr_store* store);
windsr_status windsr_store_info_get(const windsr_store* store, windsr_store_info* out);
/* Copies frame `index` (rows*cols floats, row-major, row 0 north). */
windsr_status windsr_store_read(const windsr_store* store, int64_t index, float* buffer,
                                size_t buffer_len);

/* ------------------------------------------------------------------ */
/* Checkpointed diffusion models. */
typedef struct windsr_model windsr_model;

windsr_status windsr_model_open(const char* checkpoint_path, windsr_model** out);
void windsr_model_close(windsr_model* model);
/* JSON description of the checkpoint header; the pointer stays valid until
 * the model is closed. */
windsr_status windsr_model_header_json(const windsr_model* model, const char** out);

/* Ensemble-diffusion sampling for one window. `conditioning` holds the four
 * upsampled normalized frames (t-6h, t-3h, t0, t+3h) back to back, each
 * rows*cols floats. Member m uses seed base_seed + m; `out_mean` receives
 * rows*cols floats. */
windsr_status windsr_ensemble_sample(windsr_model* model, const float* conditioning, int32_t rows,
                                     int32_t cols, int32_t members, int32_t steps,
                                     uint64_t base_seed, float* out_mean);

/* ------------------------------------------------------------------ */
/* Metric helpers over raw buffers (normalized units, peak 1). */
windsr_status windsr_mse(const float* pred, const float* truth, size_t count, double* out);
windsr_status windsr_psnr(const float* pred, const float* truth, size_t count, double* out);
windsr_status windsr_ssim(const float* pred, const float* truth, int32_t rows, int32_t cols,
                          double* out);

#ifdef __cplusplus
} /* extern "C" */
#endif

#endif /* WINDSR_H */
