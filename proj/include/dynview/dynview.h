// Copyright 2026 The DynView Authors.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

/*
 * C interface to the dynview library.
 *
 * Every fallible call returns a dv_status; on failure dv_last_error() holds a
 * message for the calling thread until its next failing call. Structured
 * results (view tables, manifests) are returned as UTF-8 JSON strings owned by
 * the caller and released with dv_string_free(). Handles are opaque and freed
 * with their matching *_free function; passing NULL to a free function is a
 * no-op.
 */
#ifndef DYNVIEW_DYNVIEW_H_
#define DYNVIEW_DYNVIEW_H_

#include <stddef.h>
#include <stdint.h>

#if defined(_WIN32)
#define DV_API __declspec(dllexport)
#else
#define DV_API __attribute__((visibility("default")))
#endif

#ifdef __cplusplus
extern "C" {
#endif

typedef enum dv_status {
  DV_OK = 0,
  DV_ERROR_DOMAIN = 1,   /* invalid value: box, coefficient, count ... */
  DV_ERROR_IO = 2,       /* file missing, unreadable, not a PNG */
  DV_ERROR_PARSE = 3,    /* malformed JSON or binary input */
  DV_ERROR_VERSION = 4,  /* manifest written by an incompatible format */
  DV_ERROR_ARGUMENT = 5, /* NULL pointer or malformed request */
  DV_ERROR_INTERNAL = 6
} dv_status;

typedef struct dv_image dv_image;
typedef struct dv_grid dv_grid;

typedef struct dv_batch_summary {
  uint64_t ingested;
  uint64_t emitted;
  uint64_t skipped;
  uint64_t errored;
} dv_batch_summary;

typedef void (*dv_progress_fn)(uint64_t done, uint64_t total, void* user);

DV_API const char* dv_version(void);
DV_API const char* dv_last_error(void);
DV_API const char* dv_status_name(dv_status status);
DV_API void dv_string_free(char* s);

/* One of trace, debug, info, warn, error, off. Unknown names are ignored. */
DV_API void dv_set_log_level(const char* level);

DV_API dv_status dv_image_load(const char* path, dv_image** out);
DV_API dv_status dv_image_decode(const uint8_t* bytes, size_t size, dv_image** out);
DV_API void dv_image_free(dv_image* image);
DV_API dv_status dv_image_info(const dv_image* image, int* width, int* height, int* channels);

/* 64-bit perceptual hash; hex form is 16 lowercase digits plus NUL. */
DV_API dv_status dv_phash(const dv_image* image, uint64_t* out);
DV_API dv_status dv_phash_hex(const dv_image* image, char out[17]);
DV_API int dv_hamming(uint64_t a, uint64_t b);

/*
 * Candidate views for region (x0, y0, x1, y1) inside image (x0, y0, x1, y1).
 * ts == NULL selects the default grid 0.1 ... 1.0. Result is a JSON array of
 * {"t": number, "crop": [x0, y0, x1, y1], "out_size": int}.
 */
DV_API dv_status dv_build_views(const double region[4], const double image[4], const double* ts,
                                size_t ts_count, int out_size, char** json_out);

/*
 * Runs view selection for one region and returns its manifest as one JSON
 * object. request_json keys (all optional): policy ("image-prior",
 * "task-prior", "no-prior"), mode, task, n, seed, candidate_ts, out_size,
 * image_id, image_path, region_idx, views_dir, caption, vocab (file path),
 * keep_prob.
 */
DV_API dv_status dv_select(const dv_image* image, const double region[4],
                           const char* request_json, char** manifest_json);

/*
 * Batch pipeline. request_json keys: annotations, images_dir, output (all
 * required), format ("coco_json" | "jsonl"), views_dir, jobs, ordered,
 * cache_capacity, plus the selection keys accepted by dv_select.
 */
DV_API dv_status dv_batch_run(const char* request_json, dv_progress_fn progress, void* user,
                              dv_batch_summary* summary);

/* Reads and validates a JSONL manifest; returns a JSON array of entries. */
DV_API dv_status dv_manifest_read(const char* path, char** json_out);

DV_API dv_status dv_grid_load(const char* path, dv_grid** out);
DV_API dv_status dv_grid_save(const dv_grid* grid, const char* path);
DV_API dv_status dv_grid_create(int height, int width, int channels, const float* data,
                                dv_grid** out);
DV_API void dv_grid_free(dv_grid* grid);
DV_API dv_status dv_grid_info(const dv_grid* grid, int* height, int* width, int* channels);
/* Pointer to height * width * channels floats, valid while the handle lives. */
DV_API const float* dv_grid_data(const dv_grid* grid);

DV_API dv_status dv_roi_align(const dv_grid* grid, const double box[4], int out_h, int out_w,
                              int sampling_ratio, dv_grid** out);
/* offsets is a two-channel grid (dx, dy) with the same height and width. */
DV_API dv_status dv_offset_resample(const dv_grid* grid, const dv_grid* offsets, dv_grid** out);

#ifdef __cplusplus
}
#endif

#endif /* DYNVIEW_DYNVIEW_H_ */
