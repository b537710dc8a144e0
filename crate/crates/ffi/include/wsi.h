#ifndef WSI_H
#define WSI_H

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

typedef enum WsiStatus {
  WSI_STATUS_OK = 0,
  WSI_STATUS_NULL_POINTER = 1,
  WSI_STATUS_INVALID_ARGUMENT = 2,
  WSI_STATUS_IO = 3,
  WSI_STATUS_FORMAT = 4,
  WSI_STATUS_MISSING_EMBEDDINGS = 5,
  WSI_STATUS_PANIC = 99,
} WsiStatus;

// Opaque embedding store.
typedef struct WsiStore WsiStore;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

// Message of the last failed call on this thread, or null. Valid until the
// next call into this library from the same thread.
const char *wsi_last_error(void);

// Empty store for vectors of length `dim`.
//
// # Safety
// `model_id` must be a valid C string; `out` must be writable.
enum WsiStatus wsi_store_new(const char *model_id,
                             uint32_t layer,
                             uint32_t dim,
                             struct WsiStore **out);

// Reads `dir/layer_<layer>.emb` and its index.
//
// # Safety
// `dir` must be a valid C string; `out` must be writable.
enum WsiStatus wsi_store_open(const char *dir, uint32_t layer, struct WsiStore **out);

// Writes the store as `dir/layer_<layer>.emb` and `.idx`.
//
// # Safety
// `store` must come from this library; `dir` must be a valid C string.
enum WsiStatus wsi_store_write(const struct WsiStore *store, const char *dir);

// # Safety
// `store` must come from this library; `vector` must hold `dim` floats.
enum WsiStatus wsi_store_insert(struct WsiStore *store,
                                const char *id,
                                const float *vector,
                                size_t dim);

// Copies the vector of `id` into `out` (which holds `dim` floats).
//
// # Safety
// `store` must come from this library; `out` must hold `dim` floats.
enum WsiStatus wsi_store_get(const struct WsiStore *store, const char *id, float *out, size_t dim);

// # Safety
// `store` must be null or come from this library.
size_t wsi_store_len(const struct WsiStore *store);

// # Safety
// `store` must be null or come from this library.
size_t wsi_store_dim(const struct WsiStore *store);

// # Safety
// `store` must be null or come from this library, and is invalid afterwards.
void wsi_store_free(struct WsiStore *store);

// B-Cubed precision, recall and F. Any output pointer may be null.
//
// # Safety
// `gold` and `system` must hold `n` labels.
enum WsiStatus wsi_b_cubed(const uint32_t *gold,
                           const uint32_t *system,
                           size_t n,
                           double *precision,
                           double *recall,
                           double *f);

// # Safety
// `gold` and `system` must hold `n` labels; `out` must be writable.
enum WsiStatus wsi_nmi(const uint32_t *gold, const uint32_t *system, size_t n, double *out);

// # Safety
// `gold` and `system` must hold `n` labels; `out` must be writable.
enum WsiStatus wsi_v_measure(const uint32_t *gold, const uint32_t *system, size_t n, double *out);

// Paired F-score; `undefined` (optional) is set to 1 when either side has no
// same-cluster pair, in which case the score is 0.
//
// # Safety
// `gold` and `system` must hold `n` labels; `out` must be writable.
enum WsiStatus wsi_paired_f(const uint32_t *gold,
                            const uint32_t *system,
                            size_t n,
                            double *out,
                            uint8_t *undefined);

// # Safety
// `gold` and `system` must hold `n` labels; `out` must be writable.
enum WsiStatus wsi_rand_index(const uint32_t *gold, const uint32_t *system, size_t n, double *out);

// Average-linkage clustering into `k` clusters. `must_link` holds `m` index
// pairs (2 * m values) whose distance is set to zero first.
//
// # Safety
// `data` must hold `n * dim` values, `must_link` 2 * m values, `labels_out` n values.
enum WsiStatus wsi_ag_cluster(const double *data,
                              size_t n,
                              size_t dim,
                              size_t k,
                              const size_t *must_link,
                              size_t m,
                              uint32_t *labels_out);

// Average-linkage clustering with the cluster count chosen by silhouette over
// `k_min..=k_max`; the chosen count goes to `k_out`.
//
// # Safety
// `data` must hold `n * dim` values, `labels_out` n values; `k_out` must be writable.
enum WsiStatus wsi_ag_silhouette(const double *data,
                                 size_t n,
                                 size_t dim,
                                 size_t k_min,
                                 size_t k_max,
                                 uint32_t *labels_out,
                                 size_t *k_out);

// X-means with k-means++ seeding from `seed`; the final count goes to `k_out`.
//
// # Safety
// `data` must hold `n * dim` values, `labels_out` n values; `k_out` must be writable.
enum WsiStatus wsi_xmeans(const double *data,
                          size_t n,
                          size_t dim,
                          size_t k_min,
                          size_t k_max,
                          double tolerance,
                          uint64_t seed,
                          uint32_t *labels_out,
                          size_t *k_out);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* WSI_H */
