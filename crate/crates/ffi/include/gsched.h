#ifndef GSCHED_H
#define GSCHED_H

/* Generated by cbindgen from crates/ffi/src/lib.rs. Do not edit. */

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

typedef enum GschedStatus {
  GSCHED_STATUS_OK = 0,
  GSCHED_STATUS_NULL_POINTER = 1,
  GSCHED_STATUS_INVALID_INPUT = 2,
  GSCHED_STATUS_NUMERICAL_FAILURE = 3,
  GSCHED_STATUS_DEGENERATE_SUBSPACE = 4,
  GSCHED_STATUS_CONFIG = 5,
  GSCHED_STATUS_PARSE = 6,
  GSCHED_STATUS_IO = 7,
  GSCHED_STATUS_PANIC = 8,
} GschedStatus;

/**
 * An `N × M` subspace dictionary.
 */
typedef struct GschedDictionary GschedDictionary;

/**
 * A weighted undirected graph.
 */
typedef struct GschedGraph GschedGraph;

/**
 * A balanced partition of the nodes into disjoint subsets.
 */
typedef struct GschedPartition GschedPartition;

/**
 * Solver settings for [`gsched_partition_pdca`].
 */
typedef struct GschedPdcaConfig {
  /**
   * Step size is `1/lipschitz`.
   */
  double lipschitz;
  double beta;
  size_t max_iters;
  double tol;
  uint64_t seed;
  /**
   * Raise `lipschitz` to a computed bound when it is smaller.
   */
  bool enforce_lipschitz_bound;
} GschedPdcaConfig;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/**
 * Length of the last error message on this thread including the NUL, or 0.
 */
size_t gsched_last_error_length(void);

/**
 * Copies the last error message into `buf`, truncating to `len - 1` bytes.
 *
 * Returns the full length including the NUL, so a caller can size a buffer
 * with a first call that passes `len = 0`.
 *
 * # Safety
 * `buf` must point to `len` writable bytes, or `len` must be 0.
 */
size_t gsched_last_error_message(char *buf, size_t len);

const char *gsched_status_name(enum GschedStatus status);

/**
 * Builds a graph from a symmetric `n × n` weight matrix.
 *
 * # Safety
 * `weights` must point to `n * n` doubles; `out` must be writable.
 */
enum GschedStatus gsched_graph_from_weights(size_t n,
                                            const double *weights,
                                            struct GschedGraph **out);

/**
 * # Safety
 * `graph` must be null or a live handle.
 */
size_t gsched_graph_n_nodes(const struct GschedGraph *graph);

/**
 * # Safety
 * `graph` must be null or a handle not yet freed.
 */
void gsched_graph_free(struct GschedGraph *graph);

/**
 * Wraps a column-major `n_nodes × n_atoms` matrix.
 *
 * # Safety
 * `matrix` must point to `n_nodes * n_atoms` doubles; `out` must be writable.
 */
enum GschedStatus gsched_dictionary_new(size_t n_nodes,
                                        size_t n_atoms,
                                        const double *matrix,
                                        struct GschedDictionary **out);

/**
 * Heat-diffusion dictionary `U exp(-αΛ) Uᵀ` of the graph Laplacian.
 *
 * # Safety
 * `graph` must be a live handle; `out` must be writable.
 */
enum GschedStatus gsched_dictionary_heat(const struct GschedGraph *graph,
                                         double alpha,
                                         struct GschedDictionary **out);

/**
 * # Safety
 * `dict` must be null or a live handle.
 */
size_t gsched_dictionary_n_nodes(const struct GschedDictionary *dict);

/**
 * # Safety
 * `dict` must be null or a live handle.
 */
size_t gsched_dictionary_n_atoms(const struct GschedDictionary *dict);

/**
 * Copies the matrix out column-major.
 *
 * # Safety
 * `dict` must be a live handle; `out` must hold `len` doubles.
 */
enum GschedStatus gsched_dictionary_copy(const struct GschedDictionary *dict,
                                         double *out,
                                         size_t len);

/**
 * # Safety
 * `dict` must be null or a handle not yet freed.
 */
void gsched_dictionary_free(struct GschedDictionary *dict);

struct GschedPdcaConfig gsched_pdca_config_default(void);

/**
 * Splits the nodes into `2^levels` balanced subsets by recursive PDCA bipartitioning.
 *
 * A null `cfg` uses [`gsched_pdca_config_default`].
 *
 * # Safety
 * `dict` must be a live handle, `cfg` null or valid, `out` writable.
 */
enum GschedStatus gsched_partition_pdca(const struct GschedDictionary *dict,
                                        uint32_t levels,
                                        const struct GschedPdcaConfig *cfg,
                                        struct GschedPartition **out);

/**
 * Modularity clusters ranked by eigenvector centrality, dealt cyclically.
 *
 * # Safety
 * `graph` must be a live handle; `out` writable.
 */
enum GschedStatus gsched_partition_srel(const struct GschedGraph *graph,
                                        size_t n_subsets,
                                        uint64_t seed,
                                        struct GschedPartition **out);

/**
 * Greedy A-optimal ranking of the dictionary rows, dealt cyclically.
 *
 * # Safety
 * `dict` must be a live handle; `out` writable.
 */
enum GschedStatus gsched_partition_sfrob(const struct GschedDictionary *dict,
                                         size_t n_subsets,
                                         struct GschedPartition **out);

/**
 * Builds a partition from one subset label per node.
 *
 * # Safety
 * `labels` must point to `n_nodes` values; `out` writable.
 */
enum GschedStatus gsched_partition_from_labels(const size_t *labels,
                                               size_t n_nodes,
                                               size_t n_subsets,
                                               struct GschedPartition **out);

/**
 * # Safety
 * `part` must be null or a live handle.
 */
size_t gsched_partition_n_nodes(const struct GschedPartition *part);

/**
 * # Safety
 * `part` must be null or a live handle.
 */
size_t gsched_partition_n_subsets(const struct GschedPartition *part);

/**
 * Writes the subset label of every node into `labels[0..n_nodes]`.
 *
 * # Safety
 * `part` must be a live handle; `labels` must hold `len` values.
 */
enum GschedStatus gsched_partition_labels(const struct GschedPartition *part,
                                          size_t *labels,
                                          size_t len);

/**
 * Number of nodes in subset `k`, or 0 when `k` is out of range.
 *
 * # Safety
 * `part` must be null or a live handle.
 */
size_t gsched_partition_subset_len(const struct GschedPartition *part, size_t k);

/**
 * Copies the sorted node indices of subset `k` into `nodes`.
 *
 * # Safety
 * `part` must be a live handle; `nodes` must hold `len` values.
 */
enum GschedStatus gsched_partition_subset(const struct GschedPartition *part,
                                          size_t k,
                                          size_t *nodes,
                                          size_t len);

/**
 * # Safety
 * `part` must be null or a handle not yet freed.
 */
void gsched_partition_free(struct GschedPartition *part);

/**
 * Minimax reconstruction `A (SᵀA)† y` from samples `y` on `nodes`.
 *
 * Writes `n_nodes` values to `x_out` and, when `cond_out` is not null, the
 * condition number of `SᵀA`.
 *
 * # Safety
 * `nodes` and `y` must hold `n_samples` values, `x_out` must hold the
 * dictionary's node count, `cond_out` null or writable.
 */
enum GschedStatus gsched_reconstruct(const struct GschedDictionary *dict,
                                     const size_t *nodes,
                                     const double *y,
                                     size_t n_samples,
                                     double *x_out,
                                     double *cond_out);

/**
 * `tr((SᵀAAᵀS)⁻¹)` for the sampling set `nodes`; `+inf` when singular.
 *
 * # Safety
 * `nodes` must hold `n_samples` values; `out` must be writable.
 */
enum GschedStatus gsched_aopt_objective(const struct GschedDictionary *dict,
                                        const size_t *nodes,
                                        size_t n_samples,
                                        double *out);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* GSCHED_H */
