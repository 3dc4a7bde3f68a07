#ifndef CMPNET_H
#define CMPNET_H

/* Generated by cbindgen from crates/ffi/src/lib.rs. Do not edit. */

#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>

typedef enum CmpnetPolicy {
  CMPNET_POLICY_NODE_CHOSEN = 0,
  CMPNET_POLICY_RANDOM_ADVERSARY = 1,
  CMPNET_POLICY_STRONG_ADVERSARY = 2,
} CmpnetPolicy;

typedef enum CmpnetLabels {
  CMPNET_LABELS_BIG = 0,
  CMPNET_LABELS_SMALL = 1,
} CmpnetLabels;

typedef enum CmpnetWills {
  CMPNET_WILLS_ONE_ROUND = 0,
  CMPNET_WILLS_ADVERSARIAL = 1,
} CmpnetWills;

typedef enum CmpnetStatus {
  CMPNET_STATUS_OK = 0,
  CMPNET_STATUS_NULL_POINTER = 1,
  CMPNET_STATUS_INVALID_ARGUMENT = 2,
  CMPNET_STATUS_GRAPH = 3,
  /**
   * A simulation fault or a failed oracle or bound check.
   */
  CMPNET_STATUS_FAULT = 4,
  CMPNET_STATUS_UNSUPPORTED = 5,
  CMPNET_STATUS_IO = 6,
  CMPNET_STATUS_PANIC = 7,
} CmpnetStatus;

/**
 * A preprocessed network. Opaque to C.
 */
typedef struct CmpnetNetwork CmpnetNetwork;

typedef struct CmpnetConfig {
  uint64_t b;
  enum CmpnetPolicy policy;
  /**
   * Seed for `RandomAdversary`; ignored otherwise.
   */
  uint64_t policy_seed;
  enum CmpnetLabels labels;
  enum CmpnetWills wills;
  /**
   * Scales the default per-node budget of 64 log n words.
   */
  double budget_mult;
  /**
   * Numbers ports with gaps from this seed when `use_port_seed` is set.
   */
  uint64_t port_seed;
  bool use_port_seed;
  bool strict;
} CmpnetConfig;

typedef struct CmpnetRoute {
  bool delivered;
  /**
   * Every move, including moves between a node and the helper it hosts.
   */
  uint64_t hops;
  /**
   * Moves over real links only.
   */
  uint64_t link_hops;
} CmpnetRoute;

typedef struct CmpnetHeal {
  uint64_t delta;
  uint64_t virtual_nodes;
  int64_t max_degree_delta;
} CmpnetHeal;

typedef struct CmpnetTreeRef {
  bool exists;
  /**
   * 0 for a leaf, 1 for a non-leaf.
   */
  uint8_t kind;
  uint64_t label;
} CmpnetTreeRef;

typedef struct CmpnetNeighborhood {
  struct CmpnetTreeRef leaf_parent;
  struct CmpnetTreeRef nonleaf_parent;
  struct CmpnetTreeRef nonleaf_left;
  struct CmpnetTreeRef nonleaf_right;
} CmpnetNeighborhood;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/**
 * Defaults: b = 2, node-chosen reads, big labels, one-round wills,
 * the default memory budget, contiguous ports, strict mode.
 */
struct CmpnetConfig cmpnet_config_default(void);

/**
 * Message for the last failed call on this thread, or null. The pointer
 * stays valid until the next `cmpnet_*` call on the same thread.
 */
const char *cmpnet_last_error(void);

/**
 * Builds a network and runs the full preprocessing pipeline on it.
 *
 * `edges` holds `2 * m` ids, one pair per edge. `nodes` may list extra
 * node ids (for a single-node graph) and may be null when `n` is 0. On
 * success `*out` owns a new handle. A failed oracle or bound check returns
 * `Fault` and leaves `*out` untouched.
 *
 * # Safety
 * `nodes` and `edges` must point to `n` and `2 * m` readable ids, and
 * `config` and `out` must be valid pointers.
 */
enum CmpnetStatus cmpnet_preprocess(const uint64_t *nodes,
                                    size_t n,
                                    const uint64_t *edges,
                                    size_t m,
                                    const struct CmpnetConfig *config,
                                    struct CmpnetNetwork **out);

/**
 * Releases a handle. Null is ignored.
 *
 * # Safety
 * `net` must be null or a handle from this library not yet freed.
 */
void cmpnet_network_free(struct CmpnetNetwork *net);

/**
 * Number of live nodes.
 *
 * # Safety
 * `net` must be a valid handle and `out` writable.
 */
enum CmpnetStatus cmpnet_node_count(const struct CmpnetNetwork *net, uint64_t *out);

/**
 * The preprocessing report as a JSON string owned by the caller; release
 * it with `cmpnet_string_free`. Handles loaded from a snapshot have no
 * report and return `InvalidArgument`.
 *
 * # Safety
 * `net` must be a valid handle and `out` writable.
 */
enum CmpnetStatus cmpnet_report_json(const struct CmpnetNetwork *net, char **out);

/**
 * # Safety
 * `s` must be null or a string returned by this library not yet freed.
 */
void cmpnet_string_free(char *s);

/**
 * Routes a packet from `source` to `target`. Returns `Ok` whether or not
 * the packet arrived; when `delivered` is false, `cmpnet_last_error`
 * gives the reason.
 *
 * # Safety
 * `net` must be a valid handle and `out` writable.
 */
enum CmpnetStatus cmpnet_route(const struct CmpnetNetwork *net,
                               uint64_t source,
                               uint64_t target,
                               uint64_t max_hops,
                               struct CmpnetRoute *out);

/**
 * Deletes `node` and heals the network from the wills. `out` may be null.
 *
 * # Safety
 * `net` must be a valid handle; `out` must be null or writable.
 */
enum CmpnetStatus cmpnet_delete(struct CmpnetNetwork *net, uint64_t node, struct CmpnetHeal *out);

/**
 * Neighborhood of `y` in the half-full tree over `[a, b]`.
 *
 * # Safety
 * `out` must be writable.
 */
enum CmpnetStatus cmpnet_query_ht(uint64_t y,
                                  uint64_t a,
                                  uint64_t b,
                                  struct CmpnetNeighborhood *out);

/**
 * Writes the labeled network to a JSON snapshot.
 *
 * # Safety
 * `net` must be a valid handle and `file` a NUL-terminated path.
 */
enum CmpnetStatus cmpnet_snapshot_save(const struct CmpnetNetwork *net, const char *file);

/**
 * Loads a snapshot into a new handle.
 *
 * # Safety
 * `file` must be a NUL-terminated path and `out` writable.
 */
enum CmpnetStatus cmpnet_snapshot_load(const char *file, struct CmpnetNetwork **out);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* CMPNET_H */
