#ifndef QUALNET_H
#define QUALNET_H

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

// Result code of every fallible call.
typedef enum QnStatus {
  QN_STATUS_OK = 0,
  QN_STATUS_NULL_POINTER = 1,
  QN_STATUS_INVALID_UTF8 = 2,
  QN_STATUS_IO = 3,
  QN_STATUS_PARSE = 4,
  QN_STATUS_INVALID_NETWORK = 5,
  QN_STATUS_UNKNOWN_NODE = 6,
  QN_STATUS_INVALID_EVIDENCE = 7,
  QN_STATUS_IMPOSSIBLE_EVIDENCE = 8,
  QN_STATUS_NOT_INTERVAL = 9,
  QN_STATUS_BUFFER_TOO_SMALL = 10,
  QN_STATUS_UNKNOWN_CASE = 11,
  QN_STATUS_PANIC = 12,
  QN_STATUS_OTHER = 13,
} QnStatus;

// A set of observations keyed by node id.
typedef struct QnEvidence QnEvidence;

// A compiled network.
typedef struct QnNetwork QnNetwork;

// Posterior marginals of every node.
typedef struct QnPosterior QnPosterior;

// Summary of an interval node's posterior.
typedef struct QnSummary {
  double mean;
  double sd;
  // Index of the most probable bin.
  size_t mode;
} QnSummary;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

// Loads and compiles a `bnet-v1` file.
//
// # Safety
// `path` must be a valid C string; `out` must be writable.
enum QnStatus qn_network_load(const char *path, struct QnNetwork **out);

// Builds one of the bundled networks, `maintainability` or `security`.
//
// # Safety
// `name` must be a valid C string; `out` must be writable.
enum QnStatus qn_network_load_case(const char *name, struct QnNetwork **out);

// # Safety
// `net` must come from a load call and not be used afterwards.
void qn_network_free(struct QnNetwork *net);

// Number of nodes, 0 for a null handle.
//
// # Safety
// `net` must be null or a live handle.
size_t qn_network_node_count(const struct QnNetwork *net);

// Index of the node with the given id.
//
// # Safety
// Pointers must be valid; `out` must be writable.
enum QnStatus qn_network_node_index(const struct QnNetwork *net, const char *id, size_t *out);

// An empty evidence set.
struct QnEvidence *qn_evidence_new(void);

// # Safety
// `ev` must come from [`qn_evidence_new`] and not be used afterwards.
void qn_evidence_free(struct QnEvidence *ev);

// Observes a numeric value; it is mapped to its bin at inference time.
//
// # Safety
// Pointers must be valid.
enum QnStatus qn_evidence_set_value(struct QnEvidence *ev, const char *node, double value);

// Observes a state by label.
//
// # Safety
// Pointers must be valid.
enum QnStatus qn_evidence_set_state(struct QnEvidence *ev, const char *node, const char *state);

// Posterior marginals of all nodes. `ev` may be null for the prior.
//
// # Safety
// `net` must be live, `ev` null or live, `out` writable.
enum QnStatus qn_infer(const struct QnNetwork *net,
                       const struct QnEvidence *ev,
                       struct QnPosterior **out);

// # Safety
// `post` must come from [`qn_infer`] and not be used afterwards.
void qn_posterior_free(struct QnPosterior *post);

// Number of states of node `node`.
//
// # Safety
// `post` must be live; `out` writable.
enum QnStatus qn_posterior_state_count(const struct QnPosterior *post, size_t node, size_t *out);

// Copies the probabilities of node `node` into `buf`, which must hold at
// least the node's state count.
//
// # Safety
// `post` must be live; `buf` must be writable for `len` doubles.
enum QnStatus qn_posterior_probabilities(const struct QnPosterior *post,
                                         size_t node,
                                         double *buf,
                                         size_t len);

// Mean, sd and mode of an interval node.
//
// # Safety
// `post` must be live; `out` writable.
enum QnStatus qn_posterior_summary(const struct QnPosterior *post,
                                   size_t node,
                                   struct QnSummary *out);

// Message of the last failure on this thread, or null. Release it with
// [`qn_string_free`].
char *qn_last_error_message(void);

// # Safety
// `s` must come from this library and not be used afterwards.
void qn_string_free(char *s);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* QUALNET_H */
