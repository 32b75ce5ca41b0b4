#ifndef HAMDS3_H
#define HAMDS3_H

/* Generated by cbindgen from crates/ffi/src/lib.rs. Do not edit. */

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

typedef enum Hamds3Status {
  HAMDS3_STATUS_OK = 0,
  HAMDS3_STATUS_NULL_POINTER = 1,
  HAMDS3_STATUS_INVALID_ARGUMENT = 2,
  HAMDS3_STATUS_INPUT_ERROR = 3,
  HAMDS3_STATUS_NO_CYCLE = 4,
  HAMDS3_STATUS_BUFFER_TOO_SMALL = 5,
  HAMDS3_STATUS_INTERNAL = 6,
} Hamds3Status;

/*
 Opaque graph handle.
 */
typedef struct Hamds3Graph Hamds3Graph;

/*
 Opaque handle to a finished run.
 */
typedef struct Hamds3Run Hamds3Run;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/*
 Message for the last failed call on this thread; empty after a success.
 The pointer stays valid until the next call on this thread.
 */
const char *hamds3_last_error(void);

const char *hamds3_version(void);

/*
 Builds a graph from `m` edges given as `2m` consecutive vertex ids, in
 edge order.

 # Safety
 `edges` must point to `2 * m` readable `uint32_t` values (or be null when
 `m == 0`); `out` must be writable.
 */
enum Hamds3Status hamds3_graph_from_edges(size_t n,
                                          const uint32_t *edges,
                                          size_t m,
                                          struct Hamds3Graph **out);

/*
 Samples a random graph with `n` vertices, `round(c·n)` edges and minimum
 degree 3.

 # Safety
 `out` must be writable.
 */
enum Hamds3Status hamds3_graph_sample(size_t n, double c, uint64_t seed, struct Hamds3Graph **out);

/*
 # Safety
 `g` must be null or a live handle.
 */
size_t hamds3_graph_n(const struct Hamds3Graph *g);

/*
 # Safety
 `g` must be null or a live handle.
 */
size_t hamds3_graph_m(const struct Hamds3Graph *g);

/*
 # Safety
 `g` must be null or a handle not yet freed.
 */
void hamds3_graph_free(struct Hamds3Graph *g);

/*
 Runs the full pipeline. Algorithmic failure still yields a run handle;
 inspect it with `hamds3_run_success`.

 # Safety
 `g` must be a live handle and `out` writable.
 */
enum Hamds3Status hamds3_run(const struct Hamds3Graph *g, uint64_t seed, struct Hamds3Run **out);

/*
 1 if the run found a verified Hamilton cycle, 0 otherwise.

 # Safety
 `r` must be null or a live handle.
 */
int hamds3_run_success(const struct Hamds3Run *r);

/*
 Copies the cycle into `buf`. `len` receives the cycle length even when
 the buffer is too small.

 # Safety
 `r` must be a live handle, `buf` must hold `cap` values (or be null when
 `cap == 0`), `len` must be writable.
 */
enum Hamds3Status hamds3_run_cycle(const struct Hamds3Run *r,
                                   uint32_t *buf,
                                   size_t cap,
                                   size_t *len);

/*
 The run report as JSON. Release with `hamds3_string_free`; null on error.

 # Safety
 `r` must be a live handle.
 */
char *hamds3_run_report_json(const struct Hamds3Run *r);

/*
 # Safety
 `s` must be null or a string from `hamds3_run_report_json` not yet freed.
 */
void hamds3_string_free(char *s);

/*
 # Safety
 `r` must be null or a handle not yet freed.
 */
void hamds3_run_free(struct Hamds3Run *r);

/*
 1 if `seq[0..len]` is a Hamilton cycle of `g`, 0 if not, -1 on a null argument.

 # Safety
 `g` must be a live handle and `seq` must hold `len` values.
 */
int hamds3_check_hamilton(const struct Hamds3Graph *g, const uint32_t *seq, size_t len);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* HAMDS3_H */
