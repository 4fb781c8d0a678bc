#ifndef STIMULI_H
#define STIMULI_H

/* Generated by cbindgen from crates/ffi/src/lib.rs; do not edit. */

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

/**
 * Status codes of every fallible call.
 */
typedef enum StimStatus {
  STIM_STATUS_OK = 0,
  STIM_STATUS_NULL_POINTER = 1,
  STIM_STATUS_INVALID_UTF8 = 2,
  STIM_STATUS_INVALID_ARGUMENT = 3,
  STIM_STATUS_PARSE = 4,
  STIM_STATUS_SCENARIO = 5,
  STIM_STATUS_SIMULATION = 6,
  STIM_STATUS_CERTIFICATE = 7,
  STIM_STATUS_PANIC = 8,
} StimStatus;

/**
 * Opaque simulation handle.
 */
typedef struct StimSim StimSim;

/**
 * Agent counters of a simulation.
 */
typedef struct StimCounts {
  uint64_t agents;
  uint64_t aware;
  uint64_t tokens;
  uint64_t witnesses;
  uint64_t tick;
} StimCounts;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/**
 * Message of the last failed call on this thread, or NULL. Valid until
 * the next call into this library on the same thread.
 */
const char *stim_last_error(void);

/**
 * Library version as a static NUL-terminated string.
 */
const char *stim_version(void);

/**
 * Creates trial `trial` of a scenario given as TOML text. Relative file
 * references resolve against the working directory.
 *
 * # Safety
 * `scenario_toml` must be a NUL-terminated string; `out` must be writable.
 */
enum StimStatus stim_sim_new(const char *scenario_toml, uint64_t trial, struct StimSim **out);

/**
 * Releases a simulation; NULL is ignored.
 *
 * # Safety
 * `sim` must come from [`stim_sim_new`] and not be used afterwards.
 */
void stim_sim_free(struct StimSim *sim);

/**
 * Advances by `iterations` iterations, applying scheduled events.
 *
 * # Safety
 * `sim` must be a live handle.
 */
enum StimStatus stim_sim_step(struct StimSim *sim, uint64_t iterations);

/**
 * # Safety
 * `sim` must be a live handle and `out` writable.
 */
enum StimStatus stim_sim_counts(const struct StimSim *sim, struct StimCounts *out);

/**
 * State tag ("U", "A0", "AA", "AW", "AAW", "AC") of `agent`, as a static
 * string.
 *
 * # Safety
 * `sim` must be a live handle and `out` writable.
 */
enum StimStatus stim_sim_agent_state(const struct StimSim *sim, uint64_t agent, const char **out);

/**
 * Lattice snapshot JSON; free with [`stim_string_free`].
 *
 * # Safety
 * `sim` must be a live handle and `out` writable.
 */
enum StimStatus stim_sim_snapshot_json(const struct StimSim *sim, char **out);

/**
 * # Safety
 * `sim` must be a live handle.
 */
enum StimStatus stim_sim_place_food(struct StimSim *sim, int32_t q, int32_t r);

/**
 * # Safety
 * `sim` must be a live handle.
 */
enum StimStatus stim_sim_remove_food(struct StimSim *sim, int32_t q, int32_t r);

/**
 * # Safety
 * `sim` must be a live handle.
 */
enum StimStatus stim_sim_shift_food(struct StimSim *sim,
                                    int32_t from_q,
                                    int32_t from_r,
                                    int32_t to_q,
                                    int32_t to_r);

/**
 * # Safety
 * `sim` must be a live handle.
 */
enum StimStatus stim_sim_set_lambda(struct StimSim *sim, double lambda);

/**
 * Graph mode: make `agent` a witness (`on != 0`) or not.
 *
 * # Safety
 * `sim` must be a live handle.
 */
enum StimStatus stim_sim_set_witness(struct StimSim *sim, uint64_t agent, int32_t on);

/**
 * Reduces a configuration (`{"pinned":[q,r],"agents":[[q,r],...]}`) to a
 * straight line; `direction` in 0..=5 fixes the line direction, -1 leaves
 * it free. The certificate JSON is written to `out`.
 *
 * # Safety
 * `config_json` must be a NUL-terminated string and `out` writable.
 */
enum StimStatus stim_certificate_reduce(const char *config_json, int32_t direction, char **out);

/**
 * Replays a certificate. On an invalid move `failing_move` (if not NULL)
 * receives its index, otherwise -1.
 *
 * # Safety
 * `certificate_json` must be a NUL-terminated string; `failing_move` may
 * be NULL.
 */
enum StimStatus stim_certificate_verify(const char *certificate_json, int64_t *failing_move);

/**
 * Releases a string returned by this library; NULL is ignored.
 *
 * # Safety
 * `s` must come from this library and not be used afterwards.
 */
void stim_string_free(char *s);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* STIMULI_H */
