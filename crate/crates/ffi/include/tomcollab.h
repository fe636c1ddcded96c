#ifndef TOMCOLLAB_H
#define TOMCOLLAB_H

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

typedef enum TcStatus {
  TC_STATUS_OK = 0,
  TC_STATUS_NULL_POINTER = 1,
  TC_STATUS_INVALID_UTF8 = 2,
  TC_STATUS_CONFIG = 3,
  TC_STATUS_USAGE = 4,
  TC_STATUS_SHAPE = 5,
  TC_STATUS_NUMERIC = 6,
  TC_STATUS_IO = 7,
  TC_STATUS_JSON = 8,
  TC_STATUS_DEGENERATE = 9,
  TC_STATUS_PANIC = 10,
} TcStatus;

// A kitchen configuration.
typedef struct TcKitchen TcKitchen;

// A kitchen game in progress.
typedef struct TcKitchenEpisode TcKitchenEpisode;

// A scheduling configuration.
typedef struct TcScheduling TcScheduling;

// Two trained agents loaded from a team checkpoint.
typedef struct TcTeam TcTeam;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

// Copy the calling thread's last error message into `buf` (NUL terminated,
// truncated to `len`). Returns the full message length in bytes.
//
// # Safety
// `buf` must be null or point to at least `len` writable bytes.
size_t tc_last_error_message(char *buf, size_t len);

// Counterfactual Bayes: `out[i] ∝ prior[i] * likelihood[i]`.
//
// # Safety
// `prior`, `likelihood` and `out` must each point to `n` doubles.
enum TcStatus tc_belief_update(const double *prior,
                               const double *likelihood,
                               size_t n,
                               double *out);

// # Safety
// `out` must be a valid pointer to a handle slot.
enum TcStatus tc_kitchen_new(size_t k, size_t m, size_t w, struct TcKitchen **out);

// # Safety
// `h` must be null or a handle from [`tc_kitchen_new`] not yet freed.
void tc_kitchen_free(struct TcKitchen *h);

// Start a game from a scenario given as JSON `{"recipe": [[...], ...], "target": i}`.
//
// # Safety
// `h` must be a live kitchen handle, `scenario_json` a NUL-terminated string, `out` a valid slot.
enum TcStatus tc_kitchen_start(const struct TcKitchen *h,
                               const char *scenario_json,
                               struct TcKitchenEpisode **out);

// Add one ingredient. `terminal` receives 0 (running), 1 (success) or 2 (failure).
//
// # Safety
// `ep` must be a live episode; `reward` and `terminal` valid pointers.
enum TcStatus tc_kitchen_step(struct TcKitchenEpisode *ep,
                              size_t ingredient,
                              double *reward,
                              int32_t *terminal);

// Agent to move next: 0 for the chef, 1 for the assistant.
//
// # Safety
// `ep` must be a live episode and `agent` a valid pointer.
enum TcStatus tc_kitchen_turn(const struct TcKitchenEpisode *ep, uint32_t *agent);

// # Safety
// `ep` must be null or an episode from [`tc_kitchen_start`] not yet freed.
void tc_kitchen_episode_free(struct TcKitchenEpisode *ep);

// Success rate of an informed chef (random ingredient still needed by the
// target) with a uniformly random assistant over freshly generated recipes.
//
// # Safety
// `h` must be a live kitchen handle and `success` a valid pointer.
enum TcStatus tc_kitchen_random_baseline(const struct TcKitchen *h,
                                         size_t episodes,
                                         uint64_t seed,
                                         double *success);

// # Safety
// `out` must be a valid pointer to a handle slot.
enum TcStatus tc_scheduling_new(size_t d, double p, struct TcScheduling **out);

// # Safety
// `h` must be null or a handle from [`tc_scheduling_new`] not yet freed.
void tc_scheduling_free(struct TcScheduling *h);

// Play one action from the opening position of a schedule pair given as
// JSON `{"a": [0/1...], "b": [0/1...]}`. Writes the first agent's reward and
// the terminal code (0 running, 1 success, 2 failure).
//
// # Safety
// `h` must be a live handle, `pair_json` a NUL-terminated string, the outputs valid pointers.
enum TcStatus tc_scheduling_open(const struct TcScheduling *h,
                                 const char *pair_json,
                                 size_t action,
                                 double *reward,
                                 int32_t *terminal);

// Number of actions per agent for this scheduling configuration.
//
// # Safety
// `h` must be a live handle and `n` a valid pointer.
enum TcStatus tc_scheduling_num_actions(const struct TcScheduling *h, size_t *n);

// # Safety
// `path` must be a NUL-terminated string and `out` a valid slot.
enum TcStatus tc_team_load(const char *path, struct TcTeam **out);

// # Safety
// `h` must be null or a handle from [`tc_team_load`] not yet freed.
void tc_team_free(struct TcTeam *h);

// Greedy success rate of a team on kitchen scenarios stored as JSON.
//
// # Safety
// Handles must be live, `scenarios_path` NUL-terminated, `success` valid.
enum TcStatus tc_team_eval_kitchen(const struct TcTeam *team,
                                   const struct TcKitchen *game,
                                   const char *scenarios_path,
                                   size_t episodes,
                                   uint64_t seed,
                                   double *success);

// Greedy success rate of a team on scheduling pairs stored as JSON.
//
// # Safety
// Handles must be live, `scenarios_path` NUL-terminated, `success` valid.
enum TcStatus tc_team_eval_scheduling(const struct TcTeam *team,
                                      const struct TcScheduling *game,
                                      const char *scenarios_path,
                                      size_t episodes,
                                      uint64_t seed,
                                      double *success);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* TOMCOLLAB_H */
