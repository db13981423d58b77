#ifndef ASHPROMPT_H
#define ASHPROMPT_H

/* Generated by cbindgen from crates/ffi/src/lib.rs. Do not edit. */

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

typedef enum AshStatus {
  ASH_STATUS_OK = 0,
  ASH_STATUS_NULL_ARGUMENT = 1,
  ASH_STATUS_INVALID_UTF8 = 2,
  ASH_STATUS_PARSE_ERROR = 3,
  ASH_STATUS_INVALID_INPUT = 4,
  ASH_STATUS_IO_ERROR = 5,
  ASH_STATUS_EPISODE_DONE = 6,
  ASH_STATUS_OUT_OF_RANGE = 7,
  ASH_STATUS_INTERNAL = 8,
} AshStatus;

typedef struct AshCatalog AshCatalog;

typedef struct AshGoals AshGoals;

// One environment episode over a catalog and goal.
typedef struct AshSession AshSession;

// Result of one environment step.
typedef struct AshStepResult {
  bool valid;
  bool done;
  // Purchase score in [0, 1]; meaningful only when `done`.
  double score;
} AshStepResult;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

// Message for the last failure on this thread; empty if none. Valid until
// the next call into this library on the same thread. Do not free.
const char *ash_last_error_message(void);

// Releases a string returned by this library. Null is a no-op.
void ash_string_free(char *s);

enum AshStatus ash_catalog_generate(uint64_t seed, size_t size, struct AshCatalog **out);

// Loads a catalog from a JSON file.
enum AshStatus ash_catalog_load(const char *path, struct AshCatalog **out);

// Serializes the catalog as JSON.
enum AshStatus ash_catalog_to_json(const struct AshCatalog *catalog, char **out);

// Number of products; 0 for null.
size_t ash_catalog_len(const struct AshCatalog *catalog);

void ash_catalog_free(struct AshCatalog *catalog);

enum AshStatus ash_goals_generate(const struct AshCatalog *catalog,
                                  uint64_t seed,
                                  size_t count,
                                  struct AshGoals **out);

// Loads goals from a JSON file.
enum AshStatus ash_goals_load(const char *path, struct AshGoals **out);

// Number of goals; 0 for null.
size_t ash_goals_len(const struct AshGoals *goals);

enum AshStatus ash_goals_instruction(const struct AshGoals *goals, size_t index, char **out);

void ash_goals_free(struct AshGoals *goals);

// Starts an episode on goal `index`. The session keeps its own reference to
// the catalog, so the catalog handle may be freed first.
enum AshStatus ash_session_new(const struct AshCatalog *catalog,
                               const struct AshGoals *goals,
                               size_t index,
                               struct AshSession **out);

// Text of the latest observation.
enum AshStatus ash_session_observation(const struct AshSession *session, char **out);

// Parses `action` and applies it. Unparseable input returns `ParseError`
// without changing the session; a well-formed but inapplicable action
// succeeds with `valid = false`.
enum AshStatus ash_session_step(struct AshSession *session,
                                const char *action,
                                struct AshStepResult *out);

void ash_session_free(struct AshSession *session);

// Scores a purchase given as JSON `{"product_id": ..., "selected_options": {...}}`
// against goal `index`.
enum AshStatus ash_score(const struct AshCatalog *catalog,
                         const struct AshGoals *goals,
                         size_t index,
                         const char *purchase_json,
                         double *out);

// Parses an action string and writes its canonical form.
enum AshStatus ash_action_canonicalize(const char *raw, char **out);

// Runs the oracle policy on every goal with default limits in a
// non-summarizing `mode` (`"act"` or `"react"`) and writes the aggregate
// report as JSON.
enum AshStatus ash_oracle_batch(const struct AshCatalog *catalog,
                                const struct AshGoals *goals,
                                const char *mode,
                                size_t workers,
                                char **out);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* ASHPROMPT_H */
