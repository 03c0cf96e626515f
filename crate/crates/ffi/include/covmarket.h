#ifndef COVMARKET_H
#define COVMARKET_H

/* Generated by cbindgen from crates/ffi/src/lib.rs. Do not edit. */

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

/**
 * Result code of every fallible call.
 */
typedef enum CmStatus {
  CM_STATUS_OK = 0,
  CM_STATUS_NULL_POINTER = 1,
  CM_STATUS_INVALID_UTF8 = 2,
  CM_STATUS_PARSE = 3,
  CM_STATUS_INVALID_INSTANCE = 4,
  CM_STATUS_SOLVER = 5,
  CM_STATUS_OUT_OF_RANGE = 6,
  CM_STATUS_OVERFLOW = 7,
  CM_STATUS_PANIC = 8,
} CmStatus;

/**
 * An equilibrium of a market, with its text form cached.
 */
typedef struct CmEquilibrium CmEquilibrium;

/**
 * A parsed, validated market.
 */
typedef struct CmMarket CmMarket;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/**
 * Message for the last failed call on this thread, or NULL. Valid until
 * the next call on the same thread.
 */
const char *cm_last_error(void);

/**
 * Parses and validates a market from instance text.
 *
 * # Safety
 * `text` must be a NUL-terminated string and `out` a valid pointer.
 */
enum CmStatus cm_market_parse(const char *text, struct CmMarket **out);

/**
 * # Safety
 * `market` must come from `cm_market_parse` and not be used afterwards.
 */
void cm_market_free(struct CmMarket *market);

/**
 * # Safety
 * `market` must be a live handle.
 */
size_t cm_market_num_agents(const struct CmMarket *market);

/**
 * # Safety
 * `market` must be a live handle.
 */
size_t cm_market_num_goods(const struct CmMarket *market);

/**
 * Computes an equilibrium. Single-machine markets use the scheduling
 * solver unless `force_general` is set.
 *
 * # Safety
 * `market` must be a live handle and `out` a valid pointer.
 */
enum CmStatus cm_solve(const struct CmMarket *market,
                       bool force_general,
                       struct CmEquilibrium **out);

/**
 * # Safety
 * `eq` must come from `cm_solve` and not be used afterwards.
 */
void cm_equilibrium_free(struct CmEquilibrium *eq);

/**
 * Equilibrium in the text format; owned by the handle.
 *
 * # Safety
 * `eq` must be a live handle.
 */
const char *cm_equilibrium_text(const struct CmEquilibrium *eq);

/**
 * Price of good `good` as `num / den`.
 *
 * # Safety
 * `eq` must be a live handle; `num` and `den` valid pointers.
 */
enum CmStatus cm_equilibrium_price(const struct CmEquilibrium *eq,
                                   size_t good,
                                   int64_t *num,
                                   int64_t *den);

/**
 * Runs the equilibrium checks on equilibrium text; `passed` receives the verdict.
 *
 * # Safety
 * `market` must be a live handle, `eq_text` NUL-terminated, `passed` valid.
 */
enum CmStatus cm_verify(const struct CmMarket *market, const char *eq_text, bool *passed);

/**
 * Decides whether comma-separated `prices` are equilibrium prices.
 *
 * # Safety
 * `market` must be a live handle, `prices` NUL-terminated, `is_equilibrium` valid.
 */
enum CmStatus cm_check_price(const struct CmMarket *market,
                             const char *prices,
                             bool *is_equilibrium);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* COVMARKET_H */
