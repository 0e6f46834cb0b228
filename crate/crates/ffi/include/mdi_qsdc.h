#ifndef MDI_QSDC_H
#define MDI_QSDC_H

/* Generated by cbindgen from crates/ffi/src/lib.rs; do not edit. */

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

// Status codes returned by fallible calls.
typedef enum QsdcStatus {
  QSDC_STATUS_OK = 0,
  QSDC_STATUS_NULL_POINTER = 1,
  QSDC_STATUS_INVALID_ARGUMENT = 2,
  QSDC_STATUS_INVALID_CONFIG = 3,
  QSDC_STATUS_PARSE = 4,
  QSDC_STATUS_PROTOCOL = 5,
  QSDC_STATUS_BUFFER_TOO_SMALL = 6,
  QSDC_STATUS_PANIC = 7,
} QsdcStatus;

// Values accepted by [`qsdc_config_set_variant`].
typedef enum QsdcVariant {
  QSDC_VARIANT_FULL = 0,
  QSDC_VARIANT_LINEAR_OPTICS = 1,
  QSDC_VARIANT_DET_QKD = 2,
} QsdcVariant;

// Session configuration.
typedef struct QsdcConfig QsdcConfig;

// Finished session: report and transcript.
typedef struct QsdcReport QsdcReport;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

// Message of the last failed call on this thread; empty if none. The pointer
// stays valid until the next failing call on the same thread.
const char *qsdc_last_error(void);

// Library version, static storage.
const char *qsdc_version(void);

// New config with defaults (N=128, t0=16, t1=64, thresholds 0.11, honest).
struct QsdcConfig *qsdc_config_new(void);

// Parses TOML config text; on success `*out` owns a new config.
//
// # Safety
// `toml` must be a NUL-terminated string and `out` a valid pointer.
enum QsdcStatus qsdc_config_from_toml(const char *toml, struct QsdcConfig **out);

// # Safety
// `cfg` must come from this library and not be used afterwards. Null is a
// no-op.
void qsdc_config_free(struct QsdcConfig *cfg);

// # Safety
// `cfg` must be a live config handle.
enum QsdcStatus qsdc_config_set_message_len(struct QsdcConfig *cfg, size_t n);

// # Safety
// `cfg` must be a live config handle.
enum QsdcStatus qsdc_config_set_t0(struct QsdcConfig *cfg, size_t t0);

// # Safety
// `cfg` must be a live config handle.
enum QsdcStatus qsdc_config_set_t1(struct QsdcConfig *cfg, size_t t1);

// # Safety
// `cfg` must be a live config handle.
enum QsdcStatus qsdc_config_set_seed(struct QsdcConfig *cfg, uint64_t seed);

// `variant` is one of the `QsdcVariant` values.
//
// # Safety
// `cfg` must be a live config handle.
enum QsdcStatus qsdc_config_set_variant(struct QsdcConfig *cfg, uint32_t variant);

// Thresholds are checked when the session runs.
//
// # Safety
// `cfg` must be a live config handle.
enum QsdcStatus qsdc_config_set_thresholds(struct QsdcConfig *cfg,
                                           double security,
                                           double integrity);

// Sets the adversary from its text form, e.g. `"intercept-resend:pb"`.
//
// # Safety
// `cfg` must be a live config handle and `spec` a NUL-terminated string.
enum QsdcStatus qsdc_config_set_adversary(struct QsdcConfig *cfg, const char *spec);

// Runs one session. `bits` holds one message bit per byte (only the low bit
// is used) and must have at least N entries; pass null to draw a message
// from the seed. On success `*out` owns a new report.
//
// # Safety
// `cfg` must be a live config handle, `bits` null or valid for `len` bytes,
// `out` a valid pointer.
enum QsdcStatus qsdc_run(const struct QsdcConfig *cfg,
                         const uint8_t *bits,
                         size_t len,
                         struct QsdcReport **out);

// # Safety
// `report` must come from [`qsdc_run`] and not be used afterwards. Null is a
// no-op.
void qsdc_report_free(struct QsdcReport *report);

// 0 if the session completed, else the protocol step that aborted (3 or 6).
//
// # Safety
// `report` must be a live report handle or null (returns 0).
uint8_t qsdc_report_abort_step(const struct QsdcReport *report);

// # Safety
// `report` must be a live report handle or null (returns NaN).
double qsdc_report_security_error_rate(const struct QsdcReport *report);

// NaN when the integrity check was not reached.
//
// # Safety
// `report` must be a live report handle or null (returns NaN).
double qsdc_report_integrity_error_rate(const struct QsdcReport *report);

// Bits the adversary read from the payload.
//
// # Safety
// `report` must be a live report handle or null (returns 0).
size_t qsdc_report_leaked_bits(const struct QsdcReport *report);

// Copies Bob's decoded message (one bit per byte) into `buf`. `*written`
// receives the message length; if `cap` is too small nothing is copied and
// `BufferTooSmall` is returned. An aborted session has length 0.
//
// # Safety
// `report` must be a live report handle, `buf` valid for `cap` bytes (may be
// null when `cap` is 0), `written` a valid pointer.
enum QsdcStatus qsdc_report_decoded(const struct QsdcReport *report,
                                    uint8_t *buf,
                                    size_t cap,
                                    size_t *written);

// Config, report and transcript as a JSON document; free it with
// [`qsdc_string_free`]. Null on failure.
//
// # Safety
// `report` must be a live report handle.
char *qsdc_report_to_json(const struct QsdcReport *report);

// # Safety
// `s` must come from this library and not be used afterwards. Null is a
// no-op.
void qsdc_string_free(char *s);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* MDI_QSDC_H */
