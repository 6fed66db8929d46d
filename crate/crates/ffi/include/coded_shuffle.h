#ifndef CODED_SHUFFLE_H
#define CODED_SHUFFLE_H

/* Generated by cbindgen from crates/ffi; do not edit. */

#include <stdarg.h>
#include <stdbool.h>
#include <stdint.h>
#include <stdlib.h>

typedef enum CsBaseline {
  CS_BASELINE_CODED = 0,
  CS_BASELINE_UNCODED = 1,
} CsBaseline;

typedef enum CsDownlink {
  CS_DOWNLINK_MDS = 0,
  CS_DOWNLINK_RANDOM = 1,
  CS_DOWNLINK_FORWARD = 2,
} CsDownlink;

typedef enum CsPlacement {
  CS_PLACEMENT_CENTRALIZED = 0,
  CS_PLACEMENT_DECENTRALIZED = 1,
} CsPlacement;

// Result of every fallible call.
typedef enum CsStatus {
  CS_STATUS_OK = 0,
  CS_STATUS_NULL_POINTER = 1,
  CS_STATUS_INVALID_CONFIG = 2,
  CS_STATUS_VERIFICATION_FAILED = 3,
  CS_STATUS_DECODE_FAILED = 4,
  CS_STATUS_INVALID_ARGUMENT = 5,
  CS_STATUS_PANIC = 6,
} CsStatus;

// Opaque system configuration.
typedef struct CsConfig CsConfig;

// Opaque result of a completed, verified run.
typedef struct CsReport CsReport;

// Bit and load counters of a report.
typedef struct CsLoads {
  uint64_t uplink_bits;
  uint64_t downlink_bits;
  uint64_t padding_bits_up;
  uint64_t padding_bits_down;
  double l_u;
  double l_d;
  double theory_l_u;
  double theory_l_d;
  double bound_l_u;
  double bound_l_d;
  double delta;
  double delta_theory;
} CsLoads;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

// Message of the last failure on this thread; empty if none. The pointer
// stays valid until the next failing call on the same thread.
const char *cs_last_error(void);

// Library version as a static NUL-terminated string.
const char *cs_version(void);

// New configuration with storage fraction `mu_num / mu_den` and defaults
// for everything else. Returns null if `mu_den` is zero.
struct CsConfig *cs_config_new(uintptr_t users, uintptr_t files, uint64_t mu_num, uint64_t mu_den);

// # Safety
// `cfg` must be null or a pointer from [`cs_config_new`] not yet freed.
void cs_config_free(struct CsConfig *cfg);

// # Safety
// `cfg` must be a live handle.
enum CsStatus cs_config_set_value_bits(struct CsConfig *cfg, uintptr_t bits);

// # Safety
// `cfg` must be a live handle.
enum CsStatus cs_config_set_seed(struct CsConfig *cfg, uint64_t seed);

// # Safety
// `cfg` must be a live handle.
enum CsStatus cs_config_set_placement(struct CsConfig *cfg, enum CsPlacement mode);

// # Safety
// `cfg` must be a live handle.
enum CsStatus cs_config_set_downlink(struct CsConfig *cfg, enum CsDownlink mode);

// # Safety
// `cfg` must be a live handle.
enum CsStatus cs_config_set_baseline(struct CsConfig *cfg, enum CsBaseline baseline);

// Storage fraction from text, `"p/q"` or decimal.
//
// # Safety
// `cfg` must be a live handle and `text` a NUL-terminated string.
enum CsStatus cs_config_set_mu(struct CsConfig *cfg, const char *text);

// Runs the protocol and verifies every user against the oracle. On
// success `*out` receives a report handle.
//
// # Safety
// `cfg` must be a live handle and `out` a valid pointer.
enum CsStatus cs_run(const struct CsConfig *cfg, struct CsReport **out);

// # Safety
// `report` must be null or a handle from [`cs_run`] not yet freed.
void cs_report_free(struct CsReport *report);

// # Safety
// `report` must be a live handle and `out` a valid pointer.
enum CsStatus cs_report_loads(const struct CsReport *report, struct CsLoads *out);

// Number of users whose reduce output matched the oracle.
//
// # Safety
// `report` must be a live handle and `users` a valid pointer.
enum CsStatus cs_report_verified_users(const struct CsReport *report, uintptr_t *users);

// Closed-form centralized loads.
//
// # Safety
// `uplink` and `downlink` must be valid pointers.
enum CsStatus cs_theory_centralized(uintptr_t users,
                                    uint64_t mu_num,
                                    uint64_t mu_den,
                                    double *uplink,
                                    double *downlink);

// Closed-form decentralized loads and information loss.
//
// # Safety
// `uplink`, `downlink` and `delta` must be valid pointers.
enum CsStatus cs_theory_decentralized(uintptr_t users,
                                      uint64_t mu_num,
                                      uint64_t mu_den,
                                      double *uplink,
                                      double *downlink,
                                      double *delta);

#ifdef __cplusplus
} // extern "C"
#endif // __cplusplus

#endif /* CODED_SHUFFLE_H */
