#ifndef UNITAL_H
#define UNITAL_H

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

typedef enum UnitalStatus {
  UNITAL_STATUS_OK = 0,
  UNITAL_STATUS_NULL_POINTER = 1,
  UNITAL_STATUS_INVALID_ARGUMENT = 2,
  UNITAL_STATUS_NOT_PLANAR = 3,
  UNITAL_STATUS_NOT_NORMAL = 4,
  UNITAL_STATUS_VIOLATION = 5,
  UNITAL_STATUS_ENGINE_MISMATCH = 6,
  UNITAL_STATUS_BUFFER_TOO_SMALL = 7,
  UNITAL_STATUS_UNSUPPORTED = 8,
  UNITAL_STATUS_IO = 9,
  UNITAL_STATUS_PANIC = 10,
} UnitalStatus;

// Opaque instance: a planar function on GF(q²) together with a fixed θ.
typedef struct UnitalInstance UnitalInstance;

typedef struct UnitalBounds {
  uint64_t upper;
  uint64_t leung_xiang;
  // Zero unless `has_corollary`.
  uint64_t corollary;
  bool has_corollary;
} UnitalBounds;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

// Message for the last failing call on this thread, or NULL. Valid until the
// next failing call on the same thread.
const char *unital_last_error(void);

// Creates an instance over GF(p^m).
//
// `f` is `square`, `cm:K` or `pow:D`; NULL means `square`. A `theta_index`
// of 0 picks θ automatically.
//
// # Safety
// `f` must be NULL or a NUL-terminated string. `out` must be valid for writes.
enum UnitalStatus unital_instance_new(uint32_t p,
                                      uint32_t m,
                                      const char *f,
                                      uint32_t theta_index,
                                      struct UnitalInstance **out);

// # Safety
// `h` must be NULL or come from [`unital_instance_new`] and not be freed yet.
void unital_instance_free(struct UnitalInstance *h);

// q, or 0 for NULL.
//
// # Safety
// `h` must be NULL or a live handle.
uint32_t unital_instance_q(const struct UnitalInstance *h);

// Element index of θ in GF(q²), or 0 for NULL.
//
// # Safety
// `h` must be NULL or a live handle.
uint32_t unital_instance_theta_index(const struct UnitalInstance *h);

// Whether f is normal.
//
// # Safety
// `h` must be NULL or a live handle.
bool unital_instance_is_normal(const struct UnitalInstance *h);

// Number of points and blocks of U_θ. Builds and caches the design.
//
// # Safety
// `h` must be a live handle; the out pointers must be valid for writes.
enum UnitalStatus unital_design_size(struct UnitalInstance *h,
                                     size_t *out_points,
                                     size_t *out_blocks);

// 2-rank of the incidence matrix by GF(2) elimination, point ∞ included.
//
// # Safety
// `h` must be a live handle; `out` must be valid for writes.
enum UnitalStatus unital_rank_gf2(struct UnitalInstance *h, bool early_stop, size_t *out);

// Size of the character spectrum. Requires a normal f.
//
// # Safety
// `h` must be a live handle; `out` must be valid for writes.
enum UnitalStatus unital_rank_spectrum(const struct UnitalInstance *h, size_t *out);

// Spectrum membership bitmap, bit k for character index k = u·q² + v·q + w,
// least significant bit first. Needs ⌈q³/8⌉ bytes; `out_len` receives that
// size even when `cap` is too small.
//
// # Safety
// `h` must be a live handle, `buf` valid for `cap` bytes of writes (or NULL
// with `cap` 0), and `out_len` valid for writes.
enum UnitalStatus unital_spectrum_bitmap(const struct UnitalInstance *h,
                                         uint8_t *buf,
                                         size_t cap,
                                         size_t *out_len);

// Upper, Leung–Xiang and (for p = 3) corollary bounds for q = p^m.
//
// # Safety
// `out` must be valid for writes.
enum UnitalStatus unital_bounds(uint32_t p, uint32_t m, struct UnitalBounds *out);

// Integer value of the Kloosterman sum K(a) over GF(3^m), where `a_index`
// is the base-3 element index.
//
// # Safety
// `out` must be valid for writes.
enum UnitalStatus unital_kloosterman(uint32_t p, uint32_t m, uint32_t a_index, int64_t *out);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* UNITAL_H */
