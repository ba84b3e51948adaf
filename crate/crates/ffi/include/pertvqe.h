#ifndef PERTVQE_H
#define PERTVQE_H

/* Generated by cbindgen from crates/ffi/src/lib.rs; do not edit. */

#include <stddef.h>
#include <stdint.h>

// Result code of every fallible call.
typedef enum PvStatus {
  PV_STATUS_OK = 0,
  PV_STATUS_NULL_POINTER = 1,
  PV_STATUS_INVALID_ARGUMENT = 2,
  PV_STATUS_PARSE = 3,
  PV_STATUS_DIMENSION_MISMATCH = 4,
  PV_STATUS_DEGENERATE = 5,
  PV_STATUS_TOO_LARGE = 6,
  PV_STATUS_MODEL = 7,
  PV_STATUS_EXHAUSTED = 8,
  PV_STATUS_NON_FINITE = 9,
  PV_STATUS_PANIC = 10,
} PvStatus;

typedef struct PvAnsatz PvAnsatz;

typedef struct PvHierarchy PvHierarchy;

typedef struct PvModel PvModel;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

// Copies the calling thread's last error message into `buf`.
//
// Returns the buffer size needed including the terminating NUL (1 when there is no error).
//
// # Safety
// `buf` must be null or point to `len` writable bytes.
size_t pv_last_error_message(char *buf, size_t len);

// Transverse-field Ising chain `-h Σ Z_i + j Σ X_i X_{i+1}` on `n_qubits` sites.
//
// # Safety
// `out_model` must be a valid pointer to a `PvModel*`.
enum PvStatus pv_model_tfim(size_t n_qubits, double h, double j, struct PvModel **out_model);

// General model `-Σ h_n Z_n + Σ j_b P_b` with Pauli labels such as `"XZY"`.
//
// # Safety
// `h` must hold `n_qubits` values; `j` and `paulis` must hold `n_couplings` entries,
// each label a NUL-terminated string; `out_model` must be valid.
enum PvStatus pv_model_new(size_t n_qubits,
                           const double *h,
                           size_t n_couplings,
                           const double *j,
                           const char *const *paulis,
                           struct PvModel **out_model);

// # Safety
// `model` must be null or a handle from this library that has not been freed.
void pv_model_free(struct PvModel *model);

// # Safety
// `model` must be a live handle.
size_t pv_model_n_qubits(const struct PvModel *model);

// Ground-state energy by exact diagonalisation.
//
// # Safety
// `model` must be a live handle and `energy` a valid pointer.
enum PvStatus pv_model_ground_energy(const struct PvModel *model, double *energy);

// Unnormalised series coefficient for the multi-index `k` (one count per coupling).
//
// # Safety
// `model` must be a live handle, `k` must hold `len` values and `value` must be valid.
enum PvStatus pv_series_coefficient(const struct PvModel *model,
                                    const uint32_t *k,
                                    size_t len,
                                    double *value);

// Qubit-coupled-cluster style complete ansatz on `n_qubits` qubits.
//
// # Safety
// `out_ansatz` must be valid.
enum PvStatus pv_ansatz_qca(size_t n_qubits, struct PvAnsatz **out_ansatz);

// Ansatz from its JSON form (`{"n_qubits", "start_state", "units"}`).
//
// # Safety
// `json` must be a NUL-terminated string and `out_ansatz` valid.
enum PvStatus pv_ansatz_from_json(const char *json, struct PvAnsatz **out_ansatz);

// Writes the ansatz JSON into `buf`; `needed` receives the size including NUL.
//
// # Safety
// `ansatz` must be live; `buf` null or `len` writable bytes; `needed` null or valid.
enum PvStatus pv_ansatz_to_json(const struct PvAnsatz *ansatz,
                                char *buf,
                                size_t len,
                                size_t *needed);

// # Safety
// `ansatz` must be null or a live handle.
void pv_ansatz_free(struct PvAnsatz *ansatz);

// # Safety
// `ansatz` must be a live handle.
size_t pv_ansatz_num_params(const struct PvAnsatz *ansatz);

// # Safety
// `ansatz` must be a live handle.
size_t pv_ansatz_num_units(const struct PvAnsatz *ansatz);

// Variational energy `⟨ψ(θ)|H|ψ(θ)⟩`.
//
// # Safety
// Handles must be live, `theta` must hold `len` values and `energy` be valid.
enum PvStatus pv_energy(const struct PvAnsatz *ansatz,
                        const struct PvModel *model,
                        const double *theta,
                        size_t len,
                        double *energy);

// Energy gradient; `grad` must have room for `len` values.
//
// # Safety
// Handles must be live; `theta` and `grad` must each hold `len` values.
enum PvStatus pv_gradient(const struct PvAnsatz *ansatz,
                          const struct PvModel *model,
                          const double *theta,
                          size_t len,
                          double *grad);

// Minimises the energy in place; `theta` is the start point on entry and the optimum on exit.
//
// `tol <= 0` and `max_iter == 0` select the defaults (1e-9 and 2000).
//
// # Safety
// Handles must be live; `theta` must hold `len` values; `energy` must be valid.
enum PvStatus pv_optimize(const struct PvAnsatz *ansatz,
                          const struct PvModel *model,
                          double *theta,
                          size_t len,
                          double tol,
                          size_t max_iter,
                          double *energy);

// Ranked generator list for `model` with the complete ansatz as parent.
//
// `variant` is one of `pert`, `rev`, `2loc`, `loc`, optionally suffixed with `*` for
// parent ordering. A negative `tie_seed` keeps deterministic tie-breaking.
//
// # Safety
// `model` must be live, `variant` NUL-terminated and `out_hierarchy` valid.
enum PvStatus pv_hierarchy_build(const struct PvModel *model,
                                 uint32_t k_max,
                                 const char *variant,
                                 int64_t tie_seed,
                                 struct PvHierarchy **out_hierarchy);

// # Safety
// `hierarchy` must be null or a live handle.
void pv_hierarchy_free(struct PvHierarchy *hierarchy);

// Number of distinct generators in the list (looping variants repeat them).
//
// # Safety
// `hierarchy` must be a live handle.
size_t pv_hierarchy_len(const struct PvHierarchy *hierarchy);

// Estimated angle and generator label of entry `index`.
//
// # Safety
// `hierarchy` must be live; `theta_tilde` valid; `label` null or `len` writable bytes.
enum PvStatus pv_hierarchy_entry(const struct PvHierarchy *hierarchy,
                                 size_t index,
                                 double *theta_tilde,
                                 char *label,
                                 size_t len);

// Writes the ranked list as JSON; `needed` receives the size including NUL.
//
// # Safety
// `hierarchy` must be live; `buf` null or `len` writable bytes; `needed` null or valid.
enum PvStatus pv_hierarchy_to_json(const struct PvHierarchy *hierarchy,
                                   char *buf,
                                   size_t len,
                                   size_t *needed);

// Ansatz made of the first `n_params` selections of the list.
//
// # Safety
// `hierarchy` must be live and `out_ansatz` valid.
enum PvStatus pv_hierarchy_ansatz(const struct PvHierarchy *hierarchy,
                                  size_t n_params,
                                  struct PvAnsatz **out_ansatz);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* PERTVQE_H */
