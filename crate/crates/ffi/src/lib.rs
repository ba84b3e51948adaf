//! C ABI over `pertvqe`.
//!
//! Objects are opaque heap handles created by `pv_*_new`-style calls and released with the
//! matching `pv_*_free`. Every fallible call returns a [`PvStatus`]; on failure the message
//! is kept per thread and can be read with [`pv_last_error_message`].

use std::cell::RefCell;
use std::ffi::{c_char, CStr};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::ptr;

use pertvqe::ansatz::{build_qca, ProductAnsatz};
use pertvqe::config::HierarchyTag;
use pertvqe::hierarchy::{estimate_thetas, priority_from_estimates, PriorityList};
use pertvqe::pauli::{MultiIndex, PauliString};
use pertvqe::perturbation::{exact_ground, Coupling, HamiltonianModel, PerturbationSeries};
use pertvqe::simulator;
use pertvqe::vqe::{optimize, OptimizerOptions};
use pertvqe::Error;

/// Result code of every fallible call.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PvStatus {
    Ok = 0,
    NullPointer = 1,
    InvalidArgument = 2,
    Parse = 3,
    DimensionMismatch = 4,
    Degenerate = 5,
    TooLarge = 6,
    Model = 7,
    Exhausted = 8,
    NonFinite = 9,
    Panic = 10,
}

pub struct PvModel {
    inner: HamiltonianModel,
}

pub struct PvAnsatz {
    inner: ProductAnsatz,
}

pub struct PvHierarchy {
    inner: PriorityList,
    n_qubits: usize,
}

thread_local! {
    static LAST_ERROR: RefCell<String> = const { RefCell::new(String::new()) };
}

fn set_error(msg: String) {
    LAST_ERROR.with(|e| *e.borrow_mut() = msg);
}

fn status_of(e: &Error) -> PvStatus {
    match e {
        Error::ParsePauli { .. } | Error::Json(_) | Error::Config(_) => PvStatus::Parse,
        Error::DimensionMismatch { .. } | Error::RegisterSize { .. } | Error::OutOfRange { .. } => {
            PvStatus::DimensionMismatch
        }
        Error::Degenerate(_) => PvStatus::Degenerate,
        Error::TooLarge { .. } => PvStatus::TooLarge,
        Error::Exhausted { .. } => PvStatus::Exhausted,
        Error::NonFinite(_) => PvStatus::NonFinite,
        Error::InvalidArgument(_) => PvStatus::InvalidArgument,
        _ => PvStatus::Model,
    }
}

struct Fail(PvStatus, String);

impl From<Error> for Fail {
    fn from(e: Error) -> Self {
        Fail(status_of(&e), e.to_string())
    }
}

fn null(what: &str) -> Fail {
    Fail(PvStatus::NullPointer, format!("{what} is null"))
}

fn guard(f: impl FnOnce() -> Result<(), Fail>) -> PvStatus {
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(())) => {
            set_error(String::new());
            PvStatus::Ok
        }
        Ok(Err(Fail(status, msg))) => {
            set_error(msg);
            status
        }
        Err(_) => {
            set_error("internal panic".into());
            PvStatus::Panic
        }
    }
}

unsafe fn slice<'a, T>(p: *const T, len: usize, what: &str) -> Result<&'a [T], Fail> {
    if len == 0 {
        return Ok(&[]);
    }
    if p.is_null() {
        return Err(null(what));
    }
    Ok(std::slice::from_raw_parts(p, len))
}

unsafe fn text<'a>(p: *const c_char, what: &str) -> Result<&'a str, Fail> {
    if p.is_null() {
        return Err(null(what));
    }
    CStr::from_ptr(p)
        .to_str()
        .map_err(|_| Fail(PvStatus::Parse, format!("{what} is not UTF-8")))
}

unsafe fn out<T>(p: *mut T, v: T, what: &str) -> Result<(), Fail> {
    if p.is_null() {
        return Err(null(what));
    }
    p.write(v);
    Ok(())
}

/// Copies `s` into `buf` (NUL-terminated, truncated to `len`); returns the full size needed.
unsafe fn copy_str(s: &str, buf: *mut c_char, len: usize) -> usize {
    if !buf.is_null() && len > 0 {
        let n = s.len().min(len - 1);
        ptr::copy_nonoverlapping(s.as_ptr() as *const c_char, buf, n);
        *buf.add(n) = 0;
    }
    s.len() + 1
}

/// Copies the calling thread's last error message into `buf`.
///
/// Returns the buffer size needed including the terminating NUL (1 when there is no error).
///
/// # Safety
/// `buf` must be null or point to `len` writable bytes.
#[no_mangle]
pub unsafe extern "C" fn pv_last_error_message(buf: *mut c_char, len: usize) -> usize {
    LAST_ERROR.with(|e| copy_str(&e.borrow(), buf, len))
}

/// Transverse-field Ising chain `-h Σ Z_i + j Σ X_i X_{i+1}` on `n_qubits` sites.
///
/// # Safety
/// `out_model` must be a valid pointer to a `PvModel*`.
#[no_mangle]
pub unsafe extern "C" fn pv_model_tfim(n_qubits: usize, h: f64, j: f64, out_model: *mut *mut PvModel) -> PvStatus {
    guard(|| {
        let inner = HamiltonianModel::tfim(n_qubits, h, j)?;
        out(out_model, Box::into_raw(Box::new(PvModel { inner })), "out_model")
    })
}

/// General model `-Σ h_n Z_n + Σ j_b P_b` with Pauli labels such as `"XZY"`.
///
/// # Safety
/// `h` must hold `n_qubits` values; `j` and `paulis` must hold `n_couplings` entries,
/// each label a NUL-terminated string; `out_model` must be valid.
#[no_mangle]
pub unsafe extern "C" fn pv_model_new(
    n_qubits: usize,
    h: *const f64,
    n_couplings: usize,
    j: *const f64,
    paulis: *const *const c_char,
    out_model: *mut *mut PvModel,
) -> PvStatus {
    guard(|| {
        let h = slice(h, n_qubits, "h")?.to_vec();
        let j = slice(j, n_couplings, "j")?;
        let labels = slice(paulis, n_couplings, "paulis")?;
        let mut couplings = Vec::with_capacity(n_couplings);
        for (&jb, &p) in j.iter().zip(labels) {
            let pauli: PauliString = text(p, "pauli label")?.parse()?;
            couplings.push(Coupling { j: jb, pauli });
        }
        let inner = HamiltonianModel::new(h, couplings)?;
        out(out_model, Box::into_raw(Box::new(PvModel { inner })), "out_model")
    })
}

/// # Safety
/// `model` must be null or a handle from this library that has not been freed.
#[no_mangle]
pub unsafe extern "C" fn pv_model_free(model: *mut PvModel) {
    if !model.is_null() {
        drop(Box::from_raw(model));
    }
}

/// # Safety
/// `model` must be a live handle.
#[no_mangle]
pub unsafe extern "C" fn pv_model_n_qubits(model: *const PvModel) -> usize {
    model.as_ref().map_or(0, |m| m.inner.n_qubits())
}

/// Ground-state energy by exact diagonalisation.
///
/// # Safety
/// `model` must be a live handle and `energy` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn pv_model_ground_energy(model: *const PvModel, energy: *mut f64) -> PvStatus {
    guard(|| {
        let m = model.as_ref().ok_or_else(|| null("model"))?;
        out(energy, exact_ground(&m.inner)?.0, "energy")
    })
}

/// Unnormalised series coefficient for the multi-index `k` (one count per coupling).
///
/// # Safety
/// `model` must be a live handle, `k` must hold `len` values and `value` must be valid.
#[no_mangle]
pub unsafe extern "C" fn pv_series_coefficient(
    model: *const PvModel,
    k: *const u32,
    len: usize,
    value: *mut f64,
) -> PvStatus {
    guard(|| {
        let m = model.as_ref().ok_or_else(|| null("model"))?;
        let k = MultiIndex::new(slice(k, len, "k")?.to_vec());
        out(value, PerturbationSeries::new(&m.inner).tilde_c(&k)?, "value")
    })
}

/// Qubit-coupled-cluster style complete ansatz on `n_qubits` qubits.
///
/// # Safety
/// `out_ansatz` must be valid.
#[no_mangle]
pub unsafe extern "C" fn pv_ansatz_qca(n_qubits: usize, out_ansatz: *mut *mut PvAnsatz) -> PvStatus {
    guard(|| {
        let inner = build_qca(n_qubits)?;
        out(out_ansatz, Box::into_raw(Box::new(PvAnsatz { inner })), "out_ansatz")
    })
}

/// Ansatz from its JSON form (`{"n_qubits", "start_state", "units"}`).
///
/// # Safety
/// `json` must be a NUL-terminated string and `out_ansatz` valid.
#[no_mangle]
pub unsafe extern "C" fn pv_ansatz_from_json(json: *const c_char, out_ansatz: *mut *mut PvAnsatz) -> PvStatus {
    guard(|| {
        let inner = ProductAnsatz::from_json(text(json, "json")?)?;
        out(out_ansatz, Box::into_raw(Box::new(PvAnsatz { inner })), "out_ansatz")
    })
}

/// Writes the ansatz JSON into `buf`; `needed` receives the size including NUL.
///
/// # Safety
/// `ansatz` must be live; `buf` null or `len` writable bytes; `needed` null or valid.
#[no_mangle]
pub unsafe extern "C" fn pv_ansatz_to_json(
    ansatz: *const PvAnsatz,
    buf: *mut c_char,
    len: usize,
    needed: *mut usize,
) -> PvStatus {
    guard(|| {
        let a = ansatz.as_ref().ok_or_else(|| null("ansatz"))?;
        let n = copy_str(&a.inner.to_json()?, buf, len);
        if !needed.is_null() {
            needed.write(n);
        }
        Ok(())
    })
}

/// # Safety
/// `ansatz` must be null or a live handle.
#[no_mangle]
pub unsafe extern "C" fn pv_ansatz_free(ansatz: *mut PvAnsatz) {
    if !ansatz.is_null() {
        drop(Box::from_raw(ansatz));
    }
}

/// # Safety
/// `ansatz` must be a live handle.
#[no_mangle]
pub unsafe extern "C" fn pv_ansatz_num_params(ansatz: *const PvAnsatz) -> usize {
    ansatz.as_ref().map_or(0, |a| a.inner.num_params())
}

/// # Safety
/// `ansatz` must be a live handle.
#[no_mangle]
pub unsafe extern "C" fn pv_ansatz_num_units(ansatz: *const PvAnsatz) -> usize {
    ansatz.as_ref().map_or(0, |a| a.inner.num_units())
}

/// Variational energy `⟨ψ(θ)|H|ψ(θ)⟩`.
///
/// # Safety
/// Handles must be live, `theta` must hold `len` values and `energy` be valid.
#[no_mangle]
pub unsafe extern "C" fn pv_energy(
    ansatz: *const PvAnsatz,
    model: *const PvModel,
    theta: *const f64,
    len: usize,
    energy: *mut f64,
) -> PvStatus {
    guard(|| {
        let a = ansatz.as_ref().ok_or_else(|| null("ansatz"))?;
        let m = model.as_ref().ok_or_else(|| null("model"))?;
        let th = slice(theta, len, "theta")?;
        out(energy, simulator::ansatz_energy(&a.inner, th, &m.inner)?, "energy")
    })
}

/// Energy gradient; `grad` must have room for `len` values.
///
/// # Safety
/// Handles must be live; `theta` and `grad` must each hold `len` values.
#[no_mangle]
pub unsafe extern "C" fn pv_gradient(
    ansatz: *const PvAnsatz,
    model: *const PvModel,
    theta: *const f64,
    len: usize,
    grad: *mut f64,
) -> PvStatus {
    guard(|| {
        let a = ansatz.as_ref().ok_or_else(|| null("ansatz"))?;
        let m = model.as_ref().ok_or_else(|| null("model"))?;
        let th = slice(theta, len, "theta")?;
        if grad.is_null() {
            return Err(null("grad"));
        }
        let (_, g) = simulator::energy_and_gradient(&a.inner, th, &m.inner)?;
        ptr::copy_nonoverlapping(g.as_ptr(), grad, g.len());
        Ok(())
    })
}

/// Minimises the energy in place; `theta` is the start point on entry and the optimum on exit.
///
/// `tol <= 0` and `max_iter == 0` select the defaults (1e-9 and 2000).
///
/// # Safety
/// Handles must be live; `theta` must hold `len` values; `energy` must be valid.
#[no_mangle]
pub unsafe extern "C" fn pv_optimize(
    ansatz: *const PvAnsatz,
    model: *const PvModel,
    theta: *mut f64,
    len: usize,
    tol: f64,
    max_iter: usize,
    energy: *mut f64,
) -> PvStatus {
    guard(|| {
        let a = ansatz.as_ref().ok_or_else(|| null("ansatz"))?;
        let m = model.as_ref().ok_or_else(|| null("model"))?;
        let th = slice(theta as *const f64, len, "theta")?;
        let mut opts = OptimizerOptions::default();
        if tol > 0.0 {
            opts.tol = tol;
        }
        if max_iter > 0 {
            opts.max_iter = max_iter;
        }
        let r = optimize(&a.inner, &m.inner, th, &opts)?;
        out(energy, r.value, "energy")?;
        if len > 0 {
            ptr::copy_nonoverlapping(r.theta.as_ptr(), theta, len);
        }
        Ok(())
    })
}

/// Ranked generator list for `model` with the complete ansatz as parent.
///
/// `variant` is one of `pert`, `rev`, `2loc`, `loc`, optionally suffixed with `*` for
/// parent ordering. A negative `tie_seed` keeps deterministic tie-breaking.
///
/// # Safety
/// `model` must be live, `variant` NUL-terminated and `out_hierarchy` valid.
#[no_mangle]
pub unsafe extern "C" fn pv_hierarchy_build(
    model: *const PvModel,
    k_max: u32,
    variant: *const c_char,
    tie_seed: i64,
    out_hierarchy: *mut *mut PvHierarchy,
) -> PvStatus {
    guard(|| {
        let m = model.as_ref().ok_or_else(|| null("model"))?;
        let tag: HierarchyTag = text(variant, "variant")?.parse()?;
        let n = m.inner.n_qubits();
        let est = estimate_thetas(&m.inner, &build_qca(n)?, k_max)?;
        let seed = u64::try_from(tie_seed).ok();
        let inner = priority_from_estimates(&est, tag.mode, tag.ordering, seed)?;
        out(
            out_hierarchy,
            Box::into_raw(Box::new(PvHierarchy { inner, n_qubits: n })),
            "out_hierarchy",
        )
    })
}

/// # Safety
/// `hierarchy` must be null or a live handle.
#[no_mangle]
pub unsafe extern "C" fn pv_hierarchy_free(hierarchy: *mut PvHierarchy) {
    if !hierarchy.is_null() {
        drop(Box::from_raw(hierarchy));
    }
}

/// Number of distinct generators in the list (looping variants repeat them).
///
/// # Safety
/// `hierarchy` must be a live handle.
#[no_mangle]
pub unsafe extern "C" fn pv_hierarchy_len(hierarchy: *const PvHierarchy) -> usize {
    hierarchy.as_ref().map_or(0, |h| h.inner.len())
}

/// Estimated angle and generator label of entry `index`.
///
/// # Safety
/// `hierarchy` must be live; `theta_tilde` valid; `label` null or `len` writable bytes.
#[no_mangle]
pub unsafe extern "C" fn pv_hierarchy_entry(
    hierarchy: *const PvHierarchy,
    index: usize,
    theta_tilde: *mut f64,
    label: *mut c_char,
    len: usize,
) -> PvStatus {
    guard(|| {
        let h = hierarchy.as_ref().ok_or_else(|| null("hierarchy"))?;
        let e = h.inner.entries.get(index).ok_or_else(|| {
            Fail(
                PvStatus::InvalidArgument,
                format!("index {index} out of range for {} entries", h.inner.len()),
            )
        })?;
        out(theta_tilde, e.theta_tilde, "theta_tilde")?;
        copy_str(&e.pauli.to_string(), label, len);
        Ok(())
    })
}

/// Writes the ranked list as JSON; `needed` receives the size including NUL.
///
/// # Safety
/// `hierarchy` must be live; `buf` null or `len` writable bytes; `needed` null or valid.
#[no_mangle]
pub unsafe extern "C" fn pv_hierarchy_to_json(
    hierarchy: *const PvHierarchy,
    buf: *mut c_char,
    len: usize,
    needed: *mut usize,
) -> PvStatus {
    guard(|| {
        let h = hierarchy.as_ref().ok_or_else(|| null("hierarchy"))?;
        let n = copy_str(&h.inner.to_json()?, buf, len);
        if !needed.is_null() {
            needed.write(n);
        }
        Ok(())
    })
}

/// Ansatz made of the first `n_params` selections of the list.
///
/// # Safety
/// `hierarchy` must be live and `out_ansatz` valid.
#[no_mangle]
pub unsafe extern "C" fn pv_hierarchy_ansatz(
    hierarchy: *const PvHierarchy,
    n_params: usize,
    out_ansatz: *mut *mut PvAnsatz,
) -> PvStatus {
    guard(|| {
        let h = hierarchy.as_ref().ok_or_else(|| null("hierarchy"))?;
        let inner = h.inner.ansatz(h.n_qubits, n_params)?;
        out(out_ansatz, Box::into_raw(Box::new(PvAnsatz { inner })), "out_ansatz")
    })
}
