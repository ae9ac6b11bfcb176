//! C ABI over `qftsim`.
//!
//! Unitaries and distributions cross the boundary as opaque handles created
//! by `qft_*` constructors and released with the matching `*_free`. Every
//! fallible call returns a status code (`QFT_OK` or a negative `QFT_ERR_*`)
//! and writes results through out-pointers. The message of the most recent
//! failure on the calling thread is available from `qft_last_error`.
//!
//! Complex matrices are passed as row-major arrays of interleaved
//! `(re, im)` doubles, `2 * k * k` values for a `k x k` matrix.

use std::cell::RefCell;
use std::ffi::{c_char, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::ptr;

use ndarray::Array2;
use num_complex::Complex64;
use qftsim::circuits::{
    butterfly_factorization, fourier_matrix, is_fourier_equivalent, paper_circuit,
};
use qftsim::error::Error;
use qftsim::fock::{classical_distribution, quantum_distribution, OutputDistribution};
use qftsim::interference::{pair_correlation_witness, violation_ratio};
use qftsim::metrology::{
    coincidence_probability, fisher_information, ideal_delta_sensitivity, mzi_unitary,
    visibility_threshold_for, PhaseDistribution, PhaseKind,
};
use qftsim::permanent::permanent;
use qftsim::state::OccupationState;
use qftsim::unitary::UnitaryMatrix;

pub const QFT_OK: i32 = 0;
pub const QFT_ERR_NULL_POINTER: i32 = -1;
pub const QFT_ERR_INVALID_ARGUMENT: i32 = -2;
pub const QFT_ERR_DIMENSION: i32 = -3;
pub const QFT_ERR_RESOURCE_LIMIT: i32 = -4;
pub const QFT_ERR_NOT_UNITARY: i32 = -5;
pub const QFT_ERR_UNSUPPORTED: i32 = -6;
pub const QFT_ERR_NUMERIC: i32 = -7;
pub const QFT_ERR_PANIC: i32 = -8;

pub const QFT_PHASE_LINEAR: i32 = 0;
pub const QFT_PHASE_DELTA: i32 = 1;
pub const QFT_PHASE_NORMALIZED_LINEAR: i32 = 2;
pub const QFT_PHASE_NORMALIZED_DELTA: i32 = 3;

/// Opaque square unitary matrix.
pub struct QftUnitary(UnitaryMatrix);

/// Opaque output distribution in canonical state order.
pub struct QftDistribution(OutputDistribution);

thread_local! {
    static LAST_ERROR: RefCell<CString> = RefCell::new(CString::default());
}

fn set_last_error(msg: &str) {
    let c = CString::new(msg.replace('\0', " ")).unwrap_or_default();
    LAST_ERROR.with(|e| *e.borrow_mut() = c);
}

struct Failure(i32, String);

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        let code = match &e {
            Error::PhotonNumberMismatch { .. } | Error::DimensionMismatch { .. } => {
                QFT_ERR_DIMENSION
            }
            Error::ResourceLimit { .. } => QFT_ERR_RESOURCE_LIMIT,
            Error::NotUnitary { .. } => QFT_ERR_NOT_UNITARY,
            Error::Unsupported(_) => QFT_ERR_UNSUPPORTED,
            Error::DegenerateFit(_) | Error::SaturatedFringe { .. } => QFT_ERR_NUMERIC,
            Error::InvalidArgument(_) | Error::Parse { .. } => QFT_ERR_INVALID_ARGUMENT,
        };
        Failure(code, e.to_string())
    }
}

fn null(what: &str) -> Failure {
    Failure(QFT_ERR_NULL_POINTER, format!("{what} is null"))
}

/// Runs `body`, turning errors and panics into status codes.
fn guard(body: impl FnOnce() -> Result<(), Failure>) -> i32 {
    match catch_unwind(AssertUnwindSafe(body)) {
        Ok(Ok(())) => {
            set_last_error("");
            QFT_OK
        }
        Ok(Err(Failure(code, msg))) => {
            set_last_error(&msg);
            code
        }
        Err(_) => {
            set_last_error("internal panic");
            QFT_ERR_PANIC
        }
    }
}

unsafe fn out_ref<'a, T>(p: *mut T, what: &str) -> Result<&'a mut T, Failure> {
    p.as_mut().ok_or_else(|| null(what))
}

fn phase_distribution(kind: i32, n: usize) -> Result<PhaseDistribution, Failure> {
    let kind = match kind {
        QFT_PHASE_LINEAR => PhaseKind::Linear,
        QFT_PHASE_DELTA => PhaseKind::Delta,
        QFT_PHASE_NORMALIZED_LINEAR => PhaseKind::NormalizedLinear,
        QFT_PHASE_NORMALIZED_DELTA => PhaseKind::NormalizedDelta,
        _ => {
            return Err(Failure(
                QFT_ERR_INVALID_ARGUMENT,
                format!("unknown phase kind {kind}"),
            ))
        }
    };
    Ok(PhaseDistribution::of_kind(kind, n)?)
}

unsafe fn read_matrix(k: usize, entries: *const f64) -> Result<Array2<Complex64>, Failure> {
    if entries.is_null() {
        return Err(null("entries"));
    }
    let len = k
        .checked_mul(k)
        .and_then(|v| v.checked_mul(2))
        .ok_or_else(|| {
            Failure(
                QFT_ERR_RESOURCE_LIMIT,
                format!("matrix order {k} overflows"),
            )
        })?;
    let flat = std::slice::from_raw_parts(entries, len);
    Ok(Array2::from_shape_fn((k, k), |(i, j)| {
        Complex64::new(flat[2 * (i * k + j)], flat[2 * (i * k + j) + 1])
    }))
}

fn hand_out<T>(value: T, out: &mut *mut T) {
    *out = Box::into_raw(Box::new(value));
}

/// Message for the last failed call on this thread; empty after a success.
/// Valid until the next `qft_*` call on the same thread.
#[no_mangle]
pub extern "C" fn qft_last_error() -> *const c_char {
    LAST_ERROR.with(|e| e.borrow().as_ptr())
}

#[no_mangle]
pub extern "C" fn qft_version() -> *const c_char {
    static VERSION: &[u8] = concat!(env!("CARGO_PKG_VERSION"), "\0").as_bytes();
    VERSION.as_ptr().cast()
}

/// Ideal n-mode Fourier matrix `F[j][k] = exp(2 pi i j k / n) / sqrt(n)`.
///
/// # Safety
/// `out` must be a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn qft_fourier(n: usize, out: *mut *mut QftUnitary) -> i32 {
    guard(|| {
        let out = out_ref(out, "out")?;
        hand_out(QftUnitary(fourier_matrix(n)?), out);
        Ok(())
    })
}

/// Composed butterfly circuit on `2 * paths` modes.
///
/// # Safety
/// `out` must be a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn qft_butterfly(paths: usize, out: *mut *mut QftUnitary) -> i32 {
    guard(|| {
        let out = out_ref(out, "out")?;
        hand_out(QftUnitary(butterfly_factorization(paths)?.compose()?), out);
        Ok(())
    })
}

/// Bulk-optics circuit for n = 2, 3 or 4.
///
/// # Safety
/// `out` must be a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn qft_paper_circuit(n: usize, out: *mut *mut QftUnitary) -> i32 {
    guard(|| {
        let out = out_ref(out, "out")?;
        hand_out(QftUnitary(paper_circuit(n)?.compose()?), out);
        Ok(())
    })
}

/// Multimode Mach-Zehnder `F^dagger diag(exp(i f_j phi)) F`.
///
/// # Safety
/// `out` must be a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn qft_mzi(
    n: usize,
    phase_kind: i32,
    phi: f64,
    out: *mut *mut QftUnitary,
) -> i32 {
    guard(|| {
        let out = out_ref(out, "out")?;
        let f = phase_distribution(phase_kind, n)?;
        hand_out(QftUnitary(mzi_unitary(n, &f, phi)?), out);
        Ok(())
    })
}

/// Wraps a caller-supplied matrix after checking unitarity.
///
/// # Safety
/// `entries` must hold `2 * k * k` doubles; `out` must be a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn qft_unitary_from_entries(
    k: usize,
    entries: *const f64,
    out: *mut *mut QftUnitary,
) -> i32 {
    guard(|| {
        let out = out_ref(out, "out")?;
        let m = read_matrix(k, entries)?;
        hand_out(QftUnitary(UnitaryMatrix::new(m)?), out);
        Ok(())
    })
}

/// Mode count, or 0 for a null handle.
///
/// # Safety
/// `u` must be null or a live handle.
#[no_mangle]
pub unsafe extern "C" fn qft_unitary_dim(u: *const QftUnitary) -> usize {
    u.as_ref().map_or(0, |u| u.0.dim())
}

/// # Safety
/// `u` must be a live handle; `re` and `im` valid pointers.
#[no_mangle]
pub unsafe extern "C" fn qft_unitary_get(
    u: *const QftUnitary,
    row: usize,
    col: usize,
    re: *mut f64,
    im: *mut f64,
) -> i32 {
    guard(|| {
        let u = u.as_ref().ok_or_else(|| null("unitary"))?;
        let (re, im) = (out_ref(re, "re")?, out_ref(im, "im")?);
        let n = u.0.dim();
        if row >= n || col >= n {
            return Err(Failure(
                QFT_ERR_DIMENSION,
                format!("entry ({row}, {col}) outside {n}x{n}"),
            ));
        }
        let z = u.0.get(row, col);
        *re = z.re;
        *im = z.im;
        Ok(())
    })
}

/// Writes 1 to `equivalent` when `u` passes the Fourier-equivalence check.
///
/// # Safety
/// `u` must be a live handle; `equivalent` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn qft_is_fourier_equivalent(
    u: *const QftUnitary,
    equivalent: *mut i32,
) -> i32 {
    guard(|| {
        let u = u.as_ref().ok_or_else(|| null("unitary"))?;
        let equivalent = out_ref(equivalent, "equivalent")?;
        *equivalent = i32::from(is_fourier_equivalent(&u.0)?.equivalent);
        Ok(())
    })
}

/// # Safety
/// `u` must be null or a handle not yet freed.
#[no_mangle]
pub unsafe extern "C" fn qft_unitary_free(u: *mut QftUnitary) {
    if !u.is_null() {
        drop(Box::from_raw(u));
    }
}

/// Permanent of a `k x k` complex matrix; `k = 0` gives 1.
///
/// # Safety
/// `entries` must hold `2 * k * k` doubles (may be null when `k = 0`).
#[no_mangle]
pub unsafe extern "C" fn qft_permanent(
    k: usize,
    entries: *const f64,
    re: *mut f64,
    im: *mut f64,
) -> i32 {
    guard(|| {
        let (re, im) = (out_ref(re, "re")?, out_ref(im, "im")?);
        let m = if k == 0 {
            Array2::zeros((0, 0))
        } else {
            read_matrix(k, entries)?
        };
        let p = permanent(m.view())?;
        *re = p.re;
        *im = p.im;
        Ok(())
    })
}

unsafe fn distribution_common(
    u: *const QftUnitary,
    input: *const usize,
    modes: usize,
    out: *mut *mut QftDistribution,
    classical: bool,
) -> i32 {
    guard(|| {
        let u = u.as_ref().ok_or_else(|| null("unitary"))?;
        let out = out_ref(out, "out")?;
        if input.is_null() {
            return Err(null("input"));
        }
        let state = OccupationState::new(std::slice::from_raw_parts(input, modes).to_vec())?;
        let d = if classical {
            classical_distribution(&u.0, &state)?
        } else {
            quantum_distribution(&u.0, &state)?
        };
        hand_out(QftDistribution(d), out);
        Ok(())
    })
}

/// Indistinguishable-photon output distribution for `input` (`modes` counts).
///
/// # Safety
/// `u` must be a live handle, `input` must hold `modes` values, `out` valid.
#[no_mangle]
pub unsafe extern "C" fn qft_quantum_distribution(
    u: *const QftUnitary,
    input: *const usize,
    modes: usize,
    out: *mut *mut QftDistribution,
) -> i32 {
    distribution_common(u, input, modes, out, false)
}

/// Distinguishable-photon output distribution.
///
/// # Safety
/// Same as `qft_quantum_distribution`.
#[no_mangle]
pub unsafe extern "C" fn qft_classical_distribution(
    u: *const QftUnitary,
    input: *const usize,
    modes: usize,
    out: *mut *mut QftDistribution,
) -> i32 {
    distribution_common(u, input, modes, out, true)
}

/// Number of output states, or 0 for a null handle.
///
/// # Safety
/// `d` must be null or a live handle.
#[no_mangle]
pub unsafe extern "C" fn qft_distribution_len(d: *const QftDistribution) -> usize {
    d.as_ref().map_or(0, |d| d.0.len())
}

/// # Safety
/// `d` must be null or a live handle.
#[no_mangle]
pub unsafe extern "C" fn qft_distribution_modes(d: *const QftDistribution) -> usize {
    d.as_ref().map_or(0, |d| d.0.modes())
}

/// # Safety
/// `d` must be null or a live handle.
#[no_mangle]
pub unsafe extern "C" fn qft_distribution_photons(d: *const QftDistribution) -> usize {
    d.as_ref().map_or(0, |d| d.0.photons())
}

/// State `index` in canonical order: occupations into `occupation`
/// (`qft_distribution_modes` values) and its probability into `probability`.
/// `occupation` may be null when only the probability is wanted.
///
/// # Safety
/// `d` must be a live handle; non-null buffers must be large enough.
#[no_mangle]
pub unsafe extern "C" fn qft_distribution_get(
    d: *const QftDistribution,
    index: usize,
    occupation: *mut usize,
    probability: *mut f64,
) -> i32 {
    guard(|| {
        let d = d.as_ref().ok_or_else(|| null("distribution"))?;
        let probability = out_ref(probability, "probability")?;
        if index >= d.0.len() {
            return Err(Failure(
                QFT_ERR_DIMENSION,
                format!("index {index} outside {} states", d.0.len()),
            ));
        }
        let state = &d.0.states()[index];
        if !occupation.is_null() {
            ptr::copy_nonoverlapping(state.counts().as_ptr(), occupation, state.modes());
        }
        *probability = d.0.probabilities()[index];
        Ok(())
    })
}

/// Probability mass on states the zero-transmission rule suppresses; needs
/// n photons in n modes.
///
/// # Safety
/// `d` must be a live handle; `out` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn qft_violation_ratio(d: *const QftDistribution, out: *mut f64) -> i32 {
    guard(|| {
        let d = d.as_ref().ok_or_else(|| null("distribution"))?;
        let out = out_ref(out, "out")?;
        *out = violation_ratio(&d.0, d.0.photons())?;
        Ok(())
    })
}

/// Pair-correlation witness and its distinguishable-photon bound `1 - 1/n`.
///
/// # Safety
/// `d` must be a live handle; `g_bar` and `bound` valid pointers.
#[no_mangle]
pub unsafe extern "C" fn qft_witness(
    d: *const QftDistribution,
    g_bar: *mut f64,
    bound: *mut f64,
) -> i32 {
    guard(|| {
        let d = d.as_ref().ok_or_else(|| null("distribution"))?;
        let (g_bar, bound) = (out_ref(g_bar, "g_bar")?, out_ref(bound, "bound")?);
        let w = pair_correlation_witness(&d.0)?;
        *g_bar = w.g_bar;
        *bound = w.classical_bound;
        Ok(())
    })
}

/// # Safety
/// `d` must be null or a handle not yet freed.
#[no_mangle]
pub unsafe extern "C" fn qft_distribution_free(d: *mut QftDistribution) {
    if !d.is_null() {
        drop(Box::from_raw(d));
    }
}

/// One-photon-per-output coincidence probability of the n-mode MZI.
///
/// # Safety
/// `out` must be a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn qft_coincidence_probability(
    n: usize,
    phase_kind: i32,
    phi: f64,
    out: *mut f64,
) -> i32 {
    guard(|| {
        let out = out_ref(out, "out")?;
        let f = phase_distribution(phase_kind, n)?;
        *out = coincidence_probability(n, &f, phi)?;
        Ok(())
    })
}

/// Fisher information of the count model at fringe value `p` and slope `dp`.
///
/// # Safety
/// `out` must be a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn qft_fisher_information(
    p: f64,
    dp: f64,
    visibility: f64,
    out: *mut f64,
) -> i32 {
    guard(|| {
        let out = out_ref(out, "out")?;
        *out = fisher_information(p, dp, visibility)?;
        Ok(())
    })
}

/// Closed-form best sensitivity of the delta scheme at unit visibility.
///
/// # Safety
/// `out` must be a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn qft_ideal_delta_sensitivity(n: usize, out: *mut f64) -> i32 {
    guard(|| {
        let out = out_ref(out, "out")?;
        *out = ideal_delta_sensitivity(n)?;
        Ok(())
    })
}

/// Smallest visibility at which the best sensitivity beats the shot-noise
/// limit; `+inf` when even unit visibility does not.
///
/// # Safety
/// `out` must be a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn qft_visibility_threshold(n: usize, phase_kind: i32, out: *mut f64) -> i32 {
    guard(|| {
        let out = out_ref(out, "out")?;
        let f = phase_distribution(phase_kind, n)?;
        *out = visibility_threshold_for(n, &f)?;
        Ok(())
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::ffi::CStr;

    #[test]
    fn error_message_round_trip() {
        let mut u = ptr::null_mut();
        let code = unsafe { qft_paper_circuit(7, &mut u) };
        assert_eq!(code, QFT_ERR_UNSUPPORTED);
        assert!(u.is_null());
        let msg = unsafe { CStr::from_ptr(qft_last_error()) }
            .to_str()
            .unwrap();
        assert!(msg.contains("7 modes"), "{msg}");
        assert_eq!(unsafe { qft_fourier(2, &mut u) }, QFT_OK);
        assert!(unsafe { CStr::from_ptr(qft_last_error()) }
            .to_bytes()
            .is_empty());
        unsafe { qft_unitary_free(u) };
    }

    #[test]
    fn null_out_pointer() {
        assert_eq!(
            unsafe { qft_fourier(2, ptr::null_mut()) },
            QFT_ERR_NULL_POINTER
        );
        assert_eq!(unsafe { qft_unitary_dim(ptr::null()) }, 0);
        unsafe { qft_unitary_free(ptr::null_mut()) };
    }

    #[test]
    fn unknown_phase_kind() {
        let mut p = 0.0;
        assert_eq!(
            unsafe { qft_coincidence_probability(3, 9, 0.1, &mut p) },
            QFT_ERR_INVALID_ARGUMENT
        );
    }

    #[test]
    fn version_is_terminated() {
        let v = unsafe { CStr::from_ptr(qft_version()) };
        assert_eq!(v.to_str().unwrap(), env!("CARGO_PKG_VERSION"));
    }
}
