//! C ABI over the atomroute core.
//!
//! Every function returns an [`AtStatus`]; results come back through out
//! pointers. Handles are opaque and must be released with their `_free`
//! function. On failure, [`at_last_error`] holds a message for the calling
//! thread.

use std::cell::RefCell;
use std::ffi::{c_char, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::ptr;

use atomroute::dynamics::{self, SpectralDecomposition};
use atomroute::fock::{FockBasis, FockState, StateVector};
use atomroute::hamiltonian::{FieldConfig, ReducedParams};
use atomroute::{analytic, Error};

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum AtStatus {
    Ok = 0,
    InvalidArgument = 1,
    SingularParameter = 2,
    Numerical = 3,
    Consistency = 4,
    InsufficientData = 5,
    Io = 6,
    NullPointer = 7,
    Panic = 8,
}

/// Parameters of the reduced four-well model, in the same units as `j`.
#[repr(C)]
#[derive(Debug, Clone, Copy)]
pub struct AtParams {
    pub u: f64,
    pub sigma: f64,
    pub j: f64,
    pub particles: u32,
}

/// Site-dependent offset `nu` applied against well `target` (1, 2 or 3).
#[repr(C)]
#[derive(Debug, Clone, Copy)]
pub struct AtField {
    pub nu: f64,
    pub target: u32,
}

pub struct AtBasis(FockBasis);

pub struct AtSpectrum(SpectralDecomposition);

pub struct AtState(StateVector);

thread_local! {
    static LAST_ERROR: RefCell<Option<CString>> = const { RefCell::new(None) };
}

fn set_error(msg: String) {
    let c = CString::new(msg.replace('\0', " ")).unwrap_or_default();
    LAST_ERROR.with(|e| *e.borrow_mut() = Some(c));
}

fn status_of(err: &Error) -> AtStatus {
    match err {
        Error::InvalidArgument(_) => AtStatus::InvalidArgument,
        Error::SingularParameter(_) => AtStatus::SingularParameter,
        Error::Numerical(_) => AtStatus::Numerical,
        Error::Consistency(_) => AtStatus::Consistency,
        Error::InsufficientData(_) => AtStatus::InsufficientData,
        Error::Io(_) => AtStatus::Io,
    }
}

enum Fail {
    Core(Error),
    Null(&'static str),
}

impl From<Error> for Fail {
    fn from(e: Error) -> Self {
        Fail::Core(e)
    }
}

fn guard(f: impl FnOnce() -> Result<(), Fail>) -> AtStatus {
    LAST_ERROR.with(|e| *e.borrow_mut() = None);
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(())) => AtStatus::Ok,
        Ok(Err(Fail::Core(e))) => {
            set_error(e.to_string());
            status_of(&e)
        }
        Ok(Err(Fail::Null(what))) => {
            set_error(format!("null pointer: {what}"));
            AtStatus::NullPointer
        }
        Err(p) => {
            let msg = p
                .downcast_ref::<&str>()
                .map(|s| s.to_string())
                .or_else(|| p.downcast_ref::<String>().cloned())
                .unwrap_or_else(|| "unknown panic".into());
            set_error(format!("panic: {msg}"));
            AtStatus::Panic
        }
    }
}

unsafe fn get<'a, T>(p: *const T, what: &'static str) -> Result<&'a T, Fail> {
    p.as_ref().ok_or(Fail::Null(what))
}

unsafe fn out<'a, T>(p: *mut T, what: &'static str) -> Result<&'a mut T, Fail> {
    p.as_mut().ok_or(Fail::Null(what))
}

fn params(p: &AtParams) -> Result<ReducedParams, Error> {
    ReducedParams::new(p.u, p.sigma, p.j, p.particles)
}

unsafe fn field(f: *const AtField) -> Result<Option<FieldConfig>, Error> {
    match f.as_ref() {
        None => Ok(None),
        Some(f) => FieldConfig::new(f.nu, f.target as usize).map(Some),
    }
}

fn boxed<T>(v: T) -> *mut T {
    Box::into_raw(Box::new(v))
}

/// Message for the last failed call on this thread, or NULL. Valid until the
/// next call into this library from the same thread.
#[no_mangle]
pub extern "C" fn at_last_error() -> *const c_char {
    LAST_ERROR.with(|e| e.borrow().as_ref().map_or(ptr::null(), |c| c.as_ptr()))
}

/// Library version as a static NUL-terminated string.
#[no_mangle]
pub extern "C" fn at_version() -> *const c_char {
    concat!(env!("CARGO_PKG_VERSION"), "\0").as_ptr().cast()
}

/// Fock basis of `particles` bosons on four wells.
///
/// # Safety
/// `out_basis` must be a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn at_basis_new(particles: u32, out_basis: *mut *mut AtBasis) -> AtStatus {
    guard(|| {
        let slot = out(out_basis, "out_basis")?;
        *slot = boxed(AtBasis(FockBasis::new(particles)));
        Ok(())
    })
}

/// # Safety
/// `basis` must come from [`at_basis_new`] or be NULL.
#[no_mangle]
pub unsafe extern "C" fn at_basis_free(basis: *mut AtBasis) {
    if !basis.is_null() {
        drop(Box::from_raw(basis));
    }
}

/// # Safety
/// `basis` and `out_len` must be valid pointers.
#[no_mangle]
pub unsafe extern "C" fn at_basis_len(basis: *const AtBasis, out_len: *mut usize) -> AtStatus {
    guard(|| {
        *out(out_len, "out_len")? = get(basis, "basis")?.0.len();
        Ok(())
    })
}

/// Occupations of basis state `index`, written to `occupations[0..4]`.
///
/// # Safety
/// `basis` must be valid; `occupations` must hold four values.
#[no_mangle]
pub unsafe extern "C" fn at_basis_state(basis: *const AtBasis, index: usize, occupations: *mut u32) -> AtStatus {
    guard(|| {
        let b = &get(basis, "basis")?.0;
        let s = b
            .state(index)
            .ok_or_else(|| Error::InvalidArgument(format!("index {index} outside basis of {}", b.len())))?;
        if occupations.is_null() {
            return Err(Fail::Null("occupations"));
        }
        std::slice::from_raw_parts_mut(occupations, 4).copy_from_slice(&s.occupations());
        Ok(())
    })
}

/// Eigendecomposition of the reduced Hamiltonian, optionally with a field.
///
/// # Safety
/// `basis`, `params` and `out_spectrum` must be valid; `field` may be NULL.
#[no_mangle]
pub unsafe extern "C" fn at_spectrum_new(
    basis: *const AtBasis,
    params: *const AtParams,
    field: *const AtField,
    out_spectrum: *mut *mut AtSpectrum,
) -> AtStatus {
    guard(|| {
        let b = &get(basis, "basis")?.0;
        let p = self::params(get(params, "params")?)?;
        let f = self::field(field)?;
        let slot = out(out_spectrum, "out_spectrum")?;
        let spec = dynamics::diagonalize_reduced(b, &p, f.as_ref())?;
        *slot = boxed(AtSpectrum(spec));
        Ok(())
    })
}

/// # Safety
/// `spectrum` must come from [`at_spectrum_new`] or be NULL.
#[no_mangle]
pub unsafe extern "C" fn at_spectrum_free(spectrum: *mut AtSpectrum) {
    if !spectrum.is_null() {
        drop(Box::from_raw(spectrum));
    }
}

/// Copies up to `capacity` eigenvalues in ascending order and reports the
/// total count in `out_len`. Pass `capacity = 0` to query the size.
///
/// # Safety
/// `spectrum` and `out_len` must be valid; `values` must hold `capacity`
/// doubles or be NULL when `capacity` is zero.
#[no_mangle]
pub unsafe extern "C" fn at_spectrum_eigenvalues(
    spectrum: *const AtSpectrum,
    values: *mut f64,
    capacity: usize,
    out_len: *mut usize,
) -> AtStatus {
    guard(|| {
        let e = get(spectrum, "spectrum")?.0.eigenvalues();
        *out(out_len, "out_len")? = e.len();
        if capacity > 0 {
            if values.is_null() {
                return Err(Fail::Null("values"));
            }
            let n = capacity.min(e.len());
            let dst = std::slice::from_raw_parts_mut(values, n);
            for (d, s) in dst.iter_mut().zip(e.iter()) {
                *d = *s;
            }
        }
        Ok(())
    })
}

/// Fock state with the given four occupations.
///
/// # Safety
/// `basis` and `out_state` must be valid; `occupations` must hold four values.
#[no_mangle]
pub unsafe extern "C" fn at_state_fock(
    basis: *const AtBasis,
    occupations: *const u32,
    out_state: *mut *mut AtState,
) -> AtStatus {
    guard(|| {
        let b = &get(basis, "basis")?.0;
        if occupations.is_null() {
            return Err(Fail::Null("occupations"));
        }
        let occ = std::slice::from_raw_parts(occupations, 4);
        let s = FockState([occ[0], occ[1], occ[2], occ[3]]);
        let slot = out(out_state, "out_state")?;
        *slot = boxed(AtState(StateVector::fock(b, &s)?));
        Ok(())
    })
}

/// # Safety
/// `state` must come from this library or be NULL.
#[no_mangle]
pub unsafe extern "C" fn at_state_free(state: *mut AtState) {
    if !state.is_null() {
        drop(Box::from_raw(state));
    }
}

/// State at time `t` under the Hamiltonian held by `spectrum`.
///
/// # Safety
/// All pointers must be valid.
#[no_mangle]
pub unsafe extern "C" fn at_state_evolve(
    state: *const AtState,
    spectrum: *const AtSpectrum,
    t: f64,
    out_state: *mut *mut AtState,
) -> AtStatus {
    guard(|| {
        let psi = &get(state, "state")?.0;
        let spec = &get(spectrum, "spectrum")?.0;
        let slot = out(out_state, "out_state")?;
        *slot = boxed(AtState(dynamics::evolve(psi, spec, t)?));
        Ok(())
    })
}

/// `<N_1> .. <N_4>` written to `populations[0..4]`.
///
/// # Safety
/// `state` and `basis` must be valid; `populations` must hold four doubles.
#[no_mangle]
pub unsafe extern "C" fn at_state_populations(
    state: *const AtState,
    basis: *const AtBasis,
    populations: *mut f64,
) -> AtStatus {
    guard(|| {
        let pops = get(state, "state")?.0.populations(&get(basis, "basis")?.0)?;
        if populations.is_null() {
            return Err(Fail::Null("populations"));
        }
        std::slice::from_raw_parts_mut(populations, 4).copy_from_slice(&pops);
        Ok(())
    })
}

/// `|<a|b>|`.
///
/// # Safety
/// All pointers must be valid.
#[no_mangle]
pub unsafe extern "C" fn at_state_overlap(a: *const AtState, b: *const AtState, out_overlap: *mut f64) -> AtStatus {
    guard(|| {
        let z = get(a, "a")?.0.inner(&get(b, "b")?.0)?;
        *out(out_overlap, "out_overlap")? = z.norm();
        Ok(())
    })
}

/// Populations of an initial Fock state sampled at `times[0..count]`,
/// written row-major to `populations[0..4*count]`.
///
/// # Safety
/// `spectrum` must be valid, `occupations` must hold four values, `times`
/// `count` doubles and `populations` `4 * count` doubles.
#[no_mangle]
pub unsafe extern "C" fn at_populations_series(
    spectrum: *const AtSpectrum,
    occupations: *const u32,
    times: *const f64,
    count: usize,
    populations: *mut f64,
) -> AtStatus {
    guard(|| {
        let spec = &get(spectrum, "spectrum")?.0;
        if occupations.is_null() || (count > 0 && (times.is_null() || populations.is_null())) {
            return Err(Fail::Null("occupations, times or populations"));
        }
        let occ = std::slice::from_raw_parts(occupations, 4);
        let b = spec.basis();
        let psi = StateVector::fock(b, &FockState([occ[0], occ[1], occ[2], occ[3]]))?;
        if count == 0 {
            return Ok(());
        }
        let ts = std::slice::from_raw_parts(times, count);
        let dst = std::slice::from_raw_parts_mut(populations, 4 * count);
        for (row, &t) in dst.chunks_exact_mut(4).zip(ts) {
            row.copy_from_slice(&dynamics::evolve(&psi, spec, t)?.populations(b)?);
        }
        Ok(())
    })
}

/// Effective edge-to-edge coupling with `n4` atoms held in the centre.
///
/// # Safety
/// `params` and `out_value` must be valid.
#[no_mangle]
pub unsafe extern "C" fn at_jeff(params: *const AtParams, n4: u32, out_value: *mut f64) -> AtStatus {
    guard(|| {
        let p = self::params(get(params, "params")?)?;
        *out(out_value, "out_value")? = analytic::jeff(&p, n4)?;
        Ok(())
    })
}

/// Period of the resonant three-edge oscillation.
///
/// # Safety
/// `params` and `out_value` must be valid.
#[no_mangle]
pub unsafe extern "C" fn at_resonant_period(params: *const AtParams, n4: u32, out_value: *mut f64) -> AtStatus {
    guard(|| {
        let p = self::params(get(params, "params")?)?;
        *out(out_value, "out_value")? = analytic::resonant_period(&p, n4)?;
        Ok(())
    })
}

/// Offset at which the resonance condition breaks down.
///
/// # Safety
/// `params` and `out_value` must be valid.
#[no_mangle]
pub unsafe extern "C" fn at_sigma_crit(params: *const AtParams, out_value: *mut f64) -> AtStatus {
    guard(|| {
        let p = self::params(get(params, "params")?)?;
        *out(out_value, "out_value")? = analytic::sigma_crit(&p);
        Ok(())
    })
}

/// Coupling between the two untargeted wells under a field.
///
/// # Safety
/// All pointers must be valid.
#[no_mangle]
pub unsafe extern "C" fn at_zeta(
    params: *const AtParams,
    field: *const AtField,
    n4: u32,
    out_value: *mut f64,
) -> AtStatus {
    guard(|| {
        let p = self::params(get(params, "params")?)?;
        let f = self::field(get(field, "field")?)?.expect("field is non-null");
        *out(out_value, "out_value")? = analytic::zeta(&p, &f, n4)?;
        Ok(())
    })
}

/// Complete transfer time for coupling `zeta`.
///
/// # Safety
/// `out_value` must be valid.
#[no_mangle]
pub unsafe extern "C" fn at_tau(zeta: f64, out_value: *mut f64) -> AtStatus {
    guard(|| {
        *out(out_value, "out_value")? = analytic::tau(zeta)?;
        Ok(())
    })
}
