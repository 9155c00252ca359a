//! C interface to the optoloss library.
//!
//! Every function returns an [`OptolossStatus`] and writes results through
//! out-pointers. After a failure, [`optoloss_last_error_message`] describes the
//! most recent error raised on the calling thread. Profiles, density matrices
//! and Wigner grids are opaque handles released with their `_free` function.
//!
//! Pointer arguments are checked for null. A non-null pointer must be valid for
//! the access its parameter implies: out-pointers writable, handles live and
//! produced by this library.
#![allow(clippy::not_unsafe_ptr_arg_deref)]

use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};

use num_complex::Complex64;
use optoloss::cat::{ideal_cat_state, noisy_cat_density};
use optoloss::fock::{DensityMatrix, FockDims, FrameConfig};
use optoloss::kernels::{f_coeffs_constant, f_coeffs_general, CouplingProfile};
use optoloss::observables::{
    cat_fidelity, expect_a, fidelity_bounds, photon_number, FidelityTruncation, InitialState,
    SystemParams,
};
use optoloss::quad::QuadConfig;
use optoloss::wigner::{negativity_volume, wigner, Axis, GridSpec, WignerGrid};
use optoloss::Error;

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum OptolossStatus {
    Ok = 0,
    NullPointer = 1,
    Domain = 2,
    Convergence = 3,
    Leakage = 4,
    Truncation = 5,
    Budget = 6,
    GridCoverage = 7,
    StepUnderflow = 8,
    Invariant = 9,
    Io = 10,
    Parse = 11,
    Panic = 12,
}

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct OptolossComplex {
    pub re: f64,
    pub im: f64,
}

impl From<OptolossComplex> for Complex64 {
    fn from(z: OptolossComplex) -> Self {
        Complex64::new(z.re, z.im)
    }
}

impl From<Complex64> for OptolossComplex {
    fn from(z: Complex64) -> Self {
        Self { re: z.re, im: z.im }
    }
}

/// Propagator kernels at one time, with A = F_a + F_+F_- and G = F_- − iF_+.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct OptolossFCoeffs {
    pub tau: f64,
    pub f_a: f64,
    pub f_plus: f64,
    pub f_minus: f64,
    pub a: f64,
    pub g: OptolossComplex,
}

/// Coupling profile g̃(τ).
pub struct OptolossProfile(CouplingProfile);

/// Density matrix in the truncated Fock basis.
pub struct OptolossDensity(DensityMatrix);

/// Wigner function sampled on a square grid.
pub struct OptolossWigner(WignerGrid);

thread_local! {
    static LAST_ERROR: RefCell<CString> = RefCell::new(CString::default());
}

enum Failure {
    Null(&'static str),
    Lib(Error),
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        Failure::Lib(e)
    }
}

fn status_of(e: &Error) -> OptolossStatus {
    match e {
        Error::Domain(_) => OptolossStatus::Domain,
        Error::Convergence { .. } => OptolossStatus::Convergence,
        Error::Leakage { .. } => OptolossStatus::Leakage,
        Error::Truncation { .. } => OptolossStatus::Truncation,
        Error::Budget { .. } => OptolossStatus::Budget,
        Error::GridCoverage { .. } => OptolossStatus::GridCoverage,
        Error::StepUnderflow { .. } => OptolossStatus::StepUnderflow,
        Error::Invariant(_) => OptolossStatus::Invariant,
        Error::Parse(_) | Error::Csv(_) => OptolossStatus::Parse,
        Error::Io(_) => OptolossStatus::Io,
    }
}

fn set_error(msg: String) {
    let c = CString::new(msg.replace('\0', " ")).unwrap_or_default();
    LAST_ERROR.with(|e| *e.borrow_mut() = c);
}

fn guard(f: impl FnOnce() -> Result<(), Failure>) -> OptolossStatus {
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(())) => {
            set_error(String::new());
            OptolossStatus::Ok
        }
        Ok(Err(Failure::Null(what))) => {
            set_error(format!("null pointer passed as {what}"));
            OptolossStatus::NullPointer
        }
        Ok(Err(Failure::Lib(e))) => {
            set_error(e.to_string());
            status_of(&e)
        }
        Err(_) => {
            set_error("internal panic".into());
            OptolossStatus::Panic
        }
    }
}

fn out_ref<'a, T>(p: *mut T, what: &'static str) -> Result<&'a mut T, Failure> {
    // SAFETY: the caller guarantees a non-null `p` points to writable storage for T
    unsafe { p.as_mut() }.ok_or(Failure::Null(what))
}

fn in_ref<'a, T>(p: *const T, what: &'static str) -> Result<&'a T, Failure> {
    // SAFETY: the caller guarantees a non-null `p` came from this library and is still live
    unsafe { p.as_ref() }.ok_or(Failure::Null(what))
}

fn boxed<T>(out: *mut *mut T, value: T) -> Result<(), Failure> {
    *out_ref(out, "out")? = Box::into_raw(Box::new(value));
    Ok(())
}

/// Library version as a static NUL-terminated string.
#[no_mangle]
pub extern "C" fn optoloss_version() -> *const c_char {
    static VERSION: &CStr =
        match CStr::from_bytes_with_nul(concat!(env!("CARGO_PKG_VERSION"), "\0").as_bytes()) {
            Ok(v) => v,
            Err(_) => panic!("version string"),
        };
    VERSION.as_ptr()
}

/// Message of the last error on this thread (empty after a success). The
/// pointer stays valid until the next call into the library on this thread.
#[no_mangle]
pub extern "C" fn optoloss_last_error_message() -> *const c_char {
    LAST_ERROR.with(|e| e.borrow().as_ptr())
}

#[no_mangle]
pub extern "C" fn optoloss_profile_constant(
    g0: f64,
    out: *mut *mut OptolossProfile,
) -> OptolossStatus {
    guard(|| {
        if !g0.is_finite() {
            return Err(Error::Domain(format!("g0 must be finite, got {g0}")).into());
        }
        boxed(out, OptolossProfile(CouplingProfile::Constant(g0)))
    })
}

/// Monotone cubic interpolation through `len` samples (τ strictly increasing).
///
/// # Safety
/// `taus` and `gs` must each point to `len` readable doubles.
#[no_mangle]
pub unsafe extern "C" fn optoloss_profile_tabulated(
    taus: *const f64,
    gs: *const f64,
    len: usize,
    out: *mut *mut OptolossProfile,
) -> OptolossStatus {
    guard(|| {
        if taus.is_null() || gs.is_null() {
            return Err(Failure::Null("samples"));
        }
        // SAFETY: both arrays hold `len` elements per the contract above
        let (t, g) = unsafe {
            (
                std::slice::from_raw_parts(taus, len),
                std::slice::from_raw_parts(gs, len),
            )
        };
        let profile = CouplingProfile::tabulated(t.to_vec(), g.to_vec())?;
        boxed(out, OptolossProfile(profile))
    })
}

/// # Safety
/// `profile` must be null or a handle from `optoloss_profile_*` not yet freed.
#[no_mangle]
pub unsafe extern "C" fn optoloss_profile_free(profile: *mut OptolossProfile) {
    if !profile.is_null() {
        // SAFETY: the handle was produced by Box::into_raw
        drop(unsafe { Box::from_raw(profile) });
    }
}

#[no_mangle]
pub extern "C" fn optoloss_f_coeffs(
    profile: *const OptolossProfile,
    tau: f64,
    out: *mut OptolossFCoeffs,
) -> OptolossStatus {
    guard(|| {
        let profile = &in_ref(profile, "profile")?.0;
        let fc = match profile.as_constant() {
            Some(g) => f_coeffs_constant(g, tau)?,
            None => f_coeffs_general(profile, tau, &QuadConfig::default())?,
        };
        *out_ref(out, "out")? = OptolossFCoeffs {
            tau: fc.tau,
            f_a: fc.f_a,
            f_plus: fc.f_plus,
            f_minus: fc.f_minus,
            a: fc.phase_a(),
            g: fc.displacement_g().into(),
        };
        Ok(())
    })
}

#[no_mangle]
pub extern "C" fn optoloss_photon_number(
    alpha: OptolossComplex,
    kappa: f64,
    tau: f64,
    out: *mut f64,
) -> OptolossStatus {
    guard(|| {
        *out_ref(out, "out")? = photon_number(alpha.into(), kappa, tau)?;
        Ok(())
    })
}

fn expect_a_for(
    init: InitialState,
    profile: *const OptolossProfile,
    kappa: f64,
    tau: f64,
    out: *mut OptolossComplex,
) -> Result<(), Failure> {
    let sys = SystemParams {
        g_profile: in_ref(profile, "profile")?.0.clone(),
        kappa,
        omega_ratio: 0.0,
    };
    *out_ref(out, "out")? = expect_a(&init, &sys, tau, &QuadConfig::default())?.into();
    Ok(())
}

/// ⟨a(τ)⟩ for |α⟩ ⊗ |β⟩.
#[no_mangle]
pub extern "C" fn optoloss_expect_a(
    alpha: OptolossComplex,
    beta: OptolossComplex,
    profile: *const OptolossProfile,
    kappa: f64,
    tau: f64,
    out: *mut OptolossComplex,
) -> OptolossStatus {
    guard(|| {
        expect_a_for(
            InitialState::coherent(alpha.into(), beta.into()),
            profile,
            kappa,
            tau,
            out,
        )
    })
}

/// ⟨a(τ)⟩ for |α⟩ with thermal mechanics of mean occupation `nbar`.
#[no_mangle]
pub extern "C" fn optoloss_expect_a_thermal(
    alpha: OptolossComplex,
    nbar: f64,
    profile: *const OptolossProfile,
    kappa: f64,
    tau: f64,
    out: *mut OptolossComplex,
) -> OptolossStatus {
    guard(|| {
        expect_a_for(
            InitialState::thermal(alpha.into(), nbar),
            profile,
            kappa,
            tau,
            out,
        )
    })
}

#[no_mangle]
pub extern "C" fn optoloss_cat_fidelity(
    alpha: OptolossComplex,
    g0: f64,
    kappa: f64,
    out: *mut f64,
) -> OptolossStatus {
    guard(|| {
        let alpha: Complex64 = alpha.into();
        *out_ref(out, "out")? =
            cat_fidelity(alpha, g0, kappa, &FidelityTruncation::for_alpha(alpha))?;
        Ok(())
    })
}

#[no_mangle]
pub extern "C" fn optoloss_fidelity_bounds(
    alpha: OptolossComplex,
    kappa: f64,
    lower: *mut f64,
    upper: *mut f64,
) -> OptolossStatus {
    guard(|| {
        let (lo, hi) = fidelity_bounds(alpha.into(), kappa)?;
        *out_ref(lower, "lower")? = lo;
        *out_ref(upper, "upper")? = hi;
        Ok(())
    })
}

/// Pure ideal cat on `levels` Fock levels.
#[no_mangle]
pub extern "C" fn optoloss_ideal_cat_density(
    alpha: OptolossComplex,
    g0: f64,
    levels: usize,
    out: *mut *mut OptolossDensity,
) -> OptolossStatus {
    guard(|| {
        let psi = ideal_cat_state(alpha.into(), g0, levels)?;
        let rho = DensityMatrix::from_pure(FockDims::single(levels), &psi)?;
        boxed(out, OptolossDensity(rho))
    })
}

/// Reduced cavity state at τ = 2π for |α⟩ ⊗ |0⟩ with loss `kappa`.
#[no_mangle]
pub extern "C" fn optoloss_noisy_cat_density(
    alpha: OptolossComplex,
    g0: f64,
    kappa: f64,
    n_cav: usize,
    n_mech: usize,
    leak_tol: f64,
    out: *mut *mut OptolossDensity,
) -> OptolossStatus {
    guard(|| {
        let cfg = FrameConfig {
            leak_tol,
            ..FrameConfig::default()
        };
        let rho = noisy_cat_density(alpha.into(), g0, kappa, FockDims::new(n_cav, n_mech)?, &cfg)?;
        boxed(out, OptolossDensity(rho))
    })
}

#[no_mangle]
pub extern "C" fn optoloss_density_side(
    rho: *const OptolossDensity,
    out: *mut usize,
) -> OptolossStatus {
    guard(|| {
        *out_ref(out, "out")? = in_ref(rho, "rho")?.0.side();
        Ok(())
    })
}

#[no_mangle]
pub extern "C" fn optoloss_density_element(
    rho: *const OptolossDensity,
    row: usize,
    col: usize,
    out: *mut OptolossComplex,
) -> OptolossStatus {
    guard(|| {
        let rho = &in_ref(rho, "rho")?.0;
        let n = rho.side();
        if row >= n || col >= n {
            return Err(
                Error::Domain(format!("index ({row}, {col}) outside a {n}x{n} matrix")).into(),
            );
        }
        *out_ref(out, "out")? = rho.data[[row, col]].into();
        Ok(())
    })
}

/// # Safety
/// `rho` must be null or a live density handle.
#[no_mangle]
pub unsafe extern "C" fn optoloss_density_free(rho: *mut OptolossDensity) {
    if !rho.is_null() {
        // SAFETY: the handle was produced by Box::into_raw
        drop(unsafe { Box::from_raw(rho) });
    }
}

/// W on a `count` × `count` grid spanning [min, max] in both X and P. Fails with
/// `GridCoverage` when the grid misses part of the state.
#[no_mangle]
pub extern "C" fn optoloss_wigner(
    rho: *const OptolossDensity,
    min: f64,
    max: f64,
    count: usize,
    out: *mut *mut OptolossWigner,
) -> OptolossStatus {
    guard(|| {
        let rho = &in_ref(rho, "rho")?.0;
        let axis = Axis::new(min, max, count)?;
        let grid = wigner(rho, &GridSpec { x: axis, p: axis })?;
        boxed(out, OptolossWigner(grid))
    })
}

/// W at grid point (X index `i`, P index `j`).
#[no_mangle]
pub extern "C" fn optoloss_wigner_value(
    w: *const OptolossWigner,
    i: usize,
    j: usize,
    out: *mut f64,
) -> OptolossStatus {
    guard(|| {
        let w = &in_ref(w, "wigner")?.0;
        let value = w
            .values
            .get([i, j])
            .copied()
            .ok_or_else(|| Error::Domain(format!("grid index ({i}, {j}) out of range")))?;
        *out_ref(out, "out")? = value;
        Ok(())
    })
}

#[no_mangle]
pub extern "C" fn optoloss_wigner_negativity(
    w: *const OptolossWigner,
    out: *mut f64,
) -> OptolossStatus {
    guard(|| {
        *out_ref(out, "out")? = negativity_volume(&in_ref(w, "wigner")?.0);
        Ok(())
    })
}

/// # Safety
/// `w` must be null or a live Wigner handle.
#[no_mangle]
pub unsafe extern "C" fn optoloss_wigner_free(w: *mut OptolossWigner) {
    if !w.is_null() {
        // SAFETY: the handle was produced by Box::into_raw
        drop(unsafe { Box::from_raw(w) });
    }
}
