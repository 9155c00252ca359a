use std::f64::consts::{FRAC_1_PI, PI};
use std::ffi::CStr;
use std::path::Path;
use std::process::Command;
use std::ptr;

use optoloss_ffi::*;

fn z(re: f64, im: f64) -> OptolossComplex {
    OptolossComplex { re, im }
}

fn last_error() -> String {
    // SAFETY: the library returns a valid NUL-terminated string
    unsafe { CStr::from_ptr(optoloss_last_error_message()) }
        .to_string_lossy()
        .into_owned()
}

#[test]
fn version_is_crate_version() {
    // SAFETY: static NUL-terminated string
    let v = unsafe { CStr::from_ptr(optoloss_version()) };
    assert_eq!(v.to_str().unwrap(), env!("CARGO_PKG_VERSION"));
}

#[test]
fn constant_profile_kernels() {
    let mut p = ptr::null_mut();
    assert_eq!(optoloss_profile_constant(1.0, &mut p), OptolossStatus::Ok);
    let mut fc = OptolossFCoeffs {
        tau: 0.0,
        f_a: 0.0,
        f_plus: 0.0,
        f_minus: 0.0,
        a: 0.0,
        g: z(0.0, 0.0),
    };
    assert_eq!(optoloss_f_coeffs(p, PI, &mut fc), OptolossStatus::Ok);
    assert!((fc.f_a + PI).abs() < 1e-12);
    assert!(fc.f_plus.abs() < 1e-12);
    assert!((fc.f_minus + 2.0).abs() < 1e-12);
    assert!((fc.g.re + 2.0).abs() < 1e-12);

    assert_eq!(optoloss_f_coeffs(p, -1.0, &mut fc), OptolossStatus::Domain);
    assert!(last_error().contains("tau"));
    // SAFETY: p came from optoloss_profile_constant
    unsafe { optoloss_profile_free(p) };
}

#[test]
fn tabulated_profile_matches_constant() {
    let taus: Vec<f64> = (0..=10).map(|k| k as f64).collect();
    let gs = vec![0.5; taus.len()];
    let mut tab = ptr::null_mut();
    // SAFETY: both slices hold taus.len() elements
    let status =
        unsafe { optoloss_profile_tabulated(taus.as_ptr(), gs.as_ptr(), taus.len(), &mut tab) };
    assert_eq!(status, OptolossStatus::Ok);
    let mut con = ptr::null_mut();
    optoloss_profile_constant(0.5, &mut con);
    let mut a = z(0.0, 0.0);
    let mut b = z(0.0, 0.0);
    assert_eq!(
        optoloss_expect_a(z(1.0, 0.0), z(0.0, 0.0), tab, 0.2, 4.0, &mut a),
        OptolossStatus::Ok
    );
    assert_eq!(
        optoloss_expect_a(z(1.0, 0.0), z(0.0, 0.0), con, 0.2, 4.0, &mut b),
        OptolossStatus::Ok
    );
    assert!((a.re - b.re).abs() < 1e-8 && (a.im - b.im).abs() < 1e-8);

    // outside the tabulated window
    assert_ne!(
        optoloss_expect_a(z(1.0, 0.0), z(0.0, 0.0), tab, 0.2, 12.0, &mut a),
        OptolossStatus::Ok
    );
    // SAFETY: handles from this library, freed once
    unsafe {
        optoloss_profile_free(tab);
        optoloss_profile_free(con);
    }

    let bad = [1.0, 0.0];
    let mut p = ptr::null_mut();
    // SAFETY: two elements each
    let status = unsafe { optoloss_profile_tabulated(bad.as_ptr(), bad.as_ptr(), 2, &mut p) };
    assert_eq!(status, OptolossStatus::Domain);
    assert!(p.is_null());
}

#[test]
fn scalar_observables() {
    let mut n = 0.0;
    assert_eq!(
        optoloss_photon_number(z(10f64.sqrt(), 0.0), 0.01, 2.0 * PI, &mut n),
        OptolossStatus::Ok
    );
    assert!((n - 10.0 * (-0.02 * PI).exp()).abs() < 1e-12);

    let mut p = ptr::null_mut();
    optoloss_profile_constant(0.7, &mut p);
    let mut th = z(0.0, 0.0);
    let mut co = z(0.0, 0.0);
    assert_eq!(
        optoloss_expect_a_thermal(z(0.8, 0.1), 0.0, p, 0.3, 2.5, &mut th),
        OptolossStatus::Ok
    );
    assert_eq!(
        optoloss_expect_a(z(0.8, 0.1), z(0.0, 0.0), p, 0.3, 2.5, &mut co),
        OptolossStatus::Ok
    );
    assert!((th.re - co.re).abs() < 1e-12 && (th.im - co.im).abs() < 1e-12);
    // SAFETY: live handle
    unsafe { optoloss_profile_free(p) };

    let mut f = 0.0;
    let (mut lo, mut hi) = (0.0, 0.0);
    assert_eq!(
        optoloss_cat_fidelity(z(1.0, 0.0), 0.5, 0.05, &mut f),
        OptolossStatus::Ok
    );
    assert_eq!(
        optoloss_fidelity_bounds(z(1.0, 0.0), 0.05, &mut lo, &mut hi),
        OptolossStatus::Ok
    );
    assert!(lo <= f && f <= hi && f < 1.0);
    assert_eq!(
        optoloss_cat_fidelity(z(1.0, 0.0), 0.5, -1.0, &mut f),
        OptolossStatus::Domain
    );
}

#[test]
fn null_pointers_are_reported() {
    assert_eq!(
        optoloss_photon_number(z(1.0, 0.0), 0.1, 1.0, ptr::null_mut()),
        OptolossStatus::NullPointer
    );
    assert!(last_error().contains("null"));
    let mut out = z(0.0, 0.0);
    assert_eq!(
        optoloss_expect_a(z(1.0, 0.0), z(0.0, 0.0), ptr::null(), 0.1, 1.0, &mut out),
        OptolossStatus::NullPointer
    );
    assert_eq!(
        optoloss_profile_constant(1.0, ptr::null_mut()),
        OptolossStatus::NullPointer
    );
    // SAFETY: freeing null is a no-op
    unsafe {
        optoloss_profile_free(ptr::null_mut());
        optoloss_density_free(ptr::null_mut());
        optoloss_wigner_free(ptr::null_mut());
    }
    // success clears the message
    let mut n = 0.0;
    optoloss_photon_number(z(1.0, 0.0), 0.1, 1.0, &mut n);
    assert_eq!(last_error(), "");
}

#[test]
fn density_and_wigner_handles() {
    let mut rho = ptr::null_mut();
    assert_eq!(
        optoloss_ideal_cat_density(z(0.0, 0.0), 0.5, 4, &mut rho),
        OptolossStatus::Ok
    );
    let mut side = 0;
    assert_eq!(optoloss_density_side(rho, &mut side), OptolossStatus::Ok);
    assert_eq!(side, 4);
    let mut e = z(0.0, 0.0);
    assert_eq!(
        optoloss_density_element(rho, 0, 0, &mut e),
        OptolossStatus::Ok
    );
    assert_eq!(e.re, 1.0);
    assert_eq!(
        optoloss_density_element(rho, 4, 0, &mut e),
        OptolossStatus::Domain
    );

    let mut w = ptr::null_mut();
    assert_eq!(
        optoloss_wigner(rho, -5.0, 5.0, 101, &mut w),
        OptolossStatus::Ok
    );
    let mut peak = 0.0;
    assert_eq!(
        optoloss_wigner_value(w, 50, 50, &mut peak),
        OptolossStatus::Ok
    );
    assert!((peak - FRAC_1_PI).abs() < 1e-12);
    let mut neg = 1.0;
    assert_eq!(optoloss_wigner_negativity(w, &mut neg), OptolossStatus::Ok);
    assert_eq!(neg, 0.0);
    assert_eq!(
        optoloss_wigner_value(w, 101, 0, &mut peak),
        OptolossStatus::Domain
    );

    let mut narrow = ptr::null_mut();
    assert_eq!(
        optoloss_wigner(rho, -0.5, 0.5, 11, &mut narrow),
        OptolossStatus::GridCoverage
    );
    assert!(narrow.is_null());
    // SAFETY: live handles, each freed once
    unsafe {
        optoloss_wigner_free(w);
        optoloss_density_free(rho);
    }
}

#[test]
fn noisy_cat_through_the_c_interface() {
    let mut rho = ptr::null_mut();
    let status = optoloss_noisy_cat_density(z(1.0, 0.0), 0.5, 0.05, 14, 30, 1e-4, &mut rho);
    assert_eq!(status, OptolossStatus::Ok, "{}", last_error());
    let mut w = ptr::null_mut();
    assert_eq!(
        optoloss_wigner(rho, -5.0, 5.0, 61, &mut w),
        OptolossStatus::Ok
    );
    let mut neg = 0.0;
    optoloss_wigner_negativity(w, &mut neg);
    assert!(neg > 0.0);
    // SAFETY: live handles
    unsafe {
        optoloss_wigner_free(w);
        optoloss_density_free(rho);
    }

    let mut tight = ptr::null_mut();
    let status = optoloss_noisy_cat_density(z(1.0, 0.0), 0.5, 0.3, 14, 4, 1e-8, &mut tight);
    assert_eq!(status, OptolossStatus::Leakage);
    assert!(last_error().contains("levels"));
}

#[test]
fn header_declares_the_interface_and_compiles() {
    let header = Path::new(env!("CARGO_MANIFEST_DIR"))
        .join("include")
        .join("optoloss.h");
    let text = std::fs::read_to_string(&header).unwrap();
    for name in [
        "optoloss_last_error_message",
        "optoloss_profile_constant",
        "optoloss_f_coeffs",
        "optoloss_cat_fidelity",
        "optoloss_noisy_cat_density",
        "optoloss_wigner_negativity",
        "OPTOLOSS_STATUS_GRID_COVERAGE",
        "typedef struct OptolossDensity OptolossDensity",
    ] {
        assert!(text.contains(name), "header lacks {name}");
    }
    // syntax-check with the system C compiler when one is installed
    if let Ok(out) = Command::new("cc")
        .args(["-fsyntax-only", "-Wall", "-Werror", "-x", "c"])
        .arg(&header)
        .output()
    {
        assert!(
            out.status.success(),
            "{}",
            String::from_utf8_lossy(&out.stderr)
        );
    }
}
