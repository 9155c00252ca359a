//! Multi-component optical cat states produced at the disentangling time τ = 2π.

use std::f64::consts::PI;
use std::fmt::Write as _;

use ndarray::Array1;
use num_complex::Complex64;

use crate::error::{ensure_finite, ensure_non_negative, Error, Result};
use crate::fock::{
    coherent_state, coherent_state_with_tol, evolve_cavity, DensityMatrix, FockDims, FrameConfig,
};
use crate::kernels::CouplingProfile;
use crate::observables::{fmt_f64, Mechanics};

/// Leakage allowed when building an ideal cat vector.
pub const CAT_LEAK_TOL: f64 = 1e-12;

/// A k-component cat with coherent amplitude `alpha`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CatSpec {
    pub components: u32,
    pub alpha: Complex64,
}

impl CatSpec {
    pub fn new(components: u32, alpha: Complex64) -> Result<Self> {
        components_to_coupling(components)?;
        ensure_finite("Re alpha", alpha.re)?;
        ensure_finite("Im alpha", alpha.im)?;
        Ok(Self { components, alpha })
    }

    pub fn g0(&self) -> f64 {
        components_to_coupling(self.components).expect("validated in CatSpec::new")
    }

    pub fn state(&self, n: usize) -> Result<Array1<Complex64>> {
        ideal_cat_state(self.alpha, self.g0(), n)
    }
}

/// Coupling whose Kerr phase e^{2πi g₀² n²} splits |α⟩ into `k` components.
pub fn components_to_coupling(k: u32) -> Result<f64> {
    match k {
        2 => Ok(0.5),
        3 => Ok(1.0 / 6f64.sqrt()),
        4 => Ok(1.0 / (2.0 * 2f64.sqrt())),
        _ => Err(Error::Domain(format!(
            "cat component count must be 2, 3 or 4, got {k}"
        ))),
    }
}

/// Cavity state left at τ = 2π without loss: Fock amplitudes of |α⟩ times
/// e^{2πi g₀² n²}. The n = 0 amplitude is real and positive.
pub fn ideal_cat_state(alpha: Complex64, g0: f64, n: usize) -> Result<Array1<Complex64>> {
    ensure_finite("g0", g0)?;
    let mut psi = coherent_state_with_tol(alpha, n, CAT_LEAK_TOL)?;
    for (k, z) in psi.iter_mut().enumerate() {
        // reduce k² mod 1/g₀² before multiplying to keep the phase argument small
        let phase = 2.0 * PI * (g0 * g0 * (k * k) as f64).fract();
        *z *= Complex64::from_polar(1.0, phase);
    }
    Ok(psi)
}

/// Reduced cavity state at τ = 2π after evolving |α⟩ ⊗ |0⟩ under coupling `g0`
/// and loss `kappa`.
///
/// `dims.n_mech` is the mechanical cutoff of the co-moving frame used by
/// [`evolve_cavity`]; it bounds the jump-induced spread of the mechanics, not
/// the lab-frame excursion.
pub fn noisy_cat_density(
    alpha: Complex64,
    g0: f64,
    kappa: f64,
    dims: FockDims,
    cfg: &FrameConfig,
) -> Result<DensityMatrix> {
    ensure_non_negative("kappa", kappa)?;
    let psi = coherent_state(alpha, dims.n_cav)?;
    let rho_c = DensityMatrix::from_pure(FockDims::single(dims.n_cav), &psi)?;
    let traj = evolve_cavity(
        &rho_c,
        Mechanics::Coherent(Complex64::new(0.0, 0.0)),
        &CouplingProfile::Constant(g0),
        kappa,
        &[2.0 * PI],
        dims,
        cfg,
    )?;
    let rho = traj
        .states
        .into_iter()
        .next()
        .expect("one output time requested");
    // population lost through the mechanical cutoff is already bounded by leak_tol
    if (rho.trace() - 1.0).norm() > cfg.leak_tol.max(1e-8) {
        return Err(Error::Invariant(format!(
            "cat state trace {} deviates from 1",
            rho.trace()
        )));
    }
    Ok(rho)
}

/// `n,re,im` rows.
pub fn cat_to_csv(psi: &Array1<Complex64>) -> String {
    let mut out = String::from("n,re,im\n");
    for (k, z) in psi.iter().enumerate() {
        let _ = writeln!(out, "{k},{},{}", fmt_f64(z.re), fmt_f64(z.im));
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fock::state_fidelity;

    fn norm_diff(a: &Array1<Complex64>, b: &Array1<Complex64>) -> f64 {
        a.iter()
            .zip(b.iter())
            .map(|(x, y)| (x - y).norm_sqr())
            .sum::<f64>()
            .sqrt()
    }

    #[test]
    fn two_component_superposition() {
        for alpha in [Complex64::new(3f64.sqrt(), 0.0), Complex64::new(0.8, -1.1)] {
            let n = 40;
            let cat = ideal_cat_state(alpha, 0.5, n).unwrap();
            let plus = coherent_state(alpha, n).unwrap();
            let minus = coherent_state(-alpha, n).unwrap();
            let w1 = Complex64::new(0.5, 0.5);
            let w2 = Complex64::new(0.5, -0.5);
            let expect = plus.mapv(|z| z * w1) + minus.mapv(|z| z * w2);
            assert!(norm_diff(&cat, &expect) < 1e-10);
        }
    }

    #[test]
    fn integer_coupling_and_vacuum() {
        let alpha = Complex64::new(1.2, 0.4);
        let cat = ideal_cat_state(alpha, 2.0, 30).unwrap();
        let coh = coherent_state(alpha, 30).unwrap();
        assert!(norm_diff(&cat, &coh) < 1e-12);

        let vac = ideal_cat_state(Complex64::new(0.0, 0.0), 0.5, 5).unwrap();
        assert_eq!(vac[0], Complex64::new(1.0, 0.0));
        assert!(vac.iter().skip(1).all(|z| z.norm() == 0.0));
        assert!(ideal_cat_state(Complex64::new(3.0, 0.0), 0.5, 20).is_err());
    }

    #[test]
    fn parity_phase_pattern() {
        let cat = ideal_cat_state(Complex64::new(1.5, 0.0), 0.5, 30).unwrap();
        assert!(cat[0].im == 0.0 && cat[0].re > 0.0);
        for (k, z) in cat.iter().enumerate() {
            let expect = if k % 2 == 0 {
                Complex64::new(1.0, 0.0)
            } else {
                Complex64::i()
            };
            assert!((z / z.norm() - expect).norm() < 1e-12, "level {k}");
        }
    }

    #[test]
    fn coupling_table() {
        assert_eq!(components_to_coupling(2).unwrap(), 0.5);
        assert!((components_to_coupling(3).unwrap() - 0.40825).abs() < 1e-5);
        assert!((components_to_coupling(4).unwrap() - 0.35355).abs() < 1e-5);
        assert!(components_to_coupling(5).is_err());
        assert!(CatSpec::new(1, Complex64::new(1.0, 0.0)).is_err());
    }

    #[test]
    fn lossless_cat_is_ideal() {
        let alpha = Complex64::new(3f64.sqrt(), 0.0);
        let dims = FockDims::new(26, 12).unwrap();
        let rho = noisy_cat_density(alpha, 0.5, 0.0, dims, &FrameConfig::default()).unwrap();
        let ideal = ideal_cat_state(alpha, 0.5, 26).unwrap();
        assert!((state_fidelity(&ideal, &rho).unwrap() - 1.0).abs() < 1e-6);
    }

    #[test]
    fn vacuum_stays_vacuum() {
        let dims = FockDims::new(4, 6).unwrap();
        let rho = noisy_cat_density(
            Complex64::new(0.0, 0.0),
            0.5,
            0.3,
            dims,
            &FrameConfig::default(),
        )
        .unwrap();
        assert!((rho.data[[0, 0]] - 1.0).norm() < 1e-12);
        assert!(rho.data.iter().skip(1).all(|z| z.norm() < 1e-12));
    }

    #[test]
    fn csv_layout() {
        let psi = ideal_cat_state(Complex64::new(0.5, 0.0), 0.5, 12).unwrap();
        let text = cat_to_csv(&psi);
        let mut lines = text.lines();
        assert_eq!(lines.next(), Some("n,re,im"));
        assert_eq!(lines.count(), 12);
    }
}
