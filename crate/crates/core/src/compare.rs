//! Side-by-side evaluation of the closed-form observables and the Fock-space oracle.
//!
//! Photon numbers come from the lab-frame integrator. The cavity populations
//! obey the same rate equations whatever the mechanical cutoff, since the
//! Hamiltonian conserves N_a, so the mechanical edge is not checked there.
//! Coherences and fidelities come from the co-moving frame integrator, whose
//! mechanical cutoff only has to hold the spread caused by photon jumps.

use std::f64::consts::PI;
use std::fmt::Write as _;

use num_complex::Complex64;
use rayon::prelude::*;

use crate::cat::{ideal_cat_state, noisy_cat_density};
use crate::error::{Error, Result};
use crate::fock::{
    coherent_state, coherent_state_with_tol, evolve_cavity, evolve_trajectory,
    required_coherent_levels, state_fidelity, thermal_state_with_tol, DensityMatrix, EvolveConfig,
    FockDims, FrameConfig, DEFAULT_LEAK_TOL,
};
use crate::kernels::CouplingProfile;
use crate::observables::{
    cat_fidelity, expect_a, fmt_f64, photon_number, FidelityTruncation, InitialState, Mechanics,
    SystemParams,
};
use crate::quad::QuadConfig;

/// Cavity tail allowed on the oracle's initial state.
const CAVITY_TAIL: f64 = 1e-12;

/// Truncation and tolerance settings for one comparison.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct OracleSettings {
    /// Mechanical cutoff of the lab-frame photon-number run.
    pub n_mech_lab: usize,
    /// Mechanical cutoff of the co-moving frame for ⟨a⟩.
    pub n_mech_frame: usize,
    /// Mechanical cutoff of the co-moving frame for the cat fidelity.
    pub n_mech_fidelity: usize,
    /// Population the frame oracle may lose through its mechanical cutoff.
    pub leak_tol: f64,
    pub tolerance: f64,
    pub samples: usize,
}

impl Default for OracleSettings {
    fn default() -> Self {
        Self {
            n_mech_lab: 12,
            n_mech_frame: 90,
            n_mech_fidelity: 90,
            leak_tol: 1e-4,
            tolerance: 1e-5,
            samples: 16,
        }
    }
}

fn cavity_levels(alpha: Complex64) -> usize {
    required_coherent_levels(alpha, CAVITY_TAIL).max(2)
}

/// Tr[N_a ρ(τ)] from the lab-frame master equation.
pub fn oracle_photon_number(
    init: &InitialState,
    profile: &CouplingProfile,
    kappa: f64,
    taus: &[f64],
    n_mech: usize,
) -> Result<Vec<f64>> {
    init.validate()?;
    let n_cav = cavity_levels(init.alpha);
    let dims = FockDims::new(n_cav, n_mech)?;
    let cav =
        DensityMatrix::from_pure(FockDims::single(n_cav), &coherent_state(init.alpha, n_cav)?)?;
    let mech = match init.mech {
        Mechanics::Coherent(beta) => DensityMatrix::from_pure(
            FockDims::single(n_mech),
            &coherent_state_with_tol(beta, n_mech, 1.0)?,
        )?,
        Mechanics::Thermal(nbar) => thermal_state_with_tol(nbar, n_mech, 1.0)?,
    };
    let rho0 = DensityMatrix::product(&cav, &mech)?;
    let cfg = EvolveConfig {
        leak_tol: 1.0,
        ..EvolveConfig::default()
    };
    let states = evolve_trajectory(&rho0, profile, kappa, taus, &cfg)?;
    let mut out = Vec::with_capacity(states.len());
    for rho in &states {
        let (cav_edge, _) = rho.edge_populations();
        if cav_edge >= DEFAULT_LEAK_TOL {
            return Err(Error::Leakage {
                mode: "cavity",
                leak: cav_edge,
                limit: DEFAULT_LEAK_TOL,
                suggested: n_cav + n_cav / 2 + 2,
            });
        }
        let n: f64 = (0..dims.side())
            .map(|i| (i / n_mech) as f64 * rho.data[[i, i]].re)
            .sum();
        out.push(n);
    }
    Ok(out)
}

/// ⟨a(τ)⟩ from the co-moving frame integrator.
pub fn oracle_expect_a(
    init: &InitialState,
    profile: &CouplingProfile,
    kappa: f64,
    taus: &[f64],
    n_mech: usize,
    leak_tol: f64,
) -> Result<Vec<Complex64>> {
    init.validate()?;
    let n_cav = cavity_levels(init.alpha);
    let rho_c =
        DensityMatrix::from_pure(FockDims::single(n_cav), &coherent_state(init.alpha, n_cav)?)?;
    let cfg = FrameConfig {
        leak_tol,
        max_offset: Some(1),
        ..FrameConfig::default()
    };
    let traj = evolve_cavity(
        &rho_c,
        init.mech,
        profile,
        kappa,
        taus,
        FockDims::new(n_cav, n_mech)?,
        &cfg,
    )?;
    Ok((0..taus.len()).map(|i| traj.expect_a(i)).collect())
}

/// ⟨cat|ρ_c(2π)|cat⟩ from the co-moving frame integrator.
pub fn oracle_cat_fidelity(
    alpha: Complex64,
    g0: f64,
    kappa: f64,
    n_mech: usize,
    leak_tol: f64,
) -> Result<f64> {
    let n_cav = cavity_levels(alpha);
    let cfg = FrameConfig {
        leak_tol,
        ..FrameConfig::default()
    };
    let rho = noisy_cat_density(alpha, g0, kappa, FockDims::new(n_cav, n_mech)?, &cfg)?;
    state_fidelity(&ideal_cat_state(alpha, g0, n_cav)?, &rho)
}

/// Largest analytic-vs-oracle gap of one observable in one case.
#[derive(Debug, Clone, PartialEq)]
pub struct Deviation {
    pub case: String,
    pub observable: &'static str,
    pub max_deviation: f64,
    pub tolerance: f64,
}

impl Deviation {
    pub fn passed(&self) -> bool {
        self.max_deviation < self.tolerance
    }
}

/// One parameter point of a comparison suite (constant coupling).
#[derive(Debug, Clone, PartialEq)]
pub struct CompareCase {
    pub label: String,
    pub init: InitialState,
    pub g0: f64,
    pub kappa: f64,
}

impl CompareCase {
    pub fn new(init: InitialState, g0: f64, kappa: f64) -> Self {
        let mech = match init.mech {
            Mechanics::Coherent(b) => format!("beta={}{:+}i", b.re, b.im),
            Mechanics::Thermal(n) => format!("nbar={n}"),
        };
        let label = format!(
            "alpha={}{:+}i {mech} g0={g0} kappa={kappa}",
            init.alpha.re, init.alpha.im
        );
        Self {
            label,
            init,
            g0,
            kappa,
        }
    }
}

/// Photon number, ⟨a⟩ and (for β = 0) the cat fidelity of one case.
pub fn compare_case(case: &CompareCase, settings: &OracleSettings) -> Result<Vec<Deviation>> {
    let samples = settings.samples.max(1);
    let taus: Vec<f64> = (1..=samples)
        .map(|k| 2.0 * PI * k as f64 / samples as f64)
        .collect();
    let profile = CouplingProfile::Constant(case.g0);
    let sys = SystemParams::constant(case.g0, case.kappa);
    let quad = QuadConfig::default();
    let mut out = Vec::new();

    let lab = oracle_photon_number(&case.init, &profile, case.kappa, &taus, settings.n_mech_lab)?;
    let mut worst = 0.0f64;
    for (&t, n) in taus.iter().zip(&lab) {
        worst = worst.max((photon_number(case.init.alpha, case.kappa, t)? - n).abs());
    }
    out.push(Deviation {
        case: case.label.clone(),
        observable: "photon_number",
        max_deviation: worst,
        tolerance: settings.tolerance,
    });

    let frame = oracle_expect_a(
        &case.init,
        &profile,
        case.kappa,
        &taus,
        settings.n_mech_frame,
        settings.leak_tol,
    )?;
    let mut worst = 0.0f64;
    for (&t, a) in taus.iter().zip(&frame) {
        worst = worst.max((expect_a(&case.init, &sys, t, &quad)? - a).norm());
    }
    out.push(Deviation {
        case: case.label.clone(),
        observable: "expect_a",
        max_deviation: worst,
        tolerance: settings.tolerance,
    });

    if case.init.mech == Mechanics::Coherent(Complex64::new(0.0, 0.0)) {
        let alpha = case.init.alpha;
        let analytic = cat_fidelity(
            alpha,
            case.g0,
            case.kappa,
            &FidelityTruncation::for_alpha(alpha),
        )?;
        let oracle = oracle_cat_fidelity(
            alpha,
            case.g0,
            case.kappa,
            settings.n_mech_fidelity,
            settings.leak_tol,
        )?;
        out.push(Deviation {
            case: case.label.clone(),
            observable: "cat_fidelity",
            max_deviation: (analytic - oracle).abs(),
            tolerance: settings.tolerance,
        });
    }
    Ok(out)
}

/// Lossy coherent, lossy thermal and lossless cases at unit amplitude.
pub fn default_suite() -> Vec<CompareCase> {
    let one = Complex64::new(1.0, 0.0);
    let zero = Complex64::new(0.0, 0.0);
    vec![
        CompareCase::new(InitialState::coherent(one, zero), 1.0, 0.0),
        CompareCase::new(InitialState::coherent(one, zero), 1.0, 0.5),
        CompareCase::new(InitialState::coherent(one, zero), 0.5, 0.1),
        CompareCase::new(
            InitialState::coherent(one, Complex64::new(0.5, -0.3)),
            0.5,
            0.2,
        ),
        CompareCase::new(InitialState::thermal(one, 2.0), 0.5, 0.1),
    ]
}

/// Runs every case on the current rayon pool; rows keep the case order.
pub fn run_suite(cases: &[CompareCase], settings: &OracleSettings) -> Result<Vec<Deviation>> {
    let per_case: Vec<Vec<Deviation>> = cases
        .par_iter()
        .map(|c| compare_case(c, settings))
        .collect::<Result<_>>()?;
    Ok(per_case.into_iter().flatten().collect())
}

/// `case,observable,max_deviation,tolerance,pass` rows.
pub fn report_csv(rows: &[Deviation]) -> String {
    let mut out = String::from("case,observable,max_deviation,tolerance,pass\n");
    for r in rows {
        let _ = writeln!(
            out,
            "\"{}\",{},{},{},{}",
            r.case,
            r.observable,
            fmt_f64(r.max_deviation),
            fmt_f64(r.tolerance),
            r.passed()
        );
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn trivial_case_has_no_deviation() {
        let case = CompareCase::new(
            InitialState::coherent(Complex64::new(0.7, 0.0), Complex64::new(0.0, 0.0)),
            0.0,
            0.0,
        );
        let settings = OracleSettings {
            n_mech_lab: 3,
            n_mech_frame: 4,
            n_mech_fidelity: 4,
            samples: 4,
            ..OracleSettings::default()
        };
        let rows = compare_case(&case, &settings).unwrap();
        assert_eq!(rows.len(), 3);
        for r in &rows {
            assert!(r.max_deviation < 1e-10, "{r:?}");
        }
        assert!(report_csv(&rows).lines().count() == 4);
    }
}
