//! Lab-frame master-equation integration on the full truncated density matrix.

use num_complex::Complex64;

use super::density::{DensityMatrix, FockDims};
use super::operators::DEFAULT_LEAK_TOL;
use crate::error::{ensure_non_negative, Error, Result};
use crate::kernels::CouplingProfile;

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Method {
    FixedRk4 {
        dt: f64,
    },
    /// RK4 with step doubling.
    AdaptiveRk {
        rtol: f64,
        atol: f64,
    },
    /// Fixed RK4 from a spectral-radius heuristic, halved until the photon
    /// number settles to 1e-8.
    Auto,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EvolveConfig {
    pub method: Method,
    pub leak_tol: f64,
    /// Optional free optical frequency ω_c/ω_m added as ω N_a.
    pub omega: f64,
}

impl Default for EvolveConfig {
    fn default() -> Self {
        Self {
            method: Method::Auto,
            leak_tol: DEFAULT_LEAK_TOL,
            omega: 0.0,
        }
    }
}

impl EvolveConfig {
    pub fn validate(&self) -> Result<()> {
        match self.method {
            Method::FixedRk4 { dt } if !(dt > 0.0 && dt.is_finite()) => {
                return Err(Error::Domain(format!("dt must be positive, got {dt}")))
            }
            Method::AdaptiveRk { rtol, atol } if !(rtol > 0.0 && atol > 0.0) => {
                return Err(Error::Domain("adaptive tolerances must be positive".into()))
            }
            _ => {}
        }
        if !(self.leak_tol > 0.0) {
            return Err(Error::Domain("leak_tol must be positive".into()));
        }
        Ok(())
    }
}

struct Rhs {
    dims: FockDims,
    kappa: f64,
    omega: f64,
    sqrt: Vec<f64>,
    // per column j = (c', m'): −κc'/2 + i(m' + ωc'), and the ladder factors √m', √(m'+1), √(c'+1)
    col_diag: Vec<Complex64>,
    col_left: Vec<f64>,
    col_right: Vec<f64>,
    col_jump: Vec<f64>,
}

impl Rhs {
    fn new(dims: FockDims, kappa: f64, omega: f64) -> Self {
        let FockDims { n_cav, n_mech } = dims;
        let top = n_cav.max(n_mech) + 1;
        let sqrt: Vec<f64> = (0..=top).map(|k| (k as f64).sqrt()).collect();
        let n = dims.side();
        let (mut col_diag, mut col_left, mut col_right, mut col_jump) =
            (vec![], vec![], vec![], vec![]);
        for j in 0..n {
            let (cp, mp) = (j / n_mech, j % n_mech);
            col_diag.push(Complex64::new(
                -0.5 * kappa * cp as f64,
                mp as f64 + omega * cp as f64,
            ));
            col_left.push(cp as f64 * sqrt[mp]);
            col_right.push(if mp + 1 < n_mech {
                cp as f64 * sqrt[mp + 1]
            } else {
                0.0
            });
            col_jump.push(sqrt[cp + 1]);
        }
        Self {
            dims,
            kappa,
            omega,
            sqrt,
            col_diag,
            col_left,
            col_right,
            col_jump,
        }
    }

    /// out = L(g) ρ using the tridiagonal mechanical structure of H.
    fn apply(&self, g: f64, rho: &[Complex64], out: &mut [Complex64]) {
        let FockDims { n_cav, n_mech } = self.dims;
        let n = n_cav * n_mech;
        let sq = &self.sqrt;
        let i_unit = Complex64::i();
        for i in 0..n {
            let (c, m) = (i / n_mech, i % n_mech);
            let row = &rho[i * n..(i + 1) * n];
            let o = &mut out[i * n..(i + 1) * n];
            // −κc/2 − i(m + ωc) on the row index, the column part is in col_diag
            let row_diag = Complex64::new(
                -0.5 * self.kappa * c as f64,
                -(m as f64 + self.omega * c as f64),
            );
            for ((oj, r), cd) in o.iter_mut().zip(row).zip(&self.col_diag) {
                *oj = (row_diag + cd) * r;
            }
            let gi = g * c as f64;
            if gi != 0.0 {
                if m > 0 {
                    let w = i_unit * (gi * sq[m]);
                    for (oj, u) in o.iter_mut().zip(&rho[(i - 1) * n..i * n]) {
                        *oj += w * u;
                    }
                }
                if m + 1 < n_mech {
                    let w = i_unit * (gi * sq[m + 1]);
                    for (oj, d) in o.iter_mut().zip(&rho[(i + 1) * n..(i + 2) * n]) {
                        *oj += w * d;
                    }
                }
            }
            if g != 0.0 {
                let w = -i_unit * g;
                for j in 1..n {
                    o[j] += w * (self.col_left[j] * row[j - 1]);
                }
                for j in 0..n - 1 {
                    o[j] += w * (self.col_right[j] * row[j + 1]);
                }
            }
            if self.kappa > 0.0 && c + 1 < n_cav {
                let w = self.kappa * sq[c + 1];
                let jr = &rho[(i + n_mech) * n + n_mech..(i + n_mech + 1) * n];
                for ((oj, r), cj) in o.iter_mut().zip(jr).zip(&self.col_jump) {
                    *oj += (w * cj) * r;
                }
            }
        }
    }
}

struct Stepper {
    k: [Vec<Complex64>; 4],
    tmp: Vec<Complex64>,
}

impl Stepper {
    fn new(len: usize) -> Self {
        let z = vec![Complex64::new(0.0, 0.0); len];
        Self {
            k: [z.clone(), z.clone(), z.clone(), z.clone()],
            tmp: z,
        }
    }

    fn rk4(
        &mut self,
        rhs: &Rhs,
        profile: &CouplingProfile,
        t: f64,
        h: f64,
        y: &[Complex64],
        out: &mut [Complex64],
    ) {
        let g0 = profile.eval(t);
        let gm = profile.eval(t + 0.5 * h);
        let g1 = profile.eval(t + h);
        let [k1, k2, k3, k4] = &mut self.k;
        rhs.apply(g0, y, k1);
        for (t, (a, b)) in self.tmp.iter_mut().zip(y.iter().zip(k1.iter())) {
            *t = a + 0.5 * h * b;
        }
        rhs.apply(gm, &self.tmp, k2);
        for (t, (a, b)) in self.tmp.iter_mut().zip(y.iter().zip(k2.iter())) {
            *t = a + 0.5 * h * b;
        }
        rhs.apply(gm, &self.tmp, k3);
        for (t, (a, b)) in self.tmp.iter_mut().zip(y.iter().zip(k3.iter())) {
            *t = a + h * b;
        }
        rhs.apply(g1, &self.tmp, k4);
        for i in 0..y.len() {
            out[i] = y[i] + h / 6.0 * (k1[i] + 2.0 * k2[i] + 2.0 * k3[i] + k4[i]);
        }
    }
}

fn hermitize_flat(y: &mut [Complex64], n: usize) {
    for i in 0..n {
        y[i * n + i].im = 0.0;
        for j in i + 1..n {
            let avg = 0.5 * (y[i * n + j] + y[j * n + i].conj());
            y[i * n + j] = avg;
            y[j * n + i] = avg.conj();
        }
    }
}

fn photon_number_flat(y: &[Complex64], dims: FockDims) -> f64 {
    let n = dims.side();
    (0..n)
        .map(|i| (i / dims.n_mech) as f64 * y[i * n + i].re)
        .sum()
}

fn max_coupling(profile: &CouplingProfile, tau_end: f64) -> f64 {
    if let Some(g) = profile.as_constant() {
        return g.abs();
    }
    (0..=512)
        .map(|k| profile.eval(tau_end * k as f64 / 512.0).abs())
        .fold(0.0, f64::max)
}

fn run_fixed(
    rho0: &DensityMatrix,
    profile: &CouplingProfile,
    rhs: &Rhs,
    taus: &[f64],
    dt: f64,
) -> Result<Vec<DensityMatrix>> {
    let n = rho0.side();
    let mut y: Vec<Complex64> = rho0.data.iter().copied().collect();
    let mut next = y.clone();
    let mut stepper = Stepper::new(y.len());
    let mut t = 0.0;
    let mut steps = 0usize;
    let mut out = Vec::with_capacity(taus.len());
    for &target in taus {
        let count = ((target - t) / dt).ceil().max(0.0) as usize;
        if count > 0 {
            let h = (target - t) / count as f64;
            for s in 0..count {
                stepper.rk4(rhs, profile, t + s as f64 * h, h, &y, &mut next);
                std::mem::swap(&mut y, &mut next);
                steps += 1;
                if steps.is_multiple_of(100) {
                    hermitize_flat(&mut y, n);
                }
            }
        }
        t = target;
        out.push(to_density(&y, rho0.dims));
    }
    Ok(out)
}

fn run_adaptive(
    rho0: &DensityMatrix,
    profile: &CouplingProfile,
    rhs: &Rhs,
    taus: &[f64],
    rtol: f64,
    atol: f64,
    h0: f64,
) -> Result<Vec<DensityMatrix>> {
    let n = rho0.side();
    let len = n * n;
    let mut y: Vec<Complex64> = rho0.data.iter().copied().collect();
    let mut full = vec![Complex64::new(0.0, 0.0); len];
    let mut half = full.clone();
    let mut two = full.clone();
    let mut stepper = Stepper::new(len);
    let mut t = 0.0;
    let mut h = h0;
    let mut steps = 0usize;
    let mut out = Vec::with_capacity(taus.len());
    for &target in taus {
        while t < target {
            let hh = h.min(target - t);
            if hh < 1e-12 * (1.0 + t) {
                return Err(Error::StepUnderflow { tau: t });
            }
            stepper.rk4(rhs, profile, t, hh, &y, &mut full);
            stepper.rk4(rhs, profile, t, 0.5 * hh, &y, &mut half);
            stepper.rk4(rhs, profile, t + 0.5 * hh, 0.5 * hh, &half, &mut two);
            let scale = y.iter().map(|z| z.norm()).fold(0.0, f64::max);
            let err = two
                .iter()
                .zip(&full)
                .map(|(a, b)| (a - b).norm())
                .fold(0.0, f64::max)
                / 15.0;
            let tol = atol + rtol * scale;
            if err <= tol {
                t += hh;
                for (yi, (a, b)) in y.iter_mut().zip(two.iter().zip(&full)) {
                    *yi = a + (a - b) / 15.0;
                }
                steps += 1;
                if steps.is_multiple_of(100) {
                    hermitize_flat(&mut y, n);
                }
            }
            let factor = if err == 0.0 {
                4.0
            } else {
                (0.9 * (tol / err).powf(0.2)).clamp(0.1, 4.0)
            };
            h = hh * factor;
        }
        out.push(to_density(&y, rho0.dims));
    }
    Ok(out)
}

fn to_density(y: &[Complex64], dims: FockDims) -> DensityMatrix {
    let n = dims.side();
    let data =
        ndarray::Array2::from_shape_vec((n, n), y.to_vec()).expect("flat state matches dims");
    DensityMatrix::from_parts(dims, data)
}

/// ρ at each of the strictly increasing times `taus`.
pub fn evolve_trajectory(
    rho0: &DensityMatrix,
    profile: &CouplingProfile,
    kappa: f64,
    taus: &[f64],
    cfg: &EvolveConfig,
) -> Result<Vec<DensityMatrix>> {
    ensure_non_negative("kappa", kappa)?;
    cfg.validate()?;
    if rho0.dims.n_mech < 2 {
        return Err(Error::Domain("evolve needs a two-mode state".into()));
    }
    for &t in taus {
        ensure_non_negative("tau", t)?;
    }
    if taus.windows(2).any(|w| w[1] <= w[0]) {
        return Err(Error::Domain("taus must be strictly increasing".into()));
    }
    let tau_end = taus.last().copied().unwrap_or(0.0);
    profile.check_window(tau_end)?;
    let trace0 = rho0.trace();
    let rhs = Rhs::new(rho0.dims, kappa, cfg.omega);
    let dims = rho0.dims;
    let heuristic = || {
        let g = max_coupling(profile, tau_end);
        0.1 / (g * dims.n_cav as f64
            + kappa * dims.n_cav as f64
            + dims.n_mech as f64
            + cfg.omega.abs() * dims.n_cav as f64)
    };

    let states = match cfg.method {
        Method::FixedRk4 { dt } => run_fixed(rho0, profile, &rhs, taus, dt)?,
        Method::AdaptiveRk { rtol, atol } => {
            run_adaptive(rho0, profile, &rhs, taus, rtol, atol, heuristic())?
        }
        Method::Auto => {
            let mut dt = heuristic();
            let mut prev = run_fixed(rho0, profile, &rhs, taus, dt)?;
            let mut halvings = 0;
            loop {
                dt *= 0.5;
                let next = run_fixed(rho0, profile, &rhs, taus, dt)?;
                let diff = prev
                    .iter()
                    .zip(&next)
                    .map(|(a, b)| {
                        let fa: Vec<Complex64> = a.data.iter().copied().collect();
                        let fb: Vec<Complex64> = b.data.iter().copied().collect();
                        (photon_number_flat(&fa, dims) - photon_number_flat(&fb, dims)).abs()
                    })
                    .fold(0.0, f64::max);
                if diff < 1e-8 {
                    break next;
                }
                halvings += 1;
                if halvings >= 6 {
                    return Err(Error::Convergence {
                        what: "RK4 step halving",
                        estimate: diff,
                        tolerance: 1e-8,
                    });
                }
                prev = next;
            }
        }
    };

    for rho in &states {
        let drift = (rho.trace() - trace0).norm();
        if drift >= 1e-8 {
            return Err(Error::Invariant(format!("trace drifted by {drift:.3e}")));
        }
        let (cav, mech) = rho.edge_populations();
        if cav >= cfg.leak_tol {
            return Err(Error::Leakage {
                mode: "cavity",
                leak: cav,
                limit: cfg.leak_tol,
                suggested: dims.n_cav + dims.n_cav / 2 + 2,
            });
        }
        if mech >= cfg.leak_tol {
            return Err(Error::Leakage {
                mode: "mechanics",
                leak: mech,
                limit: cfg.leak_tol,
                suggested: dims.n_mech + dims.n_mech / 2 + 2,
            });
        }
    }
    Ok(states)
}

/// ρ(τ_end) by explicit Runge–Kutta integration of the master equation.
pub fn evolve(
    rho0: &DensityMatrix,
    profile: &CouplingProfile,
    kappa: f64,
    tau_end: f64,
    cfg: &EvolveConfig,
) -> Result<DensityMatrix> {
    ensure_non_negative("tau_end", tau_end)?;
    if tau_end == 0.0 {
        return Ok(rho0.clone());
    }
    Ok(evolve_trajectory(rho0, profile, kappa, &[tau_end], cfg)?
        .pop()
        .expect("one output per requested time"))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fock::linalg::max_abs;
    use crate::fock::lindblad::lindblad_rhs;
    use crate::fock::operators::hamiltonian_with;
    use ndarray::Array2;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn structured_rhs_matches_dense() {
        let dims = FockDims::new(4, 5).unwrap();
        let n = dims.side();
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let m = Array2::from_shape_fn((n, n), |_| {
            Complex64::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0))
        });
        let rho = DensityMatrix::from_parts(dims, m.dot(&crate::fock::linalg::dagger(&m)));
        let (g, omega, kappa) = (0.37, 1.3, 0.21);
        let dense = lindblad_rhs(&rho, &hamiltonian_with(g, omega, dims), kappa).unwrap();
        let rhs = Rhs::new(dims, kappa, omega);
        let flat: Vec<Complex64> = rho.data.iter().copied().collect();
        let mut out = vec![Complex64::new(0.0, 0.0); flat.len()];
        rhs.apply(g, &flat, &mut out);
        let got = Array2::from_shape_vec((n, n), out).unwrap();
        assert!(max_abs(&(&got - &dense.data)) < 1e-12);
    }

    #[test]
    fn zero_time_is_identity() {
        let dims = FockDims::new(3, 3).unwrap();
        let mut d = Array2::zeros((9, 9));
        d[[0, 0]] = Complex64::new(1.0, 0.0);
        let rho = DensityMatrix::from_parts(dims, d);
        let out = evolve(
            &rho,
            &CouplingProfile::Constant(1.0),
            0.5,
            0.0,
            &EvolveConfig::default(),
        )
        .unwrap();
        assert_eq!(out, rho);
    }

    #[test]
    fn config_validation() {
        let mut cfg = EvolveConfig {
            method: Method::FixedRk4 { dt: 0.0 },
            ..EvolveConfig::default()
        };
        assert!(cfg.validate().is_err());
        cfg.method = Method::AdaptiveRk {
            rtol: -1.0,
            atol: 1e-9,
        };
        assert!(cfg.validate().is_err());
    }
}
