//! Master-equation integration in a co-moving displaced frame.
//!
//! Writing the photon-number block (n, n') of ρ as
//! `D(c_n) e^{-iN_bτ} e^{-iφ_n} σ_{nn'} e^{iφ_{n'}} e^{iN_bτ} D(c_{n'})†`, with
//! `c_n` the classical mechanical amplitude driven by `n` photons and `φ_n` the
//! accumulated energy shift, removes the coherent part of the dynamics
//! exactly. What is left is the photon-loss feed
//!
//! ```text
//! dσ̃_{n,n'}/dτ = κ √((n+1)(n'+1)) e^{-κτ} e^{-2i(n'-n)Φ₂(τ)} D(δ) σ̃_{n+1,n'+1} D(δ)†
//! ```
//!
//! (σ̃ = σ e^{κ(n+n')τ/2}, δ = u e^{iτ}), a triangular chain along each
//! diagonal n' − n = d. Starting from the top of each chain, every block is a
//! plain quadrature over the trajectory of the block above it; the quadrature
//! is panel-wise Gauss–Legendre collocation.
//!
//! The classical quantities u, Φ₁, Φ₂ are integrated numerically from the
//! coupling profile. Mechanical states stay close to the frame origin, so a
//! small truncation suffices even when the lab-frame excursion is large.

use ndarray::Array2;
use num_complex::Complex64;
use rayon::prelude::*;

use super::density::{DensityMatrix, FockDims};
use super::linalg::{dagger, CMat};
use super::operators::{displacement, thermal_state_with_tol, DEFAULT_LEAK_TOL};
use crate::error::{ensure_non_negative, Error, Result};
use crate::kernels::CouplingProfile;
use crate::observables::Mechanics;
use crate::quad::gauss_legendre_cumulative;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FrameConfig {
    /// Gauss–Legendre nodes per panel.
    pub order: usize,
    /// Panel width times the fastest phase rate of a chain.
    pub resolution: f64,
    pub leak_tol: f64,
    /// Only coherences with |n − n'| up to this are computed (the rest are left zero).
    pub max_offset: Option<usize>,
}

impl Default for FrameConfig {
    fn default() -> Self {
        Self {
            order: 12,
            resolution: 4.0,
            leak_tol: DEFAULT_LEAK_TOL,
            max_offset: None,
        }
    }
}

impl FrameConfig {
    pub fn validate(&self) -> Result<()> {
        if self.order < 2 || self.order > 40 {
            return Err(Error::Domain(format!(
                "order must be in 2..=40, got {}",
                self.order
            )));
        }
        if !(self.resolution > 0.0 && self.resolution.is_finite()) {
            return Err(Error::Domain("resolution must be positive".into()));
        }
        if !(self.leak_tol > 0.0) {
            return Err(Error::Domain("leak_tol must be positive".into()));
        }
        Ok(())
    }
}

/// Reduced cavity states at the requested times.
#[derive(Debug, Clone)]
pub struct CavityTrajectory {
    pub dims: FockDims,
    pub taus: Vec<f64>,
    pub states: Vec<DensityMatrix>,
    /// Largest population lost through the mechanical cutoff.
    pub lost_population: f64,
    /// Largest population on the top two mechanical levels of the frame.
    pub edge_population: f64,
}

impl CavityTrajectory {
    pub fn photon_number(&self, i: usize) -> f64 {
        let rho = &self.states[i].data;
        (0..rho.nrows()).map(|n| n as f64 * rho[[n, n]].re).sum()
    }

    /// ⟨a⟩ = Σ √(n+1) ρ_{n+1,n}.
    pub fn expect_a(&self, i: usize) -> Complex64 {
        let rho = &self.states[i].data;
        (0..rho.nrows() - 1)
            .map(|n| ((n + 1) as f64).sqrt() * rho[[n + 1, n]])
            .sum()
    }
}

#[derive(Debug, Clone, Copy)]
struct ClassicalPoint {
    u: Complex64,
    phi1: f64,
    phi2: f64,
}

/// u' = −iu + ig, Φ₁' = g Re(β e^{−iτ}), Φ₂' = g Re u, all from zero at τ = 0.
fn classical_path(
    profile: &CouplingProfile,
    beta: Complex64,
    times: &[f64],
) -> Vec<ClassicalPoint> {
    const MAX_STEP: f64 = 2e-3;
    let i = Complex64::i();
    let f = |t: f64, p: &ClassicalPoint| {
        let g = profile.eval(t);
        ClassicalPoint {
            u: -i * p.u + i * g,
            phi1: g * (beta * Complex64::from_polar(1.0, -t)).re,
            phi2: g * p.u.re,
        }
    };
    let axpy = |p: &ClassicalPoint, h: f64, k: &ClassicalPoint| ClassicalPoint {
        u: p.u + h * k.u,
        phi1: p.phi1 + h * k.phi1,
        phi2: p.phi2 + h * k.phi2,
    };
    let mut p = ClassicalPoint {
        u: Complex64::new(0.0, 0.0),
        phi1: 0.0,
        phi2: 0.0,
    };
    let mut t = 0.0;
    let mut out = Vec::with_capacity(times.len());
    for &target in times {
        let steps = ((target - t) / MAX_STEP).ceil().max(0.0) as usize;
        if steps > 0 {
            let h = (target - t) / steps as f64;
            for s in 0..steps {
                let ts = t + s as f64 * h;
                let k1 = f(ts, &p);
                let k2 = f(ts + 0.5 * h, &axpy(&p, 0.5 * h, &k1));
                let k3 = f(ts + 0.5 * h, &axpy(&p, 0.5 * h, &k2));
                let k4 = f(ts + h, &axpy(&p, h, &k3));
                p = ClassicalPoint {
                    u: p.u + h / 6.0 * (k1.u + 2.0 * k2.u + 2.0 * k3.u + k4.u),
                    phi1: p.phi1 + h / 6.0 * (k1.phi1 + 2.0 * k2.phi1 + 2.0 * k3.phi1 + k4.phi1),
                    phi2: p.phi2 + h / 6.0 * (k1.phi2 + 2.0 * k2.phi2 + 2.0 * k3.phi2 + k4.phi2),
                };
            }
        }
        t = target;
        out.push(p);
    }
    out
}

struct Panel {
    lo: f64,
    hi: f64,
    /// Index into the output list when this panel ends on a requested time.
    output: Option<usize>,
}

fn panels_for(taus: &[f64], width: f64) -> Vec<Panel> {
    let mut panels = Vec::new();
    let mut t = 0.0;
    for (k, &target) in taus.iter().enumerate() {
        if target <= t {
            continue;
        }
        let count = ((target - t) / width).ceil().max(1.0) as usize;
        let h = (target - t) / count as f64;
        for p in 0..count {
            let lo = t + p as f64 * h;
            let hi = if p + 1 == count { target } else { lo + h };
            panels.push(Panel {
                lo,
                hi,
                output: (p + 1 == count).then_some(k),
            });
        }
        t = target;
    }
    panels
}

/// What one diagonal chain contributes at each output time.
struct ChainOutput {
    /// `elements[k][n]` is ρ_c[n, n + d] at output k.
    elements: Vec<Vec<Complex64>>,
    /// Diagonal chain only: (trace, edge population) per output.
    diagnostics: Vec<(f64, f64)>,
}

struct Setup<'a> {
    profile: &'a CouplingProfile,
    kappa: f64,
    beta: Complex64,
    n_cav: usize,
    m: usize,
    rho_c0: &'a Array2<Complex64>,
    sigma0: CMat,
    taus: &'a [f64],
    out_path: Vec<ClassicalPoint>,
    g_max: f64,
    cfg: FrameConfig,
    gl: (Vec<f64>, Vec<f64>, Vec<Vec<f64>>),
}

impl Setup<'_> {
    fn chain(&self, d: usize) -> ChainOutput {
        let n_cav = self.n_cav;
        let m = self.m;
        let levels = n_cav - d;
        let nt = self.taus.len();
        let mut elements = vec![vec![Complex64::new(0.0, 0.0); levels]; nt];
        let mut diagnostics = vec![(0.0, 0.0); if d == 0 { nt } else { 0 }];

        let rate = 1.0 + 2.0 * self.g_max + 4.0 * self.g_max * self.g_max * d as f64 + self.kappa;
        let panels = panels_for(self.taus, self.cfg.resolution / rate);
        let (x, w, s) = &self.gl;
        let order = x.len();
        let node_times: Vec<f64> = panels
            .iter()
            .flat_map(|p| {
                x.iter()
                    .map(move |xi| p.lo + 0.5 * (p.hi - p.lo) * (xi + 1.0))
            })
            .collect();
        let path = classical_path(self.profile, self.beta, &node_times);
        let dd = d as f64;
        let disp: Vec<(CMat, CMat, Complex64)> = node_times
            .iter()
            .zip(&path)
            .map(|(&t, p)| {
                let dm = displacement(p.u * Complex64::from_polar(1.0, t), m, m);
                let dag = dagger(&dm);
                let coef = Complex64::from_polar((-self.kappa * t).exp(), -2.0 * dd * p.phi2);
                (dm, dag, coef)
            })
            .collect();
        let out_disp: Vec<CMat> = self
            .taus
            .iter()
            .zip(&self.out_path)
            .map(|(&t, p)| displacement(-dd * p.u * Complex64::from_polar(1.0, t), m, m))
            .collect();

        let record = |n: usize,
                      k: usize,
                      s_val: &CMat,
                      elements: &mut Vec<Vec<Complex64>>,
                      diagnostics: &mut Vec<(f64, f64)>| {
            let t = self.taus[k];
            let p = &self.out_path[k];
            let np = n + d;
            let mut tr = Complex64::new(0.0, 0.0);
            let y = &out_disp[k];
            for a in 0..m {
                for b in 0..m {
                    tr += y[[b, a]] * s_val[[a, b]];
                }
            }
            let im_term = (self.beta.conj() * Complex64::from_polar(1.0, t) * p.u).im;
            let phase = -dd * p.phi1 - dd * (2 * n + d) as f64 * p.phi2 - dd * im_term;
            let decay = (-0.5 * self.kappa * (n + np) as f64 * t).exp();
            elements[k][n] = tr * Complex64::from_polar(decay, phase);
            if d == 0 {
                let edge: f64 = (m.saturating_sub(2)..m).map(|j| s_val[[j, j]].re).sum();
                let e = &mut diagnostics[k];
                e.0 += decay * tr.re;
                e.1 += decay * edge;
            }
        };

        let initial = |n: usize| self.sigma0.mapv(|z| z * self.rho_c0[[n, n + d]]);
        let record_start = |n: usize,
                            s0: &CMat,
                            elements: &mut Vec<Vec<Complex64>>,
                            diagnostics: &mut Vec<(f64, f64)>| {
            for (k, &t) in self.taus.iter().enumerate() {
                if t == 0.0 {
                    record(n, k, s0, elements, diagnostics);
                }
            }
        };

        // top of the chain: nothing feeds it, so it is constant
        let top = levels - 1;
        let s_top = initial(top);
        record_start(top, &s_top, &mut elements, &mut diagnostics);
        for p in &panels {
            if let Some(k) = p.output {
                record(top, k, &s_top, &mut elements, &mut diagnostics);
            }
        }
        if levels == 1 || self.kappa == 0.0 {
            for n in (0..top).rev() {
                let s0 = initial(n);
                record_start(n, &s0, &mut elements, &mut diagnostics);
                for p in &panels {
                    if let Some(k) = p.output {
                        record(n, k, &s0, &mut elements, &mut diagnostics);
                    }
                }
            }
            return ChainOutput {
                elements,
                diagnostics,
            };
        }

        let mut prev: Vec<CMat> = vec![s_top; node_times.len()];
        for n in (0..top).rev() {
            let gain = self.kappa * (((n + 1) * (n + d + 1)) as f64).sqrt();
            let s0 = initial(n);
            record_start(n, &s0, &mut elements, &mut diagnostics);
            let mut cur: Vec<CMat> = Vec::with_capacity(node_times.len());
            let mut start = s0;
            for (pi, p) in panels.iter().enumerate() {
                let base = pi * order;
                let f: Vec<CMat> = (0..order)
                    .map(|j| {
                        let (dm, dag, coef) = &disp[base + j];
                        let c = *coef * gain;
                        dm.dot(&prev[base + j]).dot(dag).mapv(|z| z * c)
                    })
                    .collect();
                let half = 0.5 * (p.hi - p.lo);
                for row in s.iter().take(order) {
                    let mut v = start.clone();
                    for (k, fk) in f.iter().enumerate() {
                        v.scaled_add(Complex64::new(half * row[k], 0.0), fk);
                    }
                    cur.push(v);
                }
                for (k, fk) in f.iter().enumerate() {
                    start.scaled_add(Complex64::new(half * w[k], 0.0), fk);
                }
                if let Some(k) = p.output {
                    record(n, k, &start, &mut elements, &mut diagnostics);
                }
            }
            prev = cur;
        }
        ChainOutput {
            elements,
            diagnostics,
        }
    }
}

/// Evolves ρ_c0 ⊗ (mechanics) under constant or time-dependent coupling and
/// photon loss, returning the reduced cavity state at each of `taus`.
///
/// `dims.n_mech` is the mechanical cutoff in the co-moving frame.
pub fn evolve_cavity(
    rho_c0: &DensityMatrix,
    mech: Mechanics,
    profile: &CouplingProfile,
    kappa: f64,
    taus: &[f64],
    dims: FockDims,
    cfg: &FrameConfig,
) -> Result<CavityTrajectory> {
    ensure_non_negative("kappa", kappa)?;
    cfg.validate()?;
    if rho_c0.side() != dims.n_cav {
        return Err(Error::Domain(format!(
            "cavity state has side {}, dims need {}",
            rho_c0.side(),
            dims.n_cav
        )));
    }
    for &t in taus {
        ensure_non_negative("tau", t)?;
    }
    if taus.windows(2).any(|w| w[1] <= w[0]) {
        return Err(Error::Domain("taus must be strictly increasing".into()));
    }
    let tau_end = taus.last().copied().unwrap_or(0.0);
    profile.check_window(tau_end)?;

    let n_cav = dims.n_cav;
    let cav_edge: f64 = (n_cav.saturating_sub(2)..n_cav)
        .map(|n| rho_c0.data[[n, n]].re)
        .sum();
    if cav_edge >= cfg.leak_tol {
        return Err(Error::Leakage {
            mode: "cavity",
            leak: cav_edge,
            limit: cfg.leak_tol,
            suggested: n_cav + n_cav / 2 + 2,
        });
    }

    let m = dims.n_mech;
    let (beta, sigma0) = match mech {
        Mechanics::Coherent(beta) => {
            let mut s = Array2::zeros((m, m));
            s[[0, 0]] = Complex64::new(1.0, 0.0);
            (beta, s)
        }
        Mechanics::Thermal(nbar) => (
            Complex64::new(0.0, 0.0),
            thermal_state_with_tol(nbar, m, cfg.leak_tol)?.data,
        ),
    };
    let g_max = match profile.as_constant() {
        Some(g) => g.abs(),
        None => (0..=1024)
            .map(|k| profile.eval(tau_end * k as f64 / 1024.0).abs())
            .fold(0.0, f64::max),
    };
    let setup = Setup {
        profile,
        kappa,
        beta,
        n_cav,
        m,
        rho_c0: &rho_c0.data,
        sigma0,
        taus,
        out_path: classical_path(profile, beta, taus),
        g_max,
        cfg: *cfg,
        gl: gauss_legendre_cumulative(cfg.order),
    };
    let d_max = cfg.max_offset.unwrap_or(n_cav - 1).min(n_cav - 1);
    let chains: Vec<ChainOutput> = (0..=d_max)
        .into_par_iter()
        .map(|d| setup.chain(d))
        .collect();

    let mut states = Vec::with_capacity(taus.len());
    let mut lost = 0.0f64;
    let mut edge = 0.0f64;
    let initial_trace = rho_c0.trace().re * setup.sigma0.diag().sum().re;
    for k in 0..taus.len() {
        let mut rho = Array2::zeros((n_cav, n_cav));
        for (d, chain) in chains.iter().enumerate() {
            for (n, &v) in chain.elements[k].iter().enumerate() {
                rho[[n, n + d]] = v;
                if d > 0 {
                    rho[[n + d, n]] = v.conj();
                }
            }
        }
        let (trace, e) = chains[0].diagnostics[k];
        lost = lost.max(initial_trace - trace);
        edge = edge.max(e);
        states.push(DensityMatrix::from_parts(FockDims::single(n_cav), rho));
    }
    if lost >= cfg.leak_tol || edge >= cfg.leak_tol {
        return Err(Error::Leakage {
            mode: "mechanics (co-moving frame)",
            leak: lost.max(edge),
            limit: cfg.leak_tol,
            suggested: m + m / 2 + 4,
        });
    }
    Ok(CavityTrajectory {
        dims,
        taus: taus.to_vec(),
        states,
        lost_population: lost,
        edge_population: edge,
    })
}
