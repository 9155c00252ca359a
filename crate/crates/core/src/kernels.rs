//! Time kernels of the factored optomechanical propagator.
//!
//! For a coupling g(τ) the propagator in the frame co-rotating with the cavity is
//! `U(τ) = e^{-i N_b τ} e^{-i F_a N_a²} e^{-i F_+ N_a B_+} e^{-i F_- N_a B_-}` with
//!
//! ```text
//! F_+(τ) = -∫₀^τ g(t) cos t dt
//! F_-(τ) = -∫₀^τ g(t) sin t dt
//! F_a(τ) = -2 ∫₀^τ g(t) sin t ∫₀^t g(s) cos s ds dt
//! ```
//!
//! which for constant coupling reduces to `F_a = g²(sin 2τ - 2τ)/2`,
//! `F_+ = -g sin τ`, `F_- = g(cos τ - 1)`.

use std::fmt;
use std::path::Path;
use std::sync::Arc;

use num_complex::Complex64;

use crate::error::{ensure_finite, ensure_non_negative, Error, Result};
use crate::quad::{integrate_with_breaks, QuadConfig};

/// Shape-preserving (PCHIP) cubic through tabulated samples.
#[derive(Debug, Clone)]
pub struct MonotoneCubic {
    xs: Vec<f64>,
    ys: Vec<f64>,
    slopes: Vec<f64>,
}

impl MonotoneCubic {
    pub fn new(xs: Vec<f64>, ys: Vec<f64>) -> Result<Self> {
        if xs.len() != ys.len() {
            return Err(Error::Domain(
                "tabulated profile: column lengths differ".into(),
            ));
        }
        if xs.len() < 2 {
            return Err(Error::Domain(
                "tabulated profile needs at least two samples".into(),
            ));
        }
        for (&x, &y) in xs.iter().zip(&ys) {
            ensure_finite("tabulated tau", x)?;
            ensure_finite("tabulated g", y)?;
        }
        if xs.windows(2).any(|w| w[1] <= w[0]) {
            return Err(Error::Domain(
                "tabulated tau must be strictly increasing".into(),
            ));
        }
        let slopes = pchip_slopes(&xs, &ys);
        Ok(Self { xs, ys, slopes })
    }

    pub fn domain(&self) -> (f64, f64) {
        (self.xs[0], *self.xs.last().unwrap())
    }

    pub fn knots(&self) -> &[f64] {
        &self.xs
    }

    pub fn eval(&self, x: f64) -> f64 {
        let n = self.xs.len();
        let k = match self.xs.partition_point(|&t| t <= x) {
            0 => 0,
            i if i >= n => n - 2,
            i => i - 1,
        };
        let h = self.xs[k + 1] - self.xs[k];
        let t = (x - self.xs[k]) / h;
        hermite(
            t,
            h,
            self.ys[k],
            self.ys[k + 1],
            self.slopes[k],
            self.slopes[k + 1],
        )
    }
}

fn pchip_slopes(x: &[f64], y: &[f64]) -> Vec<f64> {
    let n = x.len();
    let h: Vec<f64> = x.windows(2).map(|w| w[1] - w[0]).collect();
    let delta: Vec<f64> = (0..n - 1).map(|k| (y[k + 1] - y[k]) / h[k]).collect();
    if n == 2 {
        return vec![delta[0]; 2];
    }
    let mut d = vec![0.0; n];
    for k in 1..n - 1 {
        if delta[k - 1] * delta[k] > 0.0 {
            let w1 = 2.0 * h[k] + h[k - 1];
            let w2 = h[k] + 2.0 * h[k - 1];
            d[k] = (w1 + w2) / (w1 / delta[k - 1] + w2 / delta[k]);
        }
    }
    let end = |h0: f64, h1: f64, d0: f64, d1: f64| {
        let s = ((2.0 * h0 + h1) * d0 - h0 * d1) / (h0 + h1);
        if s.signum() != d0.signum() {
            0.0
        } else if d0.signum() != d1.signum() && s.abs() > 3.0 * d0.abs() {
            3.0 * d0
        } else {
            s
        }
    };
    d[0] = end(h[0], h[1], delta[0], delta[1]);
    d[n - 1] = end(h[n - 2], h[n - 3], delta[n - 2], delta[n - 3]);
    d
}

/// Cubic Hermite on a panel of width `h`, local coordinate `t ∈ [0, 1]`.
fn hermite(t: f64, h: f64, y0: f64, y1: f64, d0: f64, d1: f64) -> f64 {
    let t2 = t * t;
    let t3 = t2 * t;
    (2.0 * t3 - 3.0 * t2 + 1.0) * y0
        + (t3 - 2.0 * t2 + t) * h * d0
        + (-2.0 * t3 + 3.0 * t2) * y1
        + (t3 - t2) * h * d1
}

/// Light–matter coupling g̃(τ) in units of the mechanical frequency.
#[derive(Clone)]
pub enum CouplingProfile {
    Constant(f64),
    Tabulated(MonotoneCubic),
    Callback(Arc<dyn Fn(f64) -> f64 + Send + Sync>),
}

impl fmt::Debug for CouplingProfile {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Self::Constant(g) => write!(f, "Constant({g})"),
            Self::Tabulated(t) => {
                write!(f, "Tabulated({} samples on {:?})", t.xs.len(), t.domain())
            }
            Self::Callback(_) => write!(f, "Callback(..)"),
        }
    }
}

impl CouplingProfile {
    pub fn tabulated(taus: Vec<f64>, gs: Vec<f64>) -> Result<Self> {
        MonotoneCubic::new(taus, gs).map(Self::Tabulated)
    }

    pub fn callback(f: impl Fn(f64) -> f64 + Send + Sync + 'static) -> Self {
        Self::Callback(Arc::new(f))
    }

    /// Reads a two-column `tau,g` CSV.
    pub fn from_csv(path: impl AsRef<Path>) -> Result<Self> {
        let mut reader = csv::ReaderBuilder::new()
            .trim(csv::Trim::All)
            .from_path(path)?;
        let headers = reader.headers()?.clone();
        if headers.len() != 2 || &headers[0] != "tau" || &headers[1] != "g" {
            return Err(Error::Parse(format!(
                "expected header `tau,g`, found `{}`",
                headers.iter().collect::<Vec<_>>().join(",")
            )));
        }
        let mut taus = Vec::new();
        let mut gs = Vec::new();
        for (line, record) in reader.records().enumerate() {
            let record = record?;
            let parse = |i: usize| {
                record[i]
                    .parse::<f64>()
                    .map_err(|e| Error::Parse(format!("row {}: {e}", line + 2)))
            };
            taus.push(parse(0)?);
            gs.push(parse(1)?);
        }
        Self::tabulated(taus, gs)
    }

    pub fn eval(&self, tau: f64) -> f64 {
        match self {
            Self::Constant(g) => *g,
            Self::Tabulated(t) => t.eval(tau),
            Self::Callback(f) => f(tau),
        }
    }

    pub fn as_constant(&self) -> Option<f64> {
        match self {
            Self::Constant(g) => Some(*g),
            _ => None,
        }
    }

    /// Interior points where the profile's smoothness may drop.
    pub fn breakpoints(&self) -> &[f64] {
        match self {
            Self::Tabulated(t) => t.knots(),
            _ => &[],
        }
    }

    /// Checks that the profile is defined and finite on `[0, tau]`.
    pub fn check_window(&self, tau: f64) -> Result<()> {
        match self {
            Self::Constant(g) => ensure_finite("g0", *g),
            Self::Tabulated(t) => {
                let (lo, hi) = t.domain();
                if lo > 0.0 || hi < tau {
                    return Err(Error::Domain(format!(
                        "tabulated profile covers [{lo}, {hi}] but [0, {tau}] is required"
                    )));
                }
                Ok(())
            }
            Self::Callback(f) => {
                // spot-check; the callback contract is a pure finite function
                for k in 0..=16 {
                    let t = tau * k as f64 / 16.0;
                    ensure_finite("g(tau)", f(t))?;
                }
                Ok(())
            }
        }
    }
}

/// The three propagator kernels at one time.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FCoeffs {
    pub tau: f64,
    pub f_a: f64,
    pub f_plus: f64,
    pub f_minus: f64,
}

impl FCoeffs {
    pub fn zero() -> Self {
        Self {
            tau: 0.0,
            f_a: 0.0,
            f_plus: 0.0,
            f_minus: 0.0,
        }
    }

    /// A(τ) = F_a + F_+ F_-.
    pub fn phase_a(&self) -> f64 {
        phase_a(self)
    }

    /// G(τ) = F_- - i F_+.
    pub fn displacement_g(&self) -> Complex64 {
        displacement_g(self)
    }
}

/// Closed-form kernels for constant coupling.
pub fn f_coeffs_constant(g0: f64, tau: f64) -> Result<FCoeffs> {
    ensure_finite("g0", g0)?;
    ensure_non_negative("tau", tau)?;
    Ok(constant_unchecked(g0, tau))
}

#[inline]
pub(crate) fn constant_unchecked(g0: f64, tau: f64) -> FCoeffs {
    let (s, c) = tau.sin_cos();
    FCoeffs {
        tau,
        f_a: 0.5 * g0 * g0 * ((2.0 * tau).sin() - 2.0 * tau),
        f_plus: -g0 * s,
        f_minus: g0 * (c - 1.0),
    }
}

pub fn phase_a(fc: &FCoeffs) -> f64 {
    fc.f_a + fc.f_plus * fc.f_minus
}

pub fn displacement_g(fc: &FCoeffs) -> Complex64 {
    Complex64::new(fc.f_minus, -fc.f_plus)
}

/// B(τ', τ) = 2 Im[G(τ) G*(τ')].
pub fn interference_b(g_tau: Complex64, g_tauprime: Complex64) -> f64 {
    2.0 * (g_tau * g_tauprime.conj()).im
}

/// Kernels for an arbitrary profile by numerical quadrature.
///
/// `F_±` come from adaptive quadrature; the nested `F_a` integral uses a cumulative
/// table of the inner integral (Hermite-interpolated with exact derivatives) that is
/// refined until the outer result stops moving.
pub fn f_coeffs_general(profile: &CouplingProfile, tau: f64, cfg: &QuadConfig) -> Result<FCoeffs> {
    ensure_non_negative("tau", tau)?;
    cfg.validate()?;
    profile.check_window(tau)?;
    if tau == 0.0 {
        return Ok(FCoeffs::zero());
    }
    let breaks = profile.breakpoints();
    let f_plus =
        -integrate_with_breaks(|t| profile.eval(t) * t.cos(), 0.0, tau, breaks, cfg)?.value;
    let f_minus =
        -integrate_with_breaks(|t| profile.eval(t) * t.sin(), 0.0, tau, breaks, cfg)?.value;

    let mut panels = 32usize;
    let mut previous: Option<f64> = None;
    loop {
        let inner =
            CumulativeTable::build(|t| profile.eval(t) * t.cos(), tau, panels, breaks, cfg)?;
        let mut outer_breaks = inner.nodes.clone();
        outer_breaks.extend_from_slice(breaks);
        let f_a = -2.0
            * integrate_with_breaks(
                |t| profile.eval(t) * t.sin() * inner.eval(t),
                0.0,
                tau,
                &outer_breaks,
                cfg,
            )?
            .value;
        if let Some(prev) = previous {
            let diff = (f_a - prev).abs();
            if diff <= cfg.abs_tol.max(cfg.rel_tol * f_a.abs()) {
                return Ok(FCoeffs {
                    tau,
                    f_a,
                    f_plus,
                    f_minus,
                });
            }
            if panels * 2 > cfg.max_subdivisions {
                return Err(Error::Convergence {
                    what: "nested F_a integral",
                    estimate: diff,
                    tolerance: cfg.abs_tol.max(cfg.rel_tol * f_a.abs()),
                });
            }
        }
        previous = Some(f_a);
        panels *= 2;
    }
}

/// Running integral `∫₀^t f` tabulated on a uniform grid and Hermite-interpolated.
struct CumulativeTable<F> {
    f: F,
    nodes: Vec<f64>,
    values: Vec<f64>,
}

impl<F: Fn(f64) -> f64> CumulativeTable<F> {
    fn build(f: F, tau: f64, panels: usize, breaks: &[f64], cfg: &QuadConfig) -> Result<Self> {
        let h = tau / panels as f64;
        let nodes: Vec<f64> = (0..=panels).map(|k| k as f64 * h).collect();
        let panel_cfg = QuadConfig {
            abs_tol: cfg.abs_tol / panels as f64,
            ..*cfg
        };
        let mut values = Vec::with_capacity(panels + 1);
        values.push(0.0);
        let mut acc = 0.0;
        for w in nodes.windows(2) {
            acc += integrate_with_breaks(&f, w[0], w[1], breaks, &panel_cfg)?.value;
            values.push(acc);
        }
        Ok(Self { f, nodes, values })
    }

    fn eval(&self, t: f64) -> f64 {
        let n = self.nodes.len();
        let h = self.nodes[1] - self.nodes[0];
        let k = ((t / h).floor() as usize).min(n - 2);
        let (t0, t1) = (self.nodes[k], self.nodes[k + 1]);
        hermite(
            (t - t0) / h,
            h,
            self.values[k],
            self.values[k + 1],
            (self.f)(t0),
            (self.f)(t1),
        )
    }
}

/// Kernel evaluator over a time window, shared by the analytic observables.
///
/// Constant coupling uses the closed form; other profiles are tabulated once on a
/// refined grid with cumulative integrals of `g cos`, `g sin` and `g sin C`.
#[derive(Debug, Clone)]
pub enum KernelEval {
    Constant(f64),
    Table(KernelTable),
}

#[derive(Debug, Clone)]
pub struct KernelTable {
    h: f64,
    profile: CouplingProfile,
    // per node: C = ∫g cos, S = ∫g sin, K = ∫ g sin C  (so F_a = -2K)
    c: Vec<f64>,
    s: Vec<f64>,
    k: Vec<f64>,
}

impl KernelEval {
    pub fn new(profile: &CouplingProfile, tau_max: f64, cfg: &QuadConfig) -> Result<Self> {
        ensure_non_negative("tau", tau_max)?;
        profile.check_window(tau_max)?;
        match profile {
            CouplingProfile::Constant(g) => Ok(Self::Constant(*g)),
            _ => KernelTable::build(profile, tau_max, cfg).map(Self::Table),
        }
    }

    pub fn at(&self, tau: f64) -> FCoeffs {
        match self {
            Self::Constant(g) => constant_unchecked(*g, tau),
            Self::Table(t) => t.at(tau),
        }
    }
}

impl KernelTable {
    fn build(profile: &CouplingProfile, tau_max: f64, cfg: &QuadConfig) -> Result<Self> {
        let mut panels = 64usize;
        let mut previous: Option<Self> = None;
        loop {
            let table = Self::build_with(profile, tau_max.max(1e-12), panels, cfg)?;
            if let Some(prev) = &previous {
                // compare at the coarse nodes
                let mut diff: f64 = 0.0;
                for i in 0..prev.c.len() {
                    let j = 2 * i;
                    diff = diff
                        .max((prev.c[i] - table.c[j]).abs())
                        .max((prev.s[i] - table.s[j]).abs())
                        .max(2.0 * (prev.k[i] - table.k[j]).abs());
                }
                let tol = cfg.abs_tol.max(cfg.rel_tol * table.k.last().unwrap().abs());
                if diff <= tol {
                    return Ok(table);
                }
                if panels * 2 > cfg.max_subdivisions {
                    return Err(Error::Convergence {
                        what: "kernel table",
                        estimate: diff,
                        tolerance: tol,
                    });
                }
            }
            previous = Some(table);
            panels *= 2;
        }
    }

    fn build_with(
        profile: &CouplingProfile,
        tau_max: f64,
        panels: usize,
        cfg: &QuadConfig,
    ) -> Result<Self> {
        let h = tau_max / panels as f64;
        let breaks = profile.breakpoints();
        let panel_cfg = QuadConfig {
            abs_tol: cfg.abs_tol / panels as f64,
            ..*cfg
        };
        let g = |t: f64| profile.eval(t);
        let mut c = vec![0.0];
        let mut s = vec![0.0];
        let mut k = vec![0.0];
        for p in 0..panels {
            let (a, b) = (p as f64 * h, (p + 1) as f64 * h);
            let dc = integrate_with_breaks(|t| g(t) * t.cos(), a, b, breaks, &panel_cfg)?.value;
            let ds = integrate_with_breaks(|t| g(t) * t.sin(), a, b, breaks, &panel_cfg)?.value;
            let (c0, d0, d1) = (c[p], g(a) * a.cos(), g(b) * b.cos());
            let inner = |t: f64| hermite((t - a) / h, h, c0, c0 + dc, d0, d1);
            let dk =
                integrate_with_breaks(|t| g(t) * t.sin() * inner(t), a, b, breaks, &panel_cfg)?
                    .value;
            c.push(c0 + dc);
            s.push(s[p] + ds);
            k.push(k[p] + dk);
        }
        Ok(Self {
            h,
            profile: profile.clone(),
            c,
            s,
            k,
        })
    }

    pub fn at(&self, tau: f64) -> FCoeffs {
        let n = self.c.len();
        let i = ((tau / self.h).floor().max(0.0) as usize).min(n - 2);
        let (a, b) = (i as f64 * self.h, (i + 1) as f64 * self.h);
        let t = (tau - a) / self.h;
        let (ga, gb) = (self.profile.eval(a), self.profile.eval(b));
        let c = hermite(
            t,
            self.h,
            self.c[i],
            self.c[i + 1],
            ga * a.cos(),
            gb * b.cos(),
        );
        let s = hermite(
            t,
            self.h,
            self.s[i],
            self.s[i + 1],
            ga * a.sin(),
            gb * b.sin(),
        );
        let k = hermite(
            t,
            self.h,
            self.k[i],
            self.k[i + 1],
            ga * a.sin() * self.c[i],
            gb * b.sin() * self.c[i + 1],
        );
        FCoeffs {
            tau,
            f_a: -2.0 * k,
            f_plus: -c,
            f_minus: -s,
        }
    }
}
