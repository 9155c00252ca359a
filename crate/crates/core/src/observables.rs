//! Closed-form observables of the lossy optomechanical cavity.
//!
//! Everything here is reported in the frame co-rotating with the free cavity
//! evolution; a lab-frame ⟨a⟩ picks up an extra `e^{-i ω_c t}`.

use std::f64::consts::PI;
use std::fmt::Write as _;

use num_complex::Complex64;

use crate::error::{ensure_finite, ensure_non_negative, Error, Result};
use crate::kernels::{interference_b, CouplingProfile, KernelEval};
use crate::quad::{composite_gauss_legendre, integrate, QuadConfig};

/// Physical parameters, in units of the mechanical frequency.
#[derive(Debug, Clone)]
pub struct SystemParams {
    pub g_profile: CouplingProfile,
    /// κ̃ = κ/ω_m.
    pub kappa: f64,
    /// ω_c/ω_m. Only the rotating frame is used, so this is carried but not consumed.
    pub omega_ratio: f64,
}

impl SystemParams {
    pub fn constant(g0: f64, kappa: f64) -> Self {
        Self {
            g_profile: CouplingProfile::Constant(g0),
            kappa,
            omega_ratio: 0.0,
        }
    }

    pub fn validate(&self) -> Result<()> {
        ensure_non_negative("kappa", self.kappa)?;
        ensure_non_negative("omega_ratio", self.omega_ratio)?;
        if let Some(g) = self.g_profile.as_constant() {
            ensure_finite("g0", g)?;
        }
        Ok(())
    }
}

/// Initial mechanical state.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Mechanics {
    Coherent(Complex64),
    Thermal(f64),
}

/// Product initial state |α⟩ ⊗ (mechanics).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct InitialState {
    pub alpha: Complex64,
    pub mech: Mechanics,
}

impl InitialState {
    pub fn coherent(alpha: Complex64, beta: Complex64) -> Self {
        Self {
            alpha,
            mech: Mechanics::Coherent(beta),
        }
    }

    pub fn thermal(alpha: Complex64, nbar: f64) -> Self {
        Self {
            alpha,
            mech: Mechanics::Thermal(nbar),
        }
    }

    pub fn validate(&self) -> Result<()> {
        ensure_finite("Re alpha", self.alpha.re)?;
        ensure_finite("Im alpha", self.alpha.im)?;
        match self.mech {
            Mechanics::Coherent(b) => {
                ensure_finite("Re beta", b.re)?;
                ensure_finite("Im beta", b.im)
            }
            Mechanics::Thermal(n) => ensure_non_negative("nbar", n),
        }
    }
}

/// Time series of one observable plus the parameters that produced it.
#[derive(Debug, Clone)]
pub struct ObservableTrace {
    pub name: String,
    pub taus: Vec<f64>,
    pub values: Vec<Complex64>,
    pub params: TraceParams,
}

/// Snapshot of the parameters behind a trace.
#[derive(Debug, Clone, PartialEq)]
pub struct TraceParams {
    pub profile: String,
    pub kappa: f64,
    pub init: InitialState,
}

impl TraceParams {
    pub fn new(sys: &SystemParams, init: &InitialState) -> Self {
        Self {
            profile: format!("{:?}", sys.g_profile),
            kappa: sys.kappa,
            init: *init,
        }
    }
}

/// Fixed, locale-free float formatting with 17 significant digits.
pub fn fmt_f64(x: f64) -> String {
    format!("{x:.16e}")
}

impl ObservableTrace {
    pub fn new(
        name: impl Into<String>,
        taus: Vec<f64>,
        values: Vec<Complex64>,
        params: TraceParams,
    ) -> Result<Self> {
        if taus.len() != values.len() {
            return Err(Error::Domain(
                "trace: taus and values differ in length".into(),
            ));
        }
        check_increasing(&taus)?;
        Ok(Self {
            name: name.into(),
            taus,
            values,
            params,
        })
    }

    /// `tau,re,im` CSV.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("tau,re,im\n");
        for (t, v) in self.taus.iter().zip(&self.values) {
            let _ = writeln!(out, "{},{},{}", fmt_f64(*t), fmt_f64(v.re), fmt_f64(v.im));
        }
        out
    }

    /// `tau,re,im,X,P` CSV for a ⟨a⟩ trace.
    pub fn to_quadrature_csv(&self) -> String {
        let mut out = String::from("tau,re,im,X,P\n");
        for (t, v) in self.taus.iter().zip(&self.values) {
            let _ = writeln!(
                out,
                "{},{},{},{},{}",
                fmt_f64(*t),
                fmt_f64(v.re),
                fmt_f64(v.im),
                fmt_f64(2f64.sqrt() * v.re),
                fmt_f64(2f64.sqrt() * v.im)
            );
        }
        out
    }
}

fn check_increasing(taus: &[f64]) -> Result<()> {
    for &t in taus {
        ensure_non_negative("tau", t)?;
    }
    if taus.windows(2).any(|w| w[1] <= w[0]) {
        return Err(Error::Domain("taus must be strictly increasing".into()));
    }
    Ok(())
}

/// Fock cutoff and quadrature settings for the fidelity double sum.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FidelityTruncation {
    pub n_max: usize,
    pub quad: QuadConfig,
}

/// Tail bound for the fidelity double sum.
pub const POISSON_TAIL_LIMIT: f64 = 1e-12;

impl FidelityTruncation {
    /// Smallest cutoff whose Poisson tail is below [`POISSON_TAIL_LIMIT`].
    pub fn for_alpha(alpha: Complex64) -> Self {
        Self {
            n_max: required_cutoff(alpha.norm_sqr(), POISSON_TAIL_LIMIT),
            quad: QuadConfig::default(),
        }
    }

    pub fn check(&self, alpha: Complex64) -> Result<()> {
        self.quad.validate()?;
        let tail = poisson_tail(alpha.norm_sqr(), self.n_max);
        if tail >= POISSON_TAIL_LIMIT {
            return Err(Error::Truncation {
                n_max: self.n_max,
                tail,
                required: required_cutoff(alpha.norm_sqr(), POISSON_TAIL_LIMIT),
            });
        }
        Ok(())
    }
}

/// Poisson weights e^{-λ} λ^n / n! for n = 0..=n_max.
pub(crate) fn poisson_weights(lambda: f64, n_max: usize) -> Vec<f64> {
    let mut w = Vec::with_capacity(n_max + 1);
    let mut log_w = -lambda;
    w.push(log_w.exp());
    for n in 1..=n_max {
        log_w += lambda.max(f64::MIN_POSITIVE).ln() - (n as f64).ln();
        w.push(if lambda == 0.0 { 0.0 } else { log_w.exp() });
    }
    w
}

/// Σ_{n > n_max} e^{-λ} λ^n / n!.
pub fn poisson_tail(lambda: f64, n_max: usize) -> f64 {
    if lambda == 0.0 {
        return 0.0;
    }
    // sum the tail directly; the terms decay super-geometrically past λ
    let mut log_w = -lambda;
    for n in 1..=n_max + 1 {
        log_w += lambda.ln() - (n as f64).ln();
    }
    let mut tail = 0.0;
    let mut n = n_max + 1;
    loop {
        let term = log_w.exp();
        tail += term;
        n += 1;
        log_w += lambda.ln() - (n as f64).ln();
        if n as f64 > lambda && term < tail * 1e-17 {
            break;
        }
        if n > n_max + 100_000 {
            break;
        }
    }
    // the first-term underflow case for tiny tails
    tail.max(0.0)
}

pub fn required_cutoff(lambda: f64, limit: f64) -> usize {
    let mut n = lambda.ceil() as usize;
    while poisson_tail(lambda, n) >= limit {
        n += 1;
    }
    n
}

/// ⟨N_a(τ)⟩ = |α|² e^{-κτ}.
pub fn photon_number(alpha: Complex64, kappa: f64, tau: f64) -> Result<f64> {
    ensure_non_negative("kappa", kappa)?;
    ensure_non_negative("tau", tau)?;
    Ok(alpha.norm_sqr() * (-kappa * tau).exp())
}

/// The loss integral ∫₀^τ e^{-κτ'} e^{-2iA(τ')} e^{iB(τ',τ)} dτ'.
fn loss_integral(
    kernels: &KernelEval,
    kappa: f64,
    tau: f64,
    quad: &QuadConfig,
) -> Result<Complex64> {
    let g_tau = kernels.at(tau).displacement_g();
    let r = integrate(
        |t: f64| {
            let fc = kernels.at(t);
            let phase = -2.0 * fc.phase_a() + interference_b(g_tau, fc.displacement_g());
            Complex64::from_polar((-kappa * t).exp(), phase)
        },
        0.0,
        tau,
        quad,
    )?;
    Ok(r.value)
}

fn expect_a_with(
    init: &InitialState,
    sys: &SystemParams,
    kernels: &KernelEval,
    tau: f64,
    quad: &QuadConfig,
) -> Result<Complex64> {
    let alpha = init.alpha;
    let n0 = alpha.norm_sqr();
    let kappa = sys.kappa;
    let fc = kernels.at(tau);
    let a = fc.phase_a();
    let g = fc.displacement_g();
    let i = Complex64::i();

    let mut exponent =
        n0 * ((-2.0 * i * a).exp() * (-kappa * tau).exp() - 1.0) - i * a - 0.5 * kappa * tau;
    exponent += match init.mech {
        Mechanics::Coherent(beta) => -0.5 * g.norm_sqr() + (g * beta.conj() - g.conj() * beta),
        Mechanics::Thermal(nbar) => Complex64::from(-0.5 * g.norm_sqr() * (1.0 + 2.0 * nbar)),
    };
    if kappa > 0.0 && n0 > 0.0 && tau > 0.0 {
        exponent += kappa * n0 * loss_integral(kernels, kappa, tau, quad)?;
    }
    Ok(alpha * exponent.exp())
}

/// ⟨a(τ)⟩ for a coherent (or thermal) mechanical initial state.
pub fn expect_a(
    init: &InitialState,
    sys: &SystemParams,
    tau: f64,
    quad: &QuadConfig,
) -> Result<Complex64> {
    init.validate()?;
    sys.validate()?;
    ensure_non_negative("tau", tau)?;
    let kernels = KernelEval::new(&sys.g_profile, tau, quad)?;
    expect_a_with(init, sys, &kernels, tau, quad)
}

/// ⟨a(τ)⟩ with the mechanics initially thermal at mean occupation `nbar`.
pub fn expect_a_thermal(
    alpha: Complex64,
    nbar: f64,
    sys: &SystemParams,
    tau: f64,
    quad: &QuadConfig,
) -> Result<Complex64> {
    expect_a(&InitialState::thermal(alpha, nbar), sys, tau, quad)
}

/// ⟨a⟩ sampled on `taus`, returned as the (X, P) = √2 (Re, Im) traces.
pub fn quadrature_trace(
    init: &InitialState,
    sys: &SystemParams,
    taus: &[f64],
    quad: &QuadConfig,
) -> Result<(ObservableTrace, ObservableTrace)> {
    let a = expect_a_trace(init, sys, taus, quad)?;
    let x = a
        .values
        .iter()
        .map(|v| Complex64::from(2f64.sqrt() * v.re))
        .collect();
    let p = a
        .values
        .iter()
        .map(|v| Complex64::from(2f64.sqrt() * v.im))
        .collect();
    Ok((
        ObservableTrace::new("X", a.taus.clone(), x, a.params.clone())?,
        ObservableTrace::new("P", a.taus, p, a.params)?,
    ))
}

/// ⟨a⟩ sampled on `taus`.
pub fn expect_a_trace(
    init: &InitialState,
    sys: &SystemParams,
    taus: &[f64],
    quad: &QuadConfig,
) -> Result<ObservableTrace> {
    init.validate()?;
    sys.validate()?;
    check_increasing(taus)?;
    let tau_max = taus.last().copied().unwrap_or(0.0);
    let kernels = KernelEval::new(&sys.g_profile, tau_max, quad)?;
    let values = taus
        .iter()
        .map(|&t| expect_a_with(init, sys, &kernels, t, quad))
        .collect::<Result<Vec<_>>>()?;
    ObservableTrace::new("a", taus.to_vec(), values, TraceParams::new(sys, init))
}

/// Upper bound on |⟨a(τ)⟩|² obtained by replacing the cosine in the loss integral by one.
pub fn quadrature_decay_bound(alpha: Complex64, sys: &SystemParams, tau: f64) -> Result<f64> {
    sys.validate()?;
    ensure_non_negative("tau", tau)?;
    let kernels = KernelEval::new(&sys.g_profile, tau, &QuadConfig::default())?;
    let fc = kernels.at(tau);
    let n0 = alpha.norm_sqr();
    let decay = (-sys.kappa * tau).exp();
    let exponent = 2.0 * n0 * (2.0 * fc.phase_a()).cos() * decay
        - fc.displacement_g().norm_sqr()
        - sys.kappa * tau
        - 2.0 * n0 * decay;
    Ok(n0 * exponent.exp())
}

/// Fidelity of the loss-degraded state at τ = 2π with the ideal cat, by the
/// truncated double Fock sum. The per-(n, n') integral depends only on n - n'.
pub fn cat_fidelity(alpha: Complex64, g0: f64, kappa: f64, ft: &FidelityTruncation) -> Result<f64> {
    ensure_finite("g0", g0)?;
    ensure_non_negative("kappa", kappa)?;
    ft.check(alpha)?;
    let n0 = alpha.norm_sqr();
    let n_max = ft.n_max;
    let w = poisson_weights(n0, n_max);

    // J_k = ∫₀^{2π} e^{-κτ} e^{-2i k A(τ)} dτ, k ≥ 0; J_{-k} = conj(J_k)
    let mut jk = Vec::with_capacity(n_max + 1);
    for k in 0..=n_max {
        let j = if kappa == 0.0 {
            Complex64::from(0.0)
        } else {
            integrate(
                |t: f64| {
                    let a = crate::kernels::constant_unchecked(g0, t).phase_a();
                    Complex64::from_polar((-kappa * t).exp(), -2.0 * k as f64 * a)
                },
                0.0,
                2.0 * PI,
                &ft.quad,
            )?
            .value
        };
        jk.push((kappa * n0 * j).exp());
    }

    // renormalize the truncated state so that κ = 0 gives exactly 1
    let kept: f64 = w.iter().sum();
    let damp: Vec<f64> = (0..=n_max)
        .map(|n| w[n] / kept * (-kappa * PI * n as f64).exp())
        .collect();
    let mut total = Complex64::from(0.0);
    for n in 0..=n_max {
        for m in 0..=n_max {
            let factor = if n >= m { jk[n - m] } else { jk[m - n].conj() };
            total += damp[n] * damp[m] * factor;
        }
    }
    if total.im.abs() >= 1e-10 {
        return Err(Error::Invariant(format!(
            "fidelity has imaginary residue {:.3e}",
            total.im
        )));
    }
    Ok(total.re.clamp(0.0, 1.0))
}

/// Fidelity from the loss-order expansion, truncated after `order_q` nested integrals
/// (each evaluated by a tensor-product Gauss–Legendre rule over [0, 2π]^q).
pub fn cat_fidelity_series(
    alpha: Complex64,
    g0: f64,
    kappa: f64,
    order_q: usize,
    quad: &QuadConfig,
) -> Result<f64> {
    ensure_finite("g0", g0)?;
    ensure_non_negative("kappa", kappa)?;
    quad.validate()?;
    if order_q > 3 {
        return Err(Error::Domain(format!(
            "series order {order_q} > 3 is not supported"
        )));
    }
    let n0 = alpha.norm_sqr();
    let damp = (-PI * kappa).exp();
    let prefactor = (-2.0 * n0 * (1.0 - damp)).exp();
    let strength = 4.0 * n0 * damp;
    if kappa == 0.0 {
        return Ok(prefactor);
    }

    let mut total = 1.0;
    let mut coeff = 1.0;
    for q in 1..=order_q {
        coeff *= kappa * n0 / q as f64;
        total += coeff * series_term(q, g0, kappa, strength, quad)?;
    }
    Ok(prefactor * total)
}

/// ∫_{[0,2π]^q} e^{-κ Σ τ_p} e^{-s sin²(Σ A(τ_p))}, refined by panel doubling.
fn series_term(q: usize, g0: f64, kappa: f64, strength: f64, quad: &QuadConfig) -> Result<f64> {
    let eval = |panels: usize| {
        let (nodes, weights) = composite_gauss_legendre(0.0, 2.0 * PI, panels, 8);
        let a: Vec<f64> = nodes
            .iter()
            .map(|&t| crate::kernels::constant_unchecked(g0, t).phase_a())
            .collect();
        let d: Vec<f64> = nodes
            .iter()
            .zip(&weights)
            .map(|(&t, &w)| w * (-kappa * t).exp())
            .collect();
        let f = |s: f64| (-strength * s.sin().powi(2)).exp();
        let m = nodes.len();
        match q {
            1 => (0..m).map(|i| d[i] * f(a[i])).sum::<f64>(),
            2 => (0..m)
                .map(|i| d[i] * (0..m).map(|j| d[j] * f(a[i] + a[j])).sum::<f64>())
                .sum(),
            _ => (0..m)
                .map(|i| {
                    d[i] * (0..m)
                        .map(|j| d[j] * (0..m).map(|k| d[k] * f(a[i] + a[j] + a[k])).sum::<f64>())
                        .sum::<f64>()
                })
                .sum(),
        }
    };
    let max_panels = match q {
        1 => 1024,
        2 => 128,
        _ => 32,
    };
    let mut panels = 4;
    let mut prev = eval(panels);
    loop {
        panels *= 2;
        let next = eval(panels);
        let diff = (next - prev).abs();
        let tol = quad.abs_tol.max(quad.rel_tol * next.abs());
        if diff <= tol {
            return Ok(next);
        }
        if panels >= max_panels {
            return Err(Error::Convergence {
                what: "fidelity series integral",
                estimate: diff,
                tolerance: tol,
            });
        }
        prev = next;
    }
}

/// Coupling-independent lower and upper bounds on the cat fidelity.
pub fn fidelity_bounds(alpha: Complex64, kappa: f64) -> Result<(f64, f64)> {
    ensure_non_negative("kappa", kappa)?;
    let n0 = alpha.norm_sqr();
    let e = (-PI * kappa).exp();
    // 2 e^{-2n} sinh(2 n e) written without overflow
    let sinh_part = (-2.0 * n0 + 2.0 * n0 * e).exp() - (-2.0 * n0 - 2.0 * n0 * e).exp();
    let lower = sinh_part + (-n0 * (1.0 + e).powi(2)).exp();
    let upper = (-n0 * (1.0 - e).powi(2)).exp();
    Ok((lower, upper))
}
