use ndarray::{Array1, Array2};
use num_complex::Complex64;

use super::density::{DensityMatrix, FockDims};
use super::linalg::CMat;
use crate::error::{ensure_finite, ensure_non_negative, Error, Result};
use crate::observables::poisson_tail;

/// Default bound on the population of the top two Fock levels.
pub const DEFAULT_LEAK_TOL: f64 = 1e-8;

/// Truncated annihilation operator, `a|k⟩ = √k |k−1⟩`.
pub fn annihilation(n: usize) -> Array2<f64> {
    let mut a = Array2::zeros((n, n));
    for k in 1..n {
        a[[k - 1, k]] = (k as f64).sqrt();
    }
    a
}

pub fn number(n: usize) -> Array2<f64> {
    Array2::from_diag(&Array1::from_iter((0..n).map(|k| k as f64)))
}

/// Poisson weight on levels `k >= k0`.
fn poisson_weight_from(lambda: f64, k0: usize) -> f64 {
    if lambda == 0.0 {
        0.0
    } else if k0 == 0 {
        1.0
    } else {
        poisson_tail(lambda, k0 - 1)
    }
}

/// Smallest cutoff whose top two levels carry less than `tol` of |amp⟩.
pub fn required_coherent_levels(amp: Complex64, tol: f64) -> usize {
    let lambda = amp.norm_sqr();
    let mut n = 2;
    while poisson_weight_from(lambda, n - 2) >= tol {
        n += 1;
    }
    n
}

pub fn coherent_state(amp: Complex64, n: usize) -> Result<Array1<Complex64>> {
    coherent_state_with_tol(amp, n, DEFAULT_LEAK_TOL)
}

/// Fock expansion of |amp⟩ truncated to `n` levels and renormalized.
pub fn coherent_state_with_tol(
    amp: Complex64,
    n: usize,
    leak_tol: f64,
) -> Result<Array1<Complex64>> {
    ensure_finite("Re amp", amp.re)?;
    ensure_finite("Im amp", amp.im)?;
    if n == 0 {
        return Err(Error::Domain("cutoff must be positive".into()));
    }
    let leak = poisson_weight_from(amp.norm_sqr(), n.saturating_sub(2));
    if leak >= leak_tol {
        return Err(Error::Leakage {
            mode: "coherent state",
            leak,
            limit: leak_tol,
            suggested: required_coherent_levels(amp, leak_tol),
        });
    }
    let mut psi = Array1::zeros(n);
    psi[0] = Complex64::new((-0.5 * amp.norm_sqr()).exp(), 0.0);
    for k in 1..n {
        psi[k] = psi[k - 1] * amp / (k as f64).sqrt();
    }
    let norm = psi
        .iter()
        .map(|z: &Complex64| z.norm_sqr())
        .sum::<f64>()
        .sqrt();
    Ok(psi.mapv(|z| z / norm))
}

pub fn thermal_state(nbar: f64, n: usize) -> Result<DensityMatrix> {
    thermal_state_with_tol(nbar, n, DEFAULT_LEAK_TOL)
}

/// Single-mode thermal state with weights (n̄/(1+n̄))^m/(1+n̄), renormalized.
pub fn thermal_state_with_tol(nbar: f64, n: usize, leak_tol: f64) -> Result<DensityMatrix> {
    ensure_non_negative("nbar", nbar)?;
    if n == 0 {
        return Err(Error::Domain("cutoff must be positive".into()));
    }
    let q = nbar / (1.0 + nbar);
    let leak = if n >= 2 { q.powi(n as i32 - 2) } else { 1.0 };
    if nbar > 0.0 && leak >= leak_tol {
        let suggested = 2 + (leak_tol.ln() / q.ln()).ceil() as usize;
        return Err(Error::Leakage {
            mode: "thermal state",
            leak,
            limit: leak_tol,
            suggested,
        });
    }
    let weights: Vec<f64> = (0..n).map(|m| q.powi(m as i32)).collect();
    let total: f64 = weights.iter().sum();
    let data = Array2::from_shape_fn((n, n), |(i, j)| {
        if i == j {
            Complex64::new(weights[i] / total, 0.0)
        } else {
            Complex64::new(0.0, 0.0)
        }
    });
    Ok(DensityMatrix::from_parts(FockDims::single(n), data))
}

/// N_b − g N_a (b + b†) + ω N_a in the truncated product basis.
pub(crate) fn hamiltonian_with(g: f64, omega: f64, dims: FockDims) -> CMat {
    let FockDims { n_cav, n_mech } = dims;
    let n = dims.side();
    let mut h = Array2::zeros((n, n));
    for c in 0..n_cav {
        for m in 0..n_mech {
            let i = dims.index(c, m);
            h[[i, i]] = Complex64::new(m as f64 + omega * c as f64, 0.0);
            if m + 1 < n_mech {
                let v = Complex64::new(-g * c as f64 * ((m + 1) as f64).sqrt(), 0.0);
                h[[i, i + 1]] = v;
                h[[i + 1, i]] = v;
            }
        }
    }
    h
}

/// Rotating-frame Hamiltonian N_b − g₀ N_a (b + b†).
pub fn build_hamiltonian(g0: f64, dims: FockDims) -> CMat {
    hamiltonian_with(g0, 0.0, dims)
}

/// Exact matrix elements ⟨k|D(x)|l⟩ of the untruncated displacement operator
/// for `k < rows`, `l < cols`.
///
/// Uses ⟨k|D(x)|l⟩ = √(l!/k!) x^{k−l} e^{−|x|²/2} L_l^{(k−l)}(|x|²) for k ≥ l (and the
/// mirrored form for k < l), with each diagonal's Laguerre polynomials generated
/// by forward recurrence and the prefactor kept in log form.
pub fn displacement(x: Complex64, rows: usize, cols: usize) -> CMat {
    let mut d = Array2::zeros((rows, cols));
    let r = x.norm();
    if r == 0.0 {
        for k in 0..rows.min(cols) {
            d[[k, k]] = Complex64::new(1.0, 0.0);
        }
        return d;
    }
    let y = r * r;
    let ln_r = r.ln();
    let top = rows.max(cols);
    let mut log_fact = vec![0.0; top + 1];
    for k in 1..=top {
        log_fact[k] = log_fact[k - 1] + (k as f64).ln();
    }
    // lower diagonals carry x^α, upper diagonals (−x*)^α
    let lower_phase = x / r;
    let upper_phase = -x.conj() / r;
    for alpha in 0..top {
        for (lower, len) in [
            (true, rows.saturating_sub(alpha).min(cols)),
            (false, cols.saturating_sub(alpha).min(rows)),
        ] {
            if len == 0 || (!lower && alpha == 0) {
                continue;
            }
            let a = alpha as f64;
            let phase = if lower { lower_phase } else { upper_phase }.powu(alpha as u32);
            let (mut l_prev, mut l_cur) = (0.0f64, 1.0f64);
            let mut log_scale = 0.0f64;
            for j in 0..len {
                if j > 0 {
                    let jf = (j - 1) as f64;
                    let next = ((2.0 * jf + 1.0 + a - y) * l_cur - (jf + a) * l_prev) / (jf + 1.0);
                    l_prev = l_cur;
                    l_cur = next;
                    if l_cur.abs() > 1e200 {
                        l_cur *= 1e-200;
                        l_prev *= 1e-200;
                        log_scale += 200.0 * std::f64::consts::LN_10;
                    }
                }
                // j is the smaller index, j + α the larger one
                let log_pref =
                    0.5 * (log_fact[j] - log_fact[j + alpha]) + a * ln_r - 0.5 * y + log_scale;
                let v = l_cur * log_pref.exp();
                let (k, l) = if lower {
                    (j + alpha, j)
                } else {
                    (j, j + alpha)
                };
                d[[k, l]] = phase * v;
            }
        }
    }
    d
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fock::linalg::{expm, max_abs};

    #[test]
    fn coherent_examples() {
        let v = coherent_state(Complex64::new(0.0, 0.0), 8).unwrap();
        assert_eq!(v[0], Complex64::new(1.0, 0.0));
        assert!(v.iter().skip(1).all(|z| *z == Complex64::new(0.0, 0.0)));

        let v = coherent_state(Complex64::new(1.0, 0.0), 20).unwrap();
        let mean: f64 = v
            .iter()
            .enumerate()
            .map(|(k, z)| k as f64 * z.norm_sqr())
            .sum();
        assert!((mean - 1.0).abs() < 1e-10);

        let a = Complex64::new(3f64.sqrt(), 0.0);
        let s30 = coherent_state(a, 30).unwrap();
        let s40 = coherent_state(a, 40).unwrap();
        let overlap: Complex64 = s30.iter().zip(s40.iter()).map(|(x, y)| x.conj() * y).sum();
        assert!((overlap.norm() - 1.0).abs() < 1e-10);

        match coherent_state(Complex64::new(3.0, 0.0), 10) {
            Err(Error::Leakage { suggested, .. }) => assert!(suggested > 10),
            other => panic!("expected leakage error, got {other:?}"),
        }
    }

    #[test]
    fn thermal_examples() {
        let t = thermal_state(0.0, 5).unwrap();
        assert_eq!(t.data[[0, 0]], Complex64::new(1.0, 0.0));
        assert_eq!(t.trace(), Complex64::new(1.0, 0.0));

        let t = thermal_state(1.0, 30).unwrap();
        let mean: f64 = (0..30).map(|m| m as f64 * t.data[[m, m]].re).sum();
        assert!((mean - 1.0).abs() < 1e-6, "{mean}");

        let t = thermal_state(2.0, 60).unwrap();
        assert!((t.purity() - 0.2).abs() < 1e-6);
        assert!(thermal_state(2.0, 40).is_err());
    }

    #[test]
    fn hamiltonian_structure() {
        let dims = FockDims::new(4, 4).unwrap();
        let h = build_hamiltonian(0.0, dims);
        for i in 0..16 {
            for j in 0..16 {
                let expect = if i == j { (i % 4) as f64 } else { 0.0 };
                assert_eq!(h[[i, j]], Complex64::new(expect, 0.0));
            }
        }
        let h = build_hamiltonian(1.0, dims);
        let na = crate::fock::linalg::kron(
            &crate::fock::linalg::real_to_complex(&number(4)),
            &crate::fock::linalg::identity(4),
        );
        let comm = h.dot(&na) - na.dot(&h);
        assert!(max_abs(&comm) < 1e-14);
        assert_eq!(h, crate::fock::linalg::dagger(&h));
    }

    #[test]
    fn displacement_matches_padded_exponential() {
        let pad = 160;
        let a = crate::fock::linalg::real_to_complex(&annihilation(pad));
        let ad = crate::fock::linalg::dagger(&a);
        for x in [
            Complex64::new(0.7, -0.4),
            Complex64::new(-2.5, 1.5),
            Complex64::new(4.0, 3.0),
        ] {
            let gen = ad.mapv(|z| z * x) - a.mapv(|z| z * x.conj());
            let full = expm(&gen);
            let exact = displacement(x, 30, 30);
            let mut worst = 0.0f64;
            for k in 0..30 {
                for l in 0..30 {
                    worst = worst.max((full[[k, l]] - exact[[k, l]]).norm());
                }
            }
            assert!(worst < 1e-10, "x = {x}: {worst:e}");
        }
    }

    #[test]
    fn displacement_stays_unitary_for_large_shift() {
        // columns of the exact matrix are normalized once enough rows are kept
        let x = Complex64::new(12.0, -9.0);
        let d = displacement(x, 600, 40);
        for l in 0..40 {
            let norm: f64 = d.column(l).iter().map(|z| z.norm_sqr()).sum();
            assert!((norm - 1.0).abs() < 1e-9, "column {l}: {norm}");
        }
    }
}
