//! Closed-system propagators, evaluated one photon-number block at a time.
//!
//! Each block is built in a mechanical space padded well beyond `n_mech` and
//! then cropped, so the returned matrices carry the untruncated matrix
//! elements rather than those of a truncated generator.

use ndarray::{s, Array2};
use num_complex::Complex64;

use super::density::FockDims;
use super::linalg::{operator_norm, CMat, SymmetricExp};
use crate::kernels::{constant_unchecked, phase_a};

fn position_like(pad: usize) -> Array2<f64> {
    let mut x = Array2::zeros((pad, pad));
    for k in 0..pad - 1 {
        let v = ((k + 1) as f64).sqrt();
        x[[k, k + 1]] = v;
        x[[k + 1, k]] = v;
    }
    x
}

/// Mechanical padding large enough to hold a coherent excursion of 2|g|n.
fn block_padding(g0: f64, n: usize, n_mech: usize) -> usize {
    let reach = 2.0 * g0.abs() * n as f64 + (n_mech as f64).sqrt() + 8.0;
    n_mech + (reach * reach).ceil() as usize
}

fn padded_size(g0: f64, dims: FockDims) -> usize {
    block_padding(g0, dims.n_cav - 1, dims.n_mech)
}

fn leading_columns(pad: usize, m: usize) -> CMat {
    Array2::from_shape_fn((pad, m), |(i, j)| {
        if i == j {
            Complex64::new(1.0, 0.0)
        } else {
            Complex64::new(0.0, 0.0)
        }
    })
}

/// i^k phases relating B_- = P B_+ P†.
fn quarter_phase(k: usize) -> Complex64 {
    match k % 4 {
        0 => Complex64::new(1.0, 0.0),
        1 => Complex64::new(0.0, 1.0),
        2 => Complex64::new(-1.0, 0.0),
        _ => Complex64::new(0.0, -1.0),
    }
}

fn scale_rows(x: &mut CMat, f: impl Fn(usize) -> Complex64) {
    for (k, mut row) in x.rows_mut().into_iter().enumerate() {
        let p = f(k);
        row.mapv_inplace(|z| z * p);
    }
}

/// e^{-iθB_-} X using B_- = P B_+ P†.
fn apply_b_minus(bplus: &SymmetricExp, theta: f64, x: &CMat) -> CMat {
    let mut y = x.clone();
    scale_rows(&mut y, |k| quarter_phase(k).conj());
    let mut z = bplus.apply(theta, &y);
    scale_rows(&mut z, quarter_phase);
    z
}

/// Leading `m` columns of the photon-number-n block of the factored propagator,
/// in the padded mechanical space.
fn factored_columns(bplus: &SymmetricExp, g0: f64, tau: f64, n: usize, m: usize) -> CMat {
    let fc = constant_unchecked(g0, tau);
    let nf = n as f64;
    let x0 = leading_columns(bplus.dim(), m);
    let x1 = apply_b_minus(bplus, fc.f_minus * nf, &x0);
    let mut x2 = bplus.apply(fc.f_plus * nf, &x1);
    let kerr = Complex64::from_polar(1.0, -fc.f_a * nf * nf);
    scale_rows(&mut x2, |k| {
        kerr * Complex64::from_polar(1.0, -(k as f64) * tau)
    });
    x2
}

fn assemble(dims: FockDims, blocks: impl Fn(usize) -> CMat) -> CMat {
    let m = dims.n_mech;
    let mut u = Array2::zeros((dims.side(), dims.side()));
    for c in 0..dims.n_cav {
        u.slice_mut(s![c * m..(c + 1) * m, c * m..(c + 1) * m])
            .assign(&blocks(c));
    }
    u
}

/// e^{-iN_bτ} e^{-iF_a N_a²} e^{-iF_+ N_a B_+} e^{-iF_- N_a B_-} for constant coupling.
pub fn unitary_factored(g0: f64, tau: f64, dims: FockDims) -> CMat {
    let bplus = SymmetricExp::new(&position_like(padded_size(g0, dims)));
    let m = dims.n_mech;
    assemble(dims, |n| {
        factored_columns(&bplus, g0, tau, n, m)
            .slice(s![..m, ..])
            .to_owned()
    })
}

/// e^{-iHτ} for H = N_b − g₀ N_a (b + b†), by eigendecomposition of each block.
pub fn dense_propagator(g0: f64, tau: f64, dims: FockDims) -> CMat {
    let m = dims.n_mech;
    assemble(dims, |n| {
        let pad = block_padding(g0, n, m);
        let mut h = position_like(pad).mapv(|v| -g0 * n as f64 * v);
        for k in 0..pad {
            h[[k, k]] = k as f64;
        }
        SymmetricExp::new(&h).block(tau, m, m)
    })
}

/// Operator-norm distance restricted to levels below the top `exclude` of each mode.
pub fn interior_deviation(a: &CMat, b: &CMat, dims: FockDims, exclude: usize) -> f64 {
    let keep: Vec<usize> = (0..dims.side())
        .filter(|&i| {
            i / dims.n_mech + exclude < dims.n_cav && i % dims.n_mech + exclude < dims.n_mech
        })
        .collect();
    let diff = Array2::from_shape_fn((keep.len(), keep.len()), |(i, j)| {
        a[[keep[i], keep[j]]] - b[[keep[i], keep[j]]]
    });
    operator_norm(&diff)
}

/// Largest elementwise deviation between U†aU and
/// e^{-iF_a} e^{-2iA N_a} e^{-iF_+B_+} e^{-iF_-B_-} a on the interior block.
pub fn heisenberg_a_check(g0: f64, tau: f64, dims: FockDims) -> f64 {
    let bplus = SymmetricExp::new(&position_like(padded_size(g0, dims)));
    let m = dims.n_mech;
    let fc = constant_unchecked(g0, tau);
    let a = phase_a(&fc);

    // mechanical factor shared by every block of the right-hand side
    let x0 = leading_columns(bplus.dim(), m);
    let rhs_mech = bplus.apply(fc.f_plus, &apply_b_minus(&bplus, fc.f_minus, &x0));

    let interior = m.saturating_sub(2);
    let mut worst = 0.0f64;
    let mut lower = factored_columns(&bplus, g0, tau, 0, m);
    for n in 0..dims.n_cav.saturating_sub(3) {
        let upper = factored_columns(&bplus, g0, tau, n + 1, m);
        let root = ((n + 1) as f64).sqrt();
        let lhs = lower.t().mapv(|z| z.conj()).dot(&upper);
        let phase = Complex64::from_polar(root, -fc.f_a - 2.0 * a * n as f64);
        for k in 0..interior {
            for l in 0..interior {
                let d = lhs[[k, l]] * root - phase * rhs_mech[[k, l]];
                worst = worst.max(d.norm());
            }
        }
        lower = upper;
    }
    worst
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fock::linalg::{identity, max_abs};
    use std::f64::consts::PI;

    #[test]
    fn identity_at_zero_time() {
        let dims = FockDims::new(4, 5).unwrap();
        let u = unitary_factored(0.8, 0.0, dims);
        assert!(max_abs(&(&u - &identity(20))) < 1e-12);
        assert!(heisenberg_a_check(0.8, 0.0, dims) < 1e-12);
    }

    #[test]
    fn free_mechanics_without_coupling() {
        let dims = FockDims::new(3, 6).unwrap();
        let u = unitary_factored(0.0, 1.3, dims);
        for i in 0..18 {
            for j in 0..18 {
                let expect = if i == j {
                    Complex64::from_polar(1.0, -1.3 * (i % 6) as f64)
                } else {
                    Complex64::new(0.0, 0.0)
                };
                assert!((u[[i, j]] - expect).norm() < 1e-12);
            }
        }
        assert!(heisenberg_a_check(0.0, 2.2, dims) < 1e-12);
    }

    #[test]
    fn factored_matches_dense_small() {
        let dims = FockDims::new(5, 6).unwrap();
        let u = unitary_factored(0.4, 1.1, dims);
        let v = dense_propagator(0.4, 1.1, dims);
        assert!(interior_deviation(&u, &v, dims, 2) < 1e-9);
        assert!(heisenberg_a_check(0.4, PI, dims) < 1e-9);
    }
}
