#![allow(dead_code)]

use ndarray::Array2;
use num_complex::Complex64;
use optoloss::fock::linalg::{dagger, expm, identity, kron, max_abs, CMat};
use optoloss::fock::{DensityMatrix, FockDims, VectorizedState};
use rand::Rng;

pub fn random_matrix(rng: &mut impl Rng, n: usize) -> CMat {
    Array2::from_shape_fn((n, n), |_| {
        Complex64::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0))
    })
}

pub fn random_hermitian(rng: &mut impl Rng, n: usize) -> CMat {
    let m = random_matrix(rng, n);
    (&m + &dagger(&m)).mapv(|z| z * 0.5)
}

pub fn random_density(rng: &mut impl Rng, dims: FockDims) -> DensityMatrix {
    let m = random_matrix(rng, dims.side());
    let mut rho = m.dot(&dagger(&m));
    let tr: Complex64 = rho.diag().sum();
    rho.mapv_inplace(|z| z / tr);
    DensityMatrix::new(dims, rho).unwrap()
}

fn vec_of(m: &CMat) -> ndarray::Array1<Complex64> {
    let n = m.nrows();
    VectorizedState::from_density(&DensityMatrix::new(FockDims::single(n), m.clone()).unwrap()).vec
}

fn transpose(m: &CMat) -> CMat {
    m.t().to_owned()
}

/// Worst error over the five row-stacked vectorization identities
/// for random 3-level ρ, H and L.
pub fn vectorization_identity_error(rng: &mut impl Rng) -> f64 {
    let n = 3;
    let rho = random_matrix(rng, n);
    let h = random_hermitian(rng, n);
    let l = random_matrix(rng, n);
    let one = identity(n);
    let ldl = dagger(&l).dot(&l);
    let v = vec_of(&rho);
    let cases = [
        (rho.dot(&h), kron(&one, &transpose(&h))),
        (h.dot(&rho), kron(&h, &one)),
        (
            l.dot(&rho).dot(&dagger(&l)),
            kron(&l, &transpose(&dagger(&l))),
        ),
        (ldl.dot(&rho), kron(&ldl, &one)),
        (rho.dot(&ldl), kron(&one, &transpose(&ldl))),
    ];
    cases
        .iter()
        .map(|(lhs, sup)| {
            (&vec_of(lhs) - &sup.dot(&v))
                .iter()
                .fold(0.0f64, |m, z| m.max(z.norm()))
        })
        .fold(0.0, f64::max)
}

/// e^{At} · T exp(∫₀ᵗ e^{−As} B e^{As} ds), the interaction-picture time-ordered
/// exponential built from fourth-order Magnus steps.
pub fn split_propagator(a: &CMat, b: &CMat, t: f64, steps: usize) -> CMat {
    let h = t / steps as f64;
    let nodes = [0.5 - 3f64.sqrt() / 6.0, 0.5 + 3f64.sqrt() / 6.0];
    let rotated = |s: f64| {
        let e = expm(&a.mapv(|z| z * s));
        let einv = expm(&a.mapv(|z| -z * s));
        einv.dot(b).dot(&e)
    };
    let mut s_acc = identity(a.nrows());
    for k in 0..steps {
        let t0 = k as f64 * h;
        let b1 = rotated(t0 + nodes[0] * h);
        let b2 = rotated(t0 + nodes[1] * h);
        let comm = &b1.dot(&b2) - &b2.dot(&b1);
        let omega =
            (&b1 + &b2).mapv(|z| z * (h / 2.0)) - comm.mapv(|z| z * (3f64.sqrt() * h * h / 12.0));
        s_acc = expm(&omega).dot(&s_acc);
    }
    expm(&a.mapv(|z| z * t)).dot(&s_acc)
}

pub fn split_error(a: &CMat, b: &CMat, t: f64, steps: usize) -> f64 {
    let full = expm(&(a + b).mapv(|z| z * t));
    max_abs(&(&full - &split_propagator(a, b, t, steps)))
}

/// Random 3-level unitary split: A = −iH₁, B = −iH₂.
pub fn unitary_split(rng: &mut impl Rng) -> (CMat, CMat) {
    let mi = Complex64::new(0.0, -1.0);
    let h1 = random_hermitian(rng, 3);
    let h2 = random_hermitian(rng, 3);
    (h1.mapv(|z| z * mi), h2.mapv(|z| z * mi))
}

/// Random 3-level Lindbladian split into its coherent part and its dissipator.
pub fn lindblad_split(rng: &mut impl Rng) -> (CMat, CMat) {
    let n = 3;
    let one = identity(n);
    let h = random_hermitian(rng, n);
    let l = random_matrix(rng, n).mapv(|z| z * 0.6);
    let ldl = dagger(&l).dot(&l);
    let mi = Complex64::new(0.0, -1.0);
    let coherent = (kron(&h, &one) - kron(&one, &transpose(&h))).mapv(|z| z * mi);
    let diss = kron(&l, &l.mapv(|z| z.conj()))
        - (kron(&ldl, &one) + kron(&one, &transpose(&ldl))).mapv(|z| z * 0.5);
    (coherent, diss)
}

pub fn assert_physical(rho: &DensityMatrix) {
    rho.validate()
        .unwrap_or_else(|e| panic!("evolved state is not physical: {e}"));
}
