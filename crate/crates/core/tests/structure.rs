mod common;

use std::f64::consts::PI;

use ndarray::Array1;
use num_complex::Complex64;
use optoloss::fock::linalg::{dagger, kron};
use optoloss::fock::{
    build_hamiltonian, build_superoperator, coherent_state, coherent_state_with_tol,
    dense_propagator, evolve, evolve_cavity, evolve_trajectory, heisenberg_a_check,
    interior_deviation, lindblad_rhs, partial_trace_mech, state_fidelity, unitary_factored,
    DensityMatrix, EvolveConfig, FockDims, FrameConfig, VectorizedState,
};
use optoloss::kernels::CouplingProfile;
use optoloss::observables::Mechanics;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use common::*;

fn c(re: f64, im: f64) -> Complex64 {
    Complex64::new(re, im)
}

fn product_state(alpha: Complex64, beta: Complex64, dims: FockDims) -> DensityMatrix {
    let cav = coherent_state_with_tol(alpha, dims.n_cav, 1.0).unwrap();
    let psi = kron_vec(
        &cav,
        &coherent_state_with_tol(beta, dims.n_mech, 1.0).unwrap(),
    );
    DensityMatrix::from_pure(dims, &psi).unwrap()
}

fn kron_vec(a: &Array1<Complex64>, b: &Array1<Complex64>) -> Array1<Complex64> {
    Array1::from_iter(a.iter().flat_map(|x| b.iter().map(move |y| x * y)))
}

fn relaxed() -> EvolveConfig {
    EvolveConfig {
        leak_tol: 1.0,
        ..EvolveConfig::default()
    }
}

#[test]
fn vectorization_identities_hold_for_random_operators() {
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    for _ in 0..50 {
        assert!(vectorization_identity_error(&mut rng) < 1e-13);
    }
}

#[test]
fn partition_theorem_for_unitary_split() {
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    for _ in 0..5 {
        let (a, b) = unitary_split(&mut rng);
        let err = split_error(&a, &b, 1.0, 200);
        assert!(err < 1e-6, "unitary split error {err:e}");
    }
}

#[test]
fn partition_theorem_for_lindbladian_split() {
    let mut rng = ChaCha8Rng::seed_from_u64(6);
    for _ in 0..5 {
        let (a, b) = lindblad_split(&mut rng);
        let err = split_error(&a, &b, 1.0, 200);
        assert!(err < 1e-6, "Lindbladian split error {err:e}");
        // either ordering of the split is valid
        let err = split_error(&b, &a, 1.0, 200);
        assert!(err < 1e-6, "reversed split error {err:e}");
    }
}

#[test]
fn superoperator_acts_like_master_equation() {
    let dims = FockDims::new(3, 4).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(8);
    let rho = random_density(&mut rng, dims);
    let h = build_hamiltonian(0.7, dims);
    let l = build_superoperator(&h, 0.4, dims).unwrap();
    let v = VectorizedState::from_density(&rho);
    let direct = lindblad_rhs(&rho, &h, 0.4).unwrap();
    let via = VectorizedState {
        dims,
        vec: l.dot(&v.vec),
    }
    .to_density();
    let worst = (&direct.data - &via.data)
        .iter()
        .fold(0.0f64, |m, z| m.max(z.norm()));
    assert!(worst < 1e-13);
}

#[test]
fn factored_propagator_matches_dense_exponential() {
    let dims = FockDims::new(12, 12).unwrap();
    for g in [0.5, 1.0] {
        for tau in [0.7, PI] {
            let u = unitary_factored(g, tau, dims);
            let v = dense_propagator(g, tau, dims);
            let d = interior_deviation(&u, &v, dims, 2);
            assert!(d < 1e-8, "g={g} tau={tau}: {d:e}");
        }
    }
}

#[test]
fn factored_propagator_is_block_unitary_at_disentangling_time() {
    // at τ = 2π the mechanics returns and each photon block carries e^{2πi g² n²}
    let dims = FockDims::new(6, 8).unwrap();
    let g = 0.5;
    let u = unitary_factored(g, 2.0 * PI, dims);
    for n in 0..6 {
        for k in 0..8 {
            let i = dims.index(n, k);
            let phase = Complex64::from_polar(1.0, 2.0 * PI * g * g * (n * n) as f64);
            assert!((u[[i, i]] - phase).norm() < 1e-10, "n={n} k={k}");
        }
    }
    let udu = dagger(&u).dot(&u);
    for i in 0..dims.side() {
        assert!((udu[[i, i]] - 1.0).norm() < 1e-10);
    }
}

#[test]
fn heisenberg_relation_for_cavity_lowering() {
    let dims = FockDims::new(14, 14).unwrap();
    for g in [0.5, 1.0] {
        for tau in [1.0, 5.5] {
            let d = heisenberg_a_check(g, tau, dims);
            assert!(d < 1e-8, "g={g} tau={tau}: {d:e}");
        }
    }
}

#[test]
fn lossless_return_at_unit_coupling() {
    // g = 1 gives e^{2πi n²} = 1: the cavity comes back to |α⟩ and is pure again
    let alpha = c(1.0, 0.0);
    let n_cav = 14;
    let psi = coherent_state(alpha, n_cav).unwrap();
    let rho_c = DensityMatrix::from_pure(FockDims::single(n_cav), &psi).unwrap();
    let traj = evolve_cavity(
        &rho_c,
        Mechanics::Coherent(c(0.0, 0.0)),
        &CouplingProfile::Constant(1.0),
        0.0,
        &[PI, 2.0 * PI],
        FockDims::new(n_cav, 8).unwrap(),
        &FrameConfig::default(),
    )
    .unwrap();
    let end = &traj.states[1];
    assert!((end.purity() - 1.0).abs() < 1e-6);
    assert!((state_fidelity(&psi, end).unwrap() - 1.0).abs() < 1e-6);
    // halfway the cavity is entangled with the displaced mechanics
    assert!(traj.states[0].purity() < 0.9);
}

#[test]
fn lossless_lab_frame_run_returns_to_a_product_state() {
    let g = 0.1;
    let alpha = c(1.0, 0.0);
    let dims = FockDims::new(14, 14).unwrap();
    let rho0 = product_state(alpha, c(0.0, 0.0), dims);
    let rho = evolve(
        &rho0,
        &CouplingProfile::Constant(g),
        0.0,
        2.0 * PI,
        &relaxed(),
    )
    .unwrap();
    assert_physical(&rho);
    assert!((rho.purity() - 1.0).abs() < 1e-6);
    // the truncated |α⟩ with the Kerr phase e^{2πi g² n²} of each level
    let cat = Array1::from_iter(
        coherent_state_with_tol(alpha, dims.n_cav, 1.0)
            .unwrap()
            .iter()
            .enumerate()
            .map(|(n, z)| z * Complex64::from_polar(1.0, 2.0 * PI * g * g * (n * n) as f64)),
    );
    let vac = coherent_state(c(0.0, 0.0), dims.n_mech).unwrap();
    let target = kron_vec(&cat, &vac);
    let f = state_fidelity(&target, &rho).unwrap();
    assert!((f - 1.0).abs() < 1e-6, "fidelity {f}");
    let reduced = partial_trace_mech(&rho);
    assert!((state_fidelity(&cat, &reduced).unwrap() - 1.0).abs() < 1e-6);
}

#[test]
fn lossy_photon_number_decays_exponentially() {
    let dims = FockDims::new(14, 12).unwrap();
    let rho0 = product_state(c(1.0, 0.0), c(0.0, 0.0), dims);
    let taus = [1.0, 2.0 * PI];
    let states = evolve_trajectory(
        &rho0,
        &CouplingProfile::Constant(0.5),
        0.5,
        &taus,
        &relaxed(),
    )
    .unwrap();
    for (rho, &t) in states.iter().zip(&taus) {
        assert_physical(rho);
        let n: f64 = (0..dims.side())
            .map(|i| (i / dims.n_mech) as f64 * rho.data[[i, i]].re)
            .sum();
        assert!((n - (-0.5 * t).exp()).abs() < 1e-6, "tau={t}: {n}");
    }
}

#[test]
fn lossless_evolution_matches_unitary_conjugation() {
    let dims = FockDims::new(8, 16).unwrap();
    let g = 0.1;
    let tau = PI;
    let rho0 = product_state(c(0.8, 0.0), c(0.3, -0.2), dims);
    let rho = evolve(&rho0, &CouplingProfile::Constant(g), 0.0, tau, &relaxed()).unwrap();
    assert_physical(&rho);
    let u = unitary_factored(g, tau, dims);
    let expect = u.dot(&rho0.data).dot(&dagger(&u));
    let d = interior_deviation(&rho.data, &expect, dims, 2);
    assert!(d < 1e-6, "{d:e}");
}

#[test]
fn free_optical_frequency_leaves_populations_unchanged() {
    let dims = FockDims::new(6, 8).unwrap();
    let rho0 = product_state(c(0.6, 0.2), c(0.1, 0.0), dims);
    let profile = CouplingProfile::Constant(0.3);
    let taus = [0.5, 2.0, 4.0];
    let plain = evolve_trajectory(&rho0, &profile, 0.3, &taus, &relaxed()).unwrap();
    let rotating = evolve_trajectory(
        &rho0,
        &profile,
        0.3,
        &taus,
        &EvolveConfig {
            omega: 1.7,
            ..relaxed()
        },
    )
    .unwrap();
    for (a, b) in plain.iter().zip(&rotating) {
        assert_physical(a);
        assert_physical(b);
        for i in 0..dims.side() {
            assert!((a.data[[i, i]] - b.data[[i, i]]).norm() < 1e-8);
        }
    }
}

#[test]
fn trajectories_stay_physical_under_strong_loss() {
    let dims = FockDims::new(5, 6).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(21);
    let rho0 = random_density(&mut rng, dims);
    let taus: Vec<f64> = (1..=6).map(|k| k as f64).collect();
    let profile = CouplingProfile::tabulated(vec![0.0, 3.0, 6.0], vec![0.2, 0.6, 0.1]).unwrap();
    let states = evolve_trajectory(&rho0, &profile, 2.0, &taus, &relaxed()).unwrap();
    for rho in &states {
        assert_physical(rho);
    }
    // strong loss empties the cavity
    let last = states.last().unwrap();
    let n: f64 = (0..dims.side())
        .map(|i| (i / dims.n_mech) as f64 * last.data[[i, i]].re)
        .sum();
    assert!(n < 1e-3);
}

#[test]
fn kron_is_row_major() {
    // the vectorization convention rests on this block layout
    let a = ndarray::arr2(&[[c(1.0, 0.0), c(2.0, 0.0)], [c(3.0, 0.0), c(4.0, 0.0)]]);
    let b = ndarray::arr2(&[[c(0.0, 1.0)]]);
    let k = kron(&a, &b);
    assert_eq!(k[[1, 0]], c(0.0, 3.0));
}
