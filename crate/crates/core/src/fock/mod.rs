//! Truncated two-mode Fock-space oracle: operators, Lindblad right-hand side,
//! superoperators, propagators and master-equation integrators.

mod density;
mod evolve;
mod frame;
pub mod linalg;
mod lindblad;
mod operators;
mod unitary;

pub use density::{DensityMatrix, FockDims, VectorizedState, DEFAULT_DIM_BUDGET};
pub use evolve::{evolve, evolve_trajectory, EvolveConfig, Method};
pub use frame::{evolve_cavity, CavityTrajectory, FrameConfig};
pub use lindblad::{build_superoperator, lindblad_rhs, SUPEROPERATOR_MAX_SIDE};
pub use operators::{
    annihilation, build_hamiltonian, coherent_state, coherent_state_with_tol, displacement, number,
    required_coherent_levels, thermal_state, thermal_state_with_tol, DEFAULT_LEAK_TOL,
};
pub use unitary::{dense_propagator, heisenberg_a_check, interior_deviation, unitary_factored};

use ndarray::{Array1, Array2};
use num_complex::Complex64;

use crate::error::{Error, Result};

/// ⟨A⟩ = Tr[A ρ].
pub fn expectation(op: &Array2<Complex64>, rho: &DensityMatrix) -> Result<Complex64> {
    let n = rho.side();
    if op.dim() != (n, n) {
        return Err(Error::Domain(format!(
            "operator is {:?}, state side is {n}",
            op.dim()
        )));
    }
    let mut acc = Complex64::new(0.0, 0.0);
    for i in 0..n {
        for j in 0..n {
            acc += op[[i, j]] * rho.data[[j, i]];
        }
    }
    Ok(acc)
}

/// Reduced cavity state Tr_m ρ.
pub fn partial_trace_mech(rho: &DensityMatrix) -> DensityMatrix {
    let FockDims { n_cav, n_mech } = rho.dims;
    let mut out = Array2::<Complex64>::zeros((n_cav, n_cav));
    for c in 0..n_cav {
        for d in 0..n_cav {
            out[[c, d]] = (0..n_mech)
                .map(|m| rho.data[[c * n_mech + m, d * n_mech + m]])
                .sum();
        }
    }
    DensityMatrix::from_parts(FockDims::single(n_cav), out)
}

/// ⟨ψ|ρ|ψ⟩, clamped to [0, 1].
pub fn state_fidelity(psi: &Array1<Complex64>, rho: &DensityMatrix) -> Result<f64> {
    let n = rho.side();
    if psi.len() != n {
        return Err(Error::Domain(format!(
            "vector has length {}, state side is {n}",
            psi.len()
        )));
    }
    let rho_psi = rho.data.dot(psi);
    let f: Complex64 = psi
        .iter()
        .zip(rho_psi.iter())
        .map(|(a, b)| a.conj() * b)
        .sum();
    if f.im.abs() >= 1e-10 {
        return Err(Error::Invariant(format!(
            "fidelity has imaginary part {:.3e}",
            f.im
        )));
    }
    Ok(f.re.clamp(0.0, 1.0))
}
