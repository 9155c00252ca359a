use ndarray::Array2;
use num_complex::Complex64;

use super::density::{DensityMatrix, FockDims};
use super::linalg::{dagger, identity, kron, real_to_complex, CMat};
use super::operators::{annihilation, number};
use crate::error::{ensure_non_negative, Error, Result};

/// Largest `n_cav * n_mech` for which a superoperator is materialized.
pub const SUPEROPERATOR_MAX_SIDE: usize = 64;

pub(crate) fn cavity_lowering(dims: FockDims) -> CMat {
    kron(
        &real_to_complex(&annihilation(dims.n_cav)),
        &identity(dims.n_mech),
    )
}

pub(crate) fn cavity_number(dims: FockDims) -> CMat {
    kron(
        &real_to_complex(&number(dims.n_cav)),
        &identity(dims.n_mech),
    )
}

/// −i[H, ρ] + κ (a ρ a† − ½{a†a, ρ}) with dense matrix products.
pub fn lindblad_rhs(rho: &DensityMatrix, h: &CMat, kappa: f64) -> Result<DensityMatrix> {
    ensure_non_negative("kappa", kappa)?;
    let n = rho.side();
    if h.dim() != (n, n) {
        return Err(Error::Domain(format!(
            "Hamiltonian is {:?}, state side is {n}",
            h.dim()
        )));
    }
    let i = Complex64::i();
    let hr = h.dot(&rho.data);
    let mut out = (&hr - &dagger(&hr)).mapv(|z| -i * z);
    if kappa > 0.0 && rho.dims.n_mech > 0 {
        let a = cavity_lowering(rho.dims);
        let jump = a.dot(&rho.data).dot(&dagger(&a));
        // N_a is diagonal, so the anticommutator is an elementwise scaling
        let nc = rho.dims.n_mech;
        let anti = Array2::from_shape_fn((n, n), |(r, c)| {
            rho.data[[r, c]] * (0.5 * ((r / nc) + (c / nc)) as f64)
        });
        out = out + (jump - anti).mapv(|z| z * kappa);
    }
    Ok(DensityMatrix::from_parts(rho.dims, out))
}

/// Row-stacked Liouvillian −i(H⊗1 − 1⊗Hᵀ) + κ[a⊗a* − ½(N_a⊗1 + 1⊗N_aᵀ)].
///
/// In the real Fock basis a* = a and N_aᵀ = N_a.
pub fn build_superoperator(h: &CMat, kappa: f64, dims: FockDims) -> Result<CMat> {
    ensure_non_negative("kappa", kappa)?;
    let n = dims.side();
    if n > SUPEROPERATOR_MAX_SIDE {
        return Err(Error::Budget {
            dim: n * n,
            budget: SUPEROPERATOR_MAX_SIDE * SUPEROPERATOR_MAX_SIDE,
        });
    }
    if h.dim() != (n, n) {
        return Err(Error::Domain(format!(
            "Hamiltonian is {:?}, dims need {n}x{n}",
            h.dim()
        )));
    }
    let one = identity(n);
    let i = Complex64::i();
    let mut l = (kron(h, &one) - kron(&one, &h.t().to_owned())).mapv(|z| -i * z);
    if kappa > 0.0 {
        let a = cavity_lowering(dims);
        let na = cavity_number(dims);
        let diss = kron(&a, &a.mapv(|z| z.conj()))
            - (kron(&na, &one) + kron(&one, &na.t().to_owned())).mapv(|z| 0.5 * z);
        l = l + diss.mapv(|z| z * kappa);
    }
    Ok(l)
}
