use std::fmt::Write as _;

use ndarray::{Array1, Array2};
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use super::linalg;
use crate::error::{Error, Result};
use crate::observables::fmt_f64;

/// Largest allowed `n_cav * n_mech` unless a budget is given explicitly.
pub const DEFAULT_DIM_BUDGET: usize = 4096;

/// Fock cutoffs of the cavity and mechanical modes.
///
/// A reduced single-mode state is represented with `n_mech == 1`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct FockDims {
    pub n_cav: usize,
    pub n_mech: usize,
}

impl FockDims {
    pub fn new(n_cav: usize, n_mech: usize) -> Result<Self> {
        Self::with_budget(n_cav, n_mech, DEFAULT_DIM_BUDGET)
    }

    pub fn with_budget(n_cav: usize, n_mech: usize, budget: usize) -> Result<Self> {
        if n_cav < 2 || n_mech < 2 {
            return Err(Error::Domain(format!(
                "Fock cutoffs must be >= 2, got {n_cav}x{n_mech}"
            )));
        }
        let dim = n_cav.saturating_mul(n_mech);
        if dim > budget {
            return Err(Error::Budget { dim, budget });
        }
        Ok(Self { n_cav, n_mech })
    }

    pub fn single(n: usize) -> Self {
        Self {
            n_cav: n,
            n_mech: 1,
        }
    }

    pub fn side(&self) -> usize {
        self.n_cav * self.n_mech
    }

    pub fn index(&self, c: usize, m: usize) -> usize {
        c * self.n_mech + m
    }
}

/// Density matrix in the cavity-major product basis, index `c * n_mech + m`.
#[derive(Debug, Clone, PartialEq)]
pub struct DensityMatrix {
    pub dims: FockDims,
    pub data: Array2<Complex64>,
}

#[derive(Serialize, Deserialize)]
struct DumpHeader {
    format: String,
    n_cav: usize,
    n_mech: usize,
    #[serde(default)]
    params: serde_json::Map<String, serde_json::Value>,
}

impl DensityMatrix {
    pub fn new(dims: FockDims, data: Array2<Complex64>) -> Result<Self> {
        let n = dims.side();
        if data.dim() != (n, n) {
            return Err(Error::Domain(format!(
                "matrix is {:?}, dims need {n}x{n}",
                data.dim()
            )));
        }
        Ok(Self { dims, data })
    }

    pub(crate) fn from_parts(dims: FockDims, data: Array2<Complex64>) -> Self {
        debug_assert_eq!(data.dim(), (dims.side(), dims.side()));
        Self { dims, data }
    }

    /// |ψ⟩⟨ψ|.
    pub fn from_pure(dims: FockDims, psi: &Array1<Complex64>) -> Result<Self> {
        if psi.len() != dims.side() {
            return Err(Error::Domain(format!(
                "vector length {} does not match dims",
                psi.len()
            )));
        }
        let n = psi.len();
        let data = Array2::from_shape_fn((n, n), |(i, j)| psi[i] * psi[j].conj());
        Ok(Self { dims, data })
    }

    /// ρ_c ⊗ ρ_m.
    pub fn product(cav: &DensityMatrix, mech: &DensityMatrix) -> Result<Self> {
        let dims = FockDims::new(cav.side(), mech.side())?;
        Ok(Self {
            dims,
            data: linalg::kron(&cav.data, &mech.data),
        })
    }

    pub fn side(&self) -> usize {
        self.data.nrows()
    }

    pub fn trace(&self) -> Complex64 {
        self.data.diag().sum()
    }

    pub fn purity(&self) -> f64 {
        // Tr ρ² = Σ |ρ_ij|² for Hermitian ρ
        self.data.iter().map(|z| z.norm_sqr()).sum()
    }

    pub fn hermitian_defect(&self) -> f64 {
        let n = self.side();
        let mut worst = 0.0f64;
        for i in 0..n {
            for j in i..n {
                worst = worst.max((self.data[[i, j]] - self.data[[j, i]].conj()).norm());
            }
        }
        worst
    }

    /// (ρ + ρ†)/2 in place.
    pub fn hermitize(&mut self) {
        let n = self.side();
        for i in 0..n {
            self.data[[i, i]].im = 0.0;
            for j in i + 1..n {
                let avg = 0.5 * (self.data[[i, j]] + self.data[[j, i]].conj());
                self.data[[i, j]] = avg;
                self.data[[j, i]] = avg.conj();
            }
        }
    }

    pub fn min_eigenvalue(&self) -> f64 {
        linalg::hermitian_eigenvalues(&self.data)
            .into_iter()
            .fold(f64::INFINITY, f64::min)
    }

    /// Checks Hermiticity, unit trace and (approximate) positivity.
    pub fn validate(&self) -> Result<()> {
        let h = self.hermitian_defect();
        if h > 1e-12 {
            return Err(Error::Invariant(format!(
                "density matrix not Hermitian (defect {h:.3e})"
            )));
        }
        let t = self.trace();
        if (t - 1.0).norm() > 1e-10 {
            return Err(Error::Invariant(format!("trace is {t}")));
        }
        let e = self.min_eigenvalue();
        if e < -1e-8 {
            return Err(Error::Invariant(format!("minimum eigenvalue {e:.3e}")));
        }
        Ok(())
    }

    /// Population of the top two Fock levels of each mode: (cavity, mechanics).
    pub fn edge_populations(&self) -> (f64, f64) {
        let FockDims { n_cav, n_mech } = self.dims;
        let mut cav = 0.0;
        let mut mech = 0.0;
        for c in 0..n_cav {
            for m in 0..n_mech {
                let p = self.data[[c * n_mech + m, c * n_mech + m]].re;
                if c + 2 >= n_cav {
                    cav += p;
                }
                if n_mech > 1 && m + 2 >= n_mech {
                    mech += p;
                }
            }
        }
        (cav, mech)
    }

    /// Text dump: a JSON header line, then one line per matrix row holding
    /// comma-separated `re,im` pairs.
    pub fn to_text(&self, params: serde_json::Map<String, serde_json::Value>) -> String {
        let header = DumpHeader {
            format: "optoloss-density-v1".into(),
            n_cav: self.dims.n_cav,
            n_mech: self.dims.n_mech,
            params,
        };
        let mut out = serde_json::to_string(&header).expect("header serializes");
        out.push('\n');
        for row in self.data.rows() {
            let mut first = true;
            for z in row {
                if !first {
                    out.push(',');
                }
                first = false;
                let _ = write!(out, "{},{}", fmt_f64(z.re), fmt_f64(z.im));
            }
            out.push('\n');
        }
        out
    }

    pub fn from_text(text: &str) -> Result<Self> {
        let mut lines = text.lines();
        let header: DumpHeader = serde_json::from_str(
            lines
                .next()
                .ok_or_else(|| Error::Parse("empty dump".into()))?,
        )
        .map_err(|e| Error::Parse(format!("bad header: {e}")))?;
        let dims = FockDims {
            n_cav: header.n_cav,
            n_mech: header.n_mech,
        };
        let n = dims.side();
        let mut data = Array2::zeros((n, n));
        for i in 0..n {
            let line = lines
                .next()
                .ok_or_else(|| Error::Parse(format!("missing row {i}")))?;
            let vals = line
                .split(',')
                .map(|s| {
                    s.trim()
                        .parse::<f64>()
                        .map_err(|e| Error::Parse(format!("row {i}: {e}")))
                })
                .collect::<Result<Vec<_>>>()?;
            if vals.len() != 2 * n {
                return Err(Error::Parse(format!(
                    "row {i} has {} numbers, expected {}",
                    vals.len(),
                    2 * n
                )));
            }
            for j in 0..n {
                data[[i, j]] = Complex64::new(vals[2 * j], vals[2 * j + 1]);
            }
        }
        Ok(Self { dims, data })
    }
}

/// Row-stacked vectorization: element (i, j) sits at `i * side + j`.
#[derive(Debug, Clone, PartialEq)]
pub struct VectorizedState {
    pub dims: FockDims,
    pub vec: Array1<Complex64>,
}

impl VectorizedState {
    pub fn from_density(rho: &DensityMatrix) -> Self {
        Self {
            dims: rho.dims,
            vec: rho.data.iter().copied().collect(),
        }
    }

    pub fn to_density(&self) -> DensityMatrix {
        let n = self.dims.side();
        let data = Array2::from_shape_vec((n, n), self.vec.to_vec()).expect("length matches dims");
        DensityMatrix::from_parts(self.dims, data)
    }
}
