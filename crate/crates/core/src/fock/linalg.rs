//! Small dense helpers bridging ndarray storage and nalgebra decompositions.

use nalgebra::DMatrix;
use ndarray::Array2;
use num_complex::Complex64;

pub type CMat = Array2<Complex64>;

pub fn to_na(a: &CMat) -> DMatrix<Complex64> {
    DMatrix::from_fn(a.nrows(), a.ncols(), |i, j| a[[i, j]])
}

pub fn from_na(a: &DMatrix<Complex64>) -> CMat {
    Array2::from_shape_fn((a.nrows(), a.ncols()), |(i, j)| a[(i, j)])
}

pub fn dagger(a: &CMat) -> CMat {
    a.t().mapv(|z| z.conj())
}

pub fn kron(a: &CMat, b: &CMat) -> CMat {
    let (ar, ac) = a.dim();
    let (br, bc) = b.dim();
    Array2::from_shape_fn((ar * br, ac * bc), |(i, j)| {
        a[[i / br, j / bc]] * b[[i % br, j % bc]]
    })
}

pub fn identity(n: usize) -> CMat {
    Array2::from_diag_elem(n, Complex64::new(1.0, 0.0))
}

pub fn real_to_complex(a: &Array2<f64>) -> CMat {
    a.mapv(|x| Complex64::new(x, 0.0))
}

/// Dense matrix exponential (Padé with scaling and squaring).
pub fn expm(a: &CMat) -> CMat {
    from_na(&to_na(a).exp())
}

/// e^{-iθH} for real symmetric H, from a precomputed eigendecomposition.
pub struct SymmetricExp {
    vectors: CMat,
    values: Vec<f64>,
}

impl SymmetricExp {
    pub fn new(h: &Array2<f64>) -> Self {
        let m = DMatrix::from_fn(h.nrows(), h.ncols(), |i, j| h[[i, j]]);
        let eig = m.symmetric_eigen();
        let v = eig.eigenvectors;
        Self {
            vectors: Array2::from_shape_fn((h.nrows(), h.ncols()), |(i, k)| {
                Complex64::new(v[(i, k)], 0.0)
            }),
            values: eig.eigenvalues.iter().copied().collect(),
        }
    }

    pub fn dim(&self) -> usize {
        self.values.len()
    }

    fn phases(&self, theta: f64) -> Vec<Complex64> {
        self.values
            .iter()
            .map(|&l| Complex64::from_polar(1.0, -theta * l))
            .collect()
    }

    /// e^{-iθH} X.
    pub fn apply(&self, theta: f64, x: &CMat) -> CMat {
        let mut y = self.vectors.t().dot(x);
        for (mut row, p) in y.rows_mut().into_iter().zip(self.phases(theta)) {
            row.mapv_inplace(|z| z * p);
        }
        self.vectors.dot(&y)
    }

    /// Top-left `rows x cols` block of e^{-iθH}.
    pub fn block(&self, theta: f64, rows: usize, cols: usize) -> CMat {
        let p = self.phases(theta);
        let left = Array2::from_shape_fn((rows, self.dim()), |(i, k)| self.vectors[[i, k]] * p[k]);
        left.dot(&self.vectors.slice(ndarray::s![..cols, ..]).t())
    }

    /// e^{-iθH}.
    pub fn exp_i(&self, theta: f64) -> CMat {
        self.block(theta, self.dim(), self.dim())
    }
}

pub fn hermitian_eigenvalues(a: &CMat) -> Vec<f64> {
    let m = to_na(a);
    let h = (&m + m.adjoint()) * Complex64::new(0.5, 0.0);
    h.symmetric_eigenvalues().iter().copied().collect()
}

/// Largest singular value.
pub fn operator_norm(a: &CMat) -> f64 {
    to_na(a)
        .singular_values()
        .iter()
        .copied()
        .fold(0.0, f64::max)
}

pub fn max_abs(a: &CMat) -> f64 {
    a.iter().map(|z| z.norm()).fold(0.0, f64::max)
}
