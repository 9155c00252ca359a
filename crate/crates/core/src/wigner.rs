//! Wigner functions of single-mode cavity states on a rectangular grid.
//!
//! W(X, P) = (1/π) Tr[ρ D(γ) Π D(γ)†] with γ = (X + iP)/√2 and Π the parity.
//! Since D(γ) Π D(γ)† = D(2γ) Π, each grid point needs only the exact
//! displacement matrix elements ⟨n|D(2γ)|m⟩ on the support of ρ.

use std::f64::consts::{FRAC_1_PI, SQRT_2};
use std::fmt::Write as _;

use ndarray::Array2;
use num_complex::Complex64;
use rayon::prelude::*;

use crate::error::{ensure_finite, Error, Result};
use crate::fock::{displacement, DensityMatrix};
use crate::observables::fmt_f64;

/// Allowed deviation of the grid integral of W from 1.
pub const NORMALIZATION_TOL: f64 = 5e-3;

/// Uniform axis from `min` to `max` inclusive.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Axis {
    pub min: f64,
    pub max: f64,
    pub count: usize,
}

impl Axis {
    pub fn new(min: f64, max: f64, count: usize) -> Result<Self> {
        ensure_finite("axis min", min)?;
        ensure_finite("axis max", max)?;
        if count < 2 || max <= min {
            return Err(Error::Domain(format!(
                "axis needs max > min and at least 2 points, got [{min}, {max}] x {count}"
            )));
        }
        Ok(Self { min, max, count })
    }

    pub fn step(&self) -> f64 {
        (self.max - self.min) / (self.count - 1) as f64
    }

    pub fn point(&self, i: usize) -> f64 {
        if i + 1 == self.count {
            self.max
        } else {
            self.min + i as f64 * self.step()
        }
    }

    pub fn points(&self) -> Vec<f64> {
        (0..self.count).map(|i| self.point(i)).collect()
    }
}

impl Default for Axis {
    fn default() -> Self {
        Self {
            min: -5.0,
            max: 5.0,
            count: 201,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct GridSpec {
    pub x: Axis,
    pub p: Axis,
}

impl GridSpec {
    pub fn square(half_width: f64, count: usize) -> Result<Self> {
        let axis = Axis::new(-half_width, half_width, count)?;
        Ok(Self { x: axis, p: axis })
    }
}

/// W sampled on a grid; `values[[i, j]]` belongs to (x_axis.point(i), p_axis.point(j)).
#[derive(Debug, Clone)]
pub struct WignerGrid {
    pub x_axis: Axis,
    pub p_axis: Axis,
    pub values: Array2<f64>,
}

impl WignerGrid {
    fn cell(&self) -> f64 {
        self.x_axis.step() * self.p_axis.step()
    }

    /// Riemann sum of W over the grid.
    pub fn integral(&self) -> f64 {
        self.values.sum() * self.cell()
    }

    pub fn min(&self) -> f64 {
        self.values.iter().copied().fold(f64::INFINITY, f64::min)
    }

    /// `X,P,W` rows, X varying slowest.
    pub fn to_long_csv(&self) -> String {
        let mut out = String::from("X,P,W\n");
        for (i, x) in self.x_axis.points().into_iter().enumerate() {
            for (j, p) in self.p_axis.points().into_iter().enumerate() {
                let _ = writeln!(
                    out,
                    "{},{},{}",
                    fmt_f64(x),
                    fmt_f64(p),
                    fmt_f64(self.values[[i, j]])
                );
            }
        }
        out
    }

    /// Dense matrix: first row `X\P` followed by the P axis, then one row per X
    /// starting with its X value.
    pub fn to_matrix_text(&self) -> String {
        let mut out = String::from("X\\P");
        for p in self.p_axis.points() {
            let _ = write!(out, ",{}", fmt_f64(p));
        }
        out.push('\n');
        for (i, x) in self.x_axis.points().into_iter().enumerate() {
            out.push_str(&fmt_f64(x));
            for j in 0..self.p_axis.count {
                let _ = write!(out, ",{}", fmt_f64(self.values[[i, j]]));
            }
            out.push('\n');
        }
        out
    }
}

fn point_value(rho: &Array2<Complex64>, x: f64, p: f64) -> Result<f64> {
    let n = rho.nrows();
    let gamma = Complex64::new(x, p) / SQRT_2;
    let d = displacement(2.0 * gamma, n, n);
    let mut acc = Complex64::new(0.0, 0.0);
    for m in 0..n {
        let mut col = Complex64::new(0.0, 0.0);
        for k in 0..n {
            col += rho[[m, k]] * d[[k, m]];
        }
        if m % 2 == 0 {
            acc += col;
        } else {
            acc -= col;
        }
    }
    if acc.im.abs() >= 1e-10 {
        return Err(Error::Invariant(format!(
            "Wigner value at ({x}, {p}) has imaginary part {:.3e}",
            acc.im
        )));
    }
    Ok(acc.re * FRAC_1_PI)
}

/// W on the grid without the coverage check.
pub fn wigner_unchecked(rho: &DensityMatrix, spec: &GridSpec) -> Result<WignerGrid> {
    if rho.dims.n_mech != 1 {
        return Err(Error::Domain(
            "Wigner function needs a single-mode state; trace out the mechanics first".into(),
        ));
    }
    let xs = spec.x.points();
    let ps = spec.p.points();
    let rows: Vec<Vec<f64>> = xs
        .par_iter()
        .map(|&x| {
            ps.iter()
                .map(|&p| point_value(&rho.data, x, p))
                .collect::<Result<Vec<f64>>>()
        })
        .collect::<Result<_>>()?;
    let values = Array2::from_shape_fn((xs.len(), ps.len()), |(i, j)| rows[i][j]);
    Ok(WignerGrid {
        x_axis: spec.x,
        p_axis: spec.p,
        values,
    })
}

/// W on the grid; fails if the grid integral misses 1 by more than [`NORMALIZATION_TOL`].
pub fn wigner(rho: &DensityMatrix, spec: &GridSpec) -> Result<WignerGrid> {
    let w = wigner_unchecked(rho, spec)?;
    let integral = w.integral();
    if (integral - 1.0).abs() > NORMALIZATION_TOL {
        return Err(Error::GridCoverage { integral });
    }
    Ok(w)
}

/// Σ max(0, −W) ΔX ΔP.
pub fn negativity_volume(w: &WignerGrid) -> f64 {
    w.values.iter().map(|&v| (-v).max(0.0)).sum::<f64>() * w.cell()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::cat::ideal_cat_state;
    use crate::fock::{coherent_state, FockDims};

    fn pure(psi: &ndarray::Array1<Complex64>) -> DensityMatrix {
        DensityMatrix::from_pure(FockDims::single(psi.len()), psi).unwrap()
    }

    fn small_grid() -> GridSpec {
        GridSpec::square(5.0, 81).unwrap()
    }

    #[test]
    fn vacuum_gaussian() {
        let rho = pure(&coherent_state(Complex64::new(0.0, 0.0), 6).unwrap());
        let w = wigner(&rho, &small_grid()).unwrap();
        assert!((w.values[[40, 40]] - FRAC_1_PI).abs() < 1e-12);
        for (i, x) in w.x_axis.points().into_iter().enumerate() {
            for (j, p) in w.p_axis.points().into_iter().enumerate() {
                let expect = FRAC_1_PI * (-(x * x + p * p)).exp();
                assert!((w.values[[i, j]] - expect).abs() < 1e-12);
            }
        }
        assert_eq!(negativity_volume(&w), 0.0);
    }

    #[test]
    fn coherent_is_translated_vacuum() {
        let alpha = Complex64::new(1.1, -0.7);
        let rho = pure(&coherent_state(alpha, 30).unwrap());
        let w = wigner(&rho, &small_grid()).unwrap();
        let (x0, p0) = (SQRT_2 * alpha.re, SQRT_2 * alpha.im);
        for (i, x) in w.x_axis.points().into_iter().enumerate() {
            for (j, p) in w.p_axis.points().into_iter().enumerate() {
                let expect = FRAC_1_PI * (-((x - x0).powi(2) + (p - p0).powi(2))).exp();
                assert!((w.values[[i, j]] - expect).abs() < 1e-9);
            }
        }
    }

    #[test]
    fn cat_has_negative_fringes() {
        let alpha = Complex64::new(3f64.sqrt(), 0.0);
        let rho = pure(&ideal_cat_state(alpha, 0.5, 30).unwrap());
        let w = wigner(&rho, &small_grid()).unwrap();
        assert!(w.min() < 0.0);
        assert!(negativity_volume(&w) > 0.0);
    }

    #[test]
    fn mixture_is_linear() {
        let a = pure(&coherent_state(Complex64::new(0.9, 0.2), 20).unwrap());
        let b = pure(&ideal_cat_state(Complex64::new(1.2, 0.0), 0.5, 20).unwrap());
        let mix = DensityMatrix::new(
            FockDims::single(20),
            a.data.mapv(|z| z * 0.3) + b.data.mapv(|z| z * 0.7),
        )
        .unwrap();
        let spec = GridSpec::square(4.0, 41).unwrap();
        let wa = wigner(&a, &spec).unwrap();
        let wb = wigner(&b, &spec).unwrap();
        let wm = wigner(&mix, &spec).unwrap();
        let worst = (&wm.values - &(&wa.values * 0.3 + &wb.values * 0.7))
            .iter()
            .fold(0.0f64, |m, v| m.max(v.abs()));
        assert!(worst < 1e-10);
    }

    #[test]
    fn narrow_grid_is_rejected() {
        let rho = pure(&coherent_state(Complex64::new(2.0, 0.0), 30).unwrap());
        match wigner(&rho, &GridSpec::square(1.0, 41).unwrap()) {
            Err(Error::GridCoverage { integral }) => assert!(integral < 0.5),
            other => panic!("expected coverage error, got {other:?}"),
        }
    }

    #[test]
    fn serializations() {
        let rho = pure(&coherent_state(Complex64::new(0.0, 0.0), 4).unwrap());
        let w = wigner_unchecked(&rho, &GridSpec::square(1.0, 3).unwrap()).unwrap();
        let long = w.to_long_csv();
        assert_eq!(long.lines().count(), 10);
        assert!(long.starts_with("X,P,W\n"));
        let dense = w.to_matrix_text();
        let lines: Vec<&str> = dense.lines().collect();
        assert_eq!(lines.len(), 4);
        assert_eq!(lines[0].split(',').count(), 4);
    }
}
